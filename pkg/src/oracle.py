"""Shooting oracles for 1D and radial problems.

Everything here works on ODE reformulations in the flux variable
w = |u'|^α u', which keeps the system regular where u' vanishes:

    u' = sign(w)|w|^{1/(1+α)},
    Φ_r(w'/(1+α)) + (N−1)Φ_t(w/r) = f − (c + λ)|u|^α u,

with Φ_r and Φ_t the sign-dependent weights of the operator kind acting on
the radial and tangential Hessian eigenvalues. Nothing in this module
touches the grid discretization.
"""
import logging
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .exceptions import InvalidOperatorError, OracleError, StepFloorError, WindowError

logger = logging.getLogger(__name__)

INTEGRATOR_RTOL = 1e-12
INTEGRATOR_ATOL = 1e-14

# Absolute tolerance of the eigenvalue root
ROOT_XTOL = 1e-13

# Geometric scan for the first sign change of u(L; λ)
SCAN_START = 1e-2
SCAN_FACTOR = 1.25
SCAN_STEPS = 200

# Pucci weight switches tolerated per trajectory
MAX_SWITCHES = 50

# Starting radius of disk trajectories relative to R
DISK_START = 1e-8

# Doublings allowed when bracketing the initial flux of Dirichlet shots
FLUX_DOUBLINGS = 60

KINDS = ("pucci_plus", "pucci_minus", "linear", "qtrace")
GEOMETRIES = ("interval", "disk", "annulus")

RadialProfile = Callable[[ArrayLike], NDArray[np.float64]]


@dataclass(frozen=True)
class RadialSpec:
    """
    Radially admissible problem: constant coefficients, no drift.

    Attributes:
        kind: Operator kind name
        a: Lower ellipticity bound
        A: Upper ellipticity bound
        alpha: Gradient exponent in (-1, 0]
        q: q-trace weight
        c: Constant zeroth-order coefficient
        geometry: ``interval``, ``disk`` or ``annulus``
        length: Interval length L
        radius: Outer radius R
        inner_radius: Annulus inner radius
    """

    kind: str = "pucci_plus"
    a: float = 1.0
    A: float = 1.0
    alpha: float = 0.0
    q: float = 0.0
    c: float = 0.0
    geometry: str = "interval"
    length: float = 1.0
    radius: float = 1.0
    inner_radius: float = 0.5

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", str(getattr(self.kind, "value", self.kind)))
        if self.kind not in KINDS:
            raise InvalidOperatorError(f"Unknown operator kind: {self.kind}")
        if not 0 < self.a <= self.A:
            raise InvalidOperatorError(f"Need 0 < a <= A, got a={self.a}, A={self.A}")
        if not -1.0 < self.alpha <= 0.0:
            raise InvalidOperatorError(f"alpha must lie in (-1, 0], got {self.alpha}")
        if self.q < 0:
            raise InvalidOperatorError(f"q must be non-negative, got {self.q}")
        if self.geometry not in GEOMETRIES:
            raise OracleError(f"Unknown geometry: {self.geometry}")
        if self.geometry == "interval" and not self.length > 0:
            raise OracleError(f"Interval length must be positive, got {self.length}")
        if self.geometry != "interval" and not self.radius > 0:
            raise OracleError(f"Radius must be positive, got {self.radius}")
        if self.geometry == "annulus" and not 0 < self.inner_radius < self.radius:
            raise OracleError(
                f"Annulus needs 0 < r < R, got r={self.inner_radius}, R={self.radius}"
            )

    @property
    def dim(self) -> int:
        return 1 if self.geometry == "interval" else 2

    @property
    def outer(self) -> float:
        return self.length if self.geometry == "interval" else self.radius

    @property
    def inner(self) -> float:
        return self.inner_radius if self.geometry == "annulus" else 0.0

    def weights(self) -> Tuple[float, float, float, float]:
        """Radial (positive, negative) then tangential (positive, negative) weights."""
        if self.kind == "pucci_plus":
            return self.A, self.a, self.A, self.a
        if self.kind == "pucci_minus":
            return self.a, self.A, self.a, self.A
        if self.kind == "linear":
            return self.a, self.a, self.a, self.a
        return 1.0 + self.q, 1.0 + self.q, 1.0, 1.0

    def scaled(self, t: float) -> "RadialSpec":
        return replace(
            self,
            length=self.length * t,
            radius=self.radius * t,
            inner_radius=self.inner_radius * t,
        )


def reflect_radial(rs: RadialSpec) -> RadialSpec:
    """Reflected problem: Pucci kinds swap, others are unchanged."""
    swap = {"pucci_plus": "pucci_minus", "pucci_minus": "pucci_plus"}
    return replace(rs, kind=swap.get(rs.kind, rs.kind))


def _phi(s: ArrayLike, pos: float, neg: float) -> NDArray[np.float64]:
    s = np.asarray(s, dtype=float)
    return np.where(s > 0, pos * s, neg * s)


def _phi_inverse(z: float, pos: float, neg: float) -> float:
    return z / pos if z > 0 else z / neg


def _odd(u: ArrayLike, alpha: float) -> NDArray[np.float64]:
    u = np.asarray(u, dtype=float)
    return np.sign(u) * np.abs(u) ** (1.0 + alpha)


class _FluxSystem:
    """Right-hand side of the flux system and its weight-switch events."""

    def __init__(self, rs: RadialSpec, shift: float, f: float = 0.0):
        self.rs = rs
        self.shift = shift
        self.f = f
        self.exponent = 1.0 / (1.0 + rs.alpha)
        self.r_pos, self.r_neg, self.t_pos, self.t_neg = rs.weights()

    def tangential(self, r: float, w: float) -> float:
        if self.rs.dim == 1:
            return 0.0
        return (self.rs.dim - 1) * float(_phi(w / r, self.t_pos, self.t_neg))

    def drive(self, r: float, u: float, w: float) -> float:
        """Value Φ_r(w'/(1+α)) must take."""
        return self.f - self.shift * float(_odd(u, self.rs.alpha)) - self.tangential(r, w)

    def __call__(self, r: float, state: NDArray[np.float64]) -> List[float]:
        u, w = state
        du = np.sign(w) * abs(w) ** self.exponent
        dw = (1.0 + self.rs.alpha) * _phi_inverse(
            self.drive(r, u, w), self.r_pos, self.r_neg
        )
        return [du, dw]

    def switches(self) -> List[Callable[[float, NDArray[np.float64]], float]]:
        """Event functions whose zeros change the active weights."""
        events: List[Callable[[float, NDArray[np.float64]], float]] = []
        if self.r_pos != self.r_neg:
            events.append(lambda r, s: self.drive(r, s[0], s[1]))
        if self.rs.dim == 2 and self.t_pos != self.t_neg:
            events.append(lambda r, s: s[1])
        return events


def _initial_sign(
    fn: Callable[[float, NDArray[np.float64]], float],
    system: _FluxSystem,
    t: float,
    y: NDArray[np.float64],
) -> float:
    s = float(np.sign(fn(t, y)))
    if s == 0.0:
        eps = 1e-9 * max(1.0, abs(t))
        s = float(np.sign(fn(t + eps, y + eps * np.asarray(system(t, y)))))
    return s


def _integrate(
    system: _FluxSystem,
    t0: float,
    t1: float,
    y0: Sequence[float],
    rtol: float = INTEGRATOR_RTOL,
    dense: bool = False,
) -> Tuple[NDArray[np.float64], List[Tuple[float, float, object]]]:
    """
    Integrate from t0 to t1, restarting at every weight switch.

    Returns:
        Tuple of (final state, dense pieces ``(t_start, t_end, solution)``)

    Raises:
        StepFloorError: On integrator failure or switch chattering
    """
    events = system.switches()
    t, y = t0, np.asarray(y0, dtype=float)
    signs = [_initial_sign(fn, system, t, y) for fn in events]
    pieces: List[Tuple[float, float, object]] = []
    switches = 0
    while True:
        for fn, s in zip(events, signs):
            fn.terminal = True  # type: ignore[attr-defined]
            fn.direction = -s  # type: ignore[attr-defined]
        sol = solve_ivp(
            system,
            (t, t1),
            y,
            method="DOP853",
            rtol=rtol,
            atol=INTEGRATOR_ATOL,
            events=events or None,
            dense_output=dense,
        )
        if sol.status == -1:
            raise StepFloorError(f"Integration failed at r={t:.6g}: {sol.message}")
        if dense:
            pieces.append((t, float(sol.t[-1]), sol.sol))
        if sol.status == 0:
            return sol.y[:, -1], pieces

        hit = next(i for i, te in enumerate(sol.t_events) if te.size)
        switches += 1
        if switches > MAX_SWITCHES or not sol.t[-1] > t:
            raise StepFloorError(
                f"Weight switches chatter near r={sol.t[-1]:.6g} "
                f"({switches} switches, lambda-shift {system.shift:.6g})"
            )
        signs[hit] = -signs[hit]
        t, y = float(sol.t[-1]), sol.y[:, -1]
        if t >= t1:
            return y, pieces


def _start(rs: RadialSpec, shift: float, f: float = 0.0) -> Tuple[float, List[float]]:
    """Initial radius and state of an eigenvalue trajectory."""
    if rs.geometry != "disk":
        return rs.inner, [0.0, 1.0]
    r_pos, r_neg, t_pos, t_neg = rs.weights()
    alpha = rs.alpha
    r0 = DISK_START * rs.radius
    drive = f - shift
    radial, tangential = (r_pos, t_pos) if drive > 0 else (r_neg, t_neg)
    # w ≈ k r near the centre, with k fixed by the equation at r → 0
    k = (1.0 + alpha) * drive / (radial + (1.0 + alpha) * (rs.dim - 1) * tangential)
    m = 1.0 / (1.0 + alpha)
    u0 = 1.0 + np.sign(k) * abs(k) ** m * r0 ** (m + 1.0) / (m + 1.0)
    return r0, [float(u0), k * r0]


def _end_value(rs: RadialSpec, lam: float, rtol: float) -> float:
    system = _FluxSystem(rs, rs.c + lam)
    r0, y0 = _start(rs, rs.c + lam)
    y, _ = _integrate(system, r0, rs.outer, y0, rtol)
    return float(y[0])


def _first_eigenvalue(rs: RadialSpec, rtol: float) -> float:
    """First λ at which u(outer; λ) changes sign."""
    scale = min(rs.weights()) / rs.outer ** (2.0 + rs.alpha)
    shift = SCAN_START * scale
    lo = shift - rs.c
    if _end_value(rs, lo, rtol) <= 0:
        raise WindowError(f"Trajectory already vanishes at the scan start lambda={lo}")
    for _ in range(SCAN_STEPS):
        shift *= SCAN_FACTOR
        hi = shift - rs.c
        if _end_value(rs, hi, rtol) <= 0:
            break
        lo = hi
    else:
        raise WindowError(f"No sign change of u(outer) below lambda={hi:.6g}")
    root = brentq(lambda lam: _end_value(rs, lam, rtol), lo, hi, xtol=ROOT_XTOL)
    logger.debug(
        f"Shooting eigenvalue {root:.12g}",
        extra={"kind": rs.kind, "geometry": rs.geometry, "alpha": rs.alpha},
    )
    return float(root)


def shoot_eig_1d(rs: RadialSpec, rtol: float = INTEGRATOR_RTOL) -> float:
    """
    First eigenvalue on (0, L) by shooting from u(0)=0, w(0)=1.

    Raises:
        OracleError: If the geometry is not an interval
        WindowError: If no sign change is found
    """
    if rs.geometry != "interval":
        raise OracleError(f"shoot_eig_1d needs an interval, got {rs.geometry}")
    return _first_eigenvalue(rs, rtol)


def shoot_eig_radial(rs: RadialSpec, rtol: float = INTEGRATOR_RTOL) -> float:
    """
    First radial eigenvalue on a disk or annulus in two dimensions.

    Disk trajectories start at a tiny radius with u'(0)=0; annulus
    trajectories start at the inner radius with u=0.

    Raises:
        OracleError: If the geometry is an interval
        WindowError: If no sign change is found
        StepFloorError: If Pucci weight switches chatter
    """
    if rs.geometry == "interval":
        raise OracleError("shoot_eig_radial needs a disk or annulus")
    return _first_eigenvalue(rs, rtol)


def closed_form_eig_1d(rs: RadialSpec) -> float:
    """
    First eigenvalue on (0, L) from the first integral.

    With p = 2+α the positive eigenfunction is concave, so only the negative
    radial weight enters: λ = weight·(2π/(p sin(π/p)))^p / L^p − c.
    """
    if rs.geometry != "interval":
        raise OracleError("closed_form_eig_1d needs an interval")
    p = 2.0 + rs.alpha
    weight = rs.weights()[1]
    half_period = 2.0 * np.pi / (p * np.sin(np.pi / p))
    return float(weight * (half_period / rs.length) ** p - rs.c)


def dirichlet_midpoint_closed_form(rs: RadialSpec, f: float) -> float:
    """
    u(L/2) for |u'|^α Φ(u'') = f on (0, L), f <= 0 constant, c = 0.

    The flux is linear, w = K(L/2 − x) with K = (1+α)|f|/weight, giving
    u(L/2) = K^m (L/2)^{m+1}/(m+1) with m = 1/(1+α).
    """
    if rs.geometry != "interval" or rs.c != 0.0:
        raise OracleError("Closed form needs an interval and c = 0")
    if f > 0:
        raise OracleError(f"Forcing must be non-positive, got {f}")
    m = 1.0 / (1.0 + rs.alpha)
    K = (1.0 + rs.alpha) * abs(f) / rs.weights()[1]
    half = 0.5 * rs.length
    return float(K**m * half ** (m + 1.0) / (m + 1.0))


def oracle_dirichlet_1d(
    rs: RadialSpec, f: float, lam: float = 0.0, rtol: float = INTEGRATOR_RTOL
) -> RadialProfile:
    """
    Solution of F[u] + (c+λ)|u|^α u = f on (0, L), u(0) = u(L) = 0.

    Shoots on the initial flux w(0) until u(L) = 0.

    Args:
        rs: Interval problem
        f: Constant forcing, f <= 0
        lam: Eigenvalue parameter
        rtol: Integrator tolerance

    Returns:
        Callable evaluating u at query points in [0, L]

    Raises:
        OracleError: If f > 0 or the geometry is not an interval
        WindowError: If the initial flux cannot be bracketed
    """
    if rs.geometry != "interval":
        raise OracleError("oracle_dirichlet_1d needs an interval")
    if f > 0:
        raise OracleError(f"Forcing must be non-positive, got {f}")
    if f == 0:
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))

    system = _FluxSystem(rs, rs.c + lam, f)

    def end(w0: float) -> float:
        y, _ = _integrate(system, 0.0, rs.length, [0.0, w0], rtol)
        return float(y[0])

    hi = 1.0
    for _ in range(FLUX_DOUBLINGS):
        if end(hi) > 0:
            break
        hi *= 2.0
    else:
        raise WindowError(f"Initial flux not bracketed below {hi:.3e}")
    w0 = brentq(end, 0.0, hi, xtol=1e-15)
    _, pieces = _integrate(system, 0.0, rs.length, [0.0, w0], rtol, dense=True)
    logger.debug(f"Dirichlet shot with w(0)={w0:.12g}", extra={"alpha": rs.alpha})
    return _piecewise(pieces)


def _piecewise(pieces: List[Tuple[float, float, object]]) -> RadialProfile:
    def evaluate(x: ArrayLike) -> NDArray[np.float64]:
        points = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.full(points.shape, np.nan)
        for start, stop, sol in pieces:
            mask = (points >= start) & (points <= stop)
            if mask.any():
                out[mask] = sol(points[mask])[0]  # type: ignore[operator]
        return out.reshape(np.shape(x)) if np.ndim(x) else out

    return evaluate


def flux_residual(
    rs: RadialSpec,
    lam: float,
    r: ArrayLike,
    u: ArrayLike,
    du: ArrayLike,
    d2u: ArrayLike,
    f: float = 0.0,
) -> float:
    """
    Largest gap between the flux form and the original singular equation.

    Both residuals are evaluated on a smooth profile given by its values and
    first two derivatives; points with u' = 0 are skipped.
    """
    r, u, du, d2u = (np.asarray(v, dtype=float) for v in (r, u, du, d2u))
    r_pos, r_neg, t_pos, t_neg = rs.weights()
    alpha = rs.alpha
    keep = du != 0
    r, u, du, d2u = r[keep], u[keep], du[keep], d2u[keep]
    zeroth = (rs.c + lam) * _odd(u, alpha) - f
    weight = np.abs(du) ** alpha

    original = weight * _phi(d2u, r_pos, r_neg) + zeroth
    w = np.sign(du) * np.abs(du) ** (1.0 + alpha)
    dw = (1.0 + alpha) * weight * d2u
    flux = _phi(dw / (1.0 + alpha), r_pos, r_neg) + zeroth
    if rs.dim == 2:
        original = original + weight * _phi(du / r, t_pos, t_neg)
        flux = flux + _phi(w / r, t_pos, t_neg)
    return float(np.max(np.abs(flux - original), initial=0.0))


def oracle_eigenvalue(rs: RadialSpec, rtol: Optional[float] = None) -> float:
    """Eigenvalue oracle for any geometry."""
    tol = INTEGRATOR_RTOL if rtol is None else rtol
    if rs.geometry == "interval":
        return shoot_eig_1d(rs, tol)
    return shoot_eig_radial(rs, tol)
