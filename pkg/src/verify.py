"""Executable checks of comparison, simplicity, Hopf and related properties.

Every check returns a CheckReport with verdict ``pass``, ``fail`` or
``inconclusive``. Strict inequalities are only passed beyond an explicit
margin; results inside the margin are inconclusive.
"""
import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from .dirichlet import SolveConfig, solve_dirichlet
from .eigen import power_iterate, principal_eigenvalue, reflect_spec, seeded_start
from .exceptions import (
    ConfigurationError,
    DivergenceError,
    InnerSolveError,
    InsufficientDataError,
    SingularEigenError,
    StagnationError,
)
from .grid import DomainSpec, Grid, ScalarField, Shape, build_domain, distance_field
from .models import CheckReport, EigResult, HolderFit
from .operators import OperatorSpec, pucci_hessian

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"

# Pairwise sup-norm tolerance between normalized eigenfunctions
SIMPLICITY_TOL = 1e-4

# Allowed growth of the distance band ratio under refinement
DISTANCE_GROWTH = 2.0

# Refined Hopf quotient must keep this fraction of the coarse one
HOPF_STABILITY = 0.5

# Relative slack of the barrier inequality
BARRIER_RTOL = 1e-12

# Resolution of the annulus on which the barrier is sampled
BARRIER_GRID_N = 64

# Radii at which the barrier suite checks the supersolution inequality
BARRIER_RADII = (0.25, 0.5, 1.0)

# Separations per Hölder fit and the largest separation relative to d_Ω
HOLDER_SCALES = 3
HOLDER_MAX_FRACTION = 1.0 / 8.0

# Thresholds used by the holder suite
HOLDER_BETA_MIN = 0.5
HOLDER_RESIDUAL_MAX = 0.1

# Comparison slack in units of the solver tolerance
COMPARISON_SLACK = 10.0

# Sup norm below which an isolation run counts as the zero solution
ZERO_TOL = 1e-6

# Outer iteration budget of isolation runs relative to the configured one
ISOLATION_ITER_FACTOR = 4

# Out-of-budget isolation runs below this fraction of their start count as decaying to zero
DECAY_FRACTION = 1e-3

# Near-boundary band of the distance suite, in grid spacings
DISTANCE_BAND_CELLS = 4

SUITES = (
    "comparison",
    "simplicity",
    "hopf",
    "distance",
    "monotonicity",
    "isolation",
    "holder",
    "barrier",
    "scaling",
    "nonexistence",
)


def _report(
    check: str,
    case: str,
    n: int,
    measured: float,
    threshold: float,
    verdict: str,
    **details: Any,
) -> CheckReport:
    report = CheckReport(
        check=check,
        case=case,
        n=n,
        measured=float(measured),
        threshold=float(threshold),
        verdict=verdict,
        details=details,
    )
    log = logger.info if verdict == PASS else logger.warning
    log(
        f"Check {check} on {case}: {verdict}",
        extra={"measured": report["measured"], "threshold": report["threshold"], "n": n},
    )
    return report


def _interior(u: ScalarField, g: Grid) -> NDArray[np.float64]:
    g.check(u)
    return np.asarray(u.values)[g.interior]


def _witness(
    g: Grid, values: NDArray[np.float64], mask: NDArray[np.bool_], k: int
) -> Dict[str, Any]:
    """Coordinates and value of the k-th masked node."""
    X, Y = g.coordinates()
    return {
        "x": float(X[mask][k]),
        "y": float(Y[mask][k]),
        "value": float(values[mask][k]),
    }


# Barrier construction


@dataclass(frozen=True)
class BarrierSpec:
    """
    Exponential barrier w = δ(e^{−c|x−x₀|} − e^{−3cR/2}) on R/2 < |x−x₀| < 3R/2.

    Attributes:
        center: Point x₀
        R: Radius parameter
        amplitude: δ >= 0
        rate: c > 0
        L1: Lower gradient bound
        L2: Upper gradient bound
        g_inf: Forcing bound |g|_∞
    """

    center: Tuple[float, float] = (0.0, 0.0)
    R: float = 1.0
    amplitude: float = 0.0
    rate: float = 1.0
    L1: float = 1.0
    L2: float = 1.0
    g_inf: float = 0.0

    def __post_init__(self) -> None:
        if not self.R > 0:
            raise ConfigurationError(f"Barrier radius must be positive, got {self.R}")
        if self.amplitude < 0:
            raise ConfigurationError(f"Amplitude must be non-negative, got {self.amplitude}")
        if not self.rate > 0:
            raise ConfigurationError(f"Rate must be positive, got {self.rate}")
        if not 0 < self.L1 <= self.L2:
            raise ConfigurationError(f"Need 0 < L1 <= L2, got {self.L1}, {self.L2}")
        if not self.amplitude < self.R * self.L1 * np.e / 16.0:
            raise ConfigurationError(
                f"Amplitude {self.amplitude} violates the smallness bound R*L1*e/16"
            )


def barrier_constant(
    N: int,
    R: float,
    a: float,
    A: float,
    h_inf: float,
    alpha: float,
    g_inf: float,
    L1: float,
    L2: float,
) -> float:
    """Smallest admissible barrier rate."""
    geometric = 2.0 * (2.0 * A * (N - 1) / R + h_inf) / a
    forcing = 2.0 ** (4.0 - alpha) * g_inf / (a * L1 * L2**alpha)
    return max(geometric, forcing)


def check_barrier_supersolution(
    bs: BarrierSpec, spec: OperatorSpec, n: int = BARRIER_GRID_N
) -> CheckReport:
    """
    Check M⁻(D²w) − |h|_∞|∇w| >= (a c²/2) δ e^{−cr} on the barrier annulus.

    Derivatives of w are exact; the annulus lattice only supplies the sample
    points.
    """
    domain = DomainSpec(
        shape=Shape.ANNULUS,
        radius=1.5 * bs.R,
        inner_radius=0.5 * bs.R,
        center=bs.center,
    )
    g = build_domain(domain, n)
    X, Y = g.coordinates()
    mask = g.interior
    dx = X[mask] - bs.center[0]
    dy = Y[mask] - bs.center[1]
    r = np.hypot(dx, dy)
    ex, ey = dx / r, dy / r

    c, delta = bs.rate, bs.amplitude
    decay = np.exp(-c * r)
    w1 = -delta * c * decay
    w2 = delta * c * c * decay
    tangential = w1 / r
    m11 = w2 * ex * ex + tangential * (1.0 - ex * ex)
    m12 = (w2 - tangential) * ex * ey
    m22 = w2 * ey * ey + tangential * (1.0 - ey * ey)

    h_inf = spec.drift_bound(g)
    lhs = pucci_hessian(m11, m12, m22, spec.a, spec.A, "minus") - h_inf * np.abs(w1)
    rhs = 0.5 * spec.a * c * c * delta * decay
    gap = lhs - rhs
    slack = BARRIER_RTOL * np.maximum(1.0, np.abs(rhs))
    k = int(np.argmin(gap + slack))
    verdict = PASS if np.all(gap >= -slack) else FAIL
    return _report(
        "barrier",
        f"R={bs.R:g}",
        n,
        float(gap[k]),
        0.0,
        verdict,
        witness={"x": float(X[mask][k]), "y": float(Y[mask][k]), "r": float(r[k])},
        rate=c,
        amplitude=delta,
    )


# Solution-level checks


def check_comparison(
    spec: OperatorSpec,
    g: Grid,
    f1: ScalarField,
    f2: ScalarField,
    lam: float,
    cfg: SolveConfig,
    case: str = "comparison",
) -> CheckReport:
    """
    Solve with forcings f₂ <= f₁ and require u₁ <= u₂ + tol.

    Raises:
        ConfigurationError: If c + λ > 0 somewhere or f₂ > f₁ somewhere
    """
    c = spec.c_at(g)[g.interior]
    if np.any(c + lam > 0):
        raise ConfigurationError("Comparison requires c + lambda <= 0")
    if np.any(_interior(f2, g) > _interior(f1, g)):
        raise ConfigurationError("Comparison requires f2 <= f1")
    try:
        u1, _ = solve_dirichlet(spec, g, f1, lam, cfg)
        u2, _ = solve_dirichlet(spec, g, f2, lam, cfg)
    except SingularEigenError as e:
        return _report("comparison", case, g.n, np.nan, 0.0, INCONCLUSIVE, error=str(e))

    gap = np.asarray(u1.values) - np.asarray(u2.values)
    tol = COMPARISON_SLACK * cfg.tol * max(1.0, g.sup_norm(u1), g.sup_norm(u2))
    k = int(np.argmax(gap[g.interior]))
    measured = float(gap[g.interior][k])
    verdict = PASS if measured <= tol else FAIL
    return _report(
        "comparison",
        case,
        g.n,
        measured,
        tol,
        verdict,
        witness=_witness(g, gap, g.interior, k),
    )


def check_simplicity(
    spec: OperatorSpec,
    g: Grid,
    cfg: SolveConfig,
    seeds: Sequence[int],
    refined: Optional[Grid] = None,
    tol: float = SIMPLICITY_TOL,
    case: str = "simplicity",
) -> CheckReport:
    """
    Eigenfunctions from different seeds must coincide after normalization.

    With a refined grid, the pairwise gap there must not exceed the coarse
    gap (up to the eigen tolerance).
    """
    if g.boundary_count > 2 or (g.boundary_count == 2 and g.spec.shape != Shape.ANNULUS):
        return _report(
            "simplicity", case, g.n, np.nan, tol, INCONCLUSIVE,
            reason="boundary has more components than the result covers",
        )
    try:
        gap, lambdas, positive = _seed_gap(spec, g, cfg, seeds)
        fine_gap = _seed_gap(spec, refined, cfg, seeds)[0] if refined is not None else None
    except SingularEigenError as e:
        return _report("simplicity", case, g.n, np.nan, tol, INCONCLUSIVE, error=str(e))

    if not positive:
        return _report(
            "simplicity", case, g.n, gap, tol, INCONCLUSIVE,
            reason="c + lambda is not positive", lambdas=lambdas,
        )
    ok = gap <= tol
    if fine_gap is not None:
        ok = ok and fine_gap <= max(gap, 10.0 * cfg.eig_tol)
    return _report(
        "simplicity",
        case,
        g.n,
        gap,
        tol,
        PASS if ok else FAIL,
        lambdas=lambdas,
        refined_gap=fine_gap,
    )


def _seed_gap(
    spec: OperatorSpec, g: Grid, cfg: SolveConfig, seeds: Sequence[int]
) -> Tuple[float, List[float], bool]:
    results = [power_iterate(spec, g, cfg, seed) for seed in seeds]
    fields = [np.nan_to_num(np.asarray(r["eigenfunction"].values)) for r in results]
    gap = 0.0
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            gap = max(gap, float(np.max(np.abs(fields[i] - fields[j]))))
    positive = all(r["diagnostics"]["c_plus_lambda_positive"] for r in results)
    return gap, [r["eigenvalue"] for r in results], positive


def _inward_quotient(phi: ScalarField, g: Grid) -> Tuple[float, Dict[str, Any]]:
    """Smallest inward axis difference quotient over boundary nodes."""
    values = np.nan_to_num(np.asarray(phi.values))
    interior = g.interior
    best = np.full(g.shape, -np.inf)
    axes = [0] if g.dim == 1 else [0, 1]
    for axis in axes:
        for step in (1, -1):
            neighbour = np.roll(values, -step, axis=axis)
            inside = np.roll(interior, -step, axis=axis)
            edge = [slice(None)] * 2
            edge[axis] = slice(-1, None) if step == 1 else slice(0, 1)
            inside[tuple(edge)] = False
            quotient = np.where(inside, (neighbour - values) / g.h, -np.inf)
            best = np.maximum(best, quotient)
    mask = g.boundary & np.isfinite(best)
    if not mask.any():
        return np.nan, {}
    k = int(np.argmin(best[mask]))
    return float(best[mask][k]), _witness(g, best, mask, k)


def _interior_minima(phi: ScalarField, g: Grid) -> int:
    """Number of interior nodes strictly below every neighbour."""
    values = np.where(g.active, np.asarray(phi.values), np.inf)
    padded = np.pad(values, 1, constant_values=np.inf)
    nx, ny = g.shape
    offsets = [(-1, 0), (1, 0)] if g.dim == 1 else [
        (di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)
    ]
    strict = np.ones(g.shape, dtype=bool)
    for di, dj in offsets:
        shifted = padded[1 + di : 1 + di + nx, 1 + dj : 1 + dj + ny]
        strict &= values < shifted
    return int(np.count_nonzero(strict & g.interior))


def check_hopf(
    spec: OperatorSpec,
    g: Grid,
    phi: ScalarField,
    refined: Optional[Tuple[Grid, ScalarField]] = None,
    case: str = "hopf",
) -> CheckReport:
    """
    Positive inward boundary quotients and no strict interior minimum.

    A field that is constant in the interior is reported inconclusive.
    """
    inner = _interior(phi, g)
    if inner.size == 0 or np.ptp(inner) == 0.0:
        return _report("hopf", case, g.n, np.nan, 0.0, INCONCLUSIVE, reason="degenerate field")

    quotient, witness = _inward_quotient(phi, g)
    minima = _interior_minima(phi, g)
    ok = quotient > 0 and minima == 0
    fine_quotient = None
    if refined is not None:
        fine_grid, fine_phi = refined
        fine_quotient, _ = _inward_quotient(fine_phi, fine_grid)
        ok = ok and fine_quotient >= HOPF_STABILITY * quotient
    return _report(
        "hopf",
        case,
        g.n,
        quotient,
        0.0,
        PASS if ok else FAIL,
        witness=witness,
        interior_minima=minima,
        refined_quotient=fine_quotient,
        kind=spec.kind.value,
    )


def _band_ratio(
    phi: ScalarField, d: ScalarField, band: Optional[float]
) -> Tuple[float, float]:
    values = np.asarray(phi.values)
    dist = np.asarray(d.values)
    with np.errstate(invalid="ignore"):
        mask = np.isfinite(dist) & (dist > 0)
        if band is not None:
            mask &= dist <= band
    ratio = values[mask] / dist[mask]
    return float(np.min(ratio)), float(np.max(ratio))


def check_distance_comparability(
    phi: ScalarField,
    d: ScalarField,
    band: Optional[float] = None,
    refined: Optional[Tuple[ScalarField, ScalarField]] = None,
    n: int = 0,
    case: str = "distance",
) -> CheckReport:
    """
    Bounds c₁ d <= φ <= c₂ d on a near-boundary band.

    Args:
        phi: Positive eigenfunction
        d: Distance field on the same grid
        band: Band width; all interior nodes when None
        refined: (φ, d) on a refined grid
        n: Resolution label for the report
        case: Case label

    Returns:
        CheckReport with measured c₂/c₁
    """
    if phi.grid_tag != d.grid_tag:
        raise ConfigurationError("Eigenfunction and distance field live on different grids")
    c1, c2 = _band_ratio(phi, d, band)
    ok = 0 < c1 <= c2 < np.inf
    ratio = c2 / c1 if c1 > 0 else np.inf
    fine_ratio = None
    if refined is not None:
        f1, f2 = _band_ratio(refined[0], refined[1], band)
        fine_ratio = f2 / f1 if f1 > 0 else np.inf
        ok = ok and fine_ratio < DISTANCE_GROWTH * ratio
    return _report(
        "distance",
        case,
        n,
        ratio,
        DISTANCE_GROWTH,
        PASS if ok else FAIL,
        c1=c1,
        c2=c2,
        refined_ratio=fine_ratio,
    )


def check_domain_monotonicity(
    spec: OperatorSpec,
    outer: DomainSpec,
    inner: DomainSpec,
    cfg: SolveConfig,
    n: int,
    case: str = "monotonicity",
) -> CheckReport:
    """
    λ⁺(inner) must exceed λ⁺(outer) beyond the combined eigen tolerance.

    Raises:
        ConfigurationError: If inner is not contained in outer or equals it
    """
    if inner == outer or not outer.contains(inner):
        raise ConfigurationError("Inner domain must be a proper subset of the outer one")
    try:
        lam_out = principal_eigenvalue(spec, build_domain(outer, n), cfg)["eigenvalue"]
        lam_in = principal_eigenvalue(spec, build_domain(inner, n), cfg)["eigenvalue"]
    except SingularEigenError as e:
        return _report("monotonicity", case, n, np.nan, 0.0, INCONCLUSIVE, error=str(e))

    gap = lam_in - lam_out
    margin = 2.0 * cfg.eig_tol * (max(1.0, abs(lam_in)) + max(1.0, abs(lam_out)))
    if gap > margin:
        verdict = PASS
    elif gap < -margin:
        verdict = FAIL
    else:
        verdict = INCONCLUSIVE
    return _report(
        "monotonicity",
        case,
        n,
        gap,
        margin,
        verdict,
        lambda_inner=lam_in,
        lambda_outer=lam_out,
        ratio=lam_in / lam_out if lam_out else np.nan,
    )


def isolation_starts(g: Grid, seed: int) -> Dict[str, ScalarField]:
    """Positive, negative and sign-changing starting fields for one seed."""
    positive = seeded_start(g, seed)
    base = np.nan_to_num(np.asarray(positive.values))
    X, Y = g.coordinates()
    xmin, xmax = g.x[0], g.x[-1]
    xi = (X - xmin) / (xmax - xmin)
    if g.dim == 2 and seed % 2 == 1:
        xi = (Y - g.y[0]) / (g.y[-1] - g.y[0])
    changing = base * np.sin(2.0 * np.pi * xi)
    return {
        "positive": positive,
        "negative": -positive,
        "sign_changing": g.field(np.where(g.interior, changing, 0.0)),
    }


def classify_stagnation(error: StagnationError, start_norm: float) -> str:
    """Classify an isolation run that ran out of budget by its last sup norm."""
    if error.norm is None:
        return "stagnated"
    if error.norm < ZERO_TOL:
        return "zero"
    if error.norm <= DECAY_FRACTION * start_norm:
        return "decayed"
    return "stagnated"


def isolation_scan(
    spec: OperatorSpec,
    g: Grid,
    lam1: float,
    cfg: SolveConfig,
    lam_grid: Sequence[float],
    seeds: Sequence[int],
    case: str = "isolation",
) -> CheckReport:
    """
    Search for nontrivial solutions of F[u] + (c+λ)|u|^α u = 0 near λ₁.

    Every run must reach the zero field or diverge. A converged nontrivial
    constant-sign solution above λ₁, or a sign-changing one at λ₁, fails.
    Runs get ``ISOLATION_ITER_FACTOR`` times the outer budget; a run that
    still stops short counts as zero when its last sup norm is below
    ``ZERO_TOL`` and as decayed when it fell below ``DECAY_FRACTION`` of
    its start.
    """
    zero = g.zeros()
    counts = {"zero": 0, "decayed": 0, "diverged": 0, "stagnated": 0, "nontrivial": 0}
    violations: List[Dict[str, Any]] = []
    at_first = cfg.eig_tol * max(1.0, abs(lam1))
    run_cfg = replace(cfg, max_iter=cfg.max_iter * ISOLATION_ITER_FACTOR)

    for lam in lam_grid:
        for seed in seeds:
            for label, start in isolation_starts(g, seed).items():
                try:
                    u, _ = solve_dirichlet(spec, g, zero, lam, run_cfg, initial=start)
                except DivergenceError:
                    counts["diverged"] += 1
                    continue
                except StagnationError as e:
                    counts[classify_stagnation(e, g.sup_norm(start))] += 1
                    continue
                except InnerSolveError:
                    counts["stagnated"] += 1
                    continue
                values = _interior(u, g)
                norm = float(np.max(np.abs(values)))
                if norm < ZERO_TOL:
                    counts["zero"] += 1
                    continue
                counts["nontrivial"] += 1
                constant_sign = bool(np.all(values >= 0) or np.all(values <= 0))
                above = lam > lam1 + at_first
                at = abs(lam - lam1) <= at_first
                if (constant_sign and above) or (not constant_sign and at):
                    violations.append(
                        {"lambda": lam, "seed": seed, "start": label, "norm": norm}
                    )
                    logger.warning(
                        f"Nontrivial solution at lambda={lam:.6g} from {label} start",
                        extra={"seed": seed, "norm": norm},
                    )

    if violations:
        verdict = FAIL
    elif counts["stagnated"] or counts["nontrivial"]:
        verdict = INCONCLUSIVE
    else:
        verdict = PASS
    return _report(
        "isolation",
        case,
        g.n,
        len(violations),
        0.0,
        verdict,
        outcomes=counts,
        witness=violations[0] if violations else None,
        lambda_1=lam1,
    )


def check_sign_nonexistence(
    spec: OperatorSpec,
    g: Grid,
    lam_plus: float,
    cfg: SolveConfig,
    case: str = "nonexistence",
) -> CheckReport:
    """
    With f ≡ 1 just below λ⁺ no converged solution may be positive anywhere.

    Solver failure counts as consistent with nonexistence.
    """
    lam = lam_plus - cfg.eig_tol * max(1.0, abs(lam_plus))
    try:
        u, _ = solve_dirichlet(spec, g, g.field(1.0), lam, cfg)
    except SingularEigenError as e:
        return _report("nonexistence", case, g.n, np.nan, 0.0, PASS, outcome=str(e))
    values = _interior(u, g)
    top = float(np.max(values))
    tol = COMPARISON_SLACK * cfg.tol * max(1.0, float(np.max(np.abs(values))))
    return _report(
        "nonexistence",
        case,
        g.n,
        top,
        tol,
        PASS if top <= tol else FAIL,
        outcome="converged",
        lambda_trial=lam,
    )


def check_scaling_law(
    spec: OperatorSpec,
    domain: DomainSpec,
    n: int,
    cfg: SolveConfig,
    t: float = 2.0,
    rtol: float = 0.01,
    case: str = "scaling",
) -> CheckReport:
    """λ⁺(tΩ)/λ⁺(Ω) against t^{−(2+α)}."""
    try:
        base = principal_eigenvalue(spec, build_domain(domain, n), cfg)["eigenvalue"]
        scaled = principal_eigenvalue(spec, build_domain(domain.scaled(t), n), cfg)[
            "eigenvalue"
        ]
    except SingularEigenError as e:
        return _report("scaling", case, n, np.nan, rtol, INCONCLUSIVE, error=str(e))
    expected = t ** (-(2.0 + spec.alpha))
    measured = scaled / base
    error = abs(measured / expected - 1.0)
    return _report(
        "scaling",
        case,
        n,
        measured,
        expected,
        PASS if error <= rtol else FAIL,
        relative_error=error,
        factor=t,
    )


def check_constant_sign(
    spec: OperatorSpec,
    g: Grid,
    cfg: SolveConfig,
    seeds: Sequence[int],
    case: str = "constant_sign",
) -> CheckReport:
    """
    Eigenfunctions reached from positive and negative starts keep their sign.

    Negative starts run on the reflected operator and are negated back.
    """
    violations = 0
    try:
        for seed in seeds:
            plus = power_iterate(spec, g, cfg, seed)["eigenfunction"]
            minus = -power_iterate(reflect_spec(spec), g, cfg, seed)["eigenfunction"]
            violations += int(np.count_nonzero(_interior(plus, g) <= 0))
            violations += int(np.count_nonzero(_interior(minus, g) >= 0))
    except SingularEigenError as e:
        return _report("constant_sign", case, g.n, np.nan, 0.0, INCONCLUSIVE, error=str(e))
    return _report(
        "constant_sign",
        case,
        g.n,
        violations,
        0.0,
        PASS if violations == 0 else FAIL,
        seeds=list(seeds),
    )


# Regularity


def _oscillation(
    values: NDArray[np.float64], valid: NDArray[np.bool_], m: int, dim: int
) -> float:
    """Largest |v(x + m h e) − v(x)| over axis directions e."""
    best = 0.0
    for axis in range(dim):
        if values.shape[axis] <= m:
            continue
        lo = [slice(None)] * 2
        hi = [slice(None)] * 2
        lo[axis] = slice(0, -m)
        hi[axis] = slice(m, None)
        both = valid[tuple(lo)] & valid[tuple(hi)]
        if both.any():
            diff = np.abs(values[tuple(hi)] - values[tuple(lo)])[both]
            best = max(best, float(np.max(diff)))
    return best


def _fit(separations: NDArray[np.float64], osc: List[float]) -> Tuple[float, float]:
    """Slope and RMS residual of log osc against log separation."""
    osc_arr = np.asarray(osc)
    if np.all(osc_arr == 0):
        return 1.0, 0.0
    x = np.log(separations)
    y = np.log(np.maximum(osc_arr, np.finfo(float).tiny))
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((slope * x + intercept - y) ** 2)))
    return float(slope), residual


def estimate_holder(u: ScalarField, g: Grid, scales: int = HOLDER_SCALES) -> HolderFit:
    """
    Hölder exponents of u (γ) and of its discrete gradient (β).

    Oscillations are measured at dyadic separations 2h, 4h, ...; the single
    spacing h is skipped because central differences smear the gradient at
    that scale. Separations stop at d_Ω/8.

    Raises:
        InsufficientDataError: If fewer than ``scales`` separations fit
    """
    g.check(u)
    steps = []
    m = 2
    while len(steps) < scales and m * g.h <= HOLDER_MAX_FRACTION * g.diameter:
        steps.append(m)
        m *= 2
    if len(steps) < scales:
        raise InsufficientDataError(
            f"Only {len(steps)} dyadic separations below d/8 at h={g.h:.3g}; need {scales}"
        )

    values = np.nan_to_num(np.asarray(u.values))
    active = g.active
    interior = g.interior
    grads = [
        np.where(interior, (np.roll(values, -1, axis) - np.roll(values, 1, axis)) / (2 * g.h), 0.0)
        for axis in range(g.dim)
    ]
    separations = np.asarray(steps, dtype=float) * g.h
    osc_u = [_oscillation(values, active, s, g.dim) for s in steps]
    osc_grad = [max(_oscillation(gr, interior, s, g.dim) for gr in grads) for s in steps]
    gamma, gamma_residual = _fit(separations, osc_u)
    beta, beta_residual = _fit(separations, osc_grad)
    logger.debug(
        f"Holder fit beta={beta:.3f} gamma={gamma:.3f}",
        extra={"grid": g.tag, "beta_residual": beta_residual},
    )
    return HolderFit(
        beta=beta,
        gamma=gamma,
        beta_residual=beta_residual,
        gamma_residual=gamma_residual,
        separations=separations.tolist(),
    )


# Suites


@dataclass
class SuiteContext:
    """Shared inputs and cached eigen results for a verification suite."""

    spec: OperatorSpec
    domain: DomainSpec
    n: int
    cfg: SolveConfig
    seeds: Sequence[int] = (0, 1, 2)
    refine: bool = False
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def case(self) -> str:
        return f"{self.domain.shape.value}-{self.spec.kind.value}-alpha{self.spec.alpha:g}"

    @cached_property
    def grid(self) -> Grid:
        return build_domain(self.domain, self.n)

    @cached_property
    def fine_grid(self) -> Grid:
        return build_domain(self.domain, 2 * self.n)

    @cached_property
    def plus(self) -> EigResult:
        return principal_eigenvalue(self.spec, self.grid, self.cfg)

    @cached_property
    def minus(self) -> EigResult:
        return principal_eigenvalue(reflect_spec(self.spec), self.grid, self.cfg)

    @cached_property
    def fine_plus(self) -> EigResult:
        return principal_eigenvalue(self.spec, self.fine_grid, self.cfg)


def _smooth_random(g: Grid, rng: np.random.Generator) -> NDArray[np.float64]:
    """Smooth random field with values in [0, 1]."""
    X, Y = g.coordinates()
    total = np.zeros(g.shape)
    for _ in range(3):
        kx, ky = rng.integers(1, 4, size=2)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        total += rng.uniform(0.5, 1.0) * np.cos(kx * np.pi * X + ky * np.pi * Y + phase)
    lo, hi = np.min(total), np.max(total)
    return (total - lo) / (hi - lo) if hi > lo else np.zeros(g.shape)


def _suite_comparison(ctx: SuiteContext) -> List[CheckReport]:
    g = ctx.grid
    lam = min(0.0, -float(np.max(ctx.spec.c_at(g))))
    reports = []
    for seed in ctx.seeds:
        rng = np.random.default_rng(seed)
        f1 = -(0.5 + 0.5 * _smooth_random(g, rng))
        f2 = f1 - (0.5 + 0.5 * _smooth_random(g, rng))
        reports.append(
            check_comparison(
                ctx.spec, g, g.field(f1), g.field(f2), lam, ctx.cfg,
                case=f"{ctx.case}-seed{seed}",
            )
        )
    return reports


def _suite_simplicity(ctx: SuiteContext) -> List[CheckReport]:
    refined = ctx.fine_grid if ctx.refine else None
    return [check_simplicity(ctx.spec, ctx.grid, ctx.cfg, ctx.seeds, refined, case=ctx.case)]


def _suite_hopf(ctx: SuiteContext) -> List[CheckReport]:
    refined = (ctx.fine_grid, ctx.fine_plus["eigenfunction"]) if ctx.refine else None
    return [check_hopf(ctx.spec, ctx.grid, ctx.plus["eigenfunction"], refined, ctx.case)]


def _suite_distance(ctx: SuiteContext) -> List[CheckReport]:
    band = DISTANCE_BAND_CELLS * ctx.grid.h
    refined = None
    if ctx.refine:
        refined = (ctx.fine_plus["eigenfunction"], distance_field(ctx.fine_grid))
    return [
        check_distance_comparability(
            ctx.plus["eigenfunction"],
            distance_field(ctx.grid),
            band=band,
            refined=refined,
            n=ctx.n,
            case=ctx.case,
        )
    ]


def _suite_monotonicity(ctx: SuiteContext) -> List[CheckReport]:
    inner = ctx.domain.scaled(0.9)
    return [check_domain_monotonicity(ctx.spec, ctx.domain, inner, ctx.cfg, ctx.n, ctx.case)]


def _suite_isolation(ctx: SuiteContext) -> List[CheckReport]:
    lam_plus = ctx.plus["eigenvalue"]
    lam1 = max(lam_plus, ctx.minus["eigenvalue"])
    lam_grid = [1.05 * lam1, 1.1 * lam1]
    reports = [isolation_scan(ctx.spec, ctx.grid, lam1, ctx.cfg, lam_grid, ctx.seeds, ctx.case)]
    reports.append(
        isolation_scan(
            ctx.spec, ctx.grid, lam_plus, ctx.cfg, [lam_plus], ctx.seeds,
            f"{ctx.case}-at-lambda-plus",
        )
    )
    return reports


def _suite_holder(ctx: SuiteContext) -> List[CheckReport]:
    fit = estimate_holder(ctx.plus["eigenfunction"], ctx.grid)
    ok = fit["beta"] >= HOLDER_BETA_MIN and fit["beta_residual"] < HOLDER_RESIDUAL_MAX
    return [
        _report(
            "holder",
            ctx.case,
            ctx.n,
            fit["beta"],
            HOLDER_BETA_MIN,
            PASS if ok else FAIL,
            gamma=fit["gamma"],
            beta_residual=fit["beta_residual"],
            gamma_residual=fit["gamma_residual"],
        )
    ]


def _suite_barrier(ctx: SuiteContext) -> List[CheckReport]:
    spec = ctx.spec
    L1 = L2 = 1.0
    g_inf = 1.0
    h_inf = spec.drift_bound(ctx.grid)
    reports = []
    for R in BARRIER_RADII:
        rate = barrier_constant(2, R, spec.a, spec.A, h_inf, spec.alpha, g_inf, L1, L2)
        bs = BarrierSpec(
            R=R, amplitude=0.5 * R * L1 * np.e / 16.0, rate=rate, L1=L1, L2=L2, g_inf=g_inf
        )
        reports.append(check_barrier_supersolution(bs, spec))
    return reports


def _suite_scaling(ctx: SuiteContext) -> List[CheckReport]:
    return [check_scaling_law(ctx.spec, ctx.domain, ctx.n, ctx.cfg, case=ctx.case)]


def _suite_nonexistence(ctx: SuiteContext) -> List[CheckReport]:
    return [
        check_sign_nonexistence(ctx.spec, ctx.grid, ctx.plus["eigenvalue"], ctx.cfg, ctx.case),
        check_constant_sign(ctx.spec, ctx.grid, ctx.cfg, ctx.seeds, ctx.case),
    ]


SUITE_RUNNERS: Dict[str, Callable[[SuiteContext], List[CheckReport]]] = {
    "comparison": _suite_comparison,
    "simplicity": _suite_simplicity,
    "hopf": _suite_hopf,
    "distance": _suite_distance,
    "monotonicity": _suite_monotonicity,
    "isolation": _suite_isolation,
    "holder": _suite_holder,
    "barrier": _suite_barrier,
    "scaling": _suite_scaling,
    "nonexistence": _suite_nonexistence,
}


def run_suite(name: str, ctx: SuiteContext) -> List[CheckReport]:
    """
    Run a named suite, or every suite for ``all``.

    Errors raised inside a check become inconclusive reports so that one
    failing case does not hide the others.

    Raises:
        ConfigurationError: If the suite name is unknown
    """
    names = list(SUITES) if name == "all" else [name]
    unknown = [s for s in names if s not in SUITE_RUNNERS]
    if unknown:
        raise ConfigurationError(f"Unknown verify suite: {', '.join(unknown)}")
    reports: List[CheckReport] = []
    for suite in names:
        logger.info(f"Running verify suite {suite}", extra={"case": ctx.case, "n": ctx.n})
        try:
            reports.extend(SUITE_RUNNERS[suite](ctx))
        except SingularEigenError as e:
            reports.append(
                _report(suite, ctx.case, ctx.n, np.nan, np.nan, INCONCLUSIVE, error=str(e))
            )
    return reports
