"""Singular operator family and its monotone finite-difference form.

The operators are F(x, p, M) = |p|^α (F̃(x, M) + h(x)·p) with F̃ one of the
Pucci extremal operators, a linear operator tr(A(x)M), or the q-trace
operator tr M + q<M p̂, p̂>. The discrete form approximates Hessian
eigenvalue extremes by second differences along orthogonal direction
frames, which keeps every scheme monotone.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .exceptions import (
    GridError,
    InnerSolveError,
    InvalidOperatorError,
    SingularEvaluationError,
)
from .grid import Grid, ScalarField

logger = logging.getLogger(__name__)

Sign = Literal["plus", "minus"]
Offset = Tuple[int, int]
Frame = Tuple[Offset, Optional[Offset]]

AXIS_FRAMES: List[Frame] = [((1, 0), (0, 1))]
DIAGONAL_FRAMES: List[Frame] = [((1, 1), (-1, 1))]
KNIGHT_FRAMES: List[Frame] = [((2, 1), (-1, 2)), ((1, 2), (-2, 1))]

# Eigenvalue tolerance when checking coefficient matrices against [a, A]
COEFFICIENT_RTOL = 1e-12

# Growth factor of the drift Hölder quotient that triggers a warning
HOLDER_GROWTH_WARNING = 1.25

# Policy codes pack (frame, sign of first difference, sign of second)
POLICY_STRIDE = 4


class OperatorKind(str, Enum):
    """Built-in operator kinds."""

    PUCCI_PLUS = "pucci_plus"
    PUCCI_MINUS = "pucci_minus"
    LINEAR = "linear"
    QTRACE = "qtrace"


DriftSource = Union[
    Tuple[float, float], Callable[[ArrayLike, ArrayLike], Tuple[ArrayLike, ArrayLike]]
]
ZerothSource = Union[float, ScalarField, Callable[[ArrayLike, ArrayLike], ArrayLike]]
MatrixSource = Union[
    Tuple[float, float, float],
    Callable[[ArrayLike, ArrayLike], Tuple[ArrayLike, ArrayLike, ArrayLike]],
]


@dataclass(frozen=True)
class SymMat2:
    """Symmetric 2x2 matrix; ``dim=1`` holds a single second derivative."""

    m11: float
    m12: float = 0.0
    m22: float = 0.0
    dim: int = 2

    @classmethod
    def scalar(cls, value: float) -> "SymMat2":
        return cls(float(value), 0.0, 0.0, dim=1)

    def eigenvalues(self) -> Tuple[float, ...]:
        """Eigenvalues in ascending order, by the exact 2x2 closed form."""
        if self.dim == 1:
            return (self.m11,)
        lo, hi = symmetric_eigenvalues(self.m11, self.m12, self.m22)
        return (float(lo), float(hi))

    def trace(self) -> float:
        return self.m11 if self.dim == 1 else self.m11 + self.m22

    def quadratic_form(self, px: float, py: float) -> float:
        """Return <M p, p>."""
        if self.dim == 1:
            return self.m11 * px * px
        return self.m11 * px * px + 2.0 * self.m12 * px * py + self.m22 * py * py

    def __neg__(self) -> "SymMat2":
        return SymMat2(-self.m11, -self.m12, -self.m22, self.dim)

    def __add__(self, other: "SymMat2") -> "SymMat2":
        return SymMat2(
            self.m11 + other.m11, self.m12 + other.m12, self.m22 + other.m22, self.dim
        )

    def scaled(self, t: float) -> "SymMat2":
        return SymMat2(t * self.m11, t * self.m12, t * self.m22, self.dim)


def symmetric_eigenvalues(
    m11: ArrayLike, m12: ArrayLike, m22: ArrayLike
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Vectorized eigenvalues (low, high) of symmetric 2x2 matrices."""
    m11, m12, m22 = (np.asarray(v, dtype=float) for v in (m11, m12, m22))
    mean = 0.5 * (m11 + m22)
    radius = np.hypot(0.5 * (m11 - m22), m12)
    return mean - radius, mean + radius


def pucci_plus_eigenvalues(
    eigenvalues: Tuple[ArrayLike, ...], a: float, A: float
) -> NDArray[np.float64]:
    """A·Σe⁺ − a·Σe⁻ from precomputed eigenvalues."""
    total = np.zeros_like(np.asarray(eigenvalues[0], dtype=float))
    for e in eigenvalues:
        e = np.asarray(e, dtype=float)
        total = total + A * np.maximum(e, 0.0) + a * np.minimum(e, 0.0)
    return total


def pucci_hessian(
    m11: ArrayLike, m12: ArrayLike, m22: ArrayLike, a: float, A: float, sign: Sign
) -> NDArray[np.float64]:
    """Vectorized Pucci operator on arrays of Hessian entries."""
    if sign == "minus":
        return -pucci_hessian(
            -np.asarray(m11), -np.asarray(m12), -np.asarray(m22), a, A, "plus"
        )
    return pucci_plus_eigenvalues(symmetric_eigenvalues(m11, m12, m22), a, A)


def pucci_eval(M: SymMat2, a: float, A: float, sign: Sign = "plus") -> float:
    """
    Evaluate the Pucci extremal operator.

    Args:
        M: Symmetric matrix
        a: Lower ellipticity bound
        A: Upper ellipticity bound
        sign: ``plus`` for M⁺, ``minus`` for M⁻

    Returns:
        M⁺(M) = A·Σe⁺ − a·Σe⁻, or M⁻(M) = −M⁺(−M)
    """
    if not 0 < a <= A:
        raise InvalidOperatorError(f"Pucci bounds require 0 < a <= A, got {a}, {A}")
    if sign == "minus":
        return -pucci_eval(-M, a, A, "plus")
    return float(pucci_plus_eigenvalues(M.eigenvalues(), a, A))


def odd_power(u: ArrayLike, alpha: float) -> NDArray[np.float64]:
    """Return |u|^α u, zero where u vanishes."""
    u = np.asarray(u, dtype=float)
    return np.sign(u) * np.abs(u) ** (1.0 + alpha)


@dataclass(frozen=True)
class OperatorSpec:
    """
    Operator F(x, p, M) = |p|^α (F̃(x, M) + h(x)·p) with zeroth coefficient c.

    Attributes:
        kind: Which F̃ to use
        a: Lower ellipticity bound
        A: Upper ellipticity bound
        alpha: Gradient exponent in (-1, 0]
        q: q-trace weight (qtrace kind)
        drift: Constant vector or callable ``(X, Y) -> (hx, hy)``
        c: Zeroth-order coefficient: constant, field or callable ``(X, Y)``
        coefficients: Matrix A(x) entries ``(a11, a12, a22)`` or callable
            (linear kind; defaults to a·I)
    """

    kind: OperatorKind = OperatorKind.PUCCI_PLUS
    a: float = 1.0
    A: float = 1.0
    alpha: float = 0.0
    q: float = 0.0
    drift: DriftSource = (0.0, 0.0)
    c: ZerothSource = 0.0
    coefficients: Optional[MatrixSource] = None

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "kind", OperatorKind(self.kind))
        except ValueError as e:
            raise InvalidOperatorError(f"Unknown operator kind: {self.kind}") from e
        if not 0 < self.a <= self.A:
            raise InvalidOperatorError(
                f"Ellipticity requires 0 < a <= A, got a={self.a}, A={self.A}"
            )
        if not -1.0 < self.alpha <= 0.0:
            raise InvalidOperatorError(f"alpha must lie in (-1, 0], got {self.alpha}")
        if self.q < 0:
            raise InvalidOperatorError(f"q must be non-negative, got {self.q}")
        if self.coefficients is not None and not callable(self.coefficients):
            b11, b12, b22 = (float(v) for v in self.coefficients)
            object.__setattr__(self, "coefficients", (b11, b12, b22))
            self.check_coefficients(np.array([b11]), np.array([b12]), np.array([b22]))
        if not callable(self.drift):
            object.__setattr__(self, "drift", tuple(float(v) for v in self.drift))

    @property
    def is_bellman(self) -> bool:
        return self.kind in (OperatorKind.PUCCI_PLUS, OperatorKind.PUCCI_MINUS)

    @property
    def sign(self) -> Sign:
        return "minus" if self.kind == OperatorKind.PUCCI_MINUS else "plus"

    def drift_at(
        self, X: ArrayLike, Y: ArrayLike
    ) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Drift components broadcast to the shape of ``X``."""
        X = np.asarray(X, dtype=float)
        if callable(self.drift):
            hx, hy = self.drift(X, np.asarray(Y, dtype=float))
        else:
            hx, hy = self.drift
        return (
            np.broadcast_to(np.asarray(hx, dtype=float), X.shape).copy(),
            np.broadcast_to(np.asarray(hy, dtype=float), X.shape).copy(),
        )

    def coefficients_at(
        self, X: ArrayLike, Y: ArrayLike
    ) -> Tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
        """Linear-kind matrix entries broadcast to the shape of ``X``."""
        X = np.asarray(X, dtype=float)
        if self.coefficients is None:
            entries: Tuple[ArrayLike, ...] = (self.a, 0.0, self.a)
        elif callable(self.coefficients):
            entries = self.coefficients(X, np.asarray(Y, dtype=float))
        else:
            entries = self.coefficients
        b11, b12, b22 = (
            np.broadcast_to(np.asarray(v, dtype=float), X.shape).copy() for v in entries
        )
        return b11, b12, b22

    def check_coefficients(
        self, b11: NDArray[np.float64], b12: NDArray[np.float64], b22: NDArray[np.float64]
    ) -> None:
        """
        Require coefficient eigenvalues within [a, A].

        Raises:
            InvalidOperatorError: At the first violating node
        """
        lo, hi = symmetric_eigenvalues(b11, b12, b22)
        slack = COEFFICIENT_RTOL * self.A
        bad = (lo < self.a - slack) | (hi > self.A + slack)
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise InvalidOperatorError(
                f"Coefficient eigenvalues ({lo[k]}, {hi[k]}) outside "
                f"[{self.a}, {self.A}]"
            )

    def c_at(self, g: Grid) -> NDArray[np.float64]:
        """Zeroth-order coefficient sampled on grid nodes."""
        if isinstance(self.c, ScalarField):
            g.check(self.c)
            return np.nan_to_num(np.array(self.c.values, dtype=float))
        if callable(self.c):
            X, Y = g.coordinates()
            return np.broadcast_to(np.asarray(self.c(X, Y), dtype=float), g.shape).copy()
        return np.full(g.shape, float(self.c))

    def fixed_c(self) -> Optional[float]:
        """The constant zeroth coefficient, or None when it varies."""
        if isinstance(self.c, ScalarField) or callable(self.c):
            return None
        return float(self.c)

    def drift_bound(self, g: Grid) -> float:
        """Sup of |h| over non-exterior nodes."""
        X, Y = g.coordinates()
        hx, hy = self.drift_at(X[g.active], Y[g.active])
        return float(np.max(np.hypot(hx, hy))) if hx.size else 0.0


def principal_part(
    spec: OperatorSpec, x: Tuple[float, float], p: Tuple[float, float], M: SymMat2,
    delta: float = 0.0,
) -> float:
    """F̃(x, M) + h(x)·p, with the q-trace direction regularized by δ."""
    px, py = float(p[0]), float(p[1]) if M.dim == 2 else 0.0
    hx, hy = spec.drift_at(x[0], x[1])
    transport = float(hx) * px + float(hy) * py

    if spec.is_bellman:
        return pucci_eval(M, spec.a, spec.A, spec.sign) + transport
    if spec.kind == OperatorKind.LINEAR:
        b11, b12, b22 = spec.coefficients_at(x[0], x[1])
        if M.dim == 1:
            return float(b11) * M.m11 + transport
        return float(b11 * M.m11 + 2.0 * b12 * M.m12 + b22 * M.m22) + transport

    norm = np.sqrt(px * px + py * py + delta * delta)
    projected = M.quadratic_form(px / norm, py / norm) if norm > 0 else 0.0
    return M.trace() + spec.q * projected + transport


def evaluate_F(
    spec: OperatorSpec,
    x: Tuple[float, float],
    p: Tuple[float, float],
    M: SymMat2,
    delta: float = 0.0,
) -> float:
    """
    Evaluate the regularized operator at one point.

    Args:
        spec: Operator specification
        x: Point (used by x-dependent drift and coefficients)
        p: Gradient
        M: Hessian
        delta: Regularization δ >= 0

    Returns:
        (|p|² + δ²)^{α/2} (F̃(x, M) + h(x)·p)

    Raises:
        SingularEvaluationError: If δ = 0 and p = 0
    """
    if delta < 0:
        raise SingularEvaluationError(f"delta must be non-negative, got {delta}")
    norm2 = float(p[0]) ** 2 + (float(p[1]) ** 2 if M.dim == 2 else 0.0) + delta**2
    if norm2 == 0.0:
        raise SingularEvaluationError(
            "Operator is singular at p = 0 without regularization"
        )
    weight = norm2 ** (0.5 * spec.alpha)
    return weight * principal_part(spec, x, p, M, delta)


def stencil_frames(order: int, dim: int) -> List[Frame]:
    """Direction frames for a stencil order."""
    if order not in (1, 2, 3):
        raise InvalidOperatorError(f"stencil_order must be 1, 2 or 3, got {order}")
    if dim == 1:
        return [((1, 0), None)]
    frames = list(AXIS_FRAMES)
    if order >= 2:
        frames += DIAGONAL_FRAMES
    if order >= 3:
        frames += KNIGHT_FRAMES
    return frames


class DiscreteOperator:
    """
    Monotone finite-difference form of an operator on one grid.

    Vectors passed to the methods are flat over all grid nodes (row-major in
    the grid's ``(nx, ny)`` layout) unless named ``*_interior``; results live
    on interior nodes only.
    """

    def __init__(self, spec: OperatorSpec, g: Grid, stencil_order: int = 2):
        """
        Build difference matrices for a grid.

        Args:
            spec: Operator specification
            g: Grid to discretize on
            stencil_order: 1 (axes), 2 (axes + diagonals), 3 (adds knight frames)

        Raises:
            InvalidOperatorError: If the stencil order or coefficients are invalid
            GridError: If a compact stencil neighbour is missing
        """
        self.spec = spec
        self.grid = g
        self.stencil_order = stencil_order
        self.index = np.flatnonzero(g.interior.ravel())
        self.size = int(self.index.size)
        self.node_count = g.node_count
        self._ny = g.shape[1]
        self._second: Dict[Offset, Tuple[sparse.csr_matrix, NDArray[np.bool_]]] = {}
        self._warned: set = set()
        self._linear_constant: Optional[float] = None

        X, Y = g.coordinates()
        self._X = X.ravel()[self.index]
        self._Y = Y.ravel()[self.index]

        self.frames = self._build_frames()
        self.c = spec.c_at(g).ravel()[self.index]
        self._drift = self._upwind_matrix(*spec.drift_at(self._X, self._Y))
        self._grad_x = self._gradient_matrix((1, 0))
        self._grad_y = self._gradient_matrix((0, 1)) if g.dim == 2 else None

        self._linear: Optional[sparse.csr_matrix] = None
        if spec.kind == OperatorKind.LINEAR:
            b11, b12, b22 = spec.coefficients_at(self._X, self._Y)
            spec.check_coefficients(b11, b12, b22)
            self._linear = self._coefficient_matrix(b11, b12, b22)

        if callable(spec.drift):
            holder_quotient(spec, g)

    # Difference matrices

    def second(self, offset: Offset) -> sparse.csr_matrix:
        """Second difference along ``offset``, normalized to ê·Mê."""
        if offset not in self._second:
            self._second[offset] = self._second_difference(offset)
        return self._second[offset][0]

    def available(self, offset: Offset) -> NDArray[np.bool_]:
        self.second(offset)
        return self._second[offset][1]

    def _neighbour(
        self, offset: Offset
    ) -> Tuple[NDArray[np.int64], NDArray[np.int64], NDArray[np.bool_]]:
        """Flat indices of the +offset and -offset neighbours of interior nodes."""
        nx, ny = self.grid.shape
        I, J = np.unravel_index(self.index, (nx, ny))
        di, dj = offset
        ip, jp, im, jm = I + di, J + dj, I - di, J - dj
        inside = (
            (ip >= 0) & (ip < nx) & (jp >= 0) & (jp < ny)
            & (im >= 0) & (im < nx) & (jm >= 0) & (jm < ny)
        )
        active = self.grid.active
        ok = inside.copy()
        rows = np.flatnonzero(inside)
        ok[rows] = active[ip[rows], jp[rows]] & active[im[rows], jm[rows]]
        plus = np.where(ok, ip * ny + jp, 0)
        minus = np.where(ok, im * ny + jm, 0)
        return plus, minus, ok

    def _second_difference(
        self, offset: Offset
    ) -> Tuple[sparse.csr_matrix, NDArray[np.bool_]]:
        plus, minus, ok = self._neighbour(offset)
        rows = np.flatnonzero(ok)
        weight = np.full(rows.size, 1.0 / ((offset[0] ** 2 + offset[1] ** 2) * self.grid.h**2))
        matrix = sparse.csr_matrix(
            (
                np.concatenate([weight, weight, -2.0 * weight]),
                (
                    np.concatenate([rows, rows, rows]),
                    np.concatenate([plus[rows], minus[rows], self.index[rows]]),
                ),
            ),
            shape=(self.size, self.node_count),
        )
        return matrix, ok

    def _gradient_matrix(self, offset: Offset) -> sparse.csr_matrix:
        """
        First difference along ``offset`` for the gradient weight.

        Central at nodes whose two neighbours are both interior or both
        boundary; one-sided toward the interior where exactly one of them
        is a boundary node.
        """
        plus, minus, ok = self._neighbour(offset)
        if not ok.all():
            raise GridError(f"Stencil neighbour outside grid along {offset}")
        boundary = self.grid.boundary.ravel()
        plus_wall, minus_wall = boundary[plus], boundary[minus]
        backward = plus_wall & ~minus_wall
        forward = minus_wall & ~plus_wall
        central = ~(backward | forward)

        inv_h = 1.0 / self.grid.h
        w_plus = np.where(central, 0.5 * inv_h, np.where(forward, inv_h, 0.0))
        w_minus = np.where(central, -0.5 * inv_h, np.where(backward, -inv_h, 0.0))
        w_self = np.where(backward, inv_h, np.where(forward, -inv_h, 0.0))
        rows = np.arange(self.size)
        return sparse.csr_matrix(
            (
                np.concatenate([w_plus, w_minus, w_self]),
                (np.concatenate([rows, rows, rows]), np.concatenate([plus, minus, self.index])),
            ),
            shape=(self.size, self.node_count),
        )

    def _upwind_matrix(
        self, hx: NDArray[np.float64], hy: NDArray[np.float64]
    ) -> sparse.csr_matrix:
        """h·∇u with forward differences where a component is positive."""
        matrix = sparse.csr_matrix((self.size, self.node_count))
        components = [(hx, (1, 0))]
        if self.grid.dim == 2:
            components.append((hy, (0, 1)))
        rows = np.arange(self.size)
        for comp, offset in components:
            if not np.any(comp):
                continue
            plus, minus, ok = self._neighbour(offset)
            if not ok.all():
                raise GridError(f"Stencil neighbour outside grid along {offset}")
            neighbour = np.where(comp > 0, plus, minus)
            weight = np.abs(comp) / self.grid.h
            matrix = matrix + sparse.csr_matrix(
                (
                    np.concatenate([weight, -weight]),
                    (np.concatenate([rows, rows]), np.concatenate([neighbour, self.index])),
                ),
                shape=(self.size, self.node_count),
            )
        return matrix.tocsr()

    def _build_frames(self) -> List[Tuple[Offset, Optional[Offset], NDArray[np.bool_]]]:
        frames = []
        for k, (e1, e2) in enumerate(stencil_frames(self.stencil_order, self.grid.dim)):
            mask = self.available(e1).copy()
            if e2 is not None:
                mask &= self.available(e2)
            compact = max(abs(v) for v in e1) == 1
            if compact and not mask.all():
                raise GridError(f"Stencil neighbour outside grid for frame {e1}, {e2}")
            if mask.any():
                frames.append((e1, e2, mask))
            else:
                logger.debug(f"Frame {k} unavailable on grid {self.grid.tag}")
        return frames

    def _coefficient_matrix(
        self, b11: NDArray[np.float64], b12: NDArray[np.float64], b22: NDArray[np.float64]
    ) -> sparse.csr_matrix:
        """tr(B D²u) from axis and diagonal second differences."""
        if self.grid.dim == 1:
            return (sparse.diags(b11) @ self.second((1, 0))).tocsr()

        off = np.abs(b12)
        if self.stencil_order == 1 and np.any(off > 0):
            self._warn_once("cross", "Axis-only stencil drops the mixed coefficient")
            off = np.zeros_like(off)
        limit = np.minimum(b11, b22)
        if np.any(off > limit):
            self._warn_once(
                "dominance",
                "Coefficient matrix not diagonally dominant; clipping mixed term",
            )
            off = np.minimum(off, limit)
        positive = np.where(b12 > 0, 2.0 * off, 0.0)
        negative = np.where(b12 < 0, 2.0 * off, 0.0)
        matrix = (
            sparse.diags(b11 - off) @ self.second((1, 0))
            + sparse.diags(b22 - off) @ self.second((0, 1))
            + sparse.diags(positive) @ self.second((1, 1))
            + sparse.diags(negative) @ self.second((1, -1))
        )
        return matrix.tocsr()

    def _warn_once(self, key: str, message: str) -> None:
        if key not in self._warned:
            self._warned.add(key)
            logger.warning(message, extra={"grid": self.grid.tag, "kind": self.spec.kind.value})

    # Node-vector helpers

    def embed(self, interior_values: NDArray[np.float64]) -> NDArray[np.float64]:
        """Full flat vector with zero boundary values."""
        full = np.zeros(self.node_count)
        full[self.index] = interior_values
        return full

    def to_field(self, interior_values: NDArray[np.float64]) -> ScalarField:
        """Field with the given interior values and zero boundary."""
        return self.grid.field(self.embed(interior_values).reshape(self.grid.shape))

    def flatten(self, u: ScalarField) -> NDArray[np.float64]:
        """Full flat vector of a field, exterior sentinel replaced by zero."""
        self.grid.check(u)
        return np.nan_to_num(np.asarray(u.values, dtype=float)).ravel()

    def gradient(
        self, u: NDArray[np.float64]
    ) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Gradient at interior nodes, one-sided next to the boundary."""
        gx = self._grad_x @ u
        gy = self._grad_y @ u if self._grad_y is not None else np.zeros(self.size)
        return gx, gy

    def weight(self, u: NDArray[np.float64], delta: float) -> NDArray[np.float64]:
        """(|∇u|² + δ²)^{α/2} at interior nodes."""
        if self.spec.alpha == 0.0:
            return np.ones(self.size)
        gx, gy = self.gradient(u)
        with np.errstate(divide="ignore"):
            return (gx * gx + gy * gy + delta * delta) ** (0.5 * self.spec.alpha)

    def unit_gradient(
        self, u: NDArray[np.float64], delta: float
    ) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        """p̂ = ∇u / sqrt(|∇u|² + δ²), zero where both vanish."""
        gx, gy = self.gradient(u)
        norm = np.sqrt(gx * gx + gy * gy + delta * delta)
        safe = np.where(norm > 0, norm, 1.0)
        return np.where(norm > 0, gx / safe, 0.0), np.where(norm > 0, gy / safe, 0.0)

    # Operator evaluation

    def _qtrace_matrix(
        self, direction: Tuple[NDArray[np.float64], NDArray[np.float64]]
    ) -> sparse.csr_matrix:
        px, py = direction
        q = self.spec.q
        return self._coefficient_matrix(1.0 + q * px * px, q * px * py, 1.0 + q * py * py)

    def _choose(self, positive: NDArray[np.bool_]) -> NDArray[np.float64]:
        """Pucci weight per node given the sign of the second difference."""
        if self.spec.sign == "plus":
            return np.where(positive, self.spec.A, self.spec.a)
        return np.where(positive, self.spec.a, self.spec.A)

    def _candidates(
        self, u: NDArray[np.float64]
    ) -> Tuple[NDArray[np.float64], NDArray[np.int64]]:
        """Frame values and policy codes for every frame at every node."""
        fill = -np.inf if self.spec.sign == "plus" else np.inf
        values = np.empty((len(self.frames), self.size))
        codes = np.empty((len(self.frames), self.size), dtype=np.int64)
        for k, (e1, e2, mask) in enumerate(self.frames):
            d1 = self.second(e1) @ u
            s1 = d1 > 0
            total = self._choose(s1) * d1
            code = k * POLICY_STRIDE + 2 * s1.astype(np.int64)
            if e2 is not None:
                d2 = self.second(e2) @ u
                s2 = d2 > 0
                total = total + self._choose(s2) * d2
                code = code + s2.astype(np.int64)
            values[k] = np.where(mask, total, fill)
            codes[k] = code
        return values, codes

    def policy(self, u: NDArray[np.float64]) -> NDArray[np.int64]:
        """Optimal frame and weights per node; ties go to the lowest frame."""
        values, codes = self._candidates(u)
        pick = np.argmax(values, axis=0) if self.spec.sign == "plus" else np.argmin(values, axis=0)
        return codes[pick, np.arange(self.size)]

    def assemble(self, policy: NDArray[np.int64]) -> sparse.csr_matrix:
        """Linear operator (interior rows, all columns) of a fixed policy."""
        frame = policy // POLICY_STRIDE
        s1 = (policy // 2) % 2 == 1
        s2 = policy % 2 == 1
        matrix = self._drift
        for k, (e1, e2, _) in enumerate(self.frames):
            chosen = frame == k
            if not chosen.any():
                continue
            w1 = np.where(chosen, self._choose(s1), 0.0)
            matrix = matrix + sparse.diags(w1) @ self.second(e1)
            if e2 is not None:
                w2 = np.where(chosen, self._choose(s2), 0.0)
                matrix = matrix + sparse.diags(w2) @ self.second(e2)
        return matrix.tocsr()

    def principal_matrix(
        self,
        u: NDArray[np.float64],
        direction: Optional[Tuple[NDArray[np.float64], NDArray[np.float64]]] = None,
        delta: float = 0.0,
    ) -> sparse.csr_matrix:
        """Matrix L with L u = F̃_h[u] + h·∇_h u at the given state."""
        if self.spec.is_bellman:
            return self.assemble(self.policy(u))
        if self._linear is not None:
            return (self._linear + self._drift).tocsr()
        if direction is None:
            direction = self.unit_gradient(u, delta)
        return (self._qtrace_matrix(direction) + self._drift).tocsr()

    def elliptic(
        self,
        u: NDArray[np.float64],
        delta: float = 0.0,
        direction: Optional[Tuple[NDArray[np.float64], NDArray[np.float64]]] = None,
    ) -> NDArray[np.float64]:
        """F̃_h[u] + h·∇_h u at interior nodes."""
        if self.spec.is_bellman:
            values, _ = self._candidates(u)
            best = values.max(axis=0) if self.spec.sign == "plus" else values.min(axis=0)
            return best + self._drift @ u
        return self.principal_matrix(u, direction, delta) @ u

    def residual(
        self,
        u: NDArray[np.float64],
        delta: float,
        frozen: Optional[NDArray[np.float64]] = None,
    ) -> NDArray[np.float64]:
        """
        F_h[u] = (|∇_h ū|² + δ²)^{α/2} (F̃_h[u] + h·∇_h u) with ū = ``frozen``.

        The weight and the q-trace direction p̂ are taken at ū, which defaults
        to u. For a fixed ū the map u ↦ F_h[u] is monotone: raising any
        neighbour value never lowers a node's residual. This frozen form is
        the one each fixed-point step inverts, and it equals the plain
        residual at a fixed point.
        """
        state = u if frozen is None else frozen
        direction = None
        if self.spec.kind == OperatorKind.QTRACE:
            direction = self.unit_gradient(state, delta)
        with np.errstate(invalid="ignore"):
            return self.weight(state, delta) * self.elliptic(u, delta, direction)

    # Inner solve

    def solve(
        self,
        rhs: NDArray[np.float64],
        guess: Optional[NDArray[np.float64]] = None,
        direction: Optional[Tuple[NDArray[np.float64], NDArray[np.float64]]] = None,
        max_sweeps: int = 50,
        tol: float = 1e-10,
    ) -> NDArray[np.float64]:
        """
        Solve F̃_h[v] + h·∇_h v = rhs with v = 0 on the boundary.

        Pucci kinds use Howard policy iteration: freeze the optimal frame
        choice at the current iterate, solve the linear system, repeat until
        the policy is stable.

        Args:
            rhs: Right-hand side at interior nodes
            guess: Interior values used to seed the policy
            direction: Frozen p̂ for the qtrace kind (zero when omitted)
            max_sweeps: Policy-iteration budget
            tol: Relative residual accepted at exit

        Returns:
            Interior values of v

        Raises:
            InnerSolveError: If the final residual exceeds ``tol``
        """
        if direction is None and self.spec.kind == OperatorKind.QTRACE:
            direction = (np.zeros(self.size), np.zeros(self.size))

        if not self.spec.is_bellman:
            matrix = self.principal_matrix(np.zeros(self.node_count), direction)
            v = self._linear_solve(matrix, rhs)
            residual = self._relative_gap(matrix @ self.embed(v), rhs)
        else:
            v = np.zeros(self.size) if guess is None else np.asarray(guess, dtype=float)
            policy: Optional[NDArray[np.int64]] = None
            for sweep in range(1, max_sweeps + 1):
                new_policy = self.policy(self.embed(v))
                if policy is not None and np.array_equal(new_policy, policy):
                    break
                policy = new_policy
                v = self._linear_solve(self.assemble(policy), rhs)
            residual = self._relative_gap(self.elliptic(self.embed(v)), rhs)
            logger.debug(
                f"Policy iteration finished after {sweep} sweeps",
                extra={"grid": self.grid.tag, "residual": residual},
            )

        if not np.isfinite(residual) or residual > tol:
            raise InnerSolveError(
                f"Inner solve residual {residual:.3e} exceeds {tol:.1e}",
                residual=residual,
            )
        return v

    def _linear_solve(
        self, matrix: sparse.csr_matrix, rhs: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        square = matrix[:, self.index].tocsc()
        return np.atleast_1d(spsolve(square, rhs))

    @staticmethod
    def _relative_gap(lhs: NDArray[np.float64], rhs: NDArray[np.float64]) -> float:
        scale = max(1.0, float(np.max(np.abs(rhs))) if rhs.size else 0.0)
        return float(np.max(np.abs(lhs - rhs))) / scale if rhs.size else 0.0

    @property
    def linear_constant(self) -> float:
        """Sup norm of the solution of F̃_h[v] + h·∇_h v = −1."""
        if self._linear_constant is None:
            v = self.solve(-np.ones(self.size))
            self._linear_constant = float(np.max(np.abs(v)))
        return self._linear_constant


def discretize_residual(
    spec: OperatorSpec,
    g: Grid,
    u: ScalarField,
    delta: float,
    stencil_order: int = 2,
    frozen: Optional[ScalarField] = None,
) -> ScalarField:
    """
    Discrete residual F_h[u] on interior nodes.

    Args:
        spec: Operator specification
        g: Grid
        u: Field on ``g``
        delta: Regularization δ > 0 (δ = 0 is allowed when α = 0)
        stencil_order: 1 (axes), 2 (axes + diagonals) or 3 (adds knight frames)
        frozen: Field supplying the gradient weight and q-trace direction;
            u itself when omitted

    Returns:
        Field holding F_h[u] on interior nodes and zero on boundary nodes

    Raises:
        SingularEvaluationError: If δ <= 0 with α < 0
    """
    if delta <= 0 and spec.alpha != 0.0:
        raise SingularEvaluationError(f"Residual needs delta > 0 when alpha < 0, got {delta}")
    op = DiscreteOperator(spec, g, stencil_order)
    state = op.flatten(frozen) if frozen is not None else None
    return op.to_field(op.residual(op.flatten(u), delta, state))


def q_laplacian_residual(g: Grid, u: ScalarField, q: float) -> ScalarField:
    """
    Central-difference form of Δ_{q+2}u = |∇u|^q (Δu + q<D²u ∇u, ∇u>/|∇u|²).

    Zero where the discrete gradient vanishes.
    """
    g.check(u)
    values = np.nan_to_num(np.asarray(u.values, dtype=float))
    h = g.h
    interior = g.interior
    out = np.zeros(g.shape)
    if g.dim == 1:
        ux = np.zeros(g.shape)
        uxx = np.zeros(g.shape)
        ux[1:-1] = (values[2:] - values[:-2]) / (2 * h)
        uxx[1:-1] = (values[2:] - 2 * values[1:-1] + values[:-2]) / h**2
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.abs(ux) ** q * (1.0 + q) * uxx
    else:
        ux = np.zeros(g.shape)
        uy = np.zeros(g.shape)
        uxx = np.zeros(g.shape)
        uyy = np.zeros(g.shape)
        uxy = np.zeros(g.shape)
        c = values[1:-1, 1:-1]
        ux[1:-1, 1:-1] = (values[2:, 1:-1] - values[:-2, 1:-1]) / (2 * h)
        uy[1:-1, 1:-1] = (values[1:-1, 2:] - values[1:-1, :-2]) / (2 * h)
        uxx[1:-1, 1:-1] = (values[2:, 1:-1] - 2 * c + values[:-2, 1:-1]) / h**2
        uyy[1:-1, 1:-1] = (values[1:-1, 2:] - 2 * c + values[1:-1, :-2]) / h**2
        uxy[1:-1, 1:-1] = (
            values[2:, 2:] - values[2:, :-2] - values[:-2, 2:] + values[:-2, :-2]
        ) / (4 * h**2)
        norm2 = ux * ux + uy * uy
        safe = np.where(norm2 > 0, norm2, 1.0)
        projected = (uxx * ux * ux + 2 * uxy * ux * uy + uyy * uy * uy) / safe
        out = norm2 ** (0.5 * q) * (uxx + uyy + q * np.where(norm2 > 0, projected, 0.0))
    out = np.where(interior, out, 0.0)
    return g.field(out)


def holder_quotient(spec: OperatorSpec, g: Grid) -> Tuple[float, float]:
    """
    Discrete Hölder quotient of the drift with exponent 1+α.

    Compares the largest |h(x) − h(y)| / |x − y|^{1+α} over axis neighbours
    at spacing h and 2h, and logs a warning when the quotient grows under
    refinement.

    Returns:
        Tuple of (quotient at h, quotient at 2h)
    """
    X, Y = g.coordinates()
    hx, hy = spec.drift_at(X, Y)
    exponent = 1.0 + spec.alpha
    active = g.active

    def quotient(step: int) -> float:
        best = 0.0
        axes = (0,) if g.dim == 1 else (0, 1)
        for axis in axes:
            if g.shape[axis] <= step:
                continue
            lo = [slice(None), slice(None)]
            hi = [slice(None), slice(None)]
            lo[axis] = slice(None, -step)
            hi[axis] = slice(step, None)
            pair = active[tuple(lo)] & active[tuple(hi)]
            if not pair.any():
                continue
            jump = np.hypot(hx[tuple(hi)] - hx[tuple(lo)], hy[tuple(hi)] - hy[tuple(lo)])
            best = max(best, float(np.max(jump[pair])) / (step * g.h) ** exponent)
        return best

    fine, coarse = quotient(1), quotient(2)
    if coarse > 0 and fine > HOLDER_GROWTH_WARNING * coarse:
        logger.warning(
            f"Drift Hölder quotient grows under refinement ({coarse:.3e} -> {fine:.3e})",
            extra={"grid": g.tag, "exponent": exponent},
        )
    return fine, coarse
