"""Dirichlet problems by the regularized fixed-point construction.

The solver targets

    F_h[u] + (c + λ)|u|^α u − ε(u² + δ²)^{α/2} u = f,    u = 0 on the boundary,

with F_h the regularized discrete operator. One application of the map T
lags every u-dependent factor and solves a uniformly elliptic problem; the
outer loop drives u toward a fixed point of T with damped mixing, then
lowers δ along a geometric schedule.

Schedule values are relative: stage k runs at δ_k·σ, where σ is the
Lipschitz constant of the iterate entering the stage (a data-derived
gradient scale when that iterate is zero). σ is homogeneous of degree one
in u, so the solution for t^{1+α}f is t times the solution for f.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy import optimize

from .exceptions import ConfigurationError, DivergenceError, StagnationError
from .grid import Grid, ScalarField
from .models import SolveReport
from .operators import DiscreteOperator, OperatorKind, OperatorSpec, odd_power

logger = logging.getLogger(__name__)

# Ratio between consecutive δ values of the default schedule
DELTA_RATIO = 0.25

# Residual tolerance factor applied to all but the last δ stage
STAGE_TOL_FACTOR = 1e3

# Relative residual required of each inner solve
INNER_TOL = 1e-9


@dataclass(frozen=True)
class SolveConfig:
    """
    Numerical settings for Dirichlet and eigenvalue solves.

    Attributes:
        delta_schedule: Decreasing relative δ values; empty means the
            geometric default down to ``delta_min``
        delta_min: Last relative δ of the default schedule; None uses the
            grid spacing h
        damping: Mixing parameter θ in (0, 1]
        tol: Relative residual tolerance of the final stage
        max_iter: Outer iteration budget per δ stage
        max_inner: Policy-iteration budget per inner solve
        cap: Divergence cap on the sup norm; None derives it from the data
        cap_factor: Multiplier of the derived cap
        epsilon: Weight of the −ε(u² + δ²)^{α/2} u regularization term
        anderson_depth: History length of Anderson mixing (0 = plain damping)
        stencil_order: Direction set of the discretization
        eig_tol: Relative tolerance on eigenvalue estimates
        max_eig_iter: Power-iteration budget
    """

    delta_schedule: Tuple[float, ...] = ()
    delta_min: Optional[float] = None
    damping: float = 0.5
    tol: float = 1e-7
    max_iter: int = 500
    max_inner: int = 50
    cap: Optional[float] = None
    cap_factor: float = 10.0
    epsilon: float = 0.0
    anderson_depth: int = 5
    stencil_order: int = 2
    eig_tol: float = 1e-6
    max_eig_iter: int = 200

    def __post_init__(self) -> None:
        schedule = tuple(float(d) for d in self.delta_schedule)
        object.__setattr__(self, "delta_schedule", schedule)
        if any(d <= 0 for d in schedule) or any(
            b >= a for a, b in zip(schedule, schedule[1:])
        ):
            raise ConfigurationError(
                f"delta schedule must be strictly decreasing and positive: {schedule}"
            )
        if self.delta_min is not None and not self.delta_min > 0:
            raise ConfigurationError(f"delta_min must be positive, got {self.delta_min}")
        if not 0 < self.damping <= 1:
            raise ConfigurationError(f"damping must lie in (0, 1], got {self.damping}")
        if not self.tol > 0 or not self.eig_tol > 0:
            raise ConfigurationError("Tolerances must be positive")
        if self.max_iter < 1 or self.max_inner < 1 or self.max_eig_iter < 1:
            raise ConfigurationError("Iteration budgets must be at least 1")
        if self.cap is not None and not self.cap > 0:
            raise ConfigurationError(f"cap must be positive, got {self.cap}")
        if self.epsilon < 0:
            raise ConfigurationError(f"epsilon must be non-negative, got {self.epsilon}")
        if self.anderson_depth < 0:
            raise ConfigurationError("anderson_depth must be non-negative")

    def floor(self, h: float) -> float:
        """Smallest relative δ on a grid of spacing h."""
        return self.delta_min if self.delta_min is not None else h

    def schedule(self, alpha: float, h: float) -> Tuple[float, ...]:
        """Relative δ values to sweep; a single stage when the weight ignores δ."""
        if self.delta_schedule:
            return self.delta_schedule
        if alpha == 0.0 and self.epsilon == 0.0:
            return (self.floor(h),)
        return default_delta_schedule(self.floor(h))

    def final_stage(self, h: float) -> "SolveConfig":
        """Copy restricted to the last δ of the schedule, for warm restarts."""
        last = self.delta_schedule[-1] if self.delta_schedule else self.floor(h)
        return replace(self, delta_schedule=(last,))


def default_delta_schedule(delta_min: float) -> Tuple[float, ...]:
    """Schedule max(δ_min, 4^{-k}) for k = 0, 1, ..., ending exactly at ``delta_min``."""
    schedule: List[float] = []
    delta = 1.0
    while delta > delta_min:
        schedule.append(delta)
        delta *= DELTA_RATIO
    schedule.append(delta_min)
    return tuple(schedule)


@dataclass
class _Problem:
    """State shared by the fixed-point map and its monitors."""

    op: DiscreteOperator
    f: NDArray[np.float64]
    shift: NDArray[np.float64]
    epsilon: float
    max_inner: int
    delta: float = 1.0
    last_v: Optional[NDArray[np.float64]] = None
    history: List[float] = field(default_factory=list)

    @property
    def alpha(self) -> float:
        return self.op.spec.alpha

    def zeroth(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        """(c + λ)|u|^α u − ε(u² + δ²)^{α/2} u at interior nodes."""
        term = self.shift * odd_power(x, self.alpha)
        if self.epsilon:
            term = term - self.epsilon * (x * x + self.delta**2) ** (0.5 * self.alpha) * x
        return term

    def apply(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        """T(u) at interior nodes."""
        u = self.op.embed(x)
        rhs = (self.f - self.zeroth(x)) / self.op.weight(u, self.delta)
        direction = None
        if self.op.spec.kind == OperatorKind.QTRACE:
            direction = self.op.unit_gradient(u, self.delta)
        v = self.op.solve(
            rhs,
            guess=self.last_v,
            direction=direction,
            max_sweeps=self.max_inner,
            tol=INNER_TOL,
        )
        self.last_v = v
        return v

    def residual(self, x: NDArray[np.float64]) -> float:
        """Sup norm of the full equation, relative to its data scale."""
        zeroth = self.zeroth(x)
        lhs = self.op.residual(self.op.embed(x), self.delta) + zeroth
        scale = max(
            1.0,
            float(np.max(np.abs(self.f), initial=0.0)),
            float(np.max(np.abs(zeroth), initial=0.0)),
        )
        gap = np.abs(lhs - self.f)
        return float(np.max(gap, initial=0.0)) / scale


class _ToleranceReached(Exception):
    """Stops the mixing loop once the residual criterion holds."""

    def __init__(self, x: NDArray[np.float64]):
        super().__init__("tolerance reached")
        self.x = x


def apply_T(
    spec: OperatorSpec,
    g: Grid,
    u: ScalarField,
    f: ScalarField,
    delta: float,
    epsilon: float = 0.0,
    stencil_order: int = 2,
    max_inner: int = 50,
) -> ScalarField:
    """
    One application of the regularized fixed-point map.

    Solves F̃(x, D²v) + h·∇v = (f + ε(u² + δ²)^{α/2} u)(|∇u|² + δ²)^{−α/2}
    with v = 0 on the boundary.

    Args:
        spec: Operator specification
        g: Grid
        u: Current iterate
        f: Forcing (any lagged zeroth-order term already folded in)
        delta: Regularization δ > 0
        epsilon: Regularization weight ε >= 0
        stencil_order: Direction set of the discretization
        max_inner: Policy-iteration budget

    Returns:
        The field v

    Raises:
        ConfigurationError: If δ <= 0
        InnerSolveError: If the inner solve does not converge
    """
    if not delta > 0:
        raise ConfigurationError(f"delta must be positive, got {delta}")
    op = DiscreteOperator(spec, g, stencil_order)
    problem = _Problem(
        op=op,
        f=op.flatten(f)[op.index],
        shift=np.zeros(op.size),
        epsilon=epsilon,
        max_inner=max_inner,
        delta=delta,
    )
    return op.to_field(problem.apply(op.flatten(u)[op.index]))


def divergence_cap(
    op: DiscreteOperator,
    f: NDArray[np.float64],
    initial: NDArray[np.float64],
    cfg: SolveConfig,
) -> float:
    """
    Sup-norm bound beyond which an iterate counts as diverged.

    Uses c_lin‖f‖ / (1 − ε c_lin d_Ω), with c_lin the sup norm of the
    solution of F̃_h[v] + h·∇_h v = −1, lifted to the solution scale
    (c_lin‖f‖)^{1/(1+α)} and multiplied by ``cap_factor``.
    """
    if cfg.cap is not None:
        return cfg.cap
    c_lin = op.linear_constant
    forcing = float(np.max(np.abs(f), initial=0.0))
    denominator = 1.0 - cfg.epsilon * c_lin * op.grid.diameter
    if denominator <= 0:
        denominator = 1.0
    linear = c_lin * forcing / denominator
    bound = max(linear, linear ** (1.0 / (1.0 + op.spec.alpha)))
    size = float(np.max(np.abs(initial), initial=0.0))
    return cfg.cap_factor * max(bound, size, np.finfo(float).tiny)


def _lipschitz(op: DiscreteOperator, x: NDArray[np.float64]) -> float:
    """Largest axis difference quotient of u."""
    values = op.embed(x).reshape(op.grid.shape)
    quotients = [np.max(np.abs(np.diff(values, axis=0)), initial=0.0)]
    if op.grid.dim == 2:
        quotients.append(np.max(np.abs(np.diff(values, axis=1)), initial=0.0))
    return float(max(quotients)) / op.grid.h


def gradient_scale(
    op: DiscreteOperator, f: NDArray[np.float64], x: NDArray[np.float64]
) -> float:
    """
    Gradient scale σ multiplying the relative δ of a stage.

    The Lipschitz constant of the iterate when it is nonzero, else
    (‖f‖ d_Ω)^{1/(1+α)}, else 1. Both forms scale by t when u scales by t
    and f by t^{1+α}.
    """
    lip = _lipschitz(op, x)
    if lip > 0 and np.isfinite(lip):
        return lip
    forcing = float(np.max(np.abs(f), initial=0.0))
    if forcing > 0:
        return float((forcing * op.grid.diameter) ** (1.0 / (1.0 + op.spec.alpha)))
    return 1.0


def solve_dirichlet(
    spec: OperatorSpec,
    g: Grid,
    f: ScalarField,
    lam: float,
    cfg: SolveConfig,
    initial: Optional[ScalarField] = None,
    operator: Optional[DiscreteOperator] = None,
) -> Tuple[ScalarField, SolveReport]:
    """
    Solve F[u] + (c + λ)|u|^α u = f with u = 0 on the boundary.

    For each δ of the schedule, the damped iteration u ← (1−θ)u + θT(u),
    accelerated by Anderson mixing when ``cfg.anderson_depth > 0``, runs
    until the relative residual drops below the stage tolerance; the next
    stage starts from the result.

    Args:
        spec: Operator specification
        g: Grid
        f: Forcing field
        lam: Eigenvalue parameter λ
        cfg: Solver settings
        initial: Starting field (zero when omitted)
        operator: Prebuilt discretization of ``spec`` on ``g``

    Returns:
        Tuple of (solution field, solve report)

    Raises:
        DivergenceError: If an iterate exceeds the divergence cap
        StagnationError: If the final stage exhausts its budget
        InnerSolveError: If an inner solve fails
    """
    op = operator or DiscreteOperator(spec, g, cfg.stencil_order)
    g.check(f)
    alpha = spec.alpha
    problem = _Problem(
        op=op,
        f=op.flatten(f)[op.index],
        shift=op.c + lam,
        epsilon=cfg.epsilon,
        max_inner=cfg.max_inner,
    )
    x = np.zeros(op.size) if initial is None else op.flatten(initial)[op.index]
    cap = divergence_cap(op, problem.f, x, cfg)
    schedule = cfg.schedule(alpha, g.h)
    lipschitz: List[float] = []
    residual = np.inf
    iterations = 0

    for stage, relative in enumerate(schedule):
        last_stage = stage == len(schedule) - 1
        stage_tol = cfg.tol if last_stage else cfg.tol * STAGE_TOL_FACTOR
        delta = relative * gradient_scale(op, problem.f, x)
        problem.delta = delta
        problem.last_v = None

        x, steps, residual = _run_stage(problem, x, cfg, stage_tol, cap, last_stage)
        iterations += steps
        lipschitz.append(_lipschitz(op, x))
        logger.debug(
            f"Stage delta={delta:.2e} finished after {steps} iterations",
            extra={"grid": g.tag, "residual": residual, "lambda": lam},
        )

    report = SolveReport(
        converged=bool(residual <= cfg.tol),
        iterations=iterations,
        residual=float(residual),
        history=list(problem.history),
        delta=float(problem.delta),
        lipschitz=lipschitz,
    )
    logger.debug(
        f"Dirichlet solve converged in {iterations} iterations",
        extra={"grid": g.tag, "residual": residual, "lambda": lam},
    )
    return op.to_field(x), report


def _run_stage(
    problem: _Problem,
    x0: NDArray[np.float64],
    cfg: SolveConfig,
    stage_tol: float,
    cap: float,
    last_stage: bool,
) -> Tuple[NDArray[np.float64], int, float]:
    """Drive one δ stage to its tolerance; returns (x, iterations, residual)."""
    residual = problem.residual(x0)
    if residual <= stage_tol:
        return x0, 0, residual

    steps = 0

    def defect(x: NDArray[np.float64]) -> NDArray[np.float64]:
        return problem.apply(x) - x

    def monitor(x: NDArray[np.float64], _: NDArray[np.float64]) -> None:
        nonlocal steps
        steps += 1
        norm = float(np.max(np.abs(x), initial=0.0))
        if not np.isfinite(norm) or norm > cap:
            raise DivergenceError(
                f"Iterate norm {norm:.3e} exceeds cap {cap:.3e}", norm=norm, cap=cap
            )
        current = problem.residual(x)
        problem.history.append(current)
        if current <= stage_tol:
            raise _ToleranceReached(np.array(x))

    options = dict(
        alpha=cfg.damping,
        maxiter=cfg.max_iter,
        f_tol=np.finfo(float).tiny,
        line_search=None,
        callback=monitor,
    )
    try:
        if cfg.anderson_depth > 0:
            x = optimize.anderson(defect, x0, M=cfg.anderson_depth, **options)
        else:
            x = optimize.linearmixing(defect, x0, **options)
    except _ToleranceReached as done:
        return done.x, steps, problem.residual(done.x)
    except optimize.NoConvergence as e:
        x = np.asarray(e.args[0]) if e.args else x0
        residual = problem.residual(x)
        if last_stage:
            raise StagnationError(
                f"No convergence within {cfg.max_iter} iterations "
                f"(residual {residual:.3e})",
                residual=residual,
                norm=float(np.max(np.abs(x), initial=0.0)),
            ) from e
        logger.warning(
            f"Stage delta={problem.delta:.2e} stopped at residual {residual:.3e}",
            extra={"grid": problem.op.grid.tag},
        )
        return x, steps, residual

    x = np.asarray(x)
    residual = problem.residual(x)
    if last_stage and residual > stage_tol:
        raise StagnationError(
            f"Fixed point reached with residual {residual:.3e}",
            residual=residual,
            norm=float(np.max(np.abs(x), initial=0.0)),
        )
    return x, steps, residual
