"""Principal eigenvalues λ⁺ and λ⁻ with their eigenfunctions."""
import logging
from dataclasses import replace
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from .dirichlet import SolveConfig, solve_dirichlet
from .exceptions import (
    BracketingError,
    DivergenceError,
    EigenError,
    InnerSolveError,
    InvalidTestFunctionError,
    NonConvergenceError,
    StagnationError,
)
from .grid import Grid, ScalarField, distance_field
from .models import EigResult
from .operators import DiscreteOperator, OperatorKind, OperatorSpec, odd_power

logger = logging.getLogger(__name__)

# Inner Dirichlet tolerance relative to the eigen residual tolerance
INNER_TOL_FACTOR = 0.1

# Divergence cap multiplier for bisection trials near the eigenvalue
BISECTION_CAP_FACTOR = 1e8

# Number of trailing λ increments inspected for oscillation
OSCILLATION_WINDOW = 6

REFLECTED_KIND = {
    OperatorKind.PUCCI_PLUS: OperatorKind.PUCCI_MINUS,
    OperatorKind.PUCCI_MINUS: OperatorKind.PUCCI_PLUS,
    OperatorKind.LINEAR: OperatorKind.LINEAR,
    OperatorKind.QTRACE: OperatorKind.QTRACE,
}


def reflect_spec(spec: OperatorSpec) -> OperatorSpec:
    """
    Reflected operator F̌(x, p, M) = −F(x, −p, −M).

    Swaps the Pucci kinds and leaves linear and q-trace operators unchanged,
    so that λ⁻(F) = λ⁺(F̌).
    """
    return replace(spec, kind=REFLECTED_KIND[spec.kind])


def seeded_start(g: Grid, seed: Optional[int] = None) -> ScalarField:
    """
    Positive starting field.

    Without a seed this is the distance field; a seed multiplies it by a
    reproducible factor in [0.5, 1.5) per node.
    """
    d = np.nan_to_num(np.asarray(distance_field(g).values, dtype=float))
    if seed is not None:
        rng = np.random.default_rng(seed)
        d = d * (0.5 + rng.random(g.shape))
    return g.field(np.where(g.interior, d, 0.0))


def eigen_residual(
    spec: OperatorSpec,
    g: Grid,
    phi: ScalarField,
    lam: float,
    delta: float = 0.0,
    scale: float = 1.0,
    operator: Optional[DiscreteOperator] = None,
) -> float:
    """
    Residual certificate of an eigenpair.

    Evaluates ‖F_h[v] + (c + λ)|v|^α v‖ / ‖v‖^{1+α} at v = scale·φ, which
    equals the residual of φ itself when δ = 0, divided by max(1, |λ|).
    """
    op = operator or DiscreteOperator(spec, g)
    v = scale * op.flatten(phi)
    interior = v[op.index]
    with np.errstate(invalid="ignore"):
        r = op.residual(v, delta) + (op.c + lam) * odd_power(interior, spec.alpha)
    size = float(np.max(np.abs(interior), initial=0.0))
    if size == 0.0:
        return float("inf")
    value = float(np.max(np.abs(r), initial=0.0)) / size ** (1.0 + spec.alpha)
    return value / max(1.0, abs(lam))


def cw_lower_bound(
    spec: OperatorSpec,
    g: Grid,
    phi: ScalarField,
    delta: float = 0.0,
    scale: float = 1.0,
    stencil_order: int = 2,
    operator: Optional[DiscreteOperator] = None,
) -> float:
    """
    Largest λ making φ a discrete supersolution.

    Returns min over interior nodes of (−F_h[v] − c|v|^α v)/|v|^α v at
    v = scale·φ; nodes where the singular weight is undefined impose no
    constraint.

    Raises:
        InvalidTestFunctionError: If φ is not positive at every interior node
    """
    op = operator or DiscreteOperator(spec, g, stencil_order)
    values = op.flatten(phi)
    if np.any(values[op.index] <= 0):
        raise InvalidTestFunctionError("Test function must be positive in the interior")
    v = scale * values
    power = odd_power(v[op.index], spec.alpha)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = (-op.residual(v, delta) - op.c * power) / power
    ratio = np.where(np.isnan(ratio), np.inf, ratio)
    return float(np.min(ratio))


def _oscillating(history: List[float]) -> bool:
    """λ increments alternating in sign without shrinking."""
    if len(history) < OSCILLATION_WINDOW + 1:
        return False
    steps = np.diff(history[-(OSCILLATION_WINDOW + 1) :])
    alternating = np.all(steps[1:] * steps[:-1] < 0)
    shrinking = abs(steps[-1]) < 0.9 * abs(steps[-3])
    return bool(alternating and not shrinking)


def power_iterate(
    spec: OperatorSpec,
    g: Grid,
    cfg: SolveConfig,
    seed: Optional[int] = None,
    initial: Optional[ScalarField] = None,
    operator: Optional[DiscreteOperator] = None,
) -> EigResult:
    """
    Inverse power iteration of degree 1+α.

    Each step solves F[v] + c|v|^α v = −û^{1+α}, sets λ = ‖v‖^{−(1+α)} and
    û = v/‖v‖. The loop stops once the residual certificate is below
    ``cfg.tol`` and successive λ agree to ``cfg.eig_tol``.

    Args:
        spec: Operator specification with c <= 0
        g: Grid
        cfg: Solver settings
        seed: Seed of the starting field (distance field when None)
        initial: Starting field overriding ``seed``
        operator: Prebuilt discretization

    Returns:
        EigResult with method ``power``

    Raises:
        EigenError: If c > 0 somewhere
        NonConvergenceError: On oscillation or an exhausted budget
        DivergenceError: If an inner solve diverges
    """
    op = operator or DiscreteOperator(spec, g, cfg.stencil_order)
    if np.any(op.c > 0):
        raise EigenError("Power iteration requires c <= 0 so inner problems are proper")
    alpha = spec.alpha
    start = initial if initial is not None else seeded_start(g, seed)
    x = op.flatten(start)[op.index]
    if np.any(x <= 0):
        raise InvalidTestFunctionError("Starting field must be positive in the interior")
    x = x / np.max(x)

    inner_cfg = replace(cfg, tol=cfg.tol * INNER_TOL_FACTOR)
    delta = float("nan")
    guess: Optional[ScalarField] = None
    history: List[float] = []
    lam = float("nan")
    residual = float("inf")
    v_field = start

    for k in range(1, cfg.max_eig_iter + 1):
        forcing = op.to_field(-odd_power(x, alpha))
        v_field, report = solve_dirichlet(spec, g, forcing, 0.0, inner_cfg, guess, op)
        delta = report["delta"]
        v = op.flatten(v_field)[op.index]
        norm = float(np.max(np.abs(v)))
        if not np.isfinite(norm) or norm == 0.0:
            raise NonConvergenceError(f"Power iterate degenerated at step {k}")

        lam = norm ** (-(1.0 + alpha))
        history.append(lam)
        residual = eigen_residual(spec, g, v_field, lam, delta, 1.0, op)
        change = abs(history[-1] - history[-2]) if k > 1 else 0.0
        logger.debug(
            f"Power step {k}: lambda={lam:.10g}",
            extra={"grid": g.tag, "residual": residual, "change": change},
        )
        x = v / norm
        if residual <= cfg.tol and change <= cfg.eig_tol * max(1.0, lam):
            break
        if _oscillating(history):
            raise NonConvergenceError(
                "Power iteration oscillates; use bisection instead"
            )
        guess = v_field
        inner_cfg = inner_cfg.final_stage(g.h) if k == 1 else inner_cfg
    else:
        raise NonConvergenceError(
            f"Power iteration did not converge in {cfg.max_eig_iter} steps "
            f"(residual {residual:.3e})"
        )

    if np.any(x <= 0):
        raise NonConvergenceError("Eigenfunction is not positive in the interior")
    phi = op.to_field(x)
    result = EigResult(
        eigenvalue=lam,
        eigenfunction=phi,
        residual=residual,
        cw_lower=cw_lower_bound(spec, g, phi, delta, norm, operator=op),
        iterations=k,
        method="power",
        diagnostics=_diagnostics(op, lam, history, delta),
    )
    logger.info(
        f"Power iteration: lambda={lam:.10g} after {k} steps",
        extra={"grid": g.tag, "residual": residual},
    )
    return result


def bisect_lambda(
    spec: OperatorSpec,
    g: Grid,
    cfg: SolveConfig,
    lam_lo: float,
    lam_hi: float,
    max_widen: int = 10,
    operator: Optional[DiscreteOperator] = None,
) -> EigResult:
    """
    Locate λ⁺ as the solvability threshold of F[u] + (c + λ)|u|^α u = −1.

    A trial λ is feasible when the solve converges to a positive solution
    within the divergence cap. The bracket is widened when needed and then
    halved until its width is below ``cfg.eig_tol`` relative to λ.

    Args:
        spec: Operator specification
        g: Grid
        cfg: Solver settings
        lam_lo: Expected feasible end
        lam_hi: Expected infeasible end
        max_widen: Widening budget per side
        operator: Prebuilt discretization

    Returns:
        EigResult with method ``bisection``; λ is the last feasible value

    Raises:
        BracketingError: If no feasible/infeasible pair is found
    """
    if not lam_lo < lam_hi:
        raise BracketingError(f"Empty bracket [{lam_lo}, {lam_hi}]")
    op = operator or DiscreteOperator(spec, g, cfg.stencil_order)
    trial_cfg = cfg if cfg.cap is not None else replace(
        cfg, cap_factor=BISECTION_CAP_FACTOR
    )
    forcing = op.to_field(-np.ones(op.size))
    trials = 0
    best: Optional[Tuple[ScalarField, float]] = None

    def feasible(lam: float) -> Tuple[bool, Optional[Tuple[ScalarField, float]]]:
        nonlocal trials
        trials += 1
        run_cfg = trial_cfg.final_stage(g.h) if best is not None else trial_cfg
        try:
            start = best[0] if best is not None else None
            u, report = solve_dirichlet(spec, g, forcing, lam, run_cfg, start, op)
        except (DivergenceError, StagnationError, InnerSolveError) as e:
            logger.debug(f"Trial lambda={lam:.10g} infeasible: {e}")
            return False, None
        positive = bool(np.all(op.flatten(u)[op.index] > 0))
        ok = report["converged"] and positive
        logger.debug(f"Trial lambda={lam:.10g} feasible={ok}", extra={"grid": g.tag})
        return ok, ((u, report["delta"]) if ok else None)

    ok, found = feasible(lam_lo)
    widen = 0
    while not ok:
        if widen >= max_widen:
            raise BracketingError(f"No feasible lambda found below {lam_lo}")
        width = lam_hi - lam_lo
        lam_hi, lam_lo = lam_lo, lam_lo - 2.0 * width
        widen += 1
        ok, found = feasible(lam_lo)
    best = found

    widen = 0
    while True:
        ok, found = feasible(lam_hi)
        if not ok:
            break
        if widen >= max_widen:
            raise BracketingError(f"No infeasible lambda found above {lam_lo}")
        width = lam_hi - lam_lo
        lam_lo, best = lam_hi, found
        lam_hi = lam_hi + 2.0 * width
        widen += 1

    while lam_hi - lam_lo > cfg.eig_tol * max(1.0, abs(lam_lo)):
        mid = 0.5 * (lam_lo + lam_hi)
        ok, found = feasible(mid)
        if ok:
            lam_lo, best = mid, found
        else:
            lam_hi = mid

    assert best is not None
    solution, delta = best
    values = op.flatten(solution)[op.index]
    scale = float(np.max(values))
    phi = op.to_field(values / scale)
    diagnostics = _diagnostics(op, lam_lo, [], delta)
    diagnostics["bracket"] = [lam_lo, lam_hi]
    diagnostics["trials"] = trials
    result = EigResult(
        eigenvalue=lam_lo,
        eigenfunction=phi,
        residual=eigen_residual(spec, g, phi, lam_lo, delta, scale, op),
        cw_lower=cw_lower_bound(spec, g, phi, delta, scale, operator=op),
        iterations=trials,
        method="bisection",
        diagnostics=diagnostics,
    )
    logger.info(
        f"Bisection: lambda in [{lam_lo:.10g}, {lam_hi:.10g}] after {trials} trials",
        extra={"grid": g.tag},
    )
    return result


def _diagnostics(
    op: DiscreteOperator, lam: float, history: List[float], delta: float
) -> dict:
    positive = bool(np.min(op.c) + lam > 0)
    if not positive:
        logger.warning(
            "c + lambda is not positive everywhere; simplicity diagnostics suppressed",
            extra={"grid": op.grid.tag, "lambda": lam},
        )
    return {"history": history, "c_plus_lambda_positive": positive, "delta": delta}


def default_bracket(op: DiscreteOperator) -> Tuple[float, float]:
    """Bracket guess from the linear stability constant."""
    upper = 4.0 / op.linear_constant ** (1.0 + op.spec.alpha)
    return -float(np.max(op.c)), upper - float(np.min(op.c))


def principal_eigenvalue(
    spec: OperatorSpec,
    g: Grid,
    cfg: SolveConfig,
    method: str = "power",
    seed: Optional[int] = None,
    bracket: Optional[Tuple[float, float]] = None,
) -> EigResult:
    """λ⁺ by the chosen method (``power`` or ``bisection``)."""
    op = DiscreteOperator(spec, g, cfg.stencil_order)
    if method == "power":
        return power_iterate(spec, g, cfg, seed, operator=op)
    if method == "bisection":
        lo, hi = bracket if bracket is not None else default_bracket(op)
        return bisect_lambda(spec, g, cfg, lo, hi, operator=op)
    raise EigenError(f"Unknown eigen method: {method}")


def principal_eigenvalues(
    spec: OperatorSpec,
    g: Grid,
    cfg: SolveConfig,
    method: str = "power",
    seed: Optional[int] = None,
) -> Tuple[EigResult, EigResult]:
    """
    Both principal eigenvalues.

    λ⁻ is λ⁺ of the reflected operator; its eigenfunction is negated so it
    is negative in the interior.
    """
    plus = principal_eigenvalue(spec, g, cfg, method, seed)
    reflected = principal_eigenvalue(reflect_spec(spec), g, cfg, method, seed)
    minus = EigResult(**{**reflected, "eigenfunction": -reflected["eigenfunction"]})
    return plus, minus


def eigenfunction_values(result: EigResult) -> NDArray[np.float64]:
    """Eigenfunction values with the exterior sentinel."""
    return np.asarray(result["eigenfunction"].values)
