"""Type definitions and result records."""
from typing import Any, Dict, List, Optional, TypedDict

from .grid import ScalarField


class SolveReport(TypedDict):
    """Outcome of a Dirichlet solve."""

    converged: bool
    iterations: int
    residual: float
    history: List[float]
    delta: float
    lipschitz: List[float]


class EigResult(TypedDict):
    """Principal eigenvalue estimate with its eigenfunction."""

    eigenvalue: float
    eigenfunction: ScalarField
    residual: float
    cw_lower: float
    iterations: int
    method: str
    diagnostics: Dict[str, Any]


class CheckReport(TypedDict):
    """Verdict of one executable property check."""

    check: str
    case: str
    n: int
    measured: float
    threshold: float
    verdict: str
    details: Dict[str, Any]


class RunConfig(TypedDict):
    """Validated flat configuration for a CLI run."""

    command: str
    domain: Dict[str, Any]
    grid_n: int
    stencil_order: int
    operator: Dict[str, Any]
    drift: List[float]
    c_constant: float
    problem_f: float
    problem_lambda: float
    solver: Dict[str, Any]
    eigen: Dict[str, Any]
    verify_suite: str
    verify_seeds: List[int]
    verify_refine: bool
    sweep_command: str
    sweep_parameter: Optional[str]
    sweep_values: List[float]
    output_dir: str
    output_prefix: str


class HolderFit(TypedDict):
    """Log-log fit of oscillation against separation."""

    beta: float
    gamma: float
    beta_residual: float
    gamma_residual: float
    separations: List[float]
