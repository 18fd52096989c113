"""Custom exceptions for the singular eigenvalue solver."""
from typing import Optional


class SingularEigenError(Exception):
    """Base exception for all solver, grid and verification failures."""

    pass


class ConfigurationError(SingularEigenError):
    """Raised when a run configuration is invalid."""

    pass


class InvalidDomainError(SingularEigenError):
    """Raised when a domain specification or mask file is degenerate."""

    pass


class GridError(SingularEigenError):
    """Raised when a field does not belong to the grid it is used with."""

    pass


class InvalidOperatorError(SingularEigenError):
    """Raised when operator parameters violate ellipticity bounds."""

    pass


class SingularEvaluationError(SingularEigenError):
    """Raised when the operator is evaluated at p=0 without regularization."""

    pass


class SolverError(SingularEigenError):
    """Base exception for iterative solve failures."""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class InnerSolveError(SolverError):
    """Raised when the uniformly elliptic inner solve does not converge."""

    pass


class DivergenceError(SolverError):
    """Raised when an iterate leaves the divergence cap."""

    def __init__(self, message: str, norm: float, cap: float):
        super().__init__(message)
        self.norm = norm
        self.cap = cap


class StagnationError(SolverError):
    """Raised when the outer iteration exhausts its budget."""

    def __init__(
        self,
        message: str,
        residual: Optional[float] = None,
        norm: Optional[float] = None,
    ):
        super().__init__(message, residual=residual)
        self.norm = norm


class EigenError(SingularEigenError):
    """Base exception for eigenvalue computations."""

    pass


class NonConvergenceError(EigenError):
    """Raised when power iteration oscillates or runs out of iterations."""

    pass


class BracketingError(EigenError):
    """Raised when bisection cannot find a feasible/infeasible bracket."""

    pass


class InvalidTestFunctionError(EigenError):
    """Raised when a test function is not positive in the interior."""

    pass


class OracleError(SingularEigenError):
    """Base exception for shooting oracles."""

    pass


class WindowError(OracleError):
    """Raised when no sign change is found in the search window."""

    pass


class StepFloorError(OracleError):
    """Raised when sign switches chatter below the step floor."""

    pass


class InsufficientDataError(SingularEigenError):
    """Raised when an estimate needs more scales than provided."""

    pass


class SchemaError(SingularEigenError):
    """Raised when output rows do not match the declared schema."""

    pass
