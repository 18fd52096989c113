"""Singular fully nonlinear elliptic operators: solves, eigenvalues and checks."""

__version__ = "0.1.0"

# Public API
from .config import load_config, validate_config
from .dirichlet import SolveConfig, apply_T, default_delta_schedule, solve_dirichlet
from .eigen import (
    bisect_lambda,
    cw_lower_bound,
    eigen_residual,
    power_iterate,
    principal_eigenvalue,
    principal_eigenvalues,
    reflect_spec,
)
from .exceptions import (
    ConfigurationError,
    DivergenceError,
    EigenError,
    GridError,
    InvalidDomainError,
    InvalidOperatorError,
    OracleError,
    SingularEigenError,
    SolverError,
)
from .field_io import read_field, write_csv, write_field
from .grid import (
    DomainSpec,
    Grid,
    ScalarField,
    Shape,
    boundary_components,
    build_domain,
    distance_field,
    read_mask,
)
from .models import CheckReport, EigResult, HolderFit, RunConfig, SolveReport
from .operators import (
    DiscreteOperator,
    OperatorKind,
    OperatorSpec,
    SymMat2,
    discretize_residual,
    evaluate_F,
    pucci_eval,
)
from .oracle import (
    RadialSpec,
    closed_form_eig_1d,
    dirichlet_midpoint_closed_form,
    oracle_dirichlet_1d,
    shoot_eig_1d,
    shoot_eig_radial,
)
from .runner import run_config
from .verify import (
    BarrierSpec,
    SuiteContext,
    barrier_constant,
    check_barrier_supersolution,
    check_comparison,
    check_distance_comparability,
    check_domain_monotonicity,
    check_hopf,
    check_simplicity,
    estimate_holder,
    isolation_scan,
    run_suite,
)

__all__ = [
    # Version
    "__version__",
    # Configuration
    "load_config",
    "validate_config",
    "run_config",
    # Domains
    "DomainSpec",
    "Grid",
    "ScalarField",
    "Shape",
    "boundary_components",
    "build_domain",
    "distance_field",
    "read_mask",
    # Operators
    "DiscreteOperator",
    "OperatorKind",
    "OperatorSpec",
    "SymMat2",
    "discretize_residual",
    "evaluate_F",
    "pucci_eval",
    # Solvers
    "SolveConfig",
    "apply_T",
    "default_delta_schedule",
    "solve_dirichlet",
    "bisect_lambda",
    "cw_lower_bound",
    "eigen_residual",
    "power_iterate",
    "principal_eigenvalue",
    "principal_eigenvalues",
    "reflect_spec",
    # Oracles
    "RadialSpec",
    "closed_form_eig_1d",
    "dirichlet_midpoint_closed_form",
    "oracle_dirichlet_1d",
    "shoot_eig_1d",
    "shoot_eig_radial",
    # Verification
    "BarrierSpec",
    "SuiteContext",
    "barrier_constant",
    "check_barrier_supersolution",
    "check_comparison",
    "check_distance_comparability",
    "check_domain_monotonicity",
    "check_hopf",
    "check_simplicity",
    "estimate_holder",
    "isolation_scan",
    "run_suite",
    # I/O
    "read_field",
    "write_csv",
    "write_field",
    # Exceptions
    "ConfigurationError",
    "DivergenceError",
    "EigenError",
    "GridError",
    "InvalidDomainError",
    "InvalidOperatorError",
    "OracleError",
    "SingularEigenError",
    "SolverError",
    # Models
    "CheckReport",
    "EigResult",
    "HolderFit",
    "RunConfig",
    "SolveReport",
]
