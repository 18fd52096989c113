"""Tests for custom exceptions."""
import pytest

from src.exceptions import (
    BracketingError,
    ConfigurationError,
    DivergenceError,
    EigenError,
    InnerSolveError,
    InvalidDomainError,
    NonConvergenceError,
    OracleError,
    SingularEigenError,
    SolverError,
    StagnationError,
    StepFloorError,
    WindowError,
)


class TestExceptions:
    """Test custom exception classes."""

    def test_base_error(self):
        """Test base SingularEigenError exception."""
        with pytest.raises(SingularEigenError) as exc_info:
            raise SingularEigenError("Base solver error")

        assert str(exc_info.value) == "Base solver error"
        assert isinstance(exc_info.value, Exception)

    def test_configuration_error(self):
        """Test ConfigurationError exception."""
        with pytest.raises(ConfigurationError) as exc_info:
            raise ConfigurationError("run.cfg:3: unknown key 'grid.size'")

        assert "unknown key" in str(exc_info.value)
        assert isinstance(exc_info.value, SingularEigenError)

    def test_domain_error(self):
        """Test InvalidDomainError exception."""
        with pytest.raises(InvalidDomainError) as exc_info:
            raise InvalidDomainError("Resolution must be at least 4, got 2")

        assert "at least 4" in str(exc_info.value)
        assert isinstance(exc_info.value, SingularEigenError)

    def test_solver_error_residual(self):
        """Test solver errors carry the last residual."""
        error = StagnationError("No convergence", residual=0.5)

        assert error.residual == 0.5
        assert isinstance(error, SolverError)
        assert SolverError("plain").residual is None

    def test_divergence_error(self):
        """Test DivergenceError records norm and cap."""
        with pytest.raises(DivergenceError) as exc_info:
            raise DivergenceError("Iterate norm too large", norm=20.0, cap=10.0)

        assert exc_info.value.norm == 20.0
        assert exc_info.value.cap == 10.0
        assert isinstance(exc_info.value, SolverError)

    def test_solver_hierarchy(self):
        """Test inner solve failures are solver errors."""
        assert issubclass(InnerSolveError, SolverError)
        assert issubclass(SolverError, SingularEigenError)

    def test_eigen_hierarchy(self):
        """Test eigenvalue failures derive from EigenError."""
        assert issubclass(NonConvergenceError, EigenError)
        assert issubclass(BracketingError, EigenError)
        assert issubclass(EigenError, SingularEigenError)

    def test_oracle_hierarchy(self):
        """Test oracle failures derive from OracleError."""
        assert issubclass(WindowError, OracleError)
        assert issubclass(StepFloorError, OracleError)

    def test_exception_chaining(self):
        """Test exception chaining with from clause."""
        try:
            try:
                raise ValueError("not a boolean: 'maybe'")
            except ValueError as e:
                raise ConfigurationError("run.cfg:1: invalid value for 'verify.refine'") from e
        except ConfigurationError as ce:
            assert ce.__cause__ is not None
            assert isinstance(ce.__cause__, ValueError)
