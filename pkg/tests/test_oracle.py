"""Tests for the shooting oracles."""
import numpy as np
import pytest

from src.exceptions import InvalidOperatorError, OracleError
from src.oracle import (
    RadialSpec,
    closed_form_eig_1d,
    dirichlet_midpoint_closed_form,
    flux_residual,
    oracle_dirichlet_1d,
    oracle_eigenvalue,
    reflect_radial,
    shoot_eig_1d,
    shoot_eig_radial,
)

J01_SQUARED = 5.783185962946784


class TestRadialSpec:
    """Test radial problem descriptions."""

    def test_unknown_geometry(self):
        """Test an unknown geometry is rejected."""
        with pytest.raises(OracleError) as exc_info:
            RadialSpec(geometry="sphere")

        assert "Unknown geometry" in str(exc_info.value)

    def test_invalid_alpha(self):
        """Test alpha outside (-1, 0] is rejected."""
        with pytest.raises(InvalidOperatorError):
            RadialSpec(alpha=0.2)

    def test_annulus_radii(self):
        """Test the annulus needs 0 < r < R."""
        with pytest.raises(OracleError):
            RadialSpec(geometry="annulus", radius=1.0, inner_radius=1.0)

    def test_weights(self):
        """Test the sign-dependent weights of each kind."""
        assert RadialSpec(kind="pucci_plus", a=1.0, A=2.0).weights() == (2.0, 1.0, 2.0, 1.0)
        assert RadialSpec(kind="pucci_minus", a=1.0, A=2.0).weights() == (1.0, 2.0, 1.0, 2.0)
        assert RadialSpec(kind="qtrace", q=3.0).weights() == (4.0, 4.0, 1.0, 1.0)

    def test_reflect(self):
        """Test reflection swaps the Pucci kinds."""
        assert reflect_radial(RadialSpec(kind="pucci_plus")).kind == "pucci_minus"
        assert reflect_radial(RadialSpec(kind="linear")).kind == "linear"


class TestClosedForms:
    """Test closed-form references."""

    def test_laplacian(self):
        """Test α = 0 gives π²/L²."""
        assert closed_form_eig_1d(RadialSpec(kind="linear")) == pytest.approx(np.pi**2)
        assert closed_form_eig_1d(RadialSpec(kind="linear", length=2.0)) == pytest.approx(np.pi**2 / 4)

    def test_singular(self):
        """Test α = -1/2 on (0, 1)."""
        assert closed_form_eig_1d(RadialSpec(kind="linear", alpha=-0.5)) == pytest.approx(10.6374, rel=1e-4)

    def test_zeroth_order_shift(self):
        """Test c moves the eigenvalue by -c."""
        assert closed_form_eig_1d(RadialSpec(kind="linear", c=-2.0)) == pytest.approx(np.pi**2 + 2.0)

    def test_dirichlet_midpoint(self):
        """Test u(1/2) = 1/96 for α = -1/2, f = -1."""
        rs = RadialSpec(kind="linear", alpha=-0.5)

        assert dirichlet_midpoint_closed_form(rs, -1.0) == pytest.approx(1.0 / 96.0)
        assert dirichlet_midpoint_closed_form(RadialSpec(kind="linear"), -1.0) == pytest.approx(0.125)

    def test_closed_form_needs_interval(self):
        """Test the closed form is limited to intervals."""
        with pytest.raises(OracleError):
            closed_form_eig_1d(RadialSpec(geometry="disk"))


class TestShooting:
    """Test shooting eigenvalue oracles."""

    @pytest.mark.parametrize("alpha", [0.0, -0.25, -0.5, -0.75])
    def test_matches_closed_form(self, alpha):
        """Test 1D shooting against the first integral."""
        rs = RadialSpec(kind="linear", alpha=alpha)

        assert shoot_eig_1d(rs) == pytest.approx(closed_form_eig_1d(rs), rel=1e-8)

    def test_pucci_interval(self):
        """Test λ⁺ = aπ² and λ⁻ = Aπ² on (0, 1)."""
        rs = RadialSpec(kind="pucci_plus", a=1.0, A=2.0)

        assert shoot_eig_1d(rs) == pytest.approx(np.pi**2, rel=1e-8)
        assert shoot_eig_1d(reflect_radial(rs)) == pytest.approx(2.0 * np.pi**2, rel=1e-8)

    def test_shifted(self):
        """Test shooting with c = -2."""
        rs = RadialSpec(kind="linear", c=-2.0)

        assert shoot_eig_1d(rs) == pytest.approx(np.pi**2 + 2.0, rel=1e-8)

    def test_disk(self):
        """Test the Laplacian on the unit disk gives j₀₁²."""
        rs = RadialSpec(kind="linear", geometry="disk")

        assert shoot_eig_radial(rs) == pytest.approx(J01_SQUARED, rel=1e-6)

    def test_disk_pucci_ordering(self):
        """Test λ⁺ <= λ⁻ for Pucci operators on the disk."""
        rs = RadialSpec(kind="pucci_plus", a=1.0, A=2.0, geometry="disk")
        plus = shoot_eig_radial(rs)
        minus = shoot_eig_radial(reflect_radial(rs))

        # M⁺ dominates aΔ and M⁻ is dominated by AΔ
        assert plus <= J01_SQUARED * (1 + 1e-8)
        assert plus < minus
        assert minus >= 2.0 * J01_SQUARED * (1 - 1e-8)

    def test_scaling(self):
        """Test λ(tΩ) = t^{-(2+α)} λ(Ω) on the annulus."""
        rs = RadialSpec(kind="linear", alpha=-0.5, geometry="annulus")
        base = oracle_eigenvalue(rs)

        assert oracle_eigenvalue(rs.scaled(2.0)) == pytest.approx(2.0**-1.5 * base, rel=1e-7)

    def test_wrong_geometry(self):
        """Test each shooter rejects the other geometry."""
        with pytest.raises(OracleError):
            shoot_eig_1d(RadialSpec(geometry="disk"))
        with pytest.raises(OracleError):
            shoot_eig_radial(RadialSpec(geometry="interval"))


class TestDirichletOracle:
    """Test the 1D Dirichlet shooting oracle."""

    def test_singular_profile(self):
        """Test u(1/2) = 1/96 and the boundary values."""
        u = oracle_dirichlet_1d(RadialSpec(kind="linear", alpha=-0.5), -1.0)

        assert u(np.array([0.5]))[0] == pytest.approx(1.0 / 96.0, rel=1e-8)
        np.testing.assert_allclose(u(np.array([0.0, 1.0])), 0.0, atol=1e-12)

    def test_laplacian_profile(self):
        """Test -u'' = 1 gives x(1 - x)/2."""
        u = oracle_dirichlet_1d(RadialSpec(kind="linear"), -1.0)
        x = np.linspace(0.0, 1.0, 11)

        np.testing.assert_allclose(u(x), x * (1.0 - x) / 2.0, atol=1e-10)

    def test_zero_forcing(self):
        """Test f = 0 gives the zero profile."""
        u = oracle_dirichlet_1d(RadialSpec(kind="linear"), 0.0)

        np.testing.assert_array_equal(u(np.linspace(0, 1, 5)), np.zeros(5))

    def test_positive_forcing_rejected(self):
        """Test f > 0 is rejected."""
        with pytest.raises(OracleError) as exc_info:
            oracle_dirichlet_1d(RadialSpec(kind="linear"), 1.0)

        assert "non-positive" in str(exc_info.value)


class TestFluxResidual:
    """Test the flux reformulation."""

    def test_matches_original_equation(self):
        """Test flux and singular forms agree on sin(πx) away from u' = 0."""
        rs = RadialSpec(kind="pucci_plus", a=1.0, A=2.0, alpha=-0.5)
        x = np.linspace(0.01, 0.99, 97)

        gap = flux_residual(
            rs, 10.0, x, np.sin(np.pi * x), np.pi * np.cos(np.pi * x), -np.pi**2 * np.sin(np.pi * x)
        )

        assert gap < 1e-10

    def test_radial_form(self):
        """Test the radial terms agree on a disk profile."""
        rs = RadialSpec(kind="pucci_minus", a=1.0, A=3.0, alpha=-0.3, geometry="disk")
        r = np.linspace(0.05, 0.95, 50)

        gap = flux_residual(rs, 5.0, r, 1.0 - r**2, -2.0 * r, -2.0 * np.ones_like(r))

        assert gap < 1e-10
