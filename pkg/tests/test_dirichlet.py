"""Tests for the regularized Dirichlet solver."""
import numpy as np
import pytest

from src.dirichlet import (
    SolveConfig,
    apply_T,
    default_delta_schedule,
    divergence_cap,
    gradient_scale,
    solve_dirichlet,
)
from src.exceptions import ConfigurationError, DivergenceError, StagnationError
from src.grid import DomainSpec, Shape, build_domain
from src.operators import DiscreteOperator, OperatorKind, OperatorSpec


class TestSolveConfig:
    """Test solver settings."""

    def test_defaults(self):
        """Test the default settings are accepted."""
        cfg = SolveConfig()

        assert cfg.delta_min is None
        assert cfg.tol == 1e-7

    def test_invalid_damping(self):
        """Test damping outside (0, 1] is rejected."""
        with pytest.raises(ConfigurationError) as exc_info:
            SolveConfig(damping=0.0)

        assert "damping" in str(exc_info.value)

    def test_schedule_must_decrease(self):
        """Test a non-decreasing δ schedule is rejected."""
        with pytest.raises(ConfigurationError):
            SolveConfig(delta_schedule=(0.1, 0.5))

    def test_default_schedule(self):
        """Test the geometric schedule ends exactly at δ_min."""
        assert default_delta_schedule(1e-2) == (1.0, 0.25, 0.0625, 0.015625, 0.01)

    def test_schedule_floor_is_grid_spacing(self):
        """Test the default schedule stops at h when δ_min is unset."""
        cfg = SolveConfig()

        assert cfg.schedule(-0.5, 1.0 / 64) == (1.0, 0.25, 0.0625, 1.0 / 64)
        assert cfg.schedule(-0.5, 1.0 / 32) == (1.0, 0.25, 0.0625, 1.0 / 32)

    def test_unweighted_schedule(self):
        """Test α = 0 without ε uses a single stage."""
        cfg = SolveConfig(delta_min=1e-3)

        assert cfg.schedule(0.0, 0.1) == (1e-3,)
        assert cfg.schedule(-0.5, 0.1)[-1] == 1e-3

    def test_final_stage(self):
        """Test the warm-restart copy keeps only the last δ."""
        cfg = SolveConfig(delta_schedule=(1.0, 0.1, 0.01))

        assert cfg.final_stage(0.5).delta_schedule == (0.01,)
        assert SolveConfig().final_stage(0.125).delta_schedule == (0.125,)


class TestApplyT:
    """Test one application of the fixed-point map."""

    def test_laplacian_step(self, laplacian, interval_grid):
        """Test T(0) solves v'' = f."""
        v = apply_T(laplacian, interval_grid, interval_grid.zeros(), interval_grid.field(-1.0), 0.1)
        x = interval_grid.x

        np.testing.assert_allclose(v.values[:, 0], x * (1.0 - x) / 2.0, atol=1e-12)

    def test_delta_must_be_positive(self, laplacian, interval_grid):
        """Test δ = 0 is rejected."""
        with pytest.raises(ConfigurationError):
            apply_T(laplacian, interval_grid, interval_grid.zeros(), interval_grid.zeros(), 0.0)


class TestSolveDirichlet:
    """Test full Dirichlet solves."""

    def test_zero_forcing(self, laplacian, interval_grid, solve_cfg):
        """Test f = 0 with a zero start returns zero immediately."""
        u, report = solve_dirichlet(laplacian, interval_grid, interval_grid.zeros(), 0.0, solve_cfg)

        assert interval_grid.sup_norm(u) == 0.0
        assert report["converged"]
        assert report["iterations"] == 0

    def test_laplacian(self, laplacian, interval_grid, solve_cfg):
        """Test -u'' = 1 gives u(1/2) = 1/8."""
        u, report = solve_dirichlet(laplacian, interval_grid, interval_grid.field(-1.0), 0.0, solve_cfg)

        assert report["converged"]
        assert report["residual"] <= solve_cfg.tol
        assert u.values[32, 0] == pytest.approx(0.125, rel=1e-9)
        assert np.all(u.values[interval_grid.boundary] == 0.0)

    def test_zeroth_order_term(self, laplacian, interval_grid, solve_cfg):
        """Test u'' - u = -1 against 1 - cosh(x - 1/2)/cosh(1/2)."""
        u, report = solve_dirichlet(laplacian, interval_grid, interval_grid.field(-1.0), -1.0, solve_cfg)

        assert report["converged"]
        assert u.values[32, 0] == pytest.approx(1.0 - 1.0 / np.cosh(0.5), rel=1e-3)

    def test_pucci_concave_solution(self, pucci_plus, interval_grid, solve_cfg):
        """Test the concave solution of M⁺ uses the lower bound a."""
        u, _ = solve_dirichlet(pucci_plus, interval_grid, interval_grid.field(-1.0), 0.0, solve_cfg)

        assert interval_grid.sup_norm(u) == pytest.approx(0.125, rel=1e-6)

    def test_square_positive_solution(self, pucci_plus, square_grid, solve_cfg):
        """Test f = -1 on the square gives a positive symmetric solution."""
        u, report = solve_dirichlet(pucci_plus, square_grid, square_grid.field(-1.0), 0.0, solve_cfg)
        values = u.values

        assert report["converged"]
        assert np.all(values[square_grid.interior] > 0)
        np.testing.assert_allclose(values, values.T, atol=1e-8)

    @pytest.mark.slow
    def test_singular_one_dimensional(self, unit_interval):
        """Test |u'|^{-1/2} u'' = -1 against u(1/2) = 1/96."""
        g = build_domain(unit_interval, 128)
        spec = OperatorSpec(kind=OperatorKind.LINEAR, alpha=-0.5)
        cfg = SolveConfig(delta_min=1e-7)
        u, report = solve_dirichlet(spec, g, g.field(-1.0), 0.0, cfg)

        assert report["converged"]
        assert u.values[64, 0] == pytest.approx(1.0 / 96.0, rel=0.05)
        assert len(report["lipschitz"]) == len(cfg.schedule(-0.5, g.h))

    def test_divergence_cap(self, laplacian, interval_grid):
        """Test an iterate above the cap raises DivergenceError."""
        cfg = SolveConfig(cap=1e-6)

        with pytest.raises(DivergenceError) as exc_info:
            solve_dirichlet(laplacian, interval_grid, interval_grid.field(-1.0), 0.0, cfg)

        assert exc_info.value.cap == 1e-6

    def test_stagnation(self, laplacian, interval_grid):
        """Test an exhausted budget on the last stage raises StagnationError."""
        cfg = SolveConfig(max_iter=1, anderson_depth=0)

        with pytest.raises(StagnationError) as exc_info:
            solve_dirichlet(laplacian, interval_grid, interval_grid.field(-1.0), -1.0, cfg)

        assert exc_info.value.residual > cfg.tol
        assert exc_info.value.norm > 0.0

    def test_derived_cap(self, laplacian, interval_grid, solve_cfg):
        """Test the derived cap scales c_lin‖f‖ by cap_factor."""
        op = DiscreteOperator(laplacian, interval_grid)
        f = -2.0 * np.ones(op.size)

        cap = divergence_cap(op, f, np.zeros(op.size), solve_cfg)

        assert cap == pytest.approx(10.0 * 0.125 * 2.0)

    @pytest.mark.parametrize(
        "spec",
        [
            OperatorSpec(kind=OperatorKind.PUCCI_PLUS, a=1.0, A=2.0, alpha=-0.5),
            OperatorSpec(kind=OperatorKind.QTRACE, q=1.0, alpha=-0.5),
        ],
        ids=["pucci_plus", "qtrace"],
    )
    def test_scaling_consistency(self, spec, solve_cfg):
        """Test forcing t^{1+α} f yields t times the solution for f."""
        g = build_domain(DomainSpec(shape=Shape.RECTANGLE), 32)
        t = 3.0

        u, _ = solve_dirichlet(spec, g, g.field(-1.0), 0.0, solve_cfg)
        u_t, report = solve_dirichlet(spec, g, g.field(-(t ** (1.0 + spec.alpha))), 0.0, solve_cfg)

        assert report["converged"]
        gap = np.max(np.abs(np.asarray(u_t.values) - t * np.asarray(u.values)))
        assert gap <= 2.0 * solve_cfg.tol


class TestGradientScale:
    """Test the gradient scale applied to relative δ values."""

    def test_lipschitz_of_iterate(self, laplacian, interval_grid):
        """Test a nonzero iterate sets the scale to its difference quotient."""
        op = DiscreteOperator(laplacian, interval_grid)
        x = interval_grid.x[op.index]
        h = interval_grid.h

        scale = gradient_scale(op, np.zeros(op.size), x * (1.0 - x))

        assert scale == pytest.approx(1.0 - h)

    def test_forcing_scale(self, interval_grid):
        """Test a zero iterate falls back to (‖f‖ d_Ω)^{1/(1+α)}."""
        spec = OperatorSpec(kind=OperatorKind.LINEAR, alpha=-0.5)
        op = DiscreteOperator(spec, interval_grid)
        f = -4.0 * np.ones(op.size)

        scale = gradient_scale(op, f, np.zeros(op.size))

        assert scale == pytest.approx((4.0 * interval_grid.diameter) ** 2.0)

    def test_homogeneous(self, pucci_plus, square_grid):
        """Test scaling the iterate by t scales σ by t."""
        op = DiscreteOperator(pucci_plus, square_grid)
        rng = np.random.default_rng(0)
        x = rng.random(op.size)

        assert gradient_scale(op, np.zeros(op.size), 3.0 * x) == pytest.approx(
            3.0 * gradient_scale(op, np.zeros(op.size), x)
        )

    def test_reported_delta(self, interval_grid, solve_cfg):
        """Test the report carries the effective δ of the last stage."""
        spec = OperatorSpec(kind=OperatorKind.PUCCI_PLUS, a=1.0, A=2.0, alpha=-0.5)

        _, report = solve_dirichlet(spec, interval_grid, interval_grid.field(-1.0), 0.0, solve_cfg)

        assert report["delta"] == pytest.approx(interval_grid.h * report["lipschitz"][-2])
