"""Tests for operator evaluation and discretization."""
import numpy as np
import pytest

from src.exceptions import InnerSolveError, InvalidOperatorError, SingularEvaluationError
from src.grid import DomainSpec, Shape, build_domain
from src.operators import (
    DiscreteOperator,
    OperatorKind,
    OperatorSpec,
    SymMat2,
    discretize_residual,
    evaluate_F,
    holder_quotient,
    odd_power,
    pucci_eval,
    pucci_hessian,
    q_laplacian_residual,
    stencil_frames,
)


class TestPucci:
    """Test the Pucci extremal operators."""

    def test_plus_and_minus(self):
        """Test M⁺ and M⁻ on an indefinite diagonal matrix."""
        M = SymMat2(1.0, 0.0, -1.0)

        assert pucci_eval(M, 1.0, 2.0, "plus") == pytest.approx(1.0)
        assert pucci_eval(M, 1.0, 2.0, "minus") == pytest.approx(-1.0)

    def test_equal_bounds_give_trace(self):
        """Test that a = A reduces both operators to a·trace."""
        M = SymMat2(3.0, 1.5, -0.5)

        assert pucci_eval(M, 2.0, 2.0, "plus") == pytest.approx(5.0)
        assert pucci_eval(M, 2.0, 2.0, "minus") == pytest.approx(5.0)

    def test_invalid_bounds(self):
        """Test that a > A is rejected."""
        with pytest.raises(InvalidOperatorError):
            pucci_eval(SymMat2(1.0), 2.0, 1.0)

    def test_eigenvalues(self):
        """Test the closed-form 2x2 eigenvalues."""
        assert SymMat2(2.0, 1.0, 2.0).eigenvalues() == pytest.approx((1.0, 3.0))
        assert SymMat2.scalar(-4.0).eigenvalues() == (-4.0,)

    def test_condition_F(self):
        """Test a·tr(N) <= M⁺(M + N) - M⁺(M) <= A·tr(N) for random N >= 0."""
        rng = np.random.default_rng(0)
        a, A = 1.0, 2.0
        m11, m12, m22 = rng.normal(size=(3, 1000))
        b = rng.normal(size=(2, 2, 1000))
        n11 = b[0, 0] ** 2 + b[0, 1] ** 2
        n12 = b[0, 0] * b[1, 0] + b[0, 1] * b[1, 1]
        n22 = b[1, 0] ** 2 + b[1, 1] ** 2
        trace = n11 + n22

        for sign in ("plus", "minus"):
            gap = pucci_hessian(m11 + n11, m12 + n12, m22 + n22, a, A, sign) - pucci_hessian(
                m11, m12, m22, a, A, sign
            )
            assert np.all(gap >= a * trace - 1e-10)
            assert np.all(gap <= A * trace + 1e-10)

    def test_against_eigendecomposition(self):
        """Test M⁺ and M⁻ against numpy eigenvalues for 100 random matrices."""
        rng = np.random.default_rng(1)
        a, A = 0.5, 3.0
        for _ in range(100):
            m11, m12, m22 = rng.normal(size=3)
            e = np.linalg.eigvalsh(np.array([[m11, m12], [m12, m22]]))
            positive, negative = e[e > 0].sum(), e[e < 0].sum()
            M = SymMat2(m11, m12, m22)

            assert pucci_eval(M, a, A, "plus") == pytest.approx(A * positive + a * negative, abs=1e-12)
            assert pucci_eval(M, a, A, "minus") == pytest.approx(a * positive + A * negative, abs=1e-12)

    def test_duality(self):
        """Test M⁺(M) = -M⁻(-M)."""
        rng = np.random.default_rng(2)
        for _ in range(100):
            m11, m12, m22 = rng.normal(size=3)

            assert pucci_eval(SymMat2(m11, m12, m22), 1.0, 2.0, "plus") == pytest.approx(
                -pucci_eval(SymMat2(-m11, -m12, -m22), 1.0, 2.0, "minus"), abs=1e-12
            )


class TestOperatorSpec:
    """Test operator specifications."""

    def test_alpha_range(self):
        """Test that alpha outside (-1, 0] is rejected."""
        with pytest.raises(InvalidOperatorError) as exc_info:
            OperatorSpec(alpha=-1.0)

        assert "alpha" in str(exc_info.value)

        with pytest.raises(InvalidOperatorError):
            OperatorSpec(alpha=0.5)

    def test_ellipticity(self):
        """Test that a > A is rejected."""
        with pytest.raises(InvalidOperatorError):
            OperatorSpec(a=2.0, A=1.0)

    def test_unknown_kind(self):
        """Test that an unknown kind is rejected."""
        with pytest.raises(InvalidOperatorError) as exc_info:
            OperatorSpec(kind="biharmonic")

        assert "Unknown operator kind" in str(exc_info.value)

    def test_coefficients_outside_bounds(self):
        """Test that linear coefficients must respect [a, A]."""
        with pytest.raises(InvalidOperatorError):
            OperatorSpec(kind=OperatorKind.LINEAR, a=1.0, A=2.0, coefficients=(3.0, 0.0, 1.0))

    def test_odd_power(self):
        """Test |u|^α u keeps the sign and vanishes at zero."""
        np.testing.assert_allclose(odd_power([-4.0, 0.0, 9.0], -0.5), [-2.0, 0.0, 3.0])


class TestEvaluateF:
    """Test pointwise evaluation."""

    def test_homogeneity(self):
        """Test degree 1 + α positive homogeneity at δ = 0."""
        spec = OperatorSpec(kind=OperatorKind.PUCCI_PLUS, a=1.0, A=2.0, alpha=-0.5, drift=(0.3, -1.0))
        p = (0.3, -0.4)
        M = SymMat2(1.0, 0.5, -2.0)
        t = 3.0

        base = evaluate_F(spec, (0.2, 0.1), p, M)
        scaled = evaluate_F(spec, (0.2, 0.1), (t * p[0], t * p[1]), M.scaled(t))

        assert scaled == pytest.approx(t**0.5 * base, rel=1e-12)

    def test_linear_with_drift(self):
        """Test the Laplacian plus transport term at α = 0."""
        spec = OperatorSpec(kind=OperatorKind.LINEAR, drift=(1.0, 1.0))

        assert evaluate_F(spec, (0.0, 0.0), (1.0, 2.0), SymMat2(1.0, 0.0, 1.0)) == pytest.approx(5.0)

    def test_singular_point(self):
        """Test that p = 0 without regularization is rejected."""
        spec = OperatorSpec(alpha=-0.5)

        with pytest.raises(SingularEvaluationError) as exc_info:
            evaluate_F(spec, (0.0, 0.0), (0.0, 0.0), SymMat2(1.0, 0.0, 1.0))

        assert "singular" in str(exc_info.value)

    def test_regularized_point(self):
        """Test that δ > 0 makes p = 0 admissible."""
        spec = OperatorSpec(kind=OperatorKind.LINEAR, alpha=-0.5)
        value = evaluate_F(spec, (0.0, 0.0), (0.0, 0.0), SymMat2(1.0, 0.0, 1.0), delta=0.25)

        assert value == pytest.approx(2.0 * 0.25**-0.5)

    def test_negative_delta(self):
        """Test that δ < 0 is rejected."""
        with pytest.raises(SingularEvaluationError):
            evaluate_F(OperatorSpec(), (0.0, 0.0), (1.0, 0.0), SymMat2(1.0), delta=-1.0)

    def test_qtrace(self):
        """Test the q-trace operator along the gradient direction."""
        spec = OperatorSpec(kind=OperatorKind.QTRACE, q=2.0)
        value = evaluate_F(spec, (0.0, 0.0), (1.0, 0.0), SymMat2(1.0, 0.0, 3.0))

        # trace 4 plus q times M11
        assert value == pytest.approx(6.0)


class TestDiscreteOperator:
    """Test the monotone finite-difference discretization."""

    def test_laplacian_exact_on_quadratic(self, laplacian, interval_grid):
        """Test that x(1 - x) has discrete Laplacian -2."""
        u = interval_grid.field(lambda X, Y: X * (1.0 - X))
        r = discretize_residual(laplacian, interval_grid, u, delta=0.0)

        np.testing.assert_allclose(r.values[interval_grid.interior], -2.0, atol=1e-9)
        assert np.all(r.values[interval_grid.boundary] == 0.0)

    def test_pucci_on_square(self, pucci_plus, square_grid):
        """Test M⁺ of x² - y² equals 2A - 2a at every interior node."""
        u = square_grid.field(lambda X, Y: X * X - Y * Y)
        r = discretize_residual(pucci_plus, square_grid, u, delta=0.0)

        np.testing.assert_allclose(r.values[square_grid.interior], 2.0, atol=1e-8)

    def test_pucci_minus_on_square(self, square_grid):
        """Test M⁻ of x² - y² equals 2a - 2A."""
        spec = OperatorSpec(kind=OperatorKind.PUCCI_MINUS, a=1.0, A=2.0)
        u = square_grid.field(lambda X, Y: X * X - Y * Y)
        r = discretize_residual(spec, square_grid, u, delta=0.0)

        np.testing.assert_allclose(r.values[square_grid.interior], -2.0, atol=1e-8)

    def test_convex_quadratic_all_frames(self, pucci_plus, square_grid):
        """Test every stencil order gives M⁺(2I) = 4A."""
        u = square_grid.field(lambda X, Y: X * X + Y * Y)
        for order in (1, 2, 3):
            op = DiscreteOperator(pucci_plus, square_grid, order)
            values = op.residual(op.flatten(u), 0.0)
            np.testing.assert_allclose(values, 8.0, atol=1e-7)

    def test_weight(self, interval_grid):
        """Test the regularized gradient weight on a linear function."""
        spec = OperatorSpec(kind=OperatorKind.LINEAR, alpha=-0.5)
        op = DiscreteOperator(spec, interval_grid)
        u = op.flatten(interval_grid.field(lambda X, Y: X))

        np.testing.assert_allclose(op.weight(u, 0.5), (1.0 + 0.25) ** -0.25)

    def test_residual_needs_delta(self, interval_grid):
        """Test that δ = 0 with α < 0 is rejected."""
        spec = OperatorSpec(alpha=-0.5)

        with pytest.raises(SingularEvaluationError):
            discretize_residual(spec, interval_grid, interval_grid.zeros(), delta=0.0)

    def test_solve_laplacian(self, laplacian, interval_grid):
        """Test v'' = -1 gives x(1 - x)/2 and c_lin = 1/8."""
        op = DiscreteOperator(laplacian, interval_grid)
        v = op.solve(-np.ones(op.size))
        x = interval_grid.x[1:-1]

        np.testing.assert_allclose(v, x * (1.0 - x) / 2.0, atol=1e-12)
        assert op.linear_constant == pytest.approx(0.125)

    def test_policy_iteration(self, pucci_plus, interval_grid):
        """Test that Howard iteration picks the concave weight a."""
        op = DiscreteOperator(pucci_plus, interval_grid)
        v = op.solve(-np.ones(op.size))

        assert np.max(v) == pytest.approx(0.125)

    def test_inner_solve_failure(self, pucci_plus, square_grid):
        """Test that an exhausted policy budget with a loose start is reported."""
        op = DiscreteOperator(pucci_plus, square_grid)
        rhs = np.where(np.arange(op.size) % 2 == 0, 1.0, -1.0)

        with pytest.raises(InnerSolveError) as exc_info:
            op.solve(rhs, guess=np.zeros(op.size), max_sweeps=1, tol=1e-14)

        assert exc_info.value.residual is not None

    @pytest.mark.parametrize(
        "spec",
        [
            OperatorSpec(kind=OperatorKind.PUCCI_PLUS, a=1.0, A=2.0),
            OperatorSpec(kind=OperatorKind.PUCCI_MINUS, a=1.0, A=2.0, alpha=-0.5),
            OperatorSpec(kind=OperatorKind.PUCCI_PLUS, a=1.0, A=2.0, alpha=-0.5, drift=(0.5, -0.3)),
            OperatorSpec(kind=OperatorKind.QTRACE, q=1.0),
            OperatorSpec(kind=OperatorKind.QTRACE, q=1.0, alpha=-0.5),
            OperatorSpec(kind=OperatorKind.LINEAR, alpha=-0.5, drift=(-1.0, 0.4)),
        ],
        ids=["pucci_plus", "pucci_minus", "pucci_drift", "qtrace", "qtrace_singular", "linear"],
    )
    def test_monotone_in_neighbours(self, spec):
        """Test raising one node never lowers the frozen residual at any other node."""
        g = build_domain(DomainSpec(shape=Shape.RECTANGLE), 12)
        op = DiscreteOperator(spec, g)
        rng = np.random.default_rng(0)
        delta = 0.1

        for _ in range(200):
            u = op.embed(rng.normal(size=op.size))
            before = op.residual(u, delta, frozen=u)
            row = int(rng.integers(op.size))
            bumped = u.copy()
            bumped[op.index[row]] += 0.5
            after = op.residual(bumped, delta, frozen=u)

            change = np.delete(after - before, row)
            assert np.all(change >= -1e-9 * max(1.0, float(np.max(np.abs(before)))))

    def test_frozen_defaults_to_state(self):
        """Test the frozen residual at ū = u equals the plain residual."""
        spec = OperatorSpec(kind=OperatorKind.QTRACE, q=1.0, alpha=-0.5)
        g = build_domain(DomainSpec(shape=Shape.RECTANGLE), 12)
        op = DiscreteOperator(spec, g)
        u = op.embed(np.random.default_rng(3).normal(size=op.size))

        np.testing.assert_array_equal(op.residual(u, 0.1, frozen=u), op.residual(u, 0.1))

    def test_gradient_one_sided_next_to_boundary(self, disk_grid):
        """Test boundary values do not enter the gradient at boundary-adjacent nodes."""
        op = DiscreteOperator(OperatorSpec(alpha=-0.5), disk_grid)
        X, _ = disk_grid.coordinates()
        wall = disk_grid.boundary
        u = np.where(disk_grid.interior, X, np.where(wall, 100.0, 0.0)).ravel()
        I, J = np.unravel_index(op.index, disk_grid.shape)
        plus_wall, minus_wall = wall[I + 1, J], wall[I - 1, J]
        one_sided = plus_wall ^ minus_wall

        gx, _ = op.gradient(u)

        assert one_sided.any()
        np.testing.assert_allclose(gx[one_sided], 1.0, atol=1e-12)
        np.testing.assert_allclose(gx[~(plus_wall | minus_wall)], 1.0, atol=1e-12)

    def test_qtrace_matches_q_laplacian(self, square_grid):
        """Test |∇u|^q times the q-trace residual equals Δ_{q+2}u away from the edges."""
        q = 1.5
        spec = OperatorSpec(kind=OperatorKind.QTRACE, q=q)
        u = square_grid.field(lambda X, Y: X * X + 3.0 * Y * Y + X * Y + X)
        op = DiscreteOperator(spec, square_grid)

        trace = op.to_field(op.residual(op.flatten(u), 0.0)).values
        expected = q_laplacian_residual(square_grid, u, q).values
        X, Y = square_grid.coordinates()
        gradient = np.hypot(2.0 * X + Y + 1.0, 6.0 * Y + X)
        inner = np.zeros(square_grid.shape, dtype=bool)
        inner[2:-2, 2:-2] = True

        np.testing.assert_allclose(
            (gradient**q * trace)[inner], expected[inner], rtol=1e-9, atol=1e-9
        )

    def test_stencil_frames(self):
        """Test the direction sets per order."""
        assert len(stencil_frames(1, 1)) == 1
        assert len(stencil_frames(1, 2)) < len(stencil_frames(2, 2)) < len(stencil_frames(3, 2))

        with pytest.raises(InvalidOperatorError):
            stencil_frames(4, 2)


class TestQLaplacian:
    """Test the central-difference q-Laplacian."""

    def test_one_dimensional(self, interval_grid):
        """Test Δ_3 x² = |2x| (1 + 1) 2 = 8x."""
        u = interval_grid.field(lambda X, Y: X * X)
        r = q_laplacian_residual(interval_grid, u, 1.0)
        x = interval_grid.x[1:-1]

        np.testing.assert_allclose(r.values[1:-1, 0], 8.0 * x, atol=1e-9)

    def test_q_zero_is_laplacian(self, square_grid):
        """Test that q = 0 gives the five-point Laplacian."""
        u = square_grid.field(lambda X, Y: X * X + 3.0 * Y * Y)
        r = q_laplacian_residual(square_grid, u, 0.0)

        np.testing.assert_allclose(r.values[square_grid.interior], 8.0, atol=1e-8)


class TestHolderQuotient:
    """Test the drift regularity diagnostic."""

    def test_lipschitz_drift(self, interval_grid):
        """Test a linear drift has quotient 1 at both spacings."""
        spec = OperatorSpec(drift=lambda X, Y: (X, 0.0 * Y))
        fine, coarse = holder_quotient(spec, interval_grid)

        assert fine == pytest.approx(1.0)
        assert coarse == pytest.approx(1.0)

    def test_rough_drift_warns(self, caplog):
        """Test a square-root drift triggers the growth warning."""
        g = build_domain(DomainSpec(shape=Shape.INTERVAL), 64)
        spec = OperatorSpec(drift=lambda X, Y: (np.sqrt(np.abs(X - 0.5)), 0.0 * Y))

        holder_quotient(spec, g)

        assert "grows under refinement" in caplog.text
