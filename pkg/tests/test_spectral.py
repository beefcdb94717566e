import numpy as np
import pytest

from nichewave import (
    GrowthProfile,
    IrreducibilityError,
    Kernel,
    NonConvergenceError,
    build_grid,
    bump_growth,
    constant_growth,
    dense_lambda_p_oracle,
    kernel_moment,
    lambda_p_extrapolate_R,
    local_lambda1_fd,
    principal_eigenvalue,
    rayleigh_lambda_v,
    rescale_kernel,
    scaling_invariance_check,
)
from nichewave.operators import build_operator


def random_growth(rng, radius):
    radii = np.arange(0.0, radius + 1.0, 0.5)
    values = rng.uniform(-1.0, 2.0, size=radii.size)
    return GrowthProfile("tabulated", params={"r": radii.tolist(), "values": values.tolist()})


class TestPrincipalEigenvalue:
    def test_torus_constant_is_exact(self, torus_op):
        est = principal_eigenvalue(torus_op, tol=1e-10)
        assert est.value == pytest.approx(-1.5, abs=1e-12)
        assert est.width <= 1e-10
        assert np.all(est.eigenvector > 0)

    def test_dense_oracle_small_random(self, tent, rng):
        for _ in range(5):
            grid = build_grid(1, 2.5, 0.5, "ball-truncated")
            growth = random_growth(rng, 2.5)
            op = build_operator(grid, rescale_kernel(tent, 1.0, 0.0), growth)
            est = principal_eigenvalue(op, tol=1e-10)
            oracle, gap = dense_lambda_p_oracle(op)
            assert est.value == pytest.approx(oracle, abs=1e-10)
            assert est.lower - 1e-13 <= oracle <= est.upper + 1e-13

    def test_perron_window(self, ball_op):
        est = principal_eigenvalue(ball_op, tol=1e-10)
        lo, hi = ball_op.perron_window()
        assert lo - 1e-12 <= est.value <= hi + 1e-12

    def test_residual_contract(self, ball_op):
        est = principal_eigenvalue(ball_op, tol=1e-10)
        assert est.residual <= 1e-8 * (1.0 + abs(est.value))

    def test_irreducible_check(self, tent):
        grid = build_grid(1, 4.0, 0.5, "ball-truncated")
        op = build_operator(grid, rescale_kernel(tent, 0.5, 0.0))  # support = h: taps vanish
        with pytest.raises(IrreducibilityError):
            principal_eigenvalue(op)

    def test_nonconvergence_carries_bracket(self, ball_op):
        with pytest.raises(NonConvergenceError) as err:
            principal_eigenvalue(ball_op, tol=1e-30, maxiter=3)
        assert err.value.bracket is not None

    def test_best_effort_returns_valid_bracket(self, ball_op):
        est = principal_eigenvalue(ball_op, tol=1e-30, maxiter=3, best_effort=True)
        oracle, _ = dense_lambda_p_oracle(ball_op)
        assert est.lower <= oracle <= est.upper

    def test_eigenfunction_flag_reported(self, torus_op):
        est = principal_eigenvalue(torus_op, tol=1e-10)
        # lambda_p = -c < rate - sup a = 1 - c: strict inequality certified
        assert est.eigenfunction_certified is True


class TestLambdaV:
    def test_equals_lambda_p(self, ball_op):
        p = principal_eigenvalue(ball_op, tol=1e-10)
        v = rayleigh_lambda_v(ball_op, tol=1e-10)
        assert abs(p.value - v.value) <= 1e-8

    def test_zero_growth_torus(self, tent):
        grid = build_grid(1, 4.0, 0.125, "torus")
        op = build_operator(grid, rescale_kernel(tent, 1.0, 0.0), constant_growth(0.0))
        v = rayleigh_lambda_v(op, tol=1e-10)
        assert v.value == pytest.approx(0.0, abs=1e-10)
        phi = v.eigenvector
        assert np.max(phi) - np.min(phi) < 1e-6  # minimizer is the constant

    def test_dense_oracle(self, tent, rng):
        grid = build_grid(1, 3.0, 0.5, "ball-truncated")
        growth = random_growth(rng, 3.0)
        op = build_operator(grid, rescale_kernel(tent, 1.0, 0.0), growth)
        v = rayleigh_lambda_v(op, tol=1e-10)
        oracle, _ = dense_lambda_p_oracle(op)
        assert v.value == pytest.approx(oracle, abs=1e-9)


class TestExtrapolation:
    def test_monotone_nonincreasing(self, tent, bump):
        res = lambda_p_extrapolate_R(tent, bump, [4, 6, 8, 10], 0.1, tol=1e-12)
        vals = res.values
        for a, b in zip(vals, vals[1:]):
            assert b <= a + 1e-10

    def test_constant_once_domain_covers_support(self, tent, bump):
        # compact kernel + compact positive core: sequence freezes once R is big
        res = lambda_p_extrapolate_R(tent, bump, [6, 8, 10], 0.1, tol=1e-15)
        big = lambda_p_extrapolate_R(tent, bump, [20], 0.1, tol=1e-15)
        assert res.values[-1] == pytest.approx(big.values[-1], abs=1e-6)

    def test_lipschitz_in_a(self, tent, bump, rng):
        grid = build_grid(1, 6.0, 0.1, "ball-truncated")
        op = build_operator(grid, rescale_kernel(tent, 1.0, 0.0), bump)
        base = principal_eigenvalue(op, tol=1e-11)
        for _ in range(10):
            delta = rng.uniform(-0.3, 0.3)
            op2 = build_operator(grid, rescale_kernel(tent, 1.0, 0.0), bump,
                                 a_values=op.a_values + delta)
            est2 = principal_eigenvalue(op2, tol=1e-11)
            assert abs(est2.value - base.value) <= abs(delta) + 1e-9

    def test_order_reversal(self, tent, bump, rng):
        grid = build_grid(1, 6.0, 0.1, "ball-truncated")
        op = build_operator(grid, rescale_kernel(tent, 1.0, 0.0), bump)
        base = principal_eigenvalue(op, tol=1e-11)
        lift = rng.uniform(0.0, 0.5, size=grid.size)
        op2 = build_operator(grid, rescale_kernel(tent, 1.0, 0.0), bump,
                             a_values=op.a_values + lift)
        est2 = principal_eigenvalue(op2, tol=1e-11)
        assert est2.value <= base.value + 1e-9


class TestScalingInvariance:
    @pytest.mark.parametrize("eps", [1.0, 2.0, 0.5])
    def test_mapped_grid_exactness(self, tent, bump, eps):
        chk = scaling_invariance_check(tent, bump, eps, 6.0, 0.05)
        assert abs(chk.difference) <= max(1e-6, chk.combined_width)


class TestLocalFD:
    def test_closed_form_constant(self):
        sigma, R, c = 1.0 / 12.0, 2.0, 1.0
        est = local_lambda1_fd(lambda x: np.full_like(x, c), sigma, R, 0.005)
        exact = sigma * (np.pi / (2 * R)) ** 2 - c
        assert est.value == pytest.approx(exact, abs=5e-6)

    def test_second_order_convergence(self):
        sigma, R, c = 0.25, 2.0, 0.5
        exact = sigma * (np.pi / (2 * R)) ** 2 - c
        errs = [abs(local_lambda1_fd(lambda x: np.full_like(x, c), sigma, R, h).value - exact)
                for h in (0.08, 0.04, 0.02)]
        assert errs[1] <= 0.30 * errs[0]
        assert errs[2] <= 0.30 * errs[1]

    def test_tent_diffusion_coefficient(self, tent):
        assert kernel_moment(tent, 2.0) / 2.0 == pytest.approx(1.0 / 12.0, abs=1e-12)

    def test_ground_state_positive(self, bump):
        est = local_lambda1_fd(bump.a, 1.0 / 12.0, 4.0, 0.01)
        assert np.all(est.eigenvector > -1e-12)
        assert est.lower <= est.value <= est.upper
