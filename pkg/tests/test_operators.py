import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nichewave import (
    Kernel,
    UnderResolvedKernelError,
    build_grid,
    bump_growth,
    constant_growth,
    rescale_kernel,
    weighted_symmetrize,
)
from nichewave.operators import build_operator, sample_taps


class TestConvolution:
    def test_constant_exact_on_torus(self, torus_op):
        ones = np.ones(torus_op.size)
        for path in ("direct", "fast"):
            assert np.max(np.abs(torus_op.convolve(ones, path) - 1.0)) < 1e-14

    def test_even_input_even_output(self, ball_op):
        x = ball_op.grid.points[:, 0]
        u = np.exp(-(x**2)) * (1 + x**2)
        out = ball_op.convolve(u)
        assert np.allclose(out, out[::-1], atol=1e-13)

    @pytest.mark.parametrize("topology", ["ball-truncated", "torus"])
    def test_direct_is_oracle_for_fast(self, tent, topology, rng):
        grid = build_grid(1, 4.0, 0.125, topology)
        op = build_operator(grid, rescale_kernel(tent, 1.0, 0.0), constant_growth(0.0))
        for _ in range(5):
            u = rng.random(grid.size)
            direct = op.convolve(u, "direct")
            fast = op.convolve(u, "fast")
            assert np.max(np.abs(direct - fast)) <= 1e-10 * max(1.0, np.max(np.abs(direct)))

    def test_2d_direct_vs_fast(self, tent, rng):
        k2 = Kernel("tent", dimension=2)
        grid = build_grid(2, 2.0, 0.25, "ball-truncated")
        op = build_operator(grid, rescale_kernel(k2, 1.0, 0.0))
        u = rng.random(grid.size)
        assert np.allclose(op.convolve(u, "direct"), op.convolve(u, "fast"), atol=1e-12)

    def test_under_resolved_kernel_rejected(self, tent):
        grid = build_grid(1, 4.0, 0.125, "ball-truncated")
        with pytest.raises(UnderResolvedKernelError):
            sample_taps(rescale_kernel(tent, 0.05, 0.0), grid)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_convolution_order_preserving(self, seed):
        rng = np.random.default_rng(seed)
        grid = build_grid(1, 3.0, 0.125, "ball-truncated")
        op = build_operator(grid, rescale_kernel(Kernel("tent"), 1.0, 0.0))
        u = rng.random(grid.size)
        v = u + rng.random(grid.size)
        assert np.all(op.convolve(v) - op.convolve(u) >= -1e-14)


class TestApply:
    def test_constant_in_kernel_of_torus_operator(self, torus_op):
        u = np.full(torus_op.size, 3.7)
        out = torus_op.apply(u, include_growth=False)
        assert np.max(np.abs(out)) < 1e-12

    def test_boundary_mass_deficit(self, ball_op):
        ones = np.ones(ball_op.size)
        out = ball_op.apply(ones, include_growth=False)
        assert np.all(out <= 1e-14)
        assert out[0] < -1e-3 and out[-1] < -1e-3  # strict deficit near the edge

    def test_matrix_is_oracle_for_matrix_free(self, tent):
        growth = bump_growth(1.0, 1.0, -1.0)
        grid = build_grid(1, 4.0, 0.125, "ball-truncated")
        op = build_operator(grid, rescale_kernel(tent, 1.0, 0.0), growth)
        u = (np.abs(grid.points[:, 0]) < 1.0).astype(float)
        assert np.allclose(op.matrix() @ u, op.apply(u), atol=1e-12)

    def test_mass_deficit_sign_everywhere(self, ball_op):
        assert np.all(ball_op.kernel_mass() <= 1.0 + 1e-12)


class TestAssembly:
    def test_torus_row_sums_vanish_without_growth(self, tent):
        grid = build_grid(1, 1.5, 0.5, "torus")
        op = build_operator(grid, rescale_kernel(tent, 1.0, 0.0), constant_growth(0.0))
        A = op.matrix()
        assert np.allclose(A.sum(axis=1), 0.0, atol=1e-14)

    def test_weighted_symmetrization(self, ball_op):
        A = ball_op.matrix()
        S = weighted_symmetrize(A, ball_op.grid.weights)
        assert np.max(np.abs(S - S.T)) < 1e-12

    def test_offdiagonal_nonnegative(self, ball_op):
        A = ball_op.matrix().copy()
        np.fill_diagonal(A, 0.0)
        assert np.all(A >= 0.0)

    def test_kernel_part_weighted_symmetry(self, ball_op):
        C = ball_op.conv_matrix()
        w = ball_op.grid.weights
        assert np.max(np.abs(C / w[None, :] - (C / w[None, :]).T)) < 1e-12

    def test_permutation_invariant_spectrum(self, tent, rng):
        growth = bump_growth(1.5, 1.0, -0.5)
        grid = build_grid(1, 3.0, 0.25, "ball-truncated")
        op = build_operator(grid, rescale_kernel(tent, 1.0, 0.0), growth)
        A = op.matrix()
        perm = rng.permutation(grid.size)
        Ap = A[np.ix_(perm, perm)]
        assert np.allclose(np.linalg.eigvalsh(A), np.linalg.eigvalsh(Ap), atol=1e-10)


class TestIdentities:
    def test_symmetrization_identity_torus(self, tent, rng):
        # sum_x sum_z rho(z) [u(x+z) - u(x)] phi(x)
        #   = 1/2 sum_x sum_z rho(z) u(x) [phi(x+z) - 2 phi(x) + phi(x-z)]
        grid = build_grid(1, 4.0, 0.125, "torus")
        op = build_operator(grid, rescale_kernel(tent, 1.0, 0.0))
        u = rng.random(grid.size)
        phi = rng.random(grid.size)
        q = op.reach
        lhs = rhs = 0.0
        for d in range(-q, q + 1):
            rho = op.taps[d + q]
            lhs += rho * np.sum((np.roll(u, -d) - u) * phi)
            rhs += 0.5 * rho * np.sum(u * (np.roll(phi, -d) - 2 * phi + np.roll(phi, d)))
        assert lhs == pytest.approx(rhs, abs=1e-10 * max(1.0, abs(lhs)))

    def test_quadratic_form_identity(self, ball_op, rng):
        # <-(J*u - u), u>_w = E(u) + sum w (1 - k) u^2
        u = rng.random(ball_op.size)
        w = ball_op.grid.weights
        lhs = ball_op.quadratic_form(u)
        rhs = ball_op.energy(u) + np.sum(w * (1.0 - ball_op.kernel_mass()) * u * u)
        assert lhs == pytest.approx(rhs, abs=1e-10 * max(1.0, abs(lhs)))

    def test_energy_matches_double_sum(self, tent, rng):
        grid = build_grid(1, 2.0, 0.25, "ball-truncated")
        op = build_operator(grid, rescale_kernel(tent, 1.0, 0.0))
        u = rng.random(grid.size)
        w = grid.weights
        C = op.conv_matrix() / w[None, :]  # raw kernel values J(x_i - x_j)
        diff = u[:, None] - u[None, :]
        brute = 0.5 * np.sum(w[:, None] * w[None, :] * C * diff**2)
        assert op.energy(u) == pytest.approx(brute, rel=1e-12)
