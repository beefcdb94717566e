import numpy as np
import pytest

from nichewave import (
    GrowthProfile,
    Kernel,
    KernelHypothesisError,
    build_grid,
    bump_growth,
    constant_growth,
    dense_lambda_p_oracle,
    rescale_kernel,
)
from nichewave.experiments import (
    GridPolicy,
    apriori_estimate_audit,
    asymptotic_limit_check,
    build_invasion_matrix,
    energy_slope_audit,
    epsilon_sweep,
    fat_tail_verdict,
    find_eps_star,
    invasion_fitness,
    local_kpp_solve_fd,
)
from nichewave.operators import build_operator

POLICY = GridPolicy(base_radius=4.0, base_spacing=0.05)


class TestSweep:
    def test_large_eps_m1_errors_decrease(self, tent, bump):
        res = epsilon_sweep(tent, bump, 1.0, [4, 8], POLICY, direction="large",
                            solver_tol=1e-9, spectral_tol=1e-9)
        assert len(res.entries) == 2
        e4, e8 = res.entries
        assert e8.errors["u_l2_err_a+"] < e4.errors["u_l2_err_a+"]
        assert e8.errors["lam_err_-sup_a"] < e4.errors["lam_err_-sup_a"]
        ok, violations, straddles = res.coherence(1e-9)
        assert ok and straddles == 0

    def test_under_resolved_entries_skipped(self, tent, bump):
        coarse = GridPolicy(base_radius=4.5, base_spacing=0.75)
        res = epsilon_sweep(tent, bump, 0.0, [0.25, 4.0], coarse)
        assert 0.25 in res.skipped
        assert [e.eps for e in res.entries] == [4.0]

    def test_parallel_matches_serial(self, tent, bump):
        serial = epsilon_sweep(tent, bump, 1.0, [2, 4], POLICY, solver_tol=1e-9)
        threaded = epsilon_sweep(tent, bump, 1.0, [2, 4], POLICY, solver_tol=1e-9, workers=2)
        for a, b in zip(serial.entries, threaded.entries):
            assert a.lam.value == b.lam.value
            assert a.u_sup == b.u_sup


class TestEpsStar:
    def test_infinite_when_growth_exceeds_one(self, tent, bump):
        res = find_eps_star(tent, bump, 0.5, 64.0, POLICY)
        assert res.kind == "infinite"

    def test_finite_threshold_against_dense_scan(self, tent):
        growth = bump_growth(0.8, 1.0, -1.0)
        policy = GridPolicy(base_radius=4.0, base_spacing=0.1)
        res = find_eps_star(tent, growth, 4.0, 10.0, policy, tol=1e-2)
        assert res.kind == "finite"
        # dense scan oracle at the same discretization
        from nichewave.spectral import principal_eigenvalue

        def lam(eps):
            sk = rescale_kernel(tent, eps, 0.0, 1.0)
            grid = policy.grid_for(sk)
            op = build_operator(grid, sk, growth)
            return principal_eigenvalue(op, tol=1e-10, best_effort=True).value

        eps_scan = np.linspace(6.0, 6.8, 81)  # 1e-2 resolution around the root
        signs = np.array([lam(e) < 0 for e in eps_scan])
        flips = np.nonzero(signs[:-1] & ~signs[1:])[0]
        assert flips.size == 1
        lo, hi = eps_scan[flips[0]], eps_scan[flips[0] + 1]
        assert lo - 1e-2 <= res.value <= hi + 1e-2

    def test_thin_spike_warning(self, tent):
        growth = GrowthProfile("tabulated", params={
            "r": [0.0, 0.02, 1.0, 2.0], "values": [1.5, -0.5, -0.8, -1.0]})
        with pytest.warns(UserWarning, match="spike"):
            find_eps_star(tent, growth, 0.5, 2.0, POLICY)


class TestLocalKPP:
    def test_zero_when_lambda1_nonnegative(self):
        growth = bump_growth(0.1, 1.0, -1.0)  # lambda_1 ~ +0.19
        res = local_kpp_solve_fd(growth, 1.0 / 12.0, 4.0, 0.02)
        assert res.lambda1.value > 0
        assert np.all(res.values == 0.0)

    def test_constant_growth_barrier(self):
        growth = constant_growth(1.0)
        res = local_kpp_solve_fd(growth, 1.0 / 12.0, 2.0, 0.01, tol=1e-8)
        assert res.lambda1.value < 0
        assert 0.0 < np.max(res.values) < 1.0  # strictly below the barrier c

    def test_residual_oracle(self, bump):
        res = local_kpp_solve_fd(bump, 1.0 / 12.0, 4.0, 0.01, tol=1e-8)
        sigma, h = 1.0 / 12.0, 0.01
        v = res.values
        lap = np.zeros_like(v)
        lap[1:-1] = v[2:] - 2 * v[1:-1] + v[:-2]
        lap[0] = v[1] - 2 * v[0]
        lap[-1] = v[-2] - 2 * v[-1]
        fresh = sigma * lap / h**2 + v * (bump.a(res.nodes) - v)
        assert np.max(np.abs(fresh)) <= 1e-8


class TestLimitCheck:
    def test_m2_small_eps_tracks_local_problem(self, tent, bump):
        chk = asymptotic_limit_check(tent, bump, 2.0, "small", [0.4, 0.2, 0.1], POLICY,
                                     solver_tol=1e-8, spectral_tol=1e-9)
        assert chk.lambda_monotone and chk.u_monotone
        assert chk.lambda_target_name == "lam_err_lambda1_fd"

    def test_m0_large_eps(self, tent, bump):
        policy = GridPolicy(base_radius=4.0, base_spacing=0.1)
        chk = asymptotic_limit_check(tent, bump, 0.0, "large", [8, 16, 32], policy,
                                     solver_tol=1e-9, spectral_tol=1e-9)
        assert chk.lambda_monotone
        assert chk.lambda_target_name == "lam_err_1-sup_a"
        # Lemma 6.2 / remark envelope at the largest range factor
        final_sup_err = chk.sweep.entries[-1].errors["u_sup_err_(a-1)+"]
        assert final_sup_err <= 1.0 / 32.0**0.25 + 1e-6


class TestAudit:
    def test_items_pass_on_converged_solve(self, ball_op):
        from nichewave.stationary import solve_stationary_ball

        sol = solve_stationary_ball(ball_op, tol=1e-10)
        audit = apriori_estimate_audit(ball_op, sol.values, sol.lambda_estimate)
        assert audit.all_passed, [(i.name, i.detail) for i in audit.items if not i.passed]

    def test_energy_slope_near_m(self, tent, bump):
        fit = energy_slope_audit(tent, bump, 1.0, [1, 2, 4, 8], POLICY, solver_tol=1e-9)
        assert abs(fit.slope - 1.0) <= 0.2
        assert all(a.all_passed for a in fit.audits)


class TestInvasion:
    def test_resident_is_neutral_against_itself(self, tent, bump):
        entry = invasion_fitness(tent, bump, 1.0, 1.0, 1.0, POLICY, solver_tol=1e-10)
        assert abs(entry.lam.value) <= entry.lam.width + 1e-6

    def test_large_range_mutant_invades(self, tent, bump):
        entry = invasion_fitness(tent, bump, 1.0, 2.0, 16.0, POLICY, solver_tol=1e-9)
        assert entry.verdict == "invades"
        assert entry.lam.upper < 0

    def test_matrix_against_dense_oracle(self, tent):
        growth = bump_growth(1.5, 1.0, -1.0)
        policy = GridPolicy(base_radius=3.0, base_spacing=0.25)
        mat = build_invasion_matrix(tent, growth, 1.0, [1.0, 2.0], [1.0, 2.0], policy,
                                    solver_tol=1e-10)
        from nichewave.stationary import solve_stationary_ball

        for i, e1 in enumerate(mat.eps_residents):
            grid = build_grid(1, 3.0 + 2.0, 0.25, "ball-truncated")
            res_op = build_operator(grid, rescale_kernel(tent, e1, 1.0), growth)
            res = solve_stationary_ball(res_op, tol=1e-10)
            for j, e2 in enumerate(mat.eps_mutants):
                mut_op = build_operator(grid, rescale_kernel(tent, e2, 1.0), growth=None,
                                        a_values=grid.sample(growth.a) - res.values)
                oracle, _ = dense_lambda_p_oracle(mut_op)
                got = mat.entries[i][j].lam
                assert got.value == pytest.approx(oracle, abs=1e-8)


class TestFatTail:
    def test_persistence_with_positive_core(self):
        kernel = Kernel("algebraic-tail", params={"power": 5.0})
        res = fat_tail_verdict(kernel, bump_growth(1.0, 1.0, -1.0), [4, 8], 0.05)
        assert res.verdict == "persistence"
        assert res.inflated_upper < 0

    def test_extinction_with_uniformly_negative_growth(self):
        kernel = Kernel("algebraic-tail", params={"power": 5.0})
        res = fat_tail_verdict(kernel, constant_growth(-0.1), [4, 8], 0.05)
        assert res.verdict == "extinction"

    def test_indeterminate_band_is_surfaced(self):
        kernel = Kernel("algebraic-tail", params={"power": 5.0})
        res = fat_tail_verdict(kernel, bump_growth(0.2, 4.0, -1.0), [4, 8], 0.05)
        assert res.verdict == "indeterminate"

    def test_h5_violation_rejected(self):
        kernel = Kernel("algebraic-tail", params={"power": 2.5})
        with pytest.raises(KernelHypothesisError):
            fat_tail_verdict(kernel, constant_growth(-0.1), [4], 0.1)

    def test_compact_kernel_rejected(self, tent):
        from nichewave import ConfigError

        with pytest.raises(ConfigError):
            fat_tail_verdict(tent, constant_growth(-0.1), [4], 0.1)
