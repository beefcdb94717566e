"""Stationary states of rate (J_eps * u - u) + f(x, u) = 0 by monotone iteration.

The scheme is ball exhaustion: on each ball the problem is solved by a
damped fixed point squeezed between a verified discrete sub-solution
theta * phi_p and a verified discrete super-solution (exponential-tail
profile matched to the hostile exterior, or a constant barrier), then the
ball is grown until the solution stops changing. Every verdict is tied to
a certified lambda_p bracket; brackets that straddle zero refuse a verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import (
    ConfigError,
    MonotonicityViolationError,
    NonConvergenceError,
    SupersolutionConstructionError,
    UniquenessViolationError,
)
from .grids import build_grid
from .operators import DiscreteOperator, build_operator
from .spectral import SpectralEstimate, lambda_p_extrapolate_R, principal_eigenvalue

_SUB_SLACK = 1e-11
_RATIO_FLOOR = 1e-300


@dataclass
class Supersolution:
    values: np.ndarray
    kind: str            # "exponential" or "constant"
    margin: float        # max of the stationary residual on the grid (<= tol)
    alpha: float | None = None
    amplitude: float | None = None
    plateau: float | None = None
    match_radius: float | None = None


def _exp_moment(kernel, alpha: float) -> float:
    """integral of J_eps(z) e^{alpha |z|} dz for a compactly supported kernel."""
    base = kernel.base
    eps = kernel.epsilon
    N = base.dimension
    omega = 2.0 if N == 1 else 2.0 * math.pi
    val, _ = quad(
        lambda r: base.profile(r) * math.exp(alpha * eps * r) * r ** (N - 1),
        0.0,
        base.support_radius,
        limit=200,
    )
    return omega * val


def decay_margin(kernel, alpha: float, nu: float) -> float:
    """h(alpha) = rate (int J_eps e^{alpha|z|} - 1) - nu/2; super-solution
    exterior inequality needs h(alpha) < 0. Increasing in alpha, h(0) = -nu/2."""
    return kernel.rate * (_exp_moment(kernel, alpha) - 1.0) - 0.5 * nu


def build_supersolution(op: DiscreteOperator, tol: float = 1e-8, max_backtracks: int = 60) -> Supersolution:
    """Uniform discrete super-solution: 2M on the core, C e^{-alpha|x|} outside.

    Falls back to a constant barrier on the torus, for non-hostile growth,
    or for kernels without compact support. The returned profile satisfies
    rate (J_eps * ubar - ubar) + f(x, ubar) <= tol at every grid point.
    """
    growth = op.growth
    if growth is None:
        raise ConfigError("super-solution construction needs a growth profile")
    pts = op.points_arg
    sat = np.asarray(growth.saturation(pts), dtype=float)
    sup_s = float(np.max(sat))

    use_constant = (
        op.grid.topology == "torus"
        or not growth.hostile
        or not op.kernel.compactly_supported
        or sup_s <= 0.0
    )
    if use_constant:
        level = sup_s if sup_s > 0 else 1.0
        values = np.full(op.size, level)
        margin = float(np.max(op.rhs(values)))
        if margin > tol:
            raise SupersolutionConstructionError(
                f"constant barrier {level} fails by {margin:.3e}"
            )
        return Supersolution(values=values, kind="constant", margin=margin)

    nu = growth.nu
    r0 = growth.halfnu_radius
    norms = op.grid.norms()
    core = norms <= 2.0 * r0
    m_core = float(np.max(sat[core])) if np.any(core) else sup_s
    m_core = max(m_core, sup_s * 0.0)
    if m_core <= 0:
        # niche is entirely hostile: any positive constant is a barrier
        values = np.ones(op.size)
        margin = float(np.max(op.rhs(values)))
        if margin > tol:
            raise SupersolutionConstructionError("unit barrier fails on hostile profile")
        return Supersolution(values=values, kind="constant", margin=margin)

    alpha = 1.0
    for _ in range(max_backtracks):
        if decay_margin(op.kernel, alpha, nu) < 0:
            break
        alpha *= 0.5
    else:
        raise SupersolutionConstructionError("no decay exponent with h(alpha) < 0")

    for _ in range(max_backtracks):
        plateau = 2.0 * m_core
        amplitude = plateau * math.exp(2.0 * alpha * r0)
        values = np.minimum(amplitude * np.exp(-alpha * norms), plateau)
        margin = float(np.max(op.rhs(values)))
        if margin <= tol:
            return Supersolution(
                values=values,
                kind="exponential",
                margin=margin,
                alpha=alpha,
                amplitude=amplitude,
                plateau=plateau,
                match_radius=2.0 * r0,
            )
        alpha *= 0.5
        if alpha < 1e-12:
            break
    raise SupersolutionConstructionError(
        f"discrete super-solution check failed down to alpha={alpha:.3e} (margin {margin:.3e})"
    )


def verified_subsolution(op: DiscreteOperator, lam: SpectralEstimate, ceiling: np.ndarray | None = None,
                         max_backtracks: int = 60) -> np.ndarray:
    """theta * phi_p with theta = -lambda_p/2, halved until the discrete
    sub-solution inequality holds pointwise (and the ceiling is respected)."""
    if lam.value >= 0:
        raise ConfigError("sub-solution needs a negative lambda_p")
    theta = -lam.value / 2.0
    phi = lam.eigenvector
    slack = _SUB_SLACK * (1.0 + op.rate + (abs(lam.sup_a) if lam.sup_a else 1.0))
    for _ in range(max_backtracks):
        sub = theta * phi
        ok = np.all(op.rhs(sub) >= -slack)
        if ok and (ceiling is None or np.all(sub <= ceiling + 1e-15)):
            return sub
        theta *= 0.5
    raise NonConvergenceError("no admissible sub-solution amplitude found")


def _damping(op: DiscreteOperator, s_max: float) -> float:
    lf = op.growth.lipschitz_f(s_max, op.points_arg, op.a_values)
    return 0.9 / (op.rate + lf)


def _iterate(op: DiscreteOperator, u0: np.ndarray, tau: float, residual_target: float,
             maxiter: int) -> tuple[np.ndarray, int]:
    u = u0.copy()
    for it in range(1, maxiter + 1):
        r = op.rhs(u)
        res = float(np.max(np.abs(r)))
        if not math.isfinite(res):
            raise NonConvergenceError("fixed-point iteration produced non-finite values")
        if res <= residual_target:
            return u, it
        u = u + tau * r
    raise NonConvergenceError(
        f"stationary iteration stalled at residual {res:.3e} > {residual_target:.3e}",
        iterations=maxiter,
    )


@dataclass
class BallSolve:
    values: np.ndarray
    verdict: str                      # "persistent" | "extinct" | "indeterminate"
    lambda_estimate: SpectralEstimate
    residual: float
    sub: np.ndarray | None = None
    super_: np.ndarray | None = None
    iterations: int = 0
    gap: float = 0.0                  # from-below vs from-above disagreement
    attempted: np.ndarray | None = None  # terminal iterate when indeterminate


def solve_stationary_ball(
    op: DiscreteOperator,
    tol: float = 1e-10,
    spectral_tol: float = 1e-10,
    lam: SpectralEstimate | None = None,
    lower_start: np.ndarray | None = None,
    maxiter: int = 500_000,
    fat_tail_mode: bool = False,
) -> BallSolve:
    """Unique nonnegative equilibrium on one ball, or certified zero.

    Monotone damped iterations run from a verified sub-solution upward and
    from the super-solution downward; both must meet (uniqueness built in).
    The residual target is scaled by min(1, |lambda_p|) so the two limits
    land within 10 tol of each other even near the persistence threshold.
    """
    if lam is None:
        lam = principal_eigenvalue(op, tol=spectral_tol, best_effort=True)
    zero = np.zeros(op.size)
    if lam.lower >= 0.0:
        return BallSolve(values=zero, verdict="extinct", lambda_estimate=lam, residual=0.0)

    super_ = build_supersolution(op, tol=max(tol, 1e-8))
    s_max = float(np.max(super_.values))
    tau = _damping(op, s_max)
    residual_target = max(tol * min(1.0, abs(lam.value)), 1e-14 * (1.0 + op.rate))

    if lam.upper >= 0.0:
        # bracket straddles zero: no verdict; report the attempted iterate
        attempted, its = _iterate(op, super_.values, tau, max(residual_target, 1e-12), maxiter)
        return BallSolve(
            values=zero,
            verdict="indeterminate",
            lambda_estimate=lam,
            residual=float(np.max(np.abs(op.rhs(attempted)))),
            super_=super_.values,
            iterations=its,
            attempted=attempted,
        )

    sub = verified_subsolution(op, lam, ceiling=super_.values)
    start_low = sub
    if lower_start is not None:
        cand = np.maximum(sub, np.minimum(lower_start, super_.values))
        if np.all(op.rhs(cand) >= -_SUB_SLACK * (1.0 + op.rate)):
            start_low = cand
    u_lo, it_lo = _iterate(op, start_low, tau, residual_target, maxiter)
    u_hi, it_hi = _iterate(op, super_.values, tau, residual_target, maxiter)
    gap = float(np.max(np.abs(u_hi - u_lo)))
    if gap > 10.0 * tol and not fat_tail_mode:
        raise UniquenessViolationError(
            f"monotone limits disagree by {gap:.3e} (> {10 * tol:.1e})"
        )
    u = u_hi
    return BallSolve(
        values=u,
        verdict="persistent",
        lambda_estimate=lam,
        residual=float(np.max(np.abs(op.rhs(u)))),
        sub=sub,
        super_=super_.values,
        iterations=it_lo + it_hi,
        gap=gap,
    )


@dataclass
class StationarySolution:
    grid: object
    values: np.ndarray
    residual: float
    sub: np.ndarray | None
    super_: np.ndarray | None
    lambda_p_used: SpectralEstimate
    R_history: list[tuple[float, float]] = field(default_factory=list)
    verdict: str = "persistent"
    attempted: np.ndarray | None = None

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def solve_stationary_wholespace(
    kernel,
    growth,
    radii,
    spacing: float,
    tol: float = 1e-8,
    solver_tol: float = 1e-10,
    spectral_tol: float = 1e-10,
    dimension: int = 1,
    maxiter: int = 500_000,
    fat_tail_mode: bool = False,
    max_cells_per_axis: int = 8192,
) -> StationarySolution:
    """Whole-space equilibrium as the monotone limit of ball solutions.

    Asserts u_{R_k} <= u_{R_{k+1}} on the common lattice and stops once the
    sup-norm change drops below tol. The verdict comes from the certified
    bracket at the largest ball solved.
    """
    radii = sorted(float(R) for R in radii)
    prev_grid = None
    prev_vals = None
    history: list[tuple[float, float]] = []
    last: BallSolve | None = None
    final_grid = None
    prev_lam = None
    for R in radii:
        grid = build_grid(dimension, R, spacing, "ball-truncated", max_cells_per_axis)
        op = build_operator(grid, kernel, growth)
        lam = principal_eigenvalue(op, tol=spectral_tol, best_effort=True)
        if prev_lam is not None and lam.value > prev_lam.value + prev_lam.width + lam.width + 1e-13:
            raise MonotonicityViolationError("lambda_p increased along the R schedule")
        prev_lam = lam

        lower_start = None
        if prev_vals is not None:
            idx_new, idx_old = grid.common_with(prev_grid)
            lower_start = np.zeros(grid.size)
            lower_start[idx_new] = prev_vals[idx_old]
        sol = solve_stationary_ball(
            op,
            tol=solver_tol,
            lam=lam,
            lower_start=lower_start,
            maxiter=maxiter,
            fat_tail_mode=fat_tail_mode,
        )
        change = math.inf
        if prev_vals is not None:
            idx_new, idx_old = grid.common_with(prev_grid)
            diff = sol.values[idx_new] - prev_vals[idx_old]
            slack = 100.0 * solver_tol + 1e-12
            if np.min(diff) < -slack:
                raise MonotonicityViolationError(
                    f"ball solutions not increasing in R: min increment {np.min(diff):.3e}"
                )
            outside = np.ones(grid.size, dtype=bool)
            outside[idx_new] = False
            change = max(
                float(np.max(np.abs(diff))),
                float(np.max(sol.values[outside])) if np.any(outside) else 0.0,
            )
        history.append((R, change))
        prev_grid, prev_vals, last, final_grid = grid, sol.values, sol, grid
        if change <= tol and last.verdict != "indeterminate":
            break

    if last.verdict == "persistent" and last.super_ is not None:
        if np.any(last.values > last.super_ + 100.0 * solver_tol):
            raise MonotonicityViolationError("solution escaped its super-solution")
    return StationarySolution(
        grid=final_grid,
        values=last.values,
        residual=last.residual,
        sub=last.sub,
        super_=last.super_,
        lambda_p_used=last.lambda_estimate,
        R_history=history,
        verdict=last.verdict,
        attempted=last.attempted,
    )


@dataclass
class UniquenessReport:
    defect: float
    sup_diff: float
    skipped: int


def verify_uniqueness(op: DiscreteOperator, u: np.ndarray, v: np.ndarray,
                      floor: float = _RATIO_FLOOR) -> UniquenessReport:
    """Energy-identity defect D = sum w v u [f(x,u)/u - f(x,v)/v].

    D vanishes when u = v and is strictly positive for v >= u, v != u by
    strict decrease of f(x,s)/s; entries below the positivity floor are
    skipped to avoid 0/0.
    """
    w = op.grid.weights
    pts = op.points_arg
    mask = (u > floor) & (v > floor)
    fu = np.zeros_like(u)
    fv = np.zeros_like(v)
    fu[mask] = op.growth.f(pts, u)[mask] / u[mask]
    fv[mask] = op.growth.f(pts, v)[mask] / v[mask]
    defect = float(np.sum(w[mask] * v[mask] * u[mask] * (fu[mask] - fv[mask])))
    return UniquenessReport(
        defect=defect,
        sup_diff=float(np.max(np.abs(u - v))),
        skipped=int(np.sum(~mask)),
    )


__all__ = [
    "Supersolution",
    "BallSolve",
    "StationarySolution",
    "UniquenessReport",
    "build_supersolution",
    "verified_subsolution",
    "decay_margin",
    "solve_stationary_ball",
    "solve_stationary_wholespace",
    "verify_uniqueness",
]
