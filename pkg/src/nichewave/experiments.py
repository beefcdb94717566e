"""Quantitative programs: budget sweeps, thresholds, limits, audits, invasion.

Grid coupling follows the sweep design: for small range factors the spacing
shrinks with eps (h = h0 min(1, eps)) so the rescaled kernel stays resolved;
for large range factors the ball grows with the kernel reach so whole-space
behaviour is not clipped. Every "limit" claim is a monotone-decrease-of-error
statement over a finite schedule plus an empirical rate, never absolute
closeness at one eps.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, KernelHypothesisError, UnderResolvedKernelError
from .grids import Grid, build_grid, snap_radius
from .growth import GrowthProfile
from .kernels import Kernel, kernel_moment, rescale_kernel, validate_kernel
from .operators import build_operator
from .spectral import (
    SpectralEstimate,
    fd_nodes,
    local_lambda1_fd,
    principal_eigenvalue,
)
from .stationary import BallSolve, solve_stationary_ball


@dataclass(frozen=True)
class GridPolicy:
    """Couples the range factor eps to a concrete discretization."""

    base_radius: float = 6.0
    base_spacing: float = 0.05
    radius_pad: float = 1.0
    min_taps: int = 2
    dimension: int = 1
    max_cells_per_axis: int = 8192

    def spacing_for(self, eps: float) -> float:
        return self.base_spacing * min(1.0, eps)

    def radius_for(self, eps: float, support_radius: float) -> float:
        reach = eps * support_radius if math.isfinite(support_radius) else 0.0
        return self.base_radius + self.radius_pad * reach

    def grid_for(self, scaled_kernel, topology: str = "ball-truncated") -> Grid:
        eps = scaled_kernel.epsilon
        h = self.spacing_for(eps)
        if scaled_kernel.support_radius < self.min_taps * h:
            raise UnderResolvedKernelError(
                f"eps={eps}: kernel support {scaled_kernel.support_radius:.4g} "
                f"< {self.min_taps} h = {self.min_taps * h:.4g}"
            )
        R = snap_radius(self.radius_for(eps, scaled_kernel.base.support_radius), h)
        return build_grid(self.dimension, R, h, topology, self.max_cells_per_axis)


# ---------------------------------------------------------------------------
# epsilon sweeps


@dataclass
class SweepEntry:
    eps: float
    lam: SpectralEstimate
    solve: BallSolve
    grid_radius: float
    grid_spacing: float
    u_sup: float
    u_l2: float
    u_l1: float
    errors: dict = field(default_factory=dict)   # named distances to limit targets
    target_name: str = ""
    target_error: float = math.nan


@dataclass
class SweepResult:
    m: float
    entries: list[SweepEntry]
    skipped: dict = field(default_factory=dict)  # eps -> reason

    @property
    def epsilons(self) -> list[float]:
        return [e.eps for e in self.entries]

    def coherence(self, solver_tol: float = 1e-10):
        """Certified-sign dichotomy bookkeeping: (consistent, violations, straddles)."""
        violations = []
        straddles = 0
        for e in self.entries:
            if e.lam.sign == "straddle":
                straddles += 1
                continue
            nontrivial = e.u_sup > 10.0 * solver_tol
            if (e.lam.sign == "negative") != nontrivial:
                violations.append(e.eps)
        return (not violations, violations, straddles)


def _sweep_targets(m: float, direction: str | None, sup_a: float, lambda1_fd: float | None):
    if direction == "small" and m == 2.0:
        lam_name, lam_target = "lambda1_fd", lambda1_fd
    elif direction == "large" and m == 0.0:
        lam_name, lam_target = "1-sup_a", 1.0 - sup_a
    else:
        lam_name, lam_target = "-sup_a", -sup_a
    u_name = "(a-1)+" if m == 0.0 else "a+"
    return lam_name, lam_target, u_name


def _sweep_one(kernel, growth, m, eps, policy, alpha0, direction, solver_tol, spectral_tol,
               lambda1_fd, fd_reference):
    scaled = rescale_kernel(kernel, eps, m, alpha0)
    grid = policy.grid_for(scaled)
    op = build_operator(grid, scaled, growth)
    lam = principal_eigenvalue(op, tol=spectral_tol, best_effort=True)
    solve = solve_stationary_ball(op, tol=solver_tol, lam=lam)
    u = solve.values
    w = grid.weights
    a = op.a_values
    lam_name, lam_target, u_name = _sweep_targets(m, direction, float(np.max(a)), lambda1_fd)
    target_u = np.maximum(a - 1.0, 0.0) if m == 0.0 else np.maximum(a, 0.0)
    errors = {
        f"u_sup_err_{u_name}": float(np.max(np.abs(u - target_u))),
        f"u_l2_err_{u_name}": float(np.sqrt(np.sum(w * (u - target_u) ** 2))),
    }
    if lam_target is not None:
        errors[f"lam_err_{lam_name}"] = abs(lam.value - lam_target)
    if fd_reference is not None:
        nodes, v_fd, core_r = fd_reference
        x = grid.points[:, 0]
        v_interp = np.interp(x, nodes, v_fd)
        core = np.abs(x) <= core_r
        errors["u_l2core_err_v_fd"] = float(
            np.sqrt(np.sum(w[core] * (u[core] - v_interp[core]) ** 2))
        )
    primary = (
        "u_l2core_err_v_fd"
        if fd_reference is not None
        else (f"u_sup_err_{u_name}" if m == 0.0 else f"u_l2_err_{u_name}")
    )
    return SweepEntry(
        eps=eps,
        lam=lam,
        solve=solve,
        grid_radius=grid.radius,
        grid_spacing=grid.spacing,
        u_sup=float(np.max(u)),
        u_l2=float(np.sqrt(np.sum(w * u * u))),
        u_l1=float(np.sum(w * u)),
        errors=errors,
        target_name=primary,
        target_error=errors[primary],
    )


def epsilon_sweep(
    kernel: Kernel,
    growth: GrowthProfile,
    m: float,
    epsilons,
    policy: GridPolicy | None = None,
    alpha0: float = 1.0,
    direction: str | None = None,
    solver_tol: float = 1e-10,
    spectral_tol: float = 1e-10,
    lambda1_fd: float | None = None,
    fd_reference=None,
    workers: int = 1,
) -> SweepResult:
    """Solve the budget problem across an eps schedule; entries whose kernel
    is unresolvable on the policy grid are skipped with a reason."""
    policy = policy or GridPolicy(dimension=growth.dimension)
    epsilons = [float(e) for e in epsilons]

    def job(eps):
        return _sweep_one(kernel, growth, m, eps, policy, alpha0, direction,
                          solver_tol, spectral_tol, lambda1_fd, fd_reference)

    entries: list[SweepEntry | None] = [None] * len(epsilons)
    skipped: dict[float, str] = {}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {i: pool.submit(job, e) for i, e in enumerate(epsilons)}
            for i, fut in futures.items():
                try:
                    entries[i] = fut.result()
                except UnderResolvedKernelError as exc:
                    skipped[epsilons[i]] = str(exc)
    else:
        for i, eps in enumerate(epsilons):
            try:
                entries[i] = job(eps)
            except UnderResolvedKernelError as exc:
                skipped[eps] = str(exc)
    return SweepResult(m=m, entries=[e for e in entries if e is not None], skipped=skipped)


# ---------------------------------------------------------------------------
# critical range factor (m = 0)


@dataclass
class EpsStarResult:
    kind: str                      # "finite" | "infinite" | "no-sign-change"
    value: float | None
    bracket: tuple[float, float] | None
    history: list[tuple[float, SpectralEstimate]] = field(default_factory=list)
    unresolved: list[float] = field(default_factory=list)
    note: str = ""


def find_eps_star(
    kernel: Kernel,
    growth: GrowthProfile,
    lo: float,
    hi: float,
    policy: GridPolicy | None = None,
    tol: float = 1e-2,
    spectral_tol: float = 1e-10,
) -> EpsStarResult:
    """Critical range factor for m = 0 by bisection on the certified sign.

    If (a-1)+ is not identically zero on the grid, persistence holds for
    every eps and the threshold is infinite.
    """
    policy = policy or GridPolicy(dimension=growth.dimension)
    probe = build_grid(policy.dimension, snap_radius(policy.base_radius, policy.base_spacing),
                       policy.base_spacing, "ball-truncated", policy.max_cells_per_axis)
    a_probe = probe.sample(growth.a)
    if float(np.max(a_probe - 1.0)) > 0.0:
        return EpsStarResult(kind="infinite", value=None, bracket=None,
                             note="(a-1)+ not identically zero: persistence for all eps")
    if growth.sup_a > 1.0:
        warnings.warn(
            "analytic sup a exceeds 1 but the grid misses the spike; "
            "eps* finiteness pre-check may be unreliable", stacklevel=2,
        )

    history: list[tuple[float, SpectralEstimate]] = []
    unresolved: list[float] = []

    def lam_at(eps: float) -> SpectralEstimate:
        scaled = rescale_kernel(kernel, eps, 0.0, 1.0)
        grid = policy.grid_for(scaled)
        op = build_operator(grid, scaled, growth)
        est = principal_eigenvalue(op, tol=spectral_tol, best_effort=True)
        if est.sign == "straddle":
            for sharper in (spectral_tol * 1e-2, spectral_tol * 1e-3):
                est = principal_eigenvalue(op, tol=sharper, best_effort=True)
                if est.sign != "straddle":
                    break
            else:
                unresolved.append(eps)
        history.append((eps, est))
        return est

    est_lo = lam_at(lo)
    est_hi = lam_at(hi)
    if est_lo.sign != "negative":
        return EpsStarResult(kind="no-sign-change", value=None, bracket=None, history=history,
                             note=f"no persistence at eps={lo}: lambda_p sign {est_lo.sign}")
    if est_hi.sign == "negative":
        return EpsStarResult(kind="no-sign-change", value=None, bracket=None, history=history,
                             note=f"persistence persists to eps={hi}")
    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        est = lam_at(mid)
        neg = est.sign == "negative" or (est.sign == "straddle" and est.value < 0)
        if neg:
            a = mid
        else:
            b = mid
    return EpsStarResult(kind="finite", value=0.5 * (a + b), bracket=(a, b),
                         history=history, unresolved=unresolved)


# ---------------------------------------------------------------------------
# local FD reference problem (m = 2 limit)


@dataclass
class LocalKPPResult:
    nodes: np.ndarray
    values: np.ndarray
    lambda1: SpectralEstimate
    residual: float
    iterations: int


def _fd_rhs(v, a_nodes, growth, nodes, sigma, h):
    lap = -2.0 * v
    lap[:-1] += v[1:]
    lap[1:] += v[:-1]
    return sigma * lap / (h * h) + growth.f(nodes, v)


def local_kpp_solve_fd(
    growth: GrowthProfile,
    sigma: float,
    radius: float,
    spacing: float,
    tol: float = 1e-10,
    maxiter: int = 2_000_000,
) -> LocalKPPResult:
    """sigma v'' + f(x, v) = 0 on (-R, R), Dirichlet, by the same squeezed
    damped iteration as the nonlocal solver; zero when lambda_1 >= 0."""
    lam1 = local_lambda1_fd(growth.a, sigma, radius, spacing)
    nodes = fd_nodes(radius, spacing)
    a_nodes = np.asarray(growth.a(nodes), dtype=float)
    if lam1.lower >= 0.0 or lam1.value >= 0.0:
        return LocalKPPResult(nodes=nodes, values=np.zeros_like(nodes), lambda1=lam1,
                              residual=0.0, iterations=0)
    sup_s = float(np.max(growth.saturation(nodes)))
    barrier = sup_s if sup_s > 0 else 1.0
    lf = growth.lipschitz_f(barrier, nodes, a_nodes)
    tau = 0.9 / (2.0 * sigma / spacing**2 + lf)

    theta = -lam1.value / 2.0
    phi = lam1.eigenvector
    slack = 1e-11 * (1.0 + 2.0 * sigma / spacing**2)
    for _ in range(60):
        if np.min(_fd_rhs(theta * phi, a_nodes, growth, nodes, sigma, spacing)) >= -slack:
            break
        theta *= 0.5

    target = max(tol * min(1.0, -lam1.value), 1e-13)

    def run(v0):
        v = v0.copy()
        for it in range(1, maxiter + 1):
            r = _fd_rhs(v, a_nodes, growth, nodes, sigma, spacing)
            res = float(np.max(np.abs(r)))
            if res <= target:
                return v, it
            v = v + tau * r
        raise ConfigError(f"FD KPP iteration stalled at residual {res:.3e}")

    v_lo, it1 = run(theta * phi)
    v_hi, it2 = run(np.full_like(nodes, barrier))
    v = v_hi
    res = float(np.max(np.abs(_fd_rhs(v, a_nodes, growth, nodes, sigma, spacing))))
    return LocalKPPResult(nodes=nodes, values=v, lambda1=lam1, residual=res,
                          iterations=it1 + it2)


# ---------------------------------------------------------------------------
# asymptotic limit verification


@dataclass
class LimitCheck:
    m: float
    direction: str
    epsilons: list[float]           # ordered toward the limit
    lambda_errors: list[float]
    u_errors: list[float]
    lambda_monotone: bool
    u_monotone: bool
    lambda_rate: float
    u_rate: float
    lambda_target_name: str
    u_target_name: str
    sweep: SweepResult
    fd: LocalKPPResult | None = None
    notes: list[str] = field(default_factory=list)


def _tail_monotone(errors: list[float], k: int = 3) -> bool:
    tail = errors[-min(k, len(errors)):]
    return all(b < a for a, b in zip(tail, tail[1:]))


def _empirical_rate(epsilons, errors, direction) -> float:
    if len(errors) < 2 or any(e <= 0 for e in errors):
        return math.nan
    x = np.log(np.asarray(epsilons, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    slope = float(np.polyfit(x, y, 1)[0])
    # toward eps -> 0 a positive slope means decay; report decay order
    return slope if direction == "small" else -slope


def asymptotic_limit_check(
    kernel: Kernel,
    growth: GrowthProfile,
    m: float,
    direction: str,
    epsilons,
    policy: GridPolicy | None = None,
    alpha0: float = 1.0,
    solver_tol: float = 1e-10,
    spectral_tol: float = 1e-10,
    fd_spacing: float = 0.01,
    core_radius: float | None = None,
    workers: int = 1,
) -> LimitCheck:
    """Tabulate distances to the theoretical limit along an eps schedule.

    direction "large": targets a+ ((a-1)+ for m=0) and the large-eps
    spectral limits; "small": -sup a for m < 2, the local-Laplacian pair
    (lambda_1, v) for m = 2. Non-monotone error decrease is reported as a
    finding with grid-refinement advice, not raised.
    """
    if direction not in ("small", "large"):
        raise ConfigError("direction must be 'small' or 'large'")
    policy = policy or GridPolicy(dimension=growth.dimension)
    order = sorted(float(e) for e in epsilons)
    order = order[::-1] if direction == "small" else order

    fd = None
    fd_reference = None
    lambda1_fd = None
    if direction == "small" and m == 2.0:
        sigma = kernel_moment(kernel, 2.0) / (2.0 * growth.dimension)
        R_fd = snap_radius(policy.base_radius, fd_spacing)
        fd = local_kpp_solve_fd(growth, sigma, R_fd, fd_spacing, tol=solver_tol)
        lambda1_fd = fd.lambda1.value
        core = core_radius if core_radius is not None else (
            growth.core_radius + 1.0 if growth.hostile else policy.base_radius / 2.0
        )
        fd_reference = (fd.nodes, fd.values, core)

    sweep = epsilon_sweep(
        kernel, growth, m, order, policy, alpha0, direction,
        solver_tol, spectral_tol, lambda1_fd, fd_reference, workers,
    )
    notes = [f"eps={e}: skipped ({r})" for e, r in sweep.skipped.items()]

    lam_errors, u_errors = [], []
    lam_name = u_name = ""
    for e in sweep.entries:
        lam_keys = [k for k in e.errors if k.startswith("lam_err_")]
        u_key = e.target_name if e.target_name.startswith("u_") else None
        if lam_keys:
            lam_name = lam_keys[0]
            lam_errors.append(e.errors[lam_keys[0]])
        if u_key:
            u_name = u_key
            u_errors.append(e.errors[u_key])

    lam_mono = _tail_monotone(lam_errors)
    u_mono = _tail_monotone(u_errors) if u_errors else True
    if not lam_mono or not u_mono:
        notes.append("non-monotone error decrease: refine base_spacing or widen base_radius")
    eps_used = sweep.epsilons
    return LimitCheck(
        m=m,
        direction=direction,
        epsilons=eps_used,
        lambda_errors=lam_errors,
        u_errors=u_errors,
        lambda_monotone=lam_mono,
        u_monotone=u_mono,
        lambda_rate=_empirical_rate(eps_used, lam_errors, direction),
        u_rate=_empirical_rate(eps_used, u_errors, direction) if u_errors else math.nan,
        lambda_target_name=lam_name,
        u_target_name=u_name,
        sweep=sweep,
        fd=fd,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# a-priori estimate audit


@dataclass
class AuditItem:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass
class AuditResult:
    eps: float
    m: float
    items: list[AuditItem]
    energy: float

    @property
    def all_passed(self) -> bool:
        return all(i.passed for i in self.items)


def apriori_estimate_audit(op, u: np.ndarray, lam: SpectralEstimate,
                           slack: float = 1e-8) -> AuditResult:
    """Check the stationary a-priori estimates on one converged solve."""
    w = op.grid.weights
    a = op.a_values
    eps = op.kernel.epsilon
    m = op.kernel.m
    M = float(np.max(np.abs(a)))
    int_aplus = float(np.sum(w * np.maximum(a, 0.0)))
    c1 = M * int_aplus

    l2 = float(np.sqrt(np.sum(w * u * u)))
    bound1 = math.sqrt(c1)
    items = [AuditItem("i_l2_bound", l2 <= bound1 + slack, bound1 - l2,
                       f"||u||_2 = {l2:.6g} vs sqrt(M int a+) = {bound1:.6g}")]

    energy = op.energy(u)
    c2 = 4.0 * c1 * M
    bound2 = c2 * eps**m
    items.append(AuditItem("ii_energy_bound", energy <= bound2 + slack, bound2 - energy,
                           f"E = {energy:.6g} vs C2 eps^m = {bound2:.6g}"))

    supp = a > 0.0
    sup_u_core = float(np.max(u[supp])) if np.any(supp) else 0.0
    floor = -lam.upper / 2.0
    items.append(AuditItem("iii_sup_lower", sup_u_core >= floor - slack, sup_u_core - floor,
                           f"sup_supp(a+) u = {sup_u_core:.6g} vs -lambda_p/2 = {floor:.6g}"))

    lower = np.maximum(a - op.rate, 0.0)
    worst = float(np.min(u - lower))
    items.append(AuditItem("iv_pointwise_lower", worst >= -slack, worst,
                           f"min(u - (a - rate)+) = {worst:.3g}"))
    return AuditResult(eps=eps, m=m, items=items, energy=energy)


@dataclass
class EnergySlopeFit:
    m: float
    epsilons: list[float]
    energies: list[float]
    slope: float
    audits: list[AuditResult]


def energy_slope_audit(
    kernel: Kernel,
    growth: GrowthProfile,
    m: float,
    epsilons,
    policy: GridPolicy | None = None,
    solver_tol: float = 1e-10,
    spectral_tol: float = 1e-10,
    workers: int = 1,
) -> EnergySlopeFit:
    """Audit every entry of a sweep and fit log E vs log eps (slope ~ m)."""
    policy = policy or GridPolicy(dimension=growth.dimension)
    sweep = epsilon_sweep(kernel, growth, m, sorted(epsilons), policy,
                          solver_tol=solver_tol, spectral_tol=spectral_tol, workers=workers)
    audits = []
    eps_list, energies = [], []
    for entry in sweep.entries:
        scaled = rescale_kernel(kernel, entry.eps, m, 1.0)
        grid = build_grid(policy.dimension, entry.grid_radius, entry.grid_spacing,
                          "ball-truncated", policy.max_cells_per_axis)
        op = build_operator(grid, scaled, growth)
        audit = apriori_estimate_audit(op, entry.solve.values, entry.lam)
        audits.append(audit)
        if entry.solve.verdict == "persistent":
            eps_list.append(entry.eps)
            energies.append(audit.energy)
    slope = math.nan
    if len(energies) >= 2 and all(e > 0 for e in energies):
        slope = float(np.polyfit(np.log(eps_list), np.log(energies), 1)[0])
    return EnergySlopeFit(m=m, epsilons=eps_list, energies=energies, slope=slope, audits=audits)


# ---------------------------------------------------------------------------
# invasion fitness (ESS program)


@dataclass
class InvasionEntry:
    eps1: float
    eps2: float
    lam: SpectralEstimate
    resident_sup: float
    verdict: str        # "invades" | "resists" | "neutral"


@dataclass
class InvasionMatrix:
    eps_residents: list[float]
    eps_mutants: list[float]
    entries: list[list[InvasionEntry]]

    def diagonal(self) -> list[InvasionEntry]:
        out = []
        for i, e1 in enumerate(self.eps_residents):
            for j, e2 in enumerate(self.eps_mutants):
                if e1 == e2:
                    out.append(self.entries[i][j])
        return out


def _common_policy_grid(policy: GridPolicy, kernel: Kernel, eps_pair, m: float) -> Grid:
    h = policy.base_spacing * min(1.0, *eps_pair)
    reach = max(eps_pair) * kernel.support_radius
    R = snap_radius(policy.base_radius + policy.radius_pad * reach, h)
    return build_grid(policy.dimension, R, h, "ball-truncated", policy.max_cells_per_axis)


def invasion_fitness(
    kernel: Kernel,
    growth: GrowthProfile,
    m: float,
    eps1: float,
    eps2: float,
    policy: GridPolicy | None = None,
    alpha0: float = 1.0,
    solver_tol: float = 1e-10,
    spectral_tol: float = 1e-10,
    resident: tuple[Grid, np.ndarray] | None = None,
) -> InvasionEntry:
    """Bracketed lambda_p(M_{eps2,m} + a - u*_{eps1}) on a shared grid.

    Negative certified sign means the mutant invades the resident equilibrium.
    """
    policy = policy or GridPolicy(dimension=growth.dimension)
    if resident is None:
        grid = _common_policy_grid(policy, kernel, (eps1, eps2), m)
        res_kernel = rescale_kernel(kernel, eps1, m, alpha0)
        if res_kernel.support_radius < policy.min_taps * grid.spacing:
            raise UnderResolvedKernelError(f"resident kernel unresolved at eps1={eps1}")
        res_op = build_operator(grid, res_kernel, growth)
        res = solve_stationary_ball(res_op, tol=solver_tol, spectral_tol=spectral_tol)
        u_star = res.values
    else:
        grid, u_star = resident

    mut_kernel = rescale_kernel(kernel, eps2, m, alpha0)
    if mut_kernel.support_radius < policy.min_taps * grid.spacing:
        raise UnderResolvedKernelError(f"mutant kernel unresolved at eps2={eps2}")
    a_eff = grid.sample(growth.a) - u_star
    mut_op = build_operator(grid, mut_kernel, growth=None, a_values=a_eff)
    lam = principal_eigenvalue(mut_op, tol=spectral_tol, best_effort=True)
    if lam.upper < 0:
        verdict = "invades"
    elif lam.lower > 0:
        verdict = "resists"
    else:
        verdict = "neutral"
    return InvasionEntry(eps1=eps1, eps2=eps2, lam=lam,
                         resident_sup=float(np.max(u_star)), verdict=verdict)


def build_invasion_matrix(
    kernel: Kernel,
    growth: GrowthProfile,
    m: float,
    eps_residents,
    eps_mutants=None,
    policy: GridPolicy | None = None,
    alpha0: float = 1.0,
    solver_tol: float = 1e-10,
    spectral_tol: float = 1e-10,
    workers: int = 1,
) -> InvasionMatrix:
    """Fill the strategy grid; each resident equilibrium is solved once on a
    grid sized for the largest kernel it meets."""
    policy = policy or GridPolicy(dimension=growth.dimension)
    eps_residents = [float(e) for e in eps_residents]
    eps_mutants = [float(e) for e in (eps_mutants if eps_mutants is not None else eps_residents)]

    def row(e1):
        pair_max = max([e1] + eps_mutants)
        grid = _common_policy_grid(policy, kernel, (min([e1] + eps_mutants), pair_max), m)
        res_kernel = rescale_kernel(kernel, e1, m, alpha0)
        res_op = build_operator(grid, res_kernel, growth)
        res = solve_stationary_ball(res_op, tol=solver_tol, spectral_tol=spectral_tol)
        return [
            invasion_fitness(kernel, growth, m, e1, e2, policy, alpha0,
                             solver_tol, spectral_tol, resident=(grid, res.values))
            for e2 in eps_mutants
        ]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, eps_residents))
    else:
        rows = [row(e1) for e1 in eps_residents]
    return InvasionMatrix(eps_residents=eps_residents, eps_mutants=eps_mutants, entries=rows)


# ---------------------------------------------------------------------------
# fat-tailed kernels


@dataclass
class FatTailResult:
    verdict: str                    # "persistence" | "extinction" | "indeterminate"
    estimates: list[SpectralEstimate]
    radii: list[float]
    tail_mass: float
    bracket_inflation: float
    evidence: str

    @property
    def inflated_upper(self) -> float:
        return min(e.upper for e in self.estimates) + self.bracket_inflation if self.estimates else math.inf


def fat_tail_verdict(
    kernel: Kernel,
    growth: GrowthProfile,
    radii,
    spacing: float,
    tail_target: float = 1e-10,
    spectral_tol: float = 1e-10,
    dimension: int = 1,
    max_cells_per_axis: int = 8192,
) -> FatTailResult:
    """Persistence/extinction for non-compact kernels under H5.

    Criterion gap is surfaced, never bridged: persistence requires the
    tail-inflated upper bound of lim_R lambda_p(L_R + a) to be negative;
    extinction requires the whole-space lower bound -sup a to be positive.
    """
    report = validate_kernel(kernel)
    if not (report.h1 and report.h2_center_positive and report.h5_finite_moment):
        raise KernelHypothesisError(f"kernel fails hypotheses: {report.messages}")
    if kernel.compactly_supported:
        raise ConfigError("fat-tail verdict is for non-compactly supported kernels")

    scaled = rescale_kernel(kernel, 1.0, 0.0, 1.0)
    window = _tail_window(kernel, tail_target)
    estimates = []
    used = []
    tail_mass = 0.0
    for R in sorted(float(r) for r in radii):
        grid = build_grid(dimension, snap_radius(R, spacing), spacing,
                          "ball-truncated", max_cells_per_axis)
        op = build_operator(grid, scaled, growth, tap_window=window)
        est = principal_eigenvalue(op, tol=spectral_tol, best_effort=True)
        tail_mass = max(tail_mass, op.tail_mass)
        estimates.append(est)
        used.append(grid.radius)
    inflation = 2.0 * scaled.rate * tail_mass

    if estimates and min(e.upper for e in estimates) + inflation < 0.0:
        return FatTailResult(
            verdict="persistence", estimates=estimates, radii=used,
            tail_mass=tail_mass, bracket_inflation=inflation,
            evidence="lim_R lambda_p(L_R + a) upper bound (tail-inflated) < 0",
        )
    if growth.sup_a < 0.0:
        return FatTailResult(
            verdict="extinction", estimates=estimates, radii=used,
            tail_mass=tail_mass, bracket_inflation=inflation,
            evidence=f"lambda_p(M + a) >= -sup a = {-growth.sup_a:.6g} > 0",
        )
    return FatTailResult(
        verdict="indeterminate", estimates=estimates, radii=used,
        tail_mass=tail_mass, bracket_inflation=inflation,
        evidence="neither criterion certified: gap between (i) and (ii) surfaced",
    )


def _tail_window(kernel: Kernel, tail_target: float) -> float:
    w = max(kernel.support_radius, 1.0) if math.isfinite(kernel.support_radius) else 1.0
    while kernel.mass_beyond(w) > tail_target and w < 1e9:
        w *= 2.0
    return w
