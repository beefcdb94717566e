"""Generalized principal eigenvalue machinery with certified brackets.

lambda_p of the discrete operator A = rate (C - I) + diag(a) is minus the
largest eigenvalue of A. A Perron shift c = 1 + max|a| + rate makes
B = A + cI entrywise nonnegative with positive diagonal, so for any
strictly positive vector phi the Collatz-Wielandt quotients bracket the
Perron root:

    min_i (B phi)_i / phi_i  <=  rho(B)  <=  max_i (B phi)_i / phi_i.

The sup/inf test-function definitions of lambda_p and lambda_p' are
realized on the grid by exactly these two quotients; their collapse to a
requested width is the bracket certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import (
    ConfigError,
    DiscretizationInconsistencyError,
    IrreducibilityError,
    NonConvergenceError,
)
from .grids import build_grid
from .kernels import rescale_kernel
from .operators import build_operator, weighted_symmetrize

DEGENERACY_GAP = 1e-12
_POSITIVE_FLOOR = 1e-280


@dataclass
class SpectralEstimate:
    value: float
    lower: float
    upper: float
    eigenvector: np.ndarray
    residual: float
    method: str
    iterations: int
    sup_a: float | None = None
    eigenfunction_certified: bool | None = None
    degenerate: bool = False

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def sign(self) -> str:
        """Certified sign of lambda_p: 'negative', 'nonnegative', 'straddle'."""
        if self.upper < 0.0:
            return "negative"
        if self.lower >= 0.0:
            return "nonnegative"
        return "straddle"


def _check_irreducible(op) -> None:
    center = (op.reach,) * op.grid.dimension
    off = op.taps.copy()
    off[center] = 0.0
    if not np.any(off > 0):
        raise IrreducibilityError("kernel support below grid spacing: operator is diagonal")


def _shift_constant(op) -> float:
    amax = float(np.max(np.abs(op.a_values))) if op.a_values is not None else 0.0
    return 1.0 + amax + op.rate


def _certified_iteration(op, tol, maxiter, estimator, start, warm_after=40, best_effort=False):
    """Shared shifted-iteration engine; returns a SpectralEstimate.

    estimator 'cw' brackets by the two Collatz-Wielandt quotients (lambda_p
    contract); 'rayleigh' uses the weighted Rayleigh quotient as the upper
    (variational) side of the lambda_v contract.

    The matvec uses the dense kernel matrix whenever it fits the operator's
    dense limit: its summands are nonnegative, so quotients keep per-entry
    relative accuracy even on steeply decaying eigenvector tails, which the
    FFT path (absolute error ~1e-16 ||u||) cannot certify.
    """
    _check_irreducible(op)
    n = op.size
    c = _shift_constant(op)
    include_growth = op.a_values is not None

    bmat = None
    if n <= op.dense_limit:
        A = op.matrix() if include_growth else op.rate * (op.conv_matrix() - np.eye(n))
        bmat = A + c * np.eye(n)

    def bmatvec(v):
        if bmat is not None:
            return bmat @ v
        return op.apply(v, include_growth=include_growth) + c * v

    phi = np.ones(n) if start is None else np.maximum(np.asarray(start, dtype=float), _POSITIVE_FLOOR)
    phi = phi / np.max(phi)

    best = (-math.inf, math.inf)
    degenerate = False
    warmed = False
    stalled = 0
    iterations = 0
    converged = False
    while iterations < maxiter:
        iterations += 1
        bphi = bmatvec(phi)
        q = bphi / phi
        cw_lo, cw_hi = float(np.min(q)), float(np.max(q))
        lower = c - cw_hi
        upper = c - cw_lo
        if estimator == "rayleigh":
            rq_a = float(phi @ (bphi - c * phi)) / float(phi @ phi)
            upper = min(upper, -rq_a)
        prev_width = best[1] - best[0]
        best = (max(best[0], lower), min(best[1], upper))
        width = best[1] - best[0]
        if width <= tol:
            converged = True
            break
        stalled = stalled + 1 if width > 0.999 * prev_width else 0
        if warmed and stalled >= 60:
            break  # bracket hit its floating floor for this instance
        nxt = np.maximum(bphi, _POSITIVE_FLOOR)
        phi = nxt / np.max(nxt)
        if not warmed and (iterations >= warm_after or stalled >= 15):
            warmed = True
            stalled = 0
            vec, degenerate = _warm_start_vector(op, c, phi, bmat)
            if vec is not None:
                phi = np.maximum(vec, _POSITIVE_FLOOR)
                phi = phi / np.max(phi)

    if not converged and not degenerate and not best_effort:
        raise NonConvergenceError(
            f"bracket width {best[1] - best[0]:.3e} > tol {tol:.3e} after {iterations} iterations",
            bracket=best,
            iterations=iterations,
        )

    phi = phi / np.max(phi)
    a_phi = bmatvec(phi) - c * phi
    rq_a = float(phi @ (op.grid.weights * a_phi)) / float(phi @ (op.grid.weights * phi))
    value = float(np.clip(-rq_a, best[0], best[1]))
    residual = float(np.max(np.abs(a_phi + value * phi)))
    sup_a = float(np.max(op.a_values)) if op.a_values is not None else None
    certified = None
    if sup_a is not None:
        certified = bool(best[1] < op.rate - sup_a)
    return SpectralEstimate(
        value=value,
        lower=best[0],
        upper=best[1],
        eigenvector=phi,
        residual=residual,
        method="perron-cw" if estimator == "cw" else "rayleigh",
        iterations=iterations,
        sup_a=sup_a,
        eigenfunction_certified=certified,
        degenerate=degenerate,
    )


def _warm_start_vector(op, c, phi, bmat=None):
    """Dominant eigenvector of B for slow instances; flags tiny spectral gaps."""
    n = op.size
    include_growth = op.a_values is not None
    try:
        if bmat is not None and n <= 900:
            vals, vecs = np.linalg.eigh(bmat)  # symmetric: weights are uniform
            gap = vals[-1] - vals[-2] if n > 1 else math.inf
            return np.abs(vecs[:, -1]), bool(gap < DEGENERACY_GAP)

        if bmat is not None:
            mv = bmat.__matmul__
        else:
            def mv(v):
                return op.apply(v, include_growth=include_growth) + c * v

        linop = scipy.sparse.linalg.LinearOperator((n, n), matvec=mv, dtype=float)
        vals, vecs = scipy.sparse.linalg.eigsh(linop, k=2, which="LA", v0=phi, tol=1e-12, maxiter=5000)
        order = np.argsort(vals)
        gap = float(vals[order[-1]] - vals[order[-2]])
        vec = np.abs(vecs[:, order[-1]])
        return vec, bool(gap < DEGENERACY_GAP)
    except Exception:
        return None, False


def principal_eigenvalue(op, tol: float = 1e-10, maxiter: int = 600, start=None,
                         best_effort: bool = False) -> SpectralEstimate:
    """lambda_p(L_R + a) with a certified Collatz-Wielandt bracket.

    best_effort returns the widest-achieved valid bracket instead of raising
    when the requested width is unattainable (eigenvector tail at the
    floating floor); solvers that only consume certified signs use it.
    """
    return _certified_iteration(op, tol, maxiter, "cw", start, best_effort=best_effort)


def rayleigh_lambda_v(op, tol: float = 1e-10, maxiter: int = 600, start=None,
                      best_effort: bool = False) -> SpectralEstimate:
    """lambda_v by Rayleigh-quotient minimization on the symmetric operator.

    Shares the shifted iteration but certifies the upper side variationally;
    equality with lambda_p on the discrete operator is a theorem, asserted
    in tests, never assumed here.
    """
    if start is None:
        start = np.ones(op.size)
        start[:: max(op.size // 7, 1)] += 0.5  # break symmetry differently from lambda_p
    return _certified_iteration(op, tol, maxiter, "rayleigh", start, best_effort=best_effort)


def dense_lambda_p_oracle(op) -> tuple[float, float]:
    """(-max eigenvalue, top spectral gap) from a dense symmetric solve."""
    S = weighted_symmetrize(op.matrix(), op.grid.weights)
    vals = np.linalg.eigvalsh(S)
    gap = float(vals[-1] - vals[-2]) if vals.size > 1 else math.inf
    return -float(vals[-1]), gap


@dataclass
class ExtrapolationResult:
    radii: list[float]
    estimates: list[SpectralEstimate]
    final_value: float
    uncertainty: float
    converged: bool

    @property
    def values(self) -> list[float]:
        return [e.value for e in self.estimates]

    @property
    def final_upper(self) -> float:
        return min(e.upper for e in self.estimates)

    @property
    def final_lower(self) -> float:
        return self.estimates[-1].lower - max(self.uncertainty, 0.0)


def lambda_p_extrapolate_R(
    kernel,
    growth,
    radii,
    spacing: float,
    tol: float = 1e-8,
    spectral_tol: float = 1e-10,
    dimension: int = 1,
    max_cells_per_axis: int = 8192,
) -> ExtrapolationResult:
    """lambda_p(L_R + a) along an increasing R schedule on matched grids.

    The sequence is non-increasing (domain monotonicity holds exactly for
    nested lattices); a violation beyond bracket widths is a bug signal.
    Stops early once successive decrease falls below tol.
    """
    radii = sorted(float(R) for R in radii)
    for R in radii:
        if abs(R / spacing - round(R / spacing)) > 1e-9:
            raise ConfigError(f"schedule radius {R} is not a multiple of h={spacing}")
    estimates = []
    used = []
    converged = False
    for R in radii:
        grid = build_grid(dimension, R, spacing, "ball-truncated", max_cells_per_axis)
        op = build_operator(grid, kernel, growth)
        est = principal_eigenvalue(op, tol=spectral_tol, best_effort=True)
        if estimates:
            prev = estimates[-1]
            slack = prev.width + est.width
            if est.value > prev.value + slack + 1e-13:
                raise DiscretizationInconsistencyError(
                    f"lambda_p increased from {prev.value} (R={used[-1]}) to {est.value} (R={R})"
                )
        estimates.append(est)
        used.append(R)
        if len(estimates) >= 2:
            decrease = estimates[-2].value - estimates[-1].value
            if decrease <= tol:
                converged = True
                break
    uncertainty = (estimates[-2].value - estimates[-1].value) if len(estimates) >= 2 else math.inf
    return ExtrapolationResult(
        radii=used,
        estimates=estimates,
        final_value=estimates[-1].value,
        uncertainty=max(uncertainty, 0.0),
        converged=converged,
    )


@dataclass
class ScalingCheck:
    lambda_base: SpectralEstimate
    lambda_scaled: SpectralEstimate
    difference: float
    combined_width: float

    @property
    def consistent(self) -> bool:
        return abs(self.difference) <= self.combined_width + 1e-9


def scaling_invariance_check(
    kernel,
    growth,
    epsilon: float,
    radius: float,
    spacing: float,
    spectral_tol: float = 1e-10,
    dimension: int = 1,
) -> ScalingCheck:
    """Compare lambda_p(M + a) with lambda_p(M_eps + a_eps), a_eps(x) = a(x/eps).

    The scaled side is discretized on the mapped grid (radius eps R, spacing
    eps h), which is the exact discrete change of variables.
    """
    grid1 = build_grid(dimension, radius, spacing, "ball-truncated")
    op1 = build_operator(grid1, kernel, growth)
    est1 = principal_eigenvalue(op1, tol=spectral_tol, best_effort=True)

    grid2 = build_grid(dimension, epsilon * radius, epsilon * spacing, "ball-truncated")
    scaled = rescale_kernel(kernel, epsilon, 0.0, 1.0)  # rate stays 1
    pts = grid2.points[:, 0] if dimension == 1 else grid2.points
    a_scaled = growth.a(pts / epsilon)
    op2 = build_operator(grid2, scaled, growth=None, a_values=a_scaled)
    est2 = principal_eigenvalue(op2, tol=spectral_tol, best_effort=True)

    return ScalingCheck(
        lambda_base=est1,
        lambda_scaled=est2,
        difference=est2.value - est1.value,
        combined_width=est1.width + est2.width,
    )


def local_lambda1_fd(a_fn, sigma: float, radius: float, spacing: float, tol: float = 1e-12) -> SpectralEstimate:
    """Smallest eigenvalue of -sigma Lap - a on (-R, R), Dirichlet, 1-D FD.

    Standard second-order central differences on interior nodes.
    """
    if sigma <= 0:
        raise ConfigError("diffusion coefficient must be positive")
    m = round(2.0 * radius / spacing)
    if abs(2.0 * radius / spacing - m) > 1e-9:
        raise ConfigError("2R/h must be an integer for the FD grid")
    if m < 3:
        raise ConfigError("FD grid too coarse")
    nodes = -radius + spacing * np.arange(1, m)
    a = np.asarray(a_fn(nodes), dtype=float)
    diag = 2.0 * sigma / spacing**2 - a
    off = np.full(m - 2, -sigma / spacing**2)
    vals, vecs = scipy.linalg.eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    lam = float(vals[0])
    vec = vecs[:, 0]
    if vec.sum() < 0:
        vec = -vec
    vec = vec / np.max(np.abs(vec))
    resid_vec = diag * vec - lam * vec
    resid_vec[:-1] += off * vec[1:]
    resid_vec[1:] += off * vec[:-1]
    res2 = float(np.linalg.norm(resid_vec) / np.linalg.norm(vec))
    return SpectralEstimate(
        value=lam,
        lower=lam - res2,
        upper=lam + res2,
        eigenvector=vec,
        residual=float(np.max(np.abs(resid_vec))),
        method="fd-laplacian",
        iterations=1,
        sup_a=float(np.max(a)),
        eigenfunction_certified=True,
    )


def fd_nodes(radius: float, spacing: float) -> np.ndarray:
    m = round(2.0 * radius / spacing)
    return -radius + spacing * np.arange(1, m)
