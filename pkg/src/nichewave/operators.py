"""Discrete nonlocal dispersal operators rate * (J_eps * u - u) + a(x) u.

Grid points live on an integer lattice, kernel taps are sampled at integer
offsets and renormalized to exact unit discrete mass, and both application
paths (dense direct sum, FFT convolution) evaluate the identical sum:

    out_i = sum_j w_j J_eps(x_i - x_j) u_j

restricted to the ball (hostile exterior: this *is* the truncated operator)
or wrapped around the torus (validation device).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.fft import next_fast_len, rfftn, irfftn

from .errors import ResourceLimitError, UnderResolvedKernelError
from .grids import Grid
from .growth import GrowthProfile
from .kernels import Kernel, ScaledKernel, rescale_kernel

DEFAULT_DENSE_LIMIT = 8192


def sample_taps(kernel: ScaledKernel, grid: Grid, window_radius: float | None = None):
    """Sample the scaled kernel at integer grid offsets and renormalize.

    Returns (taps, tail_mass, reach) where taps has shape (2q+1,)*N with the
    zero offset at the center, tail_mass is the continuum mass left outside
    the sampled window, and reach = q (offsets per side).
    """
    h = grid.spacing
    support = kernel.support_radius
    if support < h:
        raise UnderResolvedKernelError(
            f"kernel support {support} is finer than grid spacing {h}"
        )
    max_reach = grid.cells_per_axis - 1  # farthest representable offset
    if math.isfinite(support):
        q = min(int(math.floor(support / h + 1e-12)), max_reach) if grid.topology == "ball-truncated" else int(math.floor(support / h + 1e-12))
    else:
        if grid.topology == "torus":
            raise UnderResolvedKernelError("infinite-support kernels are not supported on the torus")
        q = max_reach
        if window_radius is not None:
            q = min(q, int(math.floor(window_radius / h + 1e-12)))
    q = max(q, 1)

    offsets = np.arange(-q, q + 1) * h
    if grid.dimension == 1:
        raw = kernel.profile(np.abs(offsets))
    else:
        gx, gy = np.meshgrid(offsets, offsets, indexing="ij")
        raw = kernel.profile(np.sqrt(gx * gx + gy * gy))
    total = raw.sum() * h**grid.dimension
    if total <= 0:
        raise UnderResolvedKernelError("kernel vanishes on every sampled offset")
    taps = raw / total
    tail_mass = kernel.mass_beyond(q * h) if not math.isfinite(support) else 0.0
    # finite support wider than the ball box: dropped taps count as tail too
    if math.isfinite(support) and grid.topology == "ball-truncated" and q * h < support - 1e-12:
        tail_mass = kernel.mass_beyond(q * h)
    return taps, float(tail_mass), q


@dataclass
class DiscreteOperator:
    """Assembled/matrix-free representation of rate*(J_eps * . - I) + a."""

    grid: Grid
    kernel: ScaledKernel
    growth: Optional[GrowthProfile]
    a_values: Optional[np.ndarray]
    taps: np.ndarray
    tail_mass: float
    reach: int
    dense_limit: int = DEFAULT_DENSE_LIMIT
    _conv_matrix: Optional[np.ndarray] = field(default=None, repr=False)
    _taps_fft: Optional[tuple] = field(default=None, repr=False)
    _kper_fft: Optional[np.ndarray] = field(default=None, repr=False)
    _kmass: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def rate(self) -> float:
        return self.kernel.rate

    @property
    def size(self) -> int:
        return self.grid.size

    @property
    def points_arg(self):
        pts = self.grid.points
        return pts[:, 0] if self.grid.dimension == 1 else pts

    # --- convolution paths --------------------------------------------------

    def convolve(self, u: np.ndarray, path: str = "fast") -> np.ndarray:
        """(J_eps * u) restricted to the grid; exterior contributes zero."""
        if u.shape != (self.size,):
            raise ValueError(f"expected grid function of length {self.size}")
        if path == "direct":
            return self.conv_matrix() @ u
        if path != "fast":
            raise ValueError(f"unknown convolution path {path!r}")
        if self.grid.topology == "torus":
            return self._fast_torus(u)
        return self._fast_ball(u)

    def _fast_ball(self, u: np.ndarray) -> np.ndarray:
        box = self.grid.embed(u)
        n = self.grid.cells_per_axis
        q = self.reach
        if self._taps_fft is None:
            shape = tuple(next_fast_len(n + 2 * q) for _ in range(self.grid.dimension))
            self._taps_fft = (shape, rfftn(self.taps, shape))
        shape, tf = self._taps_fft
        full = irfftn(rfftn(box, shape) * tf, shape)
        sl = tuple(slice(q, q + n) for _ in range(self.grid.dimension))
        out_box = full[sl] * self.grid.spacing**self.grid.dimension
        return self.grid.restrict(out_box)

    def _fast_torus(self, u: np.ndarray) -> np.ndarray:
        box = self.grid.embed(u)
        n = self.grid.cells_per_axis
        if self._kper_fft is None:
            kper = np.zeros(self.grid.box_shape)
            q = self.reach
            if self.grid.dimension == 1:
                for d in range(-q, q + 1):
                    kper[d % n] += self.taps[d + q]
            else:
                for dx in range(-q, q + 1):
                    for dy in range(-q, q + 1):
                        kper[dx % n, dy % n] += self.taps[dx + q, dy + q]
            self._kper_fft = rfftn(kper)
        out_box = irfftn(rfftn(box) * self._kper_fft, self.grid.box_shape)
        out_box *= self.grid.spacing**self.grid.dimension
        return self.grid.restrict(out_box)

    # --- dense forms ----------------------------------------------------------

    def conv_matrix(self) -> np.ndarray:
        """Dense matrix C with C[i,j] = w_j J_eps(x_i - x_j) (torus: wrapped)."""
        if self._conv_matrix is not None:
            return self._conv_matrix
        n = self.size
        if n > self.dense_limit:
            raise ResourceLimitError(f"{n} points exceeds dense limit {self.dense_limit}")
        q = self.reach
        hN = self.grid.spacing**self.grid.dimension
        bi = self.grid.box_index.astype(np.int64)
        n_axis = self.grid.cells_per_axis
        if self.grid.dimension == 1:
            d = bi[:, 0][:, None] - bi[:, 0][None, :]
            if self.grid.topology == "torus":
                kper = np.zeros(n_axis)
                for dd in range(-q, q + 1):
                    kper[dd % n_axis] += self.taps[dd + q]
                C = kper[d % n_axis]
            else:
                mask = np.abs(d) <= q
                C = np.where(mask, self.taps[np.clip(d + q, 0, 2 * q)], 0.0)
        else:
            dx = bi[:, 0][:, None] - bi[:, 0][None, :]
            dy = bi[:, 1][:, None] - bi[:, 1][None, :]
            if self.grid.topology == "torus":
                kper = np.zeros((n_axis, n_axis))
                for ddx in range(-q, q + 1):
                    for ddy in range(-q, q + 1):
                        kper[ddx % n_axis, ddy % n_axis] += self.taps[ddx + q, ddy + q]
                C = kper[dx % n_axis, dy % n_axis]
            else:
                mask = (np.abs(dx) <= q) & (np.abs(dy) <= q)
                C = np.where(
                    mask,
                    self.taps[np.clip(dx + q, 0, 2 * q), np.clip(dy + q, 0, 2 * q)],
                    0.0,
                )
        self._conv_matrix = C * hN
        return self._conv_matrix

    def matrix(self) -> np.ndarray:
        """Assembled A = rate (C - I) + diag(a)."""
        A = self.rate * (self.conv_matrix() - np.eye(self.size))
        if self.a_values is not None:
            A[np.diag_indices(self.size)] += self.a_values
        return A

    # --- operator application ---------------------------------------------------

    def apply(self, u: np.ndarray, include_growth: bool = True, path: str = "fast") -> np.ndarray:
        """rate (J_eps * u - u), plus a(x) u when include_growth is set."""
        out = self.rate * (self.convolve(u, path=path) - u)
        if include_growth:
            if self.a_values is None:
                raise ValueError("operator has no growth linearization attached")
            out = out + self.a_values * u
        return out

    def reaction(self, u: np.ndarray) -> np.ndarray:
        return self.growth.f(self.points_arg, u)

    def rhs(self, u: np.ndarray, path: str = "fast") -> np.ndarray:
        """Full stationary residual rate (J_eps * u - u) + f(x, u)."""
        return self.apply(u, include_growth=False, path=path) + self.reaction(u)

    # --- certified ingredients ---------------------------------------------------

    def kernel_mass(self) -> np.ndarray:
        """k(x_i) = sum_j w_j J_eps(x_i - x_j) <= 1 (deficit near the boundary)."""
        if self._kmass is None:
            self._kmass = self.convolve(np.ones(self.size))
        return self._kmass

    def perron_window(self) -> tuple[float, float]:
        """Certified enclosure of lambda_p of the assembled operator.

        Gershgorin row sums give lambda_max <= max(a - rate (1 - k)); the
        coordinate Rayleigh quotient gives lambda_max >= max(a) - rate.
        """
        a = self.a_values if self.a_values is not None else np.zeros(self.size)
        k = self.kernel_mass()
        lo = -float(np.max(a - self.rate * (1.0 - k)))
        hi = self.rate - float(np.max(a))
        return lo, hi

    def energy(self, u: np.ndarray) -> float:
        """(1/2) sum_ij w_i w_j J_eps(x_i - x_j) (u_i - u_j)^2."""
        k = self.kernel_mass()
        conv = self.convolve(u)
        w = self.grid.weights
        return float(np.sum(w * u * u * k) - np.sum(w * u * conv))

    def quadratic_form(self, u: np.ndarray) -> float:
        """<-(J_eps * u - u), u>_w, the lambda_v numerator at rate 1."""
        w = self.grid.weights
        return float(-np.sum(w * (self.convolve(u) - u) * u))


def build_operator(
    grid: Grid,
    kernel,
    growth: GrowthProfile | None = None,
    a_values: np.ndarray | None = None,
    tap_window: float | None = None,
    dense_limit: int = DEFAULT_DENSE_LIMIT,
) -> DiscreteOperator:
    """Assemble the discrete operator; ``kernel`` may be a base Kernel
    (used at scale eps=1, rate 1) or an explicitly rescaled one."""
    if isinstance(kernel, Kernel):
        kernel = rescale_kernel(kernel, 1.0, 0.0, 1.0)
    taps, tail_mass, reach = sample_taps(kernel, grid, window_radius=tap_window)
    if a_values is None and growth is not None:
        a_values = grid.sample(growth.a)
    return DiscreteOperator(
        grid=grid,
        kernel=kernel,
        growth=growth,
        a_values=None if a_values is None else np.asarray(a_values, dtype=float),
        taps=taps,
        tail_mass=tail_mass,
        reach=reach,
        dense_limit=dense_limit,
    )


def weighted_symmetrize(A: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """W^{1/2} A W^{-1/2}; symmetric for even kernels."""
    s = np.sqrt(weights)
    return (A * s[:, None]) / s[None, :]
