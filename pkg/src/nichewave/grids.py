"""Uniform cell-centered grids on a ball or periodic box with midpoint weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ResourceLimitError

TOPOLOGIES = ("ball-truncated", "torus")

DEFAULT_MAX_CELLS_PER_AXIS = 8192


@dataclass(frozen=True)
class Grid:
    """Cell centers of the box [-R, R)^N, optionally truncated to |x| <= R.

    Points live on the exact integer lattice x = -R + (k + 1/2) h, which is
    what makes kernel-tap lookups and nested-R comparisons exact.
    """

    dimension: int
    radius: float
    spacing: float
    topology: str
    points: np.ndarray      # (n, N) coordinates
    weights: np.ndarray     # (n,) midpoint weights, all h^N
    cells_per_axis: int
    box_index: np.ndarray   # (n, N) integer cell indices into the box

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def box_shape(self) -> tuple:
        return (self.cells_per_axis,) * self.dimension

    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.points * self.points, axis=1))

    def axis_points(self) -> np.ndarray:
        """Coordinates along one axis (useful for 1-D output files)."""
        k = np.arange(self.cells_per_axis)
        return -self.radius + (k + 0.5) * self.spacing

    def embed(self, u: np.ndarray) -> np.ndarray:
        """Scatter a grid function into the full box (zeros off the ball)."""
        box = np.zeros(self.box_shape, dtype=float)
        box[tuple(self.box_index.T)] = u
        return box

    def restrict(self, box: np.ndarray) -> np.ndarray:
        """Gather box values back onto the grid points."""
        return box[tuple(self.box_index.T)]

    def sample(self, fn) -> np.ndarray:
        """Evaluate a callable of the point coordinates on the grid."""
        if self.dimension == 1:
            return np.asarray(fn(self.points[:, 0]), dtype=float)
        return np.asarray(fn(self.points), dtype=float)

    def integrate(self, u: np.ndarray) -> float:
        return float(np.sum(self.weights * u))

    def common_with(self, other: "Grid") -> tuple[np.ndarray, np.ndarray]:
        """Index arrays mapping shared lattice points of self and other.

        Requires equal spacing; radii must differ by an integer cell count.
        """
        if abs(self.spacing - other.spacing) > 1e-12 * self.spacing:
            raise ConfigError("grids must share spacing to be compared")
        shift = (other.radius - self.radius) / self.spacing
        if abs(shift - round(shift)) > 1e-9:
            raise ConfigError("grid radii differ by a non-integer cell count")
        offset = round(shift)
        lookup = {tuple(ix): j for j, ix in enumerate(other.box_index)}
        idx_self, idx_other = [], []
        for i, ix in enumerate(self.box_index):
            j = lookup.get(tuple(ix + offset))
            if j is not None:
                idx_self.append(i)
                idx_other.append(j)
        return np.asarray(idx_self, dtype=int), np.asarray(idx_other, dtype=int)


def build_grid(
    dimension: int,
    radius: float,
    spacing: float,
    topology: str = "ball-truncated",
    max_cells_per_axis: int = DEFAULT_MAX_CELLS_PER_AXIS,
) -> Grid:
    """Build the uniform cell-centered grid.

    2R/h must be an integer number of cells (callers snap R); the cells per
    axis must not exceed ``max_cells_per_axis``.
    """
    if topology not in TOPOLOGIES:
        raise ConfigError(f"unknown topology {topology!r}")
    if dimension not in (1, 2):
        raise ConfigError("dimension must be 1 or 2")
    if not (0 < spacing < radius):
        raise ConfigError("need 0 < h < R")
    n_axis_f = 2.0 * radius / spacing
    n_axis = int(round(n_axis_f))
    if abs(n_axis_f - n_axis) > 1e-9 * n_axis_f:
        raise ConfigError(f"2R/h = {n_axis_f} is not an integer cell count; snap R to a multiple of h")
    if n_axis > max_cells_per_axis:
        raise ResourceLimitError(f"{n_axis} cells per axis exceeds the limit {max_cells_per_axis}")

    axis = -radius + (np.arange(n_axis) + 0.5) * spacing
    if dimension == 1:
        pts = axis[:, None]
        idx = np.arange(n_axis)[:, None]
    else:
        gx, gy = np.meshgrid(axis, axis, indexing="ij")
        pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
        ix, iy = np.meshgrid(np.arange(n_axis), np.arange(n_axis), indexing="ij")
        idx = np.stack([ix.ravel(), iy.ravel()], axis=1)

    if topology == "ball-truncated":
        keep = np.sqrt(np.sum(pts * pts, axis=1)) <= radius + 1e-12
        pts = pts[keep]
        idx = idx[keep]

    weights = np.full(pts.shape[0], spacing**dimension)
    return Grid(
        dimension=dimension,
        radius=float(radius),
        spacing=float(spacing),
        topology=topology,
        points=pts,
        weights=weights,
        cells_per_axis=n_axis,
        box_index=idx,
    )


def snap_radius(radius: float, spacing: float) -> float:
    """Round R up to the nearest multiple of h.

    Keeps 2R/h an even integer and makes any two snapped radii differ by an
    integer cell count, so their grids nest exactly.
    """
    return int(np.ceil(radius / spacing - 1e-12)) * spacing
