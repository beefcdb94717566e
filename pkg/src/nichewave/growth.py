"""Heterogeneous KPP growth profiles a(x) = d_s f(x, 0) with hostile exterior.

The default reaction is logistic, f(x, s) = s (a(x) - s), whose saturation
is S(x) = a^+(x). A general KPP triple (f, a, S) can be supplied instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError

GROWTH_FAMILIES = ("bump", "plateau", "constant", "tabulated")


@dataclass(frozen=True)
class GrowthProfile:
    family: str
    dimension: int = 1
    params: dict = field(default_factory=dict)
    # general KPP triple; None selects the logistic defaults built on a()
    f_fn: Callable | None = None
    dfds_fn: Callable | None = None
    saturation_fn: Callable | None = None

    def __post_init__(self):
        if self.family not in GROWTH_FAMILIES:
            raise ConfigError(f"unknown growth family {self.family!r}")
        if self.family == "bump":
            if float(self.params.get("a_min", -1.0)) >= 0:
                raise ConfigError("bump growth needs a_min < 0 (hostile exterior)")
        if self.family == "plateau":
            if float(self.params.get("a_min", -1.0)) >= 0:
                raise ConfigError("plateau growth needs a_min < 0")

    # --- linearized growth rate ------------------------------------------

    def a_of_r(self, r):
        r = np.asarray(r, dtype=float)
        p = self.params
        if self.family == "bump":
            a0 = float(p.get("a0", 1.0))
            b = float(p.get("b", 1.0))
            a_min = float(p.get("a_min", -1.0))
            return np.maximum(a0 - b * r * r, a_min)
        if self.family == "plateau":
            a0 = float(p.get("a0", 1.0))
            r0 = float(p.get("r0", 1.0))
            w = float(p.get("width", 1.0))
            a_min = float(p.get("a_min", -1.0))
            ramp = a0 - (a0 - a_min) * (r - r0) / w
            return np.where(r <= r0, a0, np.where(r >= r0 + w, a_min, ramp))
        if self.family == "constant":
            return np.full_like(r, float(p.get("value", 0.0)))
        rt = np.asarray(p["r"], dtype=float)
        vt = np.asarray(p["values"], dtype=float)
        return np.interp(r, rt, vt)

    def a(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim <= 1:
            r = np.abs(x)
        else:
            r = np.sqrt(np.sum(x * x, axis=-1))
        return self.a_of_r(r)

    # --- reaction ----------------------------------------------------------

    def f(self, x, s):
        if self.f_fn is not None:
            return self.f_fn(x, s)
        return s * (self.a(x) - s)

    def dfds(self, x, s):
        if self.dfds_fn is not None:
            return self.dfds_fn(x, s)
        return self.a(x) - 2.0 * np.asarray(s, dtype=float)

    def saturation(self, x):
        """S(x) with f(x, S(x)) <= 0; logistic default a^+(x)."""
        if self.saturation_fn is not None:
            return self.saturation_fn(x)
        return np.maximum(self.a(x), 0.0)

    def lipschitz_f(self, s_max: float, points, a_values: np.ndarray) -> float:
        """sup |d_s f| over the grid and s in [0, s_max]."""
        if self.dfds_fn is None:
            # logistic: |a - 2s| is maximal at an endpoint in s
            return float(max(np.max(np.abs(a_values)), np.max(np.abs(a_values - 2.0 * s_max))))
        samples = [np.max(np.abs(self.dfds_fn(points, s))) for s in (0.0, 0.5 * s_max, s_max)]
        return float(max(samples))

    # --- hostile-exterior geometry ------------------------------------------

    @property
    def sup_a(self) -> float:
        p = self.params
        if self.family == "bump":
            return float(p.get("a0", 1.0))
        if self.family == "plateau":
            return float(p.get("a0", 1.0))
        if self.family == "constant":
            return float(p.get("value", 0.0))
        return float(np.max(np.asarray(p["values"], dtype=float)))

    @property
    def tail_value(self) -> float:
        """a(x) for |x| beyond the profile's core."""
        p = self.params
        if self.family in ("bump", "plateau"):
            return float(p.get("a_min", -1.0))
        if self.family == "constant":
            return float(p.get("value", 0.0))
        return float(np.asarray(p["values"], dtype=float)[-1])

    @property
    def hostile(self) -> bool:
        return self.tail_value < 0

    @property
    def nu(self) -> float | None:
        """a(x) <= -nu outside ``core_radius``; None without hostile exterior."""
        return -self.tail_value if self.hostile else None

    def radius_where_a_below(self, level: float) -> float:
        """Smallest r with a(x) <= level for all |x| >= r (level > tail value)."""
        if not self.hostile or level < self.tail_value:
            raise ConfigError("growth profile has no hostile exterior at this level")
        p = self.params
        if self.family == "bump":
            a0 = float(p.get("a0", 1.0))
            b = float(p.get("b", 1.0))
            if a0 <= level:
                return 0.0
            return math.sqrt((a0 - level) / b)
        if self.family == "plateau":
            a0 = float(p.get("a0", 1.0))
            r0 = float(p.get("r0", 1.0))
            w = float(p.get("width", 1.0))
            a_min = float(p.get("a_min", -1.0))
            if a0 <= level:
                return 0.0
            return r0 + w * (a0 - level) / (a0 - a_min)
        if self.family == "constant":
            return 0.0
        rt = np.asarray(p["r"], dtype=float)
        vt = np.asarray(p["values"], dtype=float)
        above = np.nonzero(vt > level)[0]
        return float(rt[above[-1] + 1]) if above.size else 0.0

    @property
    def core_radius(self) -> float:
        return self.radius_where_a_below(self.tail_value)

    @property
    def halfnu_radius(self) -> float:
        """R0 with a(x) <= -nu/2 for |x| >= R0 (super-solution construction)."""
        return self.radius_where_a_below(-0.5 * self.nu)


def bump_growth(a0: float, b: float = 1.0, a_min: float = -1.0, dimension: int = 1) -> GrowthProfile:
    return GrowthProfile("bump", dimension=dimension, params={"a0": a0, "b": b, "a_min": a_min})


def constant_growth(value: float, dimension: int = 1) -> GrowthProfile:
    return GrowthProfile("constant", dimension=dimension, params={"value": value})
