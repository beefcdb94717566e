"""Explicit time integration of du/dt = rate (J_eps * u - u) + f(x, u).

Explicit Euler under dt <= 0.5 / (rate + L_f) makes the one-step map
order-preserving and positivity-preserving on the invariant region, which
is exactly what the comparison-based long-time claims need discretely.
Accuracy order is deliberately traded for provable monotone structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MonotonicityViolationError, NumericalFailureError, StepSizeError
from .operators import DiscreteOperator
from .spectral import SpectralEstimate

_STEP_SLACK = 1e-12


@dataclass
class EvolutionTrace:
    times: np.ndarray
    sup_norm: np.ndarray
    dist_sup: np.ndarray       # nan entries when no reference state given
    dist_l1: np.ndarray
    mass: np.ndarray
    monotone_flag: str         # "increasing" | "decreasing" | "neither"

    def final(self) -> dict:
        return {
            "t": float(self.times[-1]),
            "sup_norm": float(self.sup_norm[-1]),
            "dist_sup": float(self.dist_sup[-1]),
            "dist_l1": float(self.dist_l1[-1]),
            "mass": float(self.mass[-1]),
        }


def stable_step(op: DiscreteOperator, u0_sup: float) -> float:
    """Largest dt with a monotone, positivity-preserving Euler step."""
    sat = np.asarray(op.growth.saturation(op.points_arg), dtype=float)
    s_max = max(float(u0_sup), float(np.max(sat)))
    lf = op.growth.lipschitz_f(s_max, op.points_arg, op.a_values)
    return 0.5 / (op.rate + lf)


def evolve(
    op: DiscreteOperator,
    u0: np.ndarray,
    horizon: float,
    dt: float | None = None,
    stride: float = 1.0,
    stationary: np.ndarray | None = None,
    enforce: str | None = None,
) -> tuple[EvolutionTrace, np.ndarray]:
    """Integrate to the horizon, recording monitors every ``stride`` time units.

    ``enforce`` = "increasing" / "decreasing" turns the pointwise comparison
    of consecutive steps into a hard assertion (sub/super-solution runs).
    """
    u = np.asarray(u0, dtype=float).copy()
    if np.any(u < 0):
        raise ValueError("initial data must be nonnegative")
    bound = stable_step(op, float(np.max(u)))
    if dt is None:
        dt = bound
    elif dt > bound * (1.0 + 1e-12):
        raise StepSizeError(f"dt={dt} exceeds the monotone-stability bound {bound}", bound=bound)

    n_steps = int(math.ceil(horizon / dt - 1e-12))
    w = op.grid.weights
    inc_ok = True
    dec_ok = True

    times = [0.0]
    sups = [float(np.max(u))]
    dsup = [float(np.max(np.abs(u - stationary))) if stationary is not None else math.nan]
    dl1 = [float(np.sum(w * np.abs(u - stationary))) if stationary is not None else math.nan]
    mass = [float(np.sum(w * u))]

    next_record = stride
    t = 0.0
    for step in range(1, n_steps + 1):
        u_new = u + dt * op.rhs(u)
        t = step * dt
        if enforce == "increasing" and np.min(u_new - u) < -_STEP_SLACK:
            raise MonotonicityViolationError(
                f"sub-solution run decreased at t={t:.4f} by {-np.min(u_new - u):.3e}"
            )
        if enforce == "decreasing" and np.max(u_new - u) > _STEP_SLACK:
            raise MonotonicityViolationError(
                f"super-solution run increased at t={t:.4f} by {np.max(u_new - u):.3e}"
            )
        inc_ok = inc_ok and bool(np.min(u_new - u) >= -_STEP_SLACK)
        dec_ok = dec_ok and bool(np.max(u_new - u) <= _STEP_SLACK)
        u = u_new
        if t + 1e-12 >= next_record or step == n_steps:
            s = float(np.max(np.abs(u)))
            if not math.isfinite(s):
                raise NumericalFailureError(f"non-finite state at t={t:.4f}")
            times.append(t)
            sups.append(s)
            dsup.append(float(np.max(np.abs(u - stationary))) if stationary is not None else math.nan)
            dl1.append(float(np.sum(w * np.abs(u - stationary))) if stationary is not None else math.nan)
            mass.append(float(np.sum(w * u)))
            while next_record <= t + 1e-12:
                next_record += stride

    if inc_ok and not dec_ok:
        flag = "increasing"
    elif dec_ok and not inc_ok:
        flag = "decreasing"
    elif inc_ok and dec_ok:
        flag = "increasing"  # constant in time counts as both; report weakly
    else:
        flag = "neither"
    trace = EvolutionTrace(
        times=np.asarray(times),
        sup_norm=np.asarray(sups),
        dist_sup=np.asarray(dsup),
        dist_l1=np.asarray(dl1),
        mass=np.asarray(mass),
        monotone_flag=flag,
    )
    return trace, u


def comparison_monotonicity_test(
    op: DiscreteOperator,
    u0: np.ndarray,
    kind: str,
    horizon: float = 10.0,
    dt: float | None = None,
) -> str:
    """Verify u0 is a discrete sub/super-solution, run, and assert the
    corresponding time monotonicity pointwise (slack 1e-12 per step)."""
    r = op.rhs(np.asarray(u0, dtype=float))
    slack = _STEP_SLACK * (1.0 + op.rate)
    if kind == "sub":
        if np.min(r) < -slack:
            raise MonotonicityViolationError(f"u0 is not a sub-solution: min residual {np.min(r):.3e}")
        enforce = "increasing"
    elif kind == "super":
        if np.max(r) > slack:
            raise MonotonicityViolationError(f"u0 is not a super-solution: max residual {np.max(r):.3e}")
        enforce = "decreasing"
    else:
        raise ValueError("kind must be 'sub' or 'super'")
    trace, _ = evolve(op, u0, horizon, dt=dt, enforce=enforce)
    return trace.monotone_flag


@dataclass
class LongTimeVerdict:
    verdict: str               # "extinction" | "persistence-converged" | "undecided"
    trace: EvolutionTrace
    final_state: np.ndarray
    final_sup: float
    final_dist_sup: float
    final_dist_l1: float


def long_time_verdict(
    op: DiscreteOperator,
    u0: np.ndarray,
    horizon: float,
    tol: float,
    lam: SpectralEstimate,
    stationary: np.ndarray | None = None,
    dt: float | None = None,
    stride: float = 1.0,
    u0_integrable: bool = True,
) -> LongTimeVerdict:
    """Classify the long-time behaviour against the certified lambda_p sign.

    A bracket straddling zero is reported undecided regardless of the
    integration evidence (never assert the dichotomy without a certificate).
    """
    trace, u = evolve(op, u0, horizon, dt=dt, stride=stride, stationary=stationary)
    final_sup = float(trace.sup_norm[-1])
    final_dsup = float(trace.dist_sup[-1])
    final_dl1 = float(trace.dist_l1[-1])

    if lam.sign == "straddle":
        verdict = "undecided"
    else:
        tail = trace.sup_norm[-min(10, len(trace.sup_norm)):]
        eventually_decreasing = bool(np.all(np.diff(tail) <= tol))
        if final_sup <= tol and eventually_decreasing:
            verdict = "extinction"
        elif stationary is not None and final_dsup <= tol and (not u0_integrable or final_dl1 <= tol):
            verdict = "persistence-converged"
        else:
            verdict = "undecided"
    return LongTimeVerdict(
        verdict=verdict,
        trace=trace,
        final_state=u,
        final_sup=final_sup,
        final_dist_sup=final_dsup,
        final_dist_l1=final_dl1,
    )
