"""Iterated delay maps, the iteration counter n(t) and the largest delay h(t)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DelayDiffError, DelaySpec

FALLBACK_STEP_CAP = 100_000
AUDIT_POINTS = 10_000


class NonTerminationError(DelayDiffError, RuntimeError):
    """Orbit stayed in [0, inf) longer than the step cap allows."""


@dataclass(frozen=True)
class IterationTable:
    query_t: float
    n_of_t: int
    orbit: tuple
    landed_in_history: bool

    @property
    def final(self) -> float:
        """sigma_{n(t)}(t), the point where the orbit enters the history."""
        return self.orbit[-1]

    def to_dict(self):
        return {"t": self.query_t, "n": self.n_of_t, "orbit": list(self.orbit),
                "landed_in_history": self.landed_in_history}


@dataclass(frozen=True)
class LargestDelayValue:
    t: float
    h_of_t: float
    method: str

    def to_dict(self):
        return {"t": self.t, "h": self.h_of_t, "method": self.method}


def step_cap(delay: DelaySpec, t: float) -> int:
    """2 (ceil(t / delta) + 1) with delta the infimum of tau on [0, t]."""
    if t < 0:
        return 0
    delta, _ = delay.infimum(t)
    if not delta > 0:
        return FALLBACK_STEP_CAP
    return 2 * (math.ceil(t / delta) + 1)


def iterate_sigma(delay: DelaySpec, t: float, k: int) -> float | None:
    """sigma_k(t), or None when t is not in D_k.

    sigma_0 is the identity on the real line; t belongs to D_k (k >= 1) when
    its first k - 1 iterates are nonnegative.
    """
    s = float(t)
    for _ in range(int(k)):
        if s < 0:
            return None
        s = delay.sigma1(s)
    return s


def iteration_count(delay: DelaySpec, t: float) -> IterationTable:
    """Full orbit of t under sigma_1 until it becomes negative."""
    t = float(t)
    orbit = [t]
    cap = step_cap(delay, t)
    s = t
    while s >= 0:
        if len(orbit) > cap:
            raise NonTerminationError(f"orbit of t={t} exceeded {cap} steps")
        s = delay.sigma1(s)
        orbit.append(s)
    return IterationTable(t, len(orbit) - 1, tuple(orbit), True)


def iteration_counts(delay: DelaySpec, ts) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised n(t) and sigma_{n(t)}(t) for an array of query times."""
    ts = np.asarray(ts, dtype=float)
    s = ts.copy().ravel()
    n = np.zeros(s.shape, dtype=np.int64)
    tmax = float(np.max(ts)) if ts.size else 0.0
    cap = step_cap(delay, max(tmax, 0.0))
    active = s >= 0
    steps = 0
    while np.any(active):
        if steps > cap:
            raise NonTerminationError(f"orbits exceeded {cap} steps")
        s[active] = delay.sigma1(s[active])
        n[active] += 1
        active = s >= 0
        steps += 1
    return n.reshape(ts.shape), s.reshape(ts.shape)


def audit_grid(delay: DelaySpec, lo: float, hi: float, points: int = AUDIT_POINTS) -> np.ndarray:
    """Uniform grid on [lo, hi] merged with the delay's breakpoints."""
    bp = delay.breakpoints(hi)
    bp = bp[(bp >= lo) & (bp <= hi)]
    return np.unique(np.concatenate([np.linspace(lo, hi, points), bp]))


def _scan_sigma1(delay: DelaySpec, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    grid = audit_grid(delay, lo, hi)
    vals = delay.sigma1(grid)
    bp = delay.breakpoints(hi)
    bp = bp[(bp > lo) & (bp <= hi)]
    if bp.size:
        left = np.array([b - delay.left_limit(b) for b in bp])
        grid = np.concatenate([grid, bp])
        vals = np.concatenate([vals, left])
    return grid, vals


def largest_delay(delay: DelaySpec, t: float, scan_horizon: float) -> LargestDelayValue:
    """h(t) = t - inf_{s >= t} sigma_1(s).

    With nondecreasing sigma_1 this is tau(t).  Otherwise the infimum is taken
    over the audit grid of [t, scan_horizon] (breakpoints and their left limits
    included), which yields a lower bound.
    """
    t = float(t)
    if scan_horizon < t:
        raise ValueError("scan_horizon must be >= t")
    if delay.sigma1_monotone == "increasing":
        return LargestDelayValue(t, delay(t), "monotone-shortcut")
    _, vals = _scan_sigma1(delay, t, max(scan_horizon, t))
    inf = min(float(np.min(vals)), delay.sigma1(t))
    return LargestDelayValue(t, t - inf, f"horizon-scan({scan_horizon!r})")


def largest_delay_batch(delay: DelaySpec, ts, scan_horizon: float) -> np.ndarray:
    """h on many times at once; t - h(t) is nondecreasing by construction."""
    ts = np.asarray(ts, dtype=float)
    if delay.sigma1_monotone == "increasing":
        return delay(ts)
    grid, vals = _scan_sigma1(delay, 0.0, scan_horizon)
    allg = np.concatenate([grid, ts])
    allv = np.concatenate([vals, delay.sigma1(ts)])
    order = np.argsort(allg, kind="stable")
    suffix = np.minimum.accumulate(allv[order][::-1])[::-1]
    pos = np.searchsorted(allg[order], ts, side="left")
    return ts - suffix[pos]
