"""Solution construction: representation formula, stepping, window norms,
the non-uniqueness family and a state-dependent solver."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (ConstantSignal, DelayDiffError, HistoryEvaluationError, Scenario,
                   Signal, SystemMatrix)
from .kernel import FALLBACK_STEP_CAP, NonTerminationError, iteration_counts


class InterpolationOrderError(DelayDiffError, RuntimeError):
    """Delayed argument fell outside the already constructed history."""


@dataclass(eq=False)
class Trajectory:
    """Samples of a solution together with an evaluator for off-grid times."""

    scenario: Scenario | None
    times: np.ndarray
    values: np.ndarray
    method: str
    residual_report: float = 0.0
    evaluator: Callable | None = field(default=None, repr=False)
    delay_trace: np.ndarray | None = None
    notes: dict = field(default_factory=dict)

    @property
    def samples(self):
        return list(zip(self.times.tolist(), self.values.tolist()))

    def __call__(self, ts):
        if self.evaluator is None:
            raise ValueError("trajectory has no evaluator")
        return self.evaluator(ts)

    def to_csv(self, path) -> None:
        d = self.values.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x_{i + 1}" for i in range(d)])
            for t, row in zip(self.times, self.values):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in row])

    def to_dict(self):
        return {"method": self.method, "residual": self.residual_report,
                "t": self.times.tolist(), "x": self.values.tolist(), "notes": self.notes}


# ---------------------------------------------------------------------------
# Representation formula
# ---------------------------------------------------------------------------


def representation(scn: Scenario, ts) -> np.ndarray:
    """x(t) = A^n(t) x0(sigma_n(t)(t)) for an array of times; shape (N, d)."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    out = np.empty((ts.size, scn.dim))
    n, final = iteration_counts(scn.delay, ts)
    hist = scn.initial(final)
    for k in np.unique(n):
        sel = n == k
        out[sel] = hist[sel] @ scn.matrix.power(k).T
    return out


def solve_representation(scn: Scenario, t: float) -> np.ndarray:
    """Solution at a single time through the representation formula."""
    return representation(scn, [t])[0]


def compatibility_gap(scn: Scenario) -> float:
    """|x0(0-) - A x0(-tau(0))|; zero when the history is continuous-compatible."""
    try:
        left = scn.initial.left_limit_at_end()
        back = scn.initial(-scn.delay(0.0))
    except HistoryEvaluationError:
        return math.nan
    return float(np.linalg.norm(left - scn.matrix.entries @ back))


def _residual(scn: Scenario, ts: np.ndarray, xs: np.ndarray, evaluator) -> float:
    pos = ts >= 0
    if not np.any(pos):
        return 0.0
    s = scn.delay.sigma1(ts[pos])
    try:
        back = evaluator(s)
    except (HistoryEvaluationError, InterpolationOrderError):
        return math.nan
    res = xs[pos] - back @ scn.matrix.entries.T
    return float(np.max(np.linalg.norm(res, axis=1)))


def solve_trajectory(scn: Scenario) -> Trajectory:
    """Representation-formula solution on the scenario's output grid."""
    ts = np.asarray(scn.grid)
    xs = representation(scn, ts)

    def ev(q):
        return representation(scn, q)

    traj = Trajectory(scn, ts.copy(), xs, "representation", evaluator=ev)
    traj.residual_report = _residual(scn, ts, xs, ev)
    traj.notes["compatibility_gap"] = compatibility_gap(scn)
    return traj


# ---------------------------------------------------------------------------
# Stepping
# ---------------------------------------------------------------------------


class _SteppedHistory:
    """The solution built so far, evaluated exactly or by interpolation."""

    def __init__(self, scn: Scenario, mode: str, cap: int):
        self.scn = scn
        self.A = scn.matrix.entries
        self.mode = mode
        self.cap = cap
        self.cache: dict[float, np.ndarray] = {}
        self.t_done: list[float] = []
        self.x_done: list[np.ndarray] = []
        self.frontier = 0.0

    def value(self, s: float) -> np.ndarray:
        if s < 0:
            return self.scn.initial(s)
        if self.mode == "linear":
            return self._interp(s)
        chain = []
        while s >= 0 and s not in self.cache:
            if len(chain) > self.cap:
                raise NonTerminationError("stepping recursion exceeded the step cap")
            if s >= self.frontier:
                raise InterpolationOrderError(
                    f"delayed argument {s!r} beyond constructed history {self.frontier!r}")
            chain.append(s)
            s = self.scn.delay.sigma1(s)
        x = self.scn.initial(s) if s < 0 else self.cache[s]
        for c in reversed(chain):
            x = self.A @ x
            self.cache[c] = x
        return x

    def _interp(self, s: float) -> np.ndarray:
        t = self.t_done
        if not t or s > t[-1] or s < t[0]:
            raise InterpolationOrderError(f"delayed argument {s!r} outside constructed samples")
        j = int(np.searchsorted(t, s, side="right")) - 1
        if t[j] == s or j == len(t) - 1:
            return self.x_done[j]
        w = (s - t[j]) / (t[j + 1] - t[j])
        return (1 - w) * self.x_done[j] + w * self.x_done[j + 1]

    def record(self, t: float, x: np.ndarray) -> None:
        self.cache[t] = x
        self.t_done.append(t)
        self.x_done.append(x)


def solve_stepping(scn: Scenario, mode: str = "exact") -> Trajectory:
    """Block-by-block construction of the solution on [0, T].

    Blocks have length delta = T / ceil(T / delta~) with delta~ half the
    infimum of tau on [0, T], so every delayed argument of a block lies in
    blocks already built.  ``mode='exact'`` evaluates the constructed
    solution at off-grid arguments by applying the equation to it again;
    ``mode='linear'`` interpolates the constructed samples instead.

    If tau is not bounded away from 0 the block structure is unavailable;
    the construction then runs as a single block and relies on the orbits
    terminating, which is recorded in ``notes['h1_verified']``.
    """
    if mode not in ("exact", "linear"):
        raise ValueError("mode must be 'exact' or 'linear'")
    T = scn.horizon
    inf_tau, _ = scn.delay.infimum(T)
    ts = np.asarray(scn.grid)
    xs = np.empty((ts.size, scn.dim))
    neg = ts < 0
    if np.any(neg):
        xs[neg] = scn.initial(ts[neg])
    if inf_tau > 0:
        M = math.ceil(T / (0.5 * inf_tau))
        delta = T / M
        cap = 2 * (M + 1)
    else:
        M, delta, cap = 1, T, FALLBACK_STEP_CAP
    hist = _SteppedHistory(scn, mode, cap)
    pos_idx = np.nonzero(~neg)[0]
    blocks = np.minimum((ts[pos_idx] / delta).astype(np.int64), M - 1)
    for k in range(M):
        start = k * delta
        hist.frontier = start if inf_tau > 0 else math.inf
        for i in pos_idx[blocks == k]:
            t = float(ts[i])
            s = scn.delay.sigma1(t)
            if inf_tau > 0 and s >= start:
                raise InterpolationOrderError(f"sigma1({t!r}) = {s!r} is not below block start {start!r}")
            x = hist.A @ hist.value(s)
            xs[i] = x
            hist.record(t, x)
    hist.frontier = math.inf

    def ev(q):
        q = np.atleast_1d(np.asarray(q, dtype=float))
        return np.array([hist.value(float(s)) for s in q]).reshape(q.size, scn.dim)

    traj = Trajectory(scn, ts.copy(), xs, "stepping", evaluator=ev)
    traj.residual_report = _residual(scn, ts, xs, ev)
    traj.notes.update(blocks=M, block_length=delta, h1_verified=inf_tau > 0, mode=mode,
                      compatibility_gap=compatibility_gap(scn))
    return traj


# ---------------------------------------------------------------------------
# Window norms
# ---------------------------------------------------------------------------


def _norms(x: np.ndarray, weight) -> np.ndarray:
    if weight is not None:
        x = x @ np.asarray(weight).T
    return np.linalg.norm(x, axis=1)


def _integrate_power(f, a: float, b: float, p: float, cells: int) -> float:
    """Composite midpoint rule for |f|^p on [a, b], with jump cells split."""
    edges = np.linspace(a, b, cells + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    h = (b - a) / cells
    fm = f(mids)
    total = float(np.sum(fm ** p) * h)
    # cells whose edge and midpoint values disagree sharply contain a jump
    fe = f(edges)
    scale = max(float(np.max(fm)), 1e-300)
    diffs = np.maximum(np.abs(fe[:-1] - fm), np.abs(fe[1:] - fm))
    med = float(np.median(diffs)) if diffs.size else 0.0
    jump = np.nonzero(diffs > 1e-9 * scale + 8 * med)[0]
    for j in jump:
        lo, hi = edges[j], edges[j + 1]
        left_val, right_val = f(np.array([lo + 1e-3 * h]))[0], f(np.array([hi - 1e-3 * h]))[0]
        l, r = lo, hi
        for _ in range(60):
            m = 0.5 * (l + r)
            vm = f(np.array([m]))[0]
            if abs(vm - left_val) <= abs(vm - right_val):
                l = m
            else:
                r = m
        xi = 0.5 * (l + r)
        sub = 16
        part = 0.0
        for u, v in ((lo, xi), (xi, hi)):
            if v > u:
                e = np.linspace(u, v, sub + 1)
                part += float(np.sum(f(0.5 * (e[:-1] + e[1:])) ** p)) * (v - u) / sub
        total += part - fm[j] ** p * h
    return total


def window_norm(traj: Trajectory, t: float, p: float, window: float,
                weight=None, cells: int = 2048) -> float:
    """Norm of the segment x_t on [t - window, t].

    p = inf takes the largest sample in the window; finite p integrates
    |x|^p with the composite midpoint rule (requires an evaluator) and
    returns the p-th root.
    """
    lo = t - window
    left = traj.times[0]
    if traj.scenario is not None:
        left = min(left, traj.scenario.initial.support[0])
    if lo < left - 1e-12 or t > traj.times[-1] + 1e-12:
        raise ValueError(f"window [{lo}, {t}] exceeds the available history")
    if math.isinf(p):
        sel = (traj.times >= lo) & (traj.times <= t)
        if not np.any(sel):
            raise ValueError("no samples in the window")
        return float(np.max(_norms(traj.values[sel], weight)))
    if traj.evaluator is None:
        raise ValueError("finite-p window norms need a trajectory evaluator")

    def f(q):
        return _norms(traj.evaluator(q), weight)

    return _integrate_power(f, lo, t, p, cells) ** (1.0 / p)


# ---------------------------------------------------------------------------
# Non-uniqueness family
# ---------------------------------------------------------------------------


def _eigpair(A: SystemMatrix, which: int = 0):
    lam, V = np.linalg.eig(A.entries)
    order = np.argsort(-np.abs(lam), kind="stable")
    lam, V = lam[order], V[:, order]
    nz = np.nonzero(np.abs(lam) > 1e-14)[0]
    if nz.size == 0:
        raise ValueError("matrix is nilpotent: no nonzero eigenvalue")
    j = nz[min(which, nz.size - 1)]
    v = V[:, j]
    k = int(np.argmax(np.abs(v)))
    v = v / v[k] * abs(v[k])
    return complex(lam[j]), v


def nonuniqueness_family(A: SystemMatrix, rho: complex, t, which: int = 0) -> np.ndarray:
    """Re(rho t^alpha v) with A v = lambda v and exp(alpha) = lambda.

    Each member satisfies x(t) = A x(t / e) for t > 0.
    """
    lam, v = _eigpair(A, which)
    alpha = np.log(lam)
    t = np.asarray(t, dtype=float)
    z = complex(rho) * np.exp(alpha * np.log(t))
    out = np.real(np.multiply.outer(z, v))
    return out


def nonuniqueness_solution(A: SystemMatrix, rho: complex, x0: Signal, which: int = 0):
    """Whole-line function: x0 before 0, A x0(-1) at 0, the family after."""
    A = A if isinstance(A, SystemMatrix) else SystemMatrix(A)

    def x(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = np.empty((ts.size, A.dim))
        neg, zero, pos = ts < 0, ts == 0, ts > 0
        if np.any(neg):
            out[neg] = x0(ts[neg])
        if np.any(zero):
            out[zero] = A.entries @ x0(-1.0)
        if np.any(pos):
            out[pos] = nonuniqueness_family(A, rho, ts[pos], which)
        return out

    return x


# ---------------------------------------------------------------------------
# State-dependent delay
# ---------------------------------------------------------------------------


def solve_state_dependent(A, tau_sd: Callable, x0: Signal, T: float, tau_min: float,
                          tau_max: float, step: float | None = None) -> Trajectory:
    """Explicit stepping for x(t) = A x(t - tau(t, x_t)).

    ``tau_sd(t, window)`` receives a callable ``window(s)`` returning x(t + s)
    for s in [-tau_max, 0]; at s = 0 it returns the left limit x(t-).
    Samples are taken every ``step`` (default tau_min / 20) and off-grid
    delayed arguments are linearly interpolated between constructed samples.
    """
    A = A if isinstance(A, SystemMatrix) else SystemMatrix(A)
    if not 0 < tau_min <= tau_max < math.inf:
        raise ValueError("need 0 < tau_min <= tau_max < inf")
    h = tau_min / 20 if step is None else float(step)
    if not 0 < h < tau_min:
        raise ValueError("step must be below tau_min")
    N = int(math.ceil(T / h - 1e-12))
    ts = np.arange(N + 1) * h
    xs = np.zeros((N + 1, A.dim))
    trace = np.zeros(N + 1)

    def X(u: float, i: int) -> np.ndarray:
        if u < 0:
            return x0(u)
        if u > ts[i - 1] + 1e-12 * max(1.0, u):
            raise InterpolationOrderError(f"delayed argument {u!r} ahead of constructed data")
        j = min(int(u // h), i - 1)
        while j > 0 and ts[j] > u:
            j -= 1
        while j + 1 < i and ts[j + 1] <= u:
            j += 1
        if j + 1 >= i or ts[j] == u:
            return xs[j]
        w = (u - ts[j]) / h
        return (1 - w) * xs[j] + w * xs[j + 1]

    for i, t in enumerate(ts):
        t = float(t)

        def window(s, i=i, t=t):
            if s == 0:
                return x0.left_limit_at_end() if i == 0 else xs[i - 1]
            return X(t + s, i) if t + s >= 0 else x0(t + s)

        tau = float(tau_sd(t, window))
        if not tau_min - 1e-12 <= tau <= tau_max + 1e-12:
            raise ValueError(f"state-dependent delay {tau!r} outside [{tau_min}, {tau_max}]")
        trace[i] = tau
        xs[i] = A.entries @ X(t - tau, i)

    def ev(q):
        q = np.atleast_1d(np.asarray(q, dtype=float))
        out = np.empty((q.size, A.dim))
        for k, u in enumerate(q):
            out[k] = x0(u) if u < 0 else X(u, N + 1) if u < ts[-1] else xs[-1]
        return out

    traj = Trajectory(None, ts, xs, "statedep", evaluator=ev, delay_trace=trace)
    res = [np.linalg.norm(xs[i] - A.entries @ X(ts[i] - trace[i], i)) for i in range(N + 1)]
    traj.residual_report = float(max(res)) if res else 0.0
    traj.notes.update(step=h, tau_min=tau_min, tau_max=tau_max)
    return traj


def zero_signal(dim: int, support=(-1.0, 0.0)) -> ConstantSignal:
    return ConstantSignal(tuple([0.0] * dim), support)
