"""Transport equation u_t + lambda(t, x) u_x = 0 on [0, 1] with u(t, 0) = A u(t, 1).

Characteristics reduce it to x(t) = A x(t - tau(t)) for v(t) = u(t, 0).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (DelayDiffError, FunctionSignal, Scenario, Signal, SystemMatrix,
                   TransportInducedDelay)
from .solver import representation


class BracketError(DelayDiffError, RuntimeError):
    """Root not inside the bracket implied by the speed bounds."""


@dataclass(frozen=True)
class TransportField:
    """Speed field lambda(t, x).

    kind ``constant``: lambda0.
    kind ``sum``: c0 + ct sin(wt t + pt) + cx sin(wx x + px).
    kind ``separable``: (a0 + a1 sin(wa t)) (b0 + b1 sin(wb x)).
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("constant", "sum", "separable"):
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.lambda_min <= 0:
            raise ValueError("speed field must stay positive")

    @classmethod
    def constant(cls, lambda0: float) -> "TransportField":
        return cls("constant", {"lambda0": float(lambda0)})

    @classmethod
    def sinusoidal(cls, c0: float, cx: float = 0.0, wx: float = 1.0, px: float = 0.0,
                   ct: float = 0.0, wt: float = 1.0, pt: float = 0.0) -> "TransportField":
        return cls("sum", dict(c0=c0, cx=cx, wx=wx, px=px, ct=ct, wt=wt, pt=pt))

    @classmethod
    def separable(cls, a0: float, a1: float, wa: float, b0: float, b1: float,
                  wb: float) -> "TransportField":
        return cls("separable", dict(a0=a0, a1=a1, wa=wa, b0=b0, b1=b1, wb=wb))

    def _g(self, k, default=0.0):
        return float(self.params.get(k, default))

    def __call__(self, t, x):
        t, x = np.asarray(t, dtype=float), np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full(np.broadcast(t, x).shape, self._g("lambda0"))
        g = self._g
        if self.kind == "sum":
            out = g("c0") + g("cx") * np.sin(g("wx", 1) * x + g("px"))
            if g("ct"):
                out = out + g("ct") * np.sin(g("wt", 1) * t + g("pt"))
            return out if out.shape == np.broadcast(t, x).shape else np.broadcast_to(
                out, np.broadcast(t, x).shape).copy()
        return (g("a0") + g("a1") * np.sin(g("wa", 1) * t)) * (g("b0") + g("b1") * np.sin(g("wb", 1) * x))

    def dx(self, t, x):
        """Partial derivative of lambda in x."""
        t, x = np.asarray(t, dtype=float), np.asarray(x, dtype=float)
        g = self._g
        if self.kind == "constant":
            return np.zeros(np.broadcast(t, x).shape)
        if self.kind == "sum":
            return g("cx") * g("wx", 1) * np.cos(g("wx", 1) * x + g("px")) + 0 * t
        return (g("a0") + g("a1") * np.sin(g("wa", 1) * t)) * g("b1") * g("wb", 1) * np.cos(g("wb", 1) * x)

    @property
    def lambda_min(self) -> float:
        g = self._g
        if self.kind == "constant":
            return g("lambda0")
        if self.kind == "sum":
            return g("c0") - abs(g("ct")) - abs(g("cx"))
        return (g("a0") - abs(g("a1"))) * (g("b0") - abs(g("b1")))

    @property
    def lambda_max(self) -> float:
        g = self._g
        if self.kind == "constant":
            return g("lambda0")
        if self.kind == "sum":
            return g("c0") + abs(g("ct")) + abs(g("cx"))
        return (g("a0") + abs(g("a1"))) * (g("b0") + abs(g("b1")))

    @property
    def L(self) -> float:
        g = self._g
        if self.kind == "constant":
            return 0.0
        if self.kind == "sum":
            return abs(g("cx") * g("wx", 1))
        return (g("a0") + abs(g("a1"))) * abs(g("b1") * g("wb", 1))

    @property
    def alpha(self) -> float:
        """Bound 1 - (lambda_min / lambda_max) exp(-L / lambda_min) on tau'."""
        return 1.0 - (self.lambda_min / self.lambda_max) * math.exp(-self.L / self.lambda_min)

    @property
    def beta0(self) -> float:
        return math.exp(-self.L / self.lambda_min) / self.lambda_max

    @property
    def beta1(self) -> float:
        return math.exp(self.L / self.lambda_min) / self.lambda_min

    def to_dict(self):
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, d: dict) -> "TransportField":
        d = dict(d)
        kind = d.pop("kind")
        if kind == "constant":
            return cls.constant(d["lambda0"])
        return cls(kind, {k: float(v) for k, v in d.items()})


def _rk4(field_: TransportField, s, y, h, with_integral=False, I=None):
    k1 = field_(s, y)
    k2 = field_(s + h / 2, y + h / 2 * k1)
    k3 = field_(s + h / 2, y + h / 2 * k2)
    k4 = field_(s + h, y + h * k3)
    y_new = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not with_integral:
        return y_new
    j1 = field_.dx(s, y)
    j2 = field_.dx(s + h / 2, y + h / 2 * k1)
    j3 = field_.dx(s + h / 2, y + h / 2 * k2)
    j4 = field_.dx(s + h, y + h * k3)
    return y_new, I + h / 6 * (j1 + 2 * j2 + 2 * j3 + j4)


class CharacteristicMaps:
    """Flow, hitting times and the induced delay of a transport field."""

    def __init__(self, field_: TransportField, ode_step: float | None = None,
                 root_tol: float = 1e-10):
        self.field = field_
        # T0 >= 1/lambda_max, so this default never exceeds T0/200
        self.ode_step = float(ode_step) if ode_step else 1.0 / (200.0 * field_.lambda_max)
        self.root_tol = float(root_tol)
        self.T0 = self._find_T0()

    # flow -------------------------------------------------------------------
    def flow(self, t, t0, x0):
        """Phi(t, t0, x0) by fixed-step RK4; vectorised over broadcast inputs."""
        t, t0, x0 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, t0, x0)))
        span = t - t0
        n = max(1, int(math.ceil(float(np.max(np.abs(span), initial=0.0)) / self.ode_step)))
        h = span / n
        s, y = t0.astype(float).copy(), x0.astype(float).copy()
        for _ in range(n):
            y = _rk4(self.field, s, y, h)
            s = s + h
        return float(y) if y.ndim == 0 else y

    def X0(self, t, x):
        return self.flow(0.0, t, x)

    # hitting time -------------------------------------------------------------
    def hitting_time(self, t, x, with_derivative: bool = False):
        """R(t, x) with Phi(R, t, x) = 0, plus optionally dR/dx.

        The characteristic through (t, x) is followed towards x = 0 in steps of
        ode_step; the crossing step is then bisected to root_tol and the root
        is checked against |t - R| in [|x| / lambda_max, |x| / lambda_min].
        """
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        scalar = t.ndim == 0
        t, x = np.atleast_1d(t).astype(float).ravel(), np.atleast_1d(x).astype(float).ravel()
        R = t.copy()
        I = np.zeros_like(t)
        direction = -np.sign(x)  # x > 0 moves backwards in time
        s, y = t.copy(), x.copy()
        active = x != 0
        h = self.ode_step
        lmin, lmax = self.field.lambda_min, self.field.lambda_max
        max_steps = int(math.ceil(float(np.max(np.abs(x), initial=0.0)) / lmin / h)) + 2
        steps = 0
        while np.any(active):
            if steps > max_steps:
                raise BracketError("characteristic did not reach x = 0")
            idx = np.nonzero(active)[0]
            hs = direction[idx] * h
            y_new, I_new = _rk4(self.field, s[idx], y[idx], hs, True, I[idx])
            crossed = np.sign(y_new) != np.sign(x[idx])
            crossed |= y_new == 0
            done = idx[crossed]
            if done.size:
                lo = np.zeros(done.size)
                hi = np.full(done.size, h)
                d = direction[done]
                sgn = np.sign(x[done])
                while np.max(hi - lo) > self.root_tol:
                    mid = 0.5 * (lo + hi)
                    ym = _rk4(self.field, s[done], y[done], d * mid)
                    past = np.sign(ym) != sgn
                    hi = np.where(past | (ym == 0), mid, hi)
                    lo = np.where(past | (ym == 0), lo, mid)
                theta = 0.5 * (lo + hi)
                R[done] = s[done] + d * theta
                if with_derivative:
                    _, Ifin = _rk4(self.field, s[done], y[done], d * theta, True, I[done])
                    I[done] = Ifin
            keep = idx[~crossed]
            s[keep] = s[keep] + direction[keep] * h
            y[keep] = y_new[~crossed]
            I[keep] = I_new[~crossed]
            active[done] = False
            steps += 1
        gap = np.abs(t - R)
        ax = np.abs(x)
        slack = 10 * self.root_tol + 1e-9 * ax
        if np.any(gap < ax / lmax - slack) or np.any(gap > ax / lmin + slack):
            raise BracketError("hitting time outside the speed-bound bracket")
        if with_derivative:
            dR = -np.exp(I) / self.field(R, 0.0)
            return (float(R[0]), float(dR[0])) if scalar else (R, dR)
        return float(R[0]) if scalar else R

    def induced_delay(self, t):
        """tau(t) = t - R(t, 1)."""
        t = np.asarray(t, dtype=float)
        out = t - self.hitting_time(t, np.ones_like(t))
        return float(out) if np.ndim(out) == 0 else out

    def delay_spec(self) -> TransportInducedDelay:
        return TransportInducedDelay(self)

    def _find_T0(self) -> float:
        lo, hi = 1.0 / self.field.lambda_max, 1.0 / self.field.lambda_min
        f_lo, f_hi = self.flow(-lo, 0.0, 1.0), self.flow(-hi, 0.0, 1.0)
        if f_lo < -1e-12 or f_hi > 1e-12:
            raise BracketError("T0 bracket failed")
        # s -> Phi(-s, 0, 1) decreases from >= 0 to <= 0
        while hi - lo > self.root_tol:
            mid = 0.5 * (lo + hi)
            if self.flow(-mid, 0.0, 1.0) > 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def flow(maps: CharacteristicMaps, t, t0, x0):
    return maps.flow(t, t0, x0)


def hitting_time_R(maps: CharacteristicMaps, t, x):
    return maps.hitting_time(t, x)


def induced_delay(maps: CharacteristicMaps, t):
    return maps.induced_delay(t)


def boundary_history(maps: CharacteristicMaps, u0: Signal) -> FunctionSignal:
    """v0(s) = u0(X0(s, 0)) on [-T0, 0)."""
    T0 = maps.T0

    def fn(s):
        x = np.clip(maps.X0(s, np.zeros_like(s)), 0.0, 1.0)
        return u0(x)

    return FunctionSignal(fn, u0.dim, support=(-T0 * (1 + 1e-9) - 1e-12, 0.0),
                          regularity=u0.regularity)


def boundary_scenario(maps: CharacteristicMaps, A, u0: Signal, horizon: float) -> Scenario:
    A = A if isinstance(A, SystemMatrix) else SystemMatrix(A)
    return Scenario(A, maps.delay_spec(), boundary_history(maps, u0), max(horizon, 1e-9),
                    np.array([0.0]))


@dataclass
class TransportSolution:
    t: float
    x: np.ndarray
    u: np.ndarray
    compatibility_gap: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x"] + [f"u_{i + 1}" for i in range(self.u.shape[1])])
            for x, row in zip(self.x, self.u):
                w.writerow([repr(float(x))] + [repr(float(v)) for v in row])


def solve_transport(maps: CharacteristicMaps, A, u0: Signal, t: float, x_grid) -> TransportSolution:
    """u(t, x_i) = v(R(t, x_i)) with v solving the induced difference equation."""
    A = A if isinstance(A, SystemMatrix) else SystemMatrix(A)
    x = np.asarray(x_grid, dtype=float)
    scn = boundary_scenario(maps, A, u0, t)
    R = maps.hitting_time(np.full(x.shape, float(t)), x)
    u = representation(scn, R)
    gap = float(np.linalg.norm(u0(0.0) - A.entries @ u0(1.0)))
    return TransportSolution(float(t), x, u, gap)


def boundary_values(maps: CharacteristicMaps, A, u0: Signal, s) -> np.ndarray:
    """v(s) for arbitrary s >= -T0."""
    scn = boundary_scenario(maps, A, u0, float(np.max(s)) if np.size(s) else 1.0)
    return representation(scn, np.atleast_1d(s))


def _lp(values: np.ndarray, width: float, p: float) -> float:
    n = np.linalg.norm(values, axis=1)
    if math.isinf(p):
        return float(np.max(n))
    return float((np.sum(n ** p) * width / n.size) ** (1.0 / p))


def norm_sandwich(maps: CharacteristicMaps, A, u0: Signal, t: float, p: float,
                  cells: int = 4000) -> dict:
    """||u(t, .)||_p on [0, 1] and ||v_t||_p on [t - tau(t), t] with the
    bounds beta1^(-1/p) ||v_t|| <= ||u(t, .)|| <= beta0^(-1/p) ||v_t||."""
    xm = (np.arange(cells) + 0.5) / cells
    u = solve_transport(maps, A, u0, t, xm).u
    tau = maps.induced_delay(t)
    sm = t - tau + (np.arange(cells) + 0.5) * tau / cells
    v = boundary_values(maps, A, u0, sm)
    nu, nv = _lp(u, 1.0, p), _lp(v, tau, p)
    lower = maps.field.beta1 ** (-1.0 / p) * nv
    upper = maps.field.beta0 ** (-1.0 / p) * nv
    return {"t": t, "p": p, "u_norm": nu, "v_norm": nv, "lower": lower, "upper": upper, "tau": tau}
