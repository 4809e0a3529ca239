"""Decay certificates, H11 verification and continuous-dependence sweeps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import DelayDiffError, DelaySpec, Scenario, Signal, SystemMatrix
from .kernel import iteration_counts
from .measure import check_H6_H9
from .solver import Trajectory, representation, window_norm


class CertificateRefused(DelayDiffError, ValueError):
    """Hypotheses needed for a certificate do not hold."""

    def __init__(self, message: str, **info):
        super().__init__(message)
        self.info = info


@dataclass(frozen=True, eq=False)
class DecayCertificate:
    """|x(t)| <= C exp(-gamma t) * (initial size) in the adapted norm.

    For the Lp kind the bound applies to ||x_t||_p^p, so the norm itself
    decays at ``norm_rate`` = gamma / p.
    """

    kind: str
    C: float
    gamma: float
    norm_used: object
    inputs: dict = field(default_factory=dict)

    @property
    def norm_rate(self) -> float:
        p = self.inputs.get("p")
        return self.gamma / p if self.kind == "Lp-exp" and p else self.gamma

    def bound(self, t, initial: float = 1.0):
        return self.C * np.exp(-self.gamma * np.asarray(t, dtype=float)) * initial

    def to_dict(self):
        n = self.norm_used
        return {"kind": self.kind, "C": self.C, "gamma": self.gamma, "norm_rate": self.norm_rate,
                "inputs": self.inputs,
                "norm": n.to_dict() if hasattr(n, "to_dict") else None}


# ---------------------------------------------------------------------------
# H11
# ---------------------------------------------------------------------------


def _lower_hull(x: np.ndarray, y: np.ndarray) -> list[int]:
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def verify_H11(delay: DelaySpec, T: float, grid: int = 6401) -> dict:
    """(alpha, beta) with n(t) >= alpha t + beta.

    Bounded delays give (1 / tau_max, 0) directly.  Otherwise the edge of the
    lower convex minorant of (t_i, n(t_i)) spanning T / 2 is used; its line
    lies below every grid point, so the verdict is grid-level.
    """
    tau_max = delay.declared_tau_max
    if tau_max is not None:
        return {"alpha": 1.0 / tau_max, "beta": 0.0, "verdict": "holds", "method": "analytic",
                "tau_max": tau_max}
    alpha, beta = _hull_fit(delay, T, grid)
    out = {"alpha": alpha, "beta": beta, "method": f"grid-hull({grid})"}
    if not alpha > 0:
        out["verdict"] = "fails"
        return out
    # a finite grid always admits some minorant; doubling the window exposes
    # sublinear growth of n, for which no positive slope survives
    alpha2, _ = _hull_fit(delay, 2 * T, 2 * grid - 1)
    out["alpha_doubled"] = alpha2
    out["verdict"] = "holds" if alpha2 >= 0.75 * alpha else "undecidable"
    return out


def _hull_fit(delay: DelaySpec, T: float, grid: int) -> tuple[float, float]:
    ts = np.linspace(0.0, T, grid)
    n, _ = iteration_counts(delay, ts)
    y = n.astype(float)
    hull = _lower_hull(ts, y)
    best = None
    for a, b in zip(hull, hull[1:]):
        if ts[a] <= T / 2 <= ts[b]:
            best = (a, b)
            break
    if best is None:
        best = (hull[-2], hull[-1]) if len(hull) >= 2 else (0, 0)
    a, b = best
    alpha = (y[b] - y[a]) / (ts[b] - ts[a]) if b != a else 0.0
    beta = min(y[a] - alpha * ts[a], float(np.min(y - alpha * ts)))
    return float(alpha), float(beta)


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


def _norm_bound(A: SystemMatrix, eps: float):
    norm = A.adapted_norm(eps)
    a = norm.achieved_operator_norm
    if a <= 0:
        a = A.spectral_radius + eps
    return norm, a


def certify_exponential(scn: Scenario, epsilon: float = 0.05, kind: str = "pointwise-exp",
                        h11: tuple | None = None) -> DecayCertificate:
    """C = |A|_P^beta, gamma = -alpha ln |A|_P in an adapted norm.

    ``kind='sup-window-exp'`` multiplies C by exp(gamma tau_max).  ``h11``
    overrides the (alpha, beta) pair, e.g. with a known closed-form bound.
    """
    A = scn.matrix
    rho = A.spectral_radius
    if not rho < 1:
        raise CertificateRefused(f"rho(A) = {rho} >= 1", rho=rho)
    if h11 is None:
        h = verify_H11(scn.delay, scn.horizon)
        if h["verdict"] != "holds":
            raise CertificateRefused("H11 does not hold", **h)
        alpha, beta = h["alpha"], h["beta"]
    else:
        alpha, beta = map(float, h11)
    eps = min(epsilon, (1 - rho) / 2)
    norm, a = _norm_bound(A, eps)
    C = a ** beta
    gamma = -alpha * math.log(a)
    inputs = {"alpha": alpha, "beta": beta, "epsilon": eps, "operator_norm": a}
    if kind == "sup-window-exp":
        tau_max = scn.delay.declared_tau_max
        if tau_max is None:
            raise CertificateRefused("window certificate needs a bounded delay")
        C = max(1.0, C) * math.exp(gamma * tau_max)
        inputs["tau_max"] = tau_max
    elif kind != "pointwise-exp":
        raise ValueError(f"unknown certificate kind {kind!r}")
    return DecayCertificate(kind, float(C), float(gamma), norm, inputs)


def certify_exponential_Lp(scn: Scenario, p: float, epsilon: float = 0.05) -> DecayCertificate:
    """C = 1 / (q (1 - q)), gamma = -ln(q) / tau_max with q = ||phi|| |A|_P^p."""
    if math.isinf(p) or p < 1:
        raise ValueError("p must lie in [1, inf)")
    if scn.delay.infimum(scn.horizon)[0] <= 0:
        raise CertificateRefused("H1 fails")
    A = scn.matrix
    h9 = check_H6_H9(scn.delay, A, p, scn.horizon)
    phi = h9["phi_sup"]
    rho = A.spectral_radius
    q_rho = phi * rho ** p
    if not q_rho < 1:
        raise CertificateRefused(f"H9 fails: q = {q_rho} >= 1", q=q_rho, phi_sup=phi)
    tau_max = scn.delay.declared_tau_max
    if tau_max is None:
        raise CertificateRefused("H10 fails: the delay is unbounded", q=q_rho)
    room = (1.0 / phi) ** (1.0 / p) - rho
    eps = min(epsilon, room / 2)
    norm, a = _norm_bound(A, eps)
    q = phi * a ** p
    if q <= 0:
        q = min(q_rho, 0.5) if q_rho > 0 else 0.5
    C = 1.0 / (q * (1 - q))
    gamma = -math.log(q) / tau_max
    return DecayCertificate("Lp-exp", float(C), float(gamma), norm,
                            {"p": p, "phi_sup": phi, "q": q, "tau_max": tau_max,
                             "epsilon": eps, "operator_norm": a})


# ---------------------------------------------------------------------------
# empirical checks
# ---------------------------------------------------------------------------


def fit_log_rate(t, y) -> tuple[float, float]:
    """Least-squares slope and intercept of ln y against t (y > 0 only)."""
    t, y = np.asarray(t, dtype=float), np.asarray(y, dtype=float)
    sel = y > 0
    if np.sum(sel) < 2:
        raise ValueError("need at least two positive values to fit")
    slope, icpt = np.polyfit(t[sel], np.log(y[sel]), 1)
    return float(slope), float(icpt)


def empirical_decay(traj: Trajectory, fit_window, certificate: DecayCertificate | None = None,
                    weight=None) -> dict:
    """Fitted decay rate on the window and, optionally, a certificate check.

    The certificate is checked at every sample t >= 0 against
    C exp(-gamma t) sup |x0|, all in the certificate's norm.
    """
    lo, hi = fit_window
    if certificate is not None and weight is None and certificate.norm_used is not None:
        weight = certificate.norm_used.weight
    x = traj.values if weight is None else traj.values @ np.asarray(weight).T
    mags = np.linalg.norm(x, axis=1)
    sel = (traj.times >= lo) & (traj.times <= hi)
    out = {"fit_window": [lo, hi]}
    if not np.any(mags[sel] > 0):
        out.update(gamma_hat=None, C_hat=None, bound_satisfied=True, note="all-zero trajectory")
        return out
    slope, icpt = fit_log_rate(traj.times[sel], mags[sel])
    x0_sup = traj.scenario.initial.sup_norm(weight) if traj.scenario is not None else 1.0
    out.update(gamma_hat=-slope, C_hat=math.exp(icpt) / x0_sup if x0_sup > 0 else None)
    if certificate is not None:
        pos = traj.times >= 0
        bound = certificate.bound(traj.times[pos], x0_sup)
        ok = mags[pos] <= bound * (1 + 1e-12) + 1e-300
        out["bound_satisfied"] = bool(np.all(ok))
        out["worst_ratio"] = float(np.max(mags[pos] / np.maximum(bound, 1e-300)))
    return out


# ---------------------------------------------------------------------------
# continuous dependence
# ---------------------------------------------------------------------------


def continuous_dependence_sweep(A_seq: Callable[[int], SystemMatrix],
                                x0_seq: Callable[[int], Signal], scn_base: Scenario,
                                k_max: int, mode: str = "uniform-compact",
                                window: tuple | None = None, points: int = 2001,
                                epsilon: float = 0.05) -> dict:
    """Distance between the k-th solution and the limit solution, k = 1..k_max.

    pointwise: |x_k(t) - x(t)| at the scenario grid, reported as a max per t.
    uniform-compact: sup over ``window`` (default [left end of history, T]).
    uniform-global: same, on a window stretched until the limit certificate
    drops below 1e-3 of the initial size; the certified tail bound is reported.
    """
    if mode not in ("pointwise", "uniform-compact", "uniform-global"):
        raise ValueError(f"unknown mode {mode!r}")
    lo = scn_base.initial.support[0] if window is None else window[0]
    hi = scn_base.horizon if window is None else window[1]
    tail = None
    if mode == "uniform-global":
        cert = certify_exponential(scn_base, epsilon)
        x0 = scn_base.initial.sup_norm(cert.norm_used.weight)
        if cert.C * x0 > 0:
            hi = max(hi, math.log(cert.C * 1e3) / cert.gamma)
        tail = {"T": hi, "C": cert.C, "gamma": cert.gamma}
    if mode == "pointwise":
        ts = np.asarray(scn_base.grid)
    else:
        ts = np.linspace(lo, hi, points)
    hs = max(hi, 1e-9)
    base = scn_base.replace(horizon=hs, grid=np.array([0.0]))
    x_lim = representation(base, ts)
    rows = []
    for k in range(1, k_max + 1):
        scn_k = base.replace(matrix=A_seq(k), initial=x0_seq(k))
        diff = np.linalg.norm(representation(scn_k, ts) - x_lim, axis=1)
        rows.append({"k": k, "distance": float(np.max(diff))})
    d = np.array([r["distance"] for r in rows])
    half = len(d) // 2
    eventually = bool(np.all(np.diff(d[half:]) <= 1e-15)) if len(d) > 1 else True
    return {"mode": mode, "window": [lo, hi], "rows": rows, "eventually_decreasing": eventually,
            "tail": tail}


def scalar_shift_family(a: float, support=(-1.0, 0.0)):
    """A_k = a + 1/k and x0_k = a + 1/k (constant history)."""
    from .core import ConstantSignal

    return (lambda k: SystemMatrix([[a + 1.0 / k]]),
            lambda k: ConstantSignal((a + 1.0 / k,), support))


def window_sup_decay(traj: Trajectory, t: float, window: float, weight=None) -> float:
    return window_norm(traj, t, math.inf, window, weight)
