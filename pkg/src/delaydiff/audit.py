"""Hypothesis audit H1-H11 for a delay and a matrix on [0, T]."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import DelaySpec, SystemMatrix

HOLDS, FAILS, UNDECIDABLE = "holds", "fails", "undecidable"

DESCRIPTIONS = {
    "H1": "inf of tau over [0, t] is positive",
    "H2": "tau is continuous",
    "H3": "sigma_1 is well-regulated",
    "H4": "tau is measurable",
    "H5": "sigma_1 maps only null sets onto null sets",
    "H6": "push-forward of sigma_1 on [0, T] has a bounded density",
    "H7": "rho(A) < 1",
    "H8": "sigma_1(t) tends to infinity",
    "H9": "||phi|| rho(A)^p < 1",
    "H10": "tau is bounded",
    "H11": "n(t) >= alpha t + beta with alpha > 0",
}


@dataclass(frozen=True)
class Verdict:
    status: str
    witness: object = None
    note: str = ""

    def to_dict(self):
        w = self.witness
        if isinstance(w, float) and not math.isfinite(w):
            w = repr(w)
        return {"status": self.status, "witness": w, "note": self.note}


@dataclass
class HypothesisReport:
    T: float
    p: float | None
    entries: dict = field(default_factory=dict)

    def __getitem__(self, key) -> Verdict:
        return self.entries[key]

    def status(self, key) -> str:
        return self.entries[key].status

    def to_dict(self):
        return {"T": self.T, "p": self.p,
                "hypotheses": {k: {"statement": DESCRIPTIONS[k], **v.to_dict()}
                               for k, v in self.entries.items()}}


def _h1(delay: DelaySpec, T: float) -> Verdict:
    inf, where = delay.infimum(T)
    if inf > 0:
        return Verdict(HOLDS, inf, "inf of tau on [0, T]")
    side = "+" if where == 0 else ""
    return Verdict(FAILS, {"inf": inf, "near": where},
                   f"inf -> 0 near t={where}{side}")


def audit_hypotheses(delay: DelaySpec, matrix, T: float, p: float | None = None) -> HypothesisReport:
    """One verdict per hypothesis, decided analytically for closed forms.

    Tabulated delays are judged at audit-grid resolution; H4 and H5 are
    undecidable for them.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    from .measure import check_H6_H9
    from .stability import verify_H11

    A = matrix if isinstance(matrix, SystemMatrix) else SystemMatrix(matrix)
    rep = HypothesisReport(float(T), p)
    e = rep.entries
    grid_note = "" if delay.closed_form else "grid-level verdict"
    e["H1"] = _h1(delay, T)

    jumps = delay.jumps(T)
    e["H2"] = Verdict(FAILS, jumps[0], "jump of tau") if jumps else Verdict(HOLDS, None, grid_note)

    if delay.kind == "transport_induced":
        e["H3"] = Verdict(HOLDS, None, "sigma_1 increasing")
    else:
        pieces = len(delay.breakpoints(T))
        e["H3"] = Verdict(HOLDS, pieces, "sigma_1 piecewise monotone with finitely many pieces on [0, T]")

    flat = delay.sigma1_flat(T)
    if delay.closed_form:
        e["H4"] = Verdict(HOLDS, None, "piecewise closed form")
        e["H5"] = (Verdict(FAILS, flat[0], "sigma_1 constant on an interval") if flat
                   else Verdict(HOLDS, None, "sigma_1 has no flat pieces"))
    else:
        e["H4"] = Verdict(UNDECIDABLE, None, "not verifiable from samples")
        e["H5"] = Verdict(UNDECIDABLE, None, "not verifiable from samples")

    h69 = None
    if e["H1"].status == HOLDS:
        h69 = check_H6_H9(delay, A, p if p is not None else 1.0, T)
    if flat:
        e["H6"] = Verdict(FAILS, flat[0], "atom in the push-forward")
    elif h69 is not None:
        e["H6"] = Verdict(h69["verdict_H6"], h69["phi_sup"],
                          f"density bound ({h69['source']})")
    else:
        e["H6"] = Verdict(UNDECIDABLE, None, "H1 fails")

    rho = A.spectral_radius
    e["H7"] = Verdict(HOLDS if rho < 1 else FAILS, rho, "spectral radius")

    s8 = delay.sigma1_to_infinity
    e["H8"] = Verdict(UNDECIDABLE if s8 is None else HOLDS if s8 else FAILS, None, grid_note)

    if p is None or math.isinf(p):
        e["H9"] = Verdict(UNDECIDABLE, None, "needs a finite p")
    elif h69 is None:
        e["H9"] = Verdict(UNDECIDABLE, None, "H1 fails")
    else:
        e["H9"] = Verdict(h69["verdict_H9"], h69["product"],
                          f"phi_sup={h69['phi_sup']!r} ({h69['source']})")

    bnd = delay.bounded
    if bnd:
        e["H10"] = Verdict(HOLDS, delay.declared_tau_max if delay.declared_tau_max is not None
                           else delay.supremum(T), grid_note or "bound on tau")
    elif bnd is None:
        e["H10"] = Verdict(UNDECIDABLE, None, "")
    else:
        e["H10"] = Verdict(FAILS, delay.supremum(T), "tau unbounded; value is sup on [0, T]")

    if e["H1"].status == HOLDS:
        h11 = verify_H11(delay, T)
        e["H11"] = Verdict(h11["verdict"], {"alpha": h11["alpha"], "beta": h11["beta"]},
                           h11["method"])
    else:
        e["H11"] = Verdict(UNDECIDABLE, None, "H1 fails")
    return rep
