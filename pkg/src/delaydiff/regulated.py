"""Regulated and well-regulated functions on piecewise closed forms.

A piece is a finite sum of terms

    k0 + E(s - c) * (p + q sin(omega / (s - c)))

where the envelope E is linear (E(u) = u), a power (E(u) = |u|^kappa) or
flat (E(u) = exp(-kappa / u^2)).  Affine maps, monotone powers, the
u sin(1/u) and exp(-1/u^2) sin(1/u) families and constants are all special
cases; ``sign`` is a three-valued piecewise constant.  Classification is
analytic: away from the anchors c every piece is real-analytic, and at an
anchor the leading-order bracket decides whether the function approaches its
limit from one side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

ENVELOPES = ("linear", "power", "flat")


@dataclass(frozen=True)
class Term:
    k0: float = 0.0
    c: float = 0.0
    p: float = 0.0
    q: float = 0.0
    omega: float = 1.0
    env: str = "linear"
    kappa: float = 1.0

    def __post_init__(self):
        if self.env not in ENVELOPES:
            raise ValueError(f"unknown envelope {self.env!r}")

    @property
    def oscillating(self) -> bool:
        return self.q != 0.0

    @property
    def constant(self) -> bool:
        return self.p == 0.0 and self.q == 0.0

    def envelope(self, u):
        if self.env == "linear":
            return u
        if self.env == "power":
            return np.abs(u) ** self.kappa
        with np.errstate(divide="ignore", over="ignore"):
            return np.exp(-self.kappa / (u * u))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        u = s - self.c
        out = np.full(s.shape, self.k0, dtype=float)
        nz = u != 0
        if np.any(nz):
            un = u[nz]
            bracket = self.p + (self.q * np.sin(self.omega / un) if self.q else 0.0)
            out[nz] = self.k0 + self.envelope(un) * bracket
        return out

    @property
    def order(self) -> float:
        """Vanishing order of the envelope at the anchor."""
        return {"linear": 1.0, "power": self.kappa, "flat": math.inf}[self.env]

    def derivative_at(self, s: float) -> float:
        """First derivative at s != c (central difference on an analytic term)."""
        h = 1e-6 * max(1.0, abs(s - self.c))
        return float((self(s + h) - self(s - h)) / (2 * h))

    def reparameterize(self, a: float, b: float) -> "Term":
        """The term composed with s -> a s + b."""
        c = (self.c - b) / a
        if self.env == "linear":
            return replace(self, c=c, p=a * self.p, q=a * self.q, omega=self.omega / a)
        if self.env == "power":
            f = abs(a) ** self.kappa
            return replace(self, c=c, p=f * self.p, q=f * self.q, omega=self.omega / a)
        return replace(self, c=c, kappa=self.kappa / (a * a), omega=self.omega / a)


@dataclass(frozen=True)
class Piece:
    terms: tuple

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return sum((t(s) for t in self.terms), np.zeros(s.shape))

    def limit(self, s: float) -> float:
        return float(self(np.array([s]))[0])


# piece constructors -------------------------------------------------------


def affine(m: float, b: float) -> Piece:
    return Piece((Term(k0=b, c=0.0, p=m),))


def constant(v: float) -> Piece:
    return Piece((Term(k0=v),))


def monotone_power(c: float, kappa: float, scale: float = 1.0, offset: float = 0.0) -> Piece:
    """offset + scale |s - c|^kappa (monotone on each side of c)."""
    return Piece((Term(k0=offset, c=c, p=scale, env="power", kappa=kappa),))


def xsin(c: float = 0.0, amp: float = 1.0, omega: float = 1.0) -> Piece:
    """amp (s - c) sin(omega / (s - c))."""
    return Piece((Term(c=c, q=amp, omega=omega),))


def flat_sin(c: float = 0.0, amp: float = 1.0, omega: float = 1.0) -> Piece:
    """amp exp(-1/(s - c)^2) sin(omega / (s - c))."""
    return Piece((Term(c=c, q=amp, omega=omega, env="flat"),))


def envelope_sin(c: float, p: float, q: float, omega: float = 1.0) -> Piece:
    """(s - c)(p + q sin(omega / (s - c)))."""
    return Piece((Term(c=c, p=p, q=q, omega=omega),))


# piecewise functions -------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseFunction:
    """Closed-form pieces on (b_i, b_{i+1}) with explicit values at breakpoints.

    ``point_values`` maps breakpoints to their value; a breakpoint without an
    entry takes the limit from the right piece (from the left at the end).
    """

    breakpoints: tuple
    pieces: tuple
    point_values: tuple = ()

    def __post_init__(self):
        b = tuple(float(x) for x in self.breakpoints)
        if len(b) < 2 or any(y <= x for x, y in zip(b, b[1:])):
            raise ValueError("breakpoints must be strictly increasing with at least two entries")
        if len(self.pieces) != len(b) - 1:
            raise ValueError("need one piece per interval")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "point_values", tuple((float(s), float(v)) for s, v in self.point_values))

    @property
    def domain(self):
        return self.breakpoints[0], self.breakpoints[-1]

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        flat = np.atleast_1d(s).ravel()
        a, b = self.domain
        if np.any((flat < a) | (flat > b)):
            raise ValueError("evaluation outside the domain")
        bp = np.asarray(self.breakpoints)
        idx = np.clip(np.searchsorted(bp, flat, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.empty(flat.shape)
        for i, piece in enumerate(self.pieces):
            sel = idx == i
            if np.any(sel):
                out[sel] = piece(flat[sel])
        for p, v in self.point_values:
            out[flat == p] = v
        return out.reshape(s.shape) if s.ndim else float(out[0])

    def value_at(self, s: float) -> float:
        return float(self(np.array([s]))[0])

    def side_limits(self, s: float) -> tuple[float | None, float | None]:
        bp = self.breakpoints
        i = int(np.searchsorted(bp, s, side="left"))
        if i < len(bp) and bp[i] == s:
            left = self.pieces[i - 1].limit(s) if i > 0 else None
            right = self.pieces[i].limit(s) if i < len(self.pieces) else None
            return left, right
        j = i - 1
        v = self.pieces[j].limit(s)
        return v, v

    def discontinuities(self, tol: float = 0.0) -> list[float]:
        out = []
        for s in self.breakpoints:
            vals = [v for v in self.side_limits(s) if v is not None] + [self.value_at(s)]
            if max(vals) - min(vals) > tol:
                out.append(s)
        return out

    def __add__(self, other: "PiecewiseFunction") -> "PiecewiseFunction":
        if self.domain != other.domain:
            raise ValueError("sum needs a common domain")
        bp = sorted(set(self.breakpoints) | set(other.breakpoints))
        pieces = []
        for lo, hi in zip(bp, bp[1:]):
            m = 0.5 * (lo + hi)
            pieces.append(Piece(self._piece_at(m).terms + other._piece_at(m).terms))
        pv = {s: self.value_at(s) + other.value_at(s) for s in bp}
        return PiecewiseFunction(tuple(bp), tuple(pieces), tuple(pv.items()))

    def _piece_at(self, s: float) -> Piece:
        i = int(np.searchsorted(self.breakpoints, s, side="right")) - 1
        return self.pieces[min(max(i, 0), len(self.pieces) - 1)]

    def reparameterize(self, a: float, b: float) -> "PiecewiseFunction":
        """g(s) = f(a s + b) on the preimage of the domain (a != 0)."""
        if a == 0:
            raise ValueError("a must be nonzero")
        bp = [(x - b) / a for x in self.breakpoints]
        pieces = [Piece(tuple(t.reparameterize(a, b) for t in p.terms)) for p in self.pieces]
        pv = [((s - b) / a, v) for s, v in self.point_values]
        if a < 0:
            bp, pieces = bp[::-1], pieces[::-1]
            # the right-piece convention flips: pin every breakpoint value explicitly
            pv = [((x - b) / a, self.value_at(x)) for x in self.breakpoints]
        return PiecewiseFunction(tuple(bp), tuple(pieces), tuple(pv))


def identity(a: float = 0.0, b: float = 1.0) -> PiecewiseFunction:
    return PiecewiseFunction((a, b), (affine(1.0, 0.0),))


def single(piece: Piece, a: float, b: float) -> PiecewiseFunction:
    return PiecewiseFunction((a, b), (piece,))


def sign_function(a: float = -1.0, b: float = 1.0, at: float = 0.0) -> PiecewiseFunction:
    if not a < at < b:
        return PiecewiseFunction((a, b), (constant(1.0 if a >= at else -1.0),))
    return PiecewiseFunction((a, at, b), (constant(-1.0), constant(1.0)), ((at, 0.0),))


@dataclass(frozen=True)
class Composition:
    """outer(inner(s)); the range of inner must lie in outer's domain."""

    outer: PiecewiseFunction
    inner: PiecewiseFunction

    @property
    def domain(self):
        return self.inner.domain

    def __call__(self, s):
        return self.outer(self.inner(s))


# classification -----------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    regulated: bool
    well_regulated: bool
    witness: float | None = None
    reason: str = ""

    def to_dict(self):
        return {"regulated": self.regulated, "well_regulated": self.well_regulated,
                "witness": self.witness, "reason": self.reason}


def _anchor_behaviour(piece: Piece, c: float) -> tuple[bool, str]:
    """Whether the piece approaches its limit at anchor c from one side.

    Returns (ok, reason).  The leading order term decides: oscillating terms
    of the lowest envelope order give a bracket P + Q sin(.), which keeps one
    sign iff |P| > |Q|; smooth terms of lower order dominate outright.
    """
    osc = [t for t in piece.terms if t.c == c and t.oscillating]
    if not osc:
        return True, "no oscillation"
    order = min(t.order for t in osc)
    lead = [t for t in osc if t.order == order]
    omegas = {abs(t.omega) for t in lead}
    if len(omegas) > 1:
        P = sum(t.p for t in lead)
        Q = sum(abs(t.q) for t in lead)
    else:
        P = sum(t.p for t in lead)
        w = lead[0].omega
        Q = abs(sum(t.q * (1 if t.omega == w else -1) for t in lead))
    # same-order non-oscillating terms anchored at c join P
    P += sum(t.p for t in piece.terms if t.c == c and not t.oscillating and t.order == order
             and t.env == lead[0].env)
    smooth = [t for t in piece.terms if not (t.c == c and (t.oscillating or t.order == order))]
    g1 = sum(t.derivative_at(c) for t in smooth if t.c != c and not t.constant)
    g1 += sum(t.p for t in smooth if t.c == c and t.env == "linear" and not t.oscillating)
    smooth_order = math.inf
    if abs(g1) > 0:
        smooth_order = 1.0
    elif any(not t.constant for t in smooth):
        smooth_order = 2.0
    if smooth_order < order:
        return True, "smooth part dominates the oscillation"
    if smooth_order == order and lead[0].env == "linear":
        P += g1
    if Q == 0 or abs(P) > Q:
        return True, f"bracket {P:+g} + {Q:g} sin keeps one sign"
    return False, f"bracket {P:+g} + {Q:g} sin changes sign infinitely often"


def _not_wr_points(f: PiecewiseFunction) -> list[tuple[float, str]]:
    out = []
    a, b = f.domain
    for i, piece in enumerate(f.pieces):
        lo, hi = f.breakpoints[i], f.breakpoints[i + 1]
        for c in sorted({t.c for t in piece.terms if t.oscillating}):
            if lo <= c <= hi:
                ok, why = _anchor_behaviour(piece, c)
                if not ok:
                    out.append((c, why))
    return out


def classify(f) -> Classification:
    """Analytic regulated / well-regulated verdict for the enumerated families."""
    if isinstance(f, Composition):
        return _classify_composition(f)
    bad = _not_wr_points(f)
    if bad:
        c, why = bad[0]
        return Classification(True, False, c, why)
    return Classification(True, True, None, "finitely many monotone pieces near every point")


def _classify_composition(h: Composition) -> Classification:
    inner_c = classify(h.inner) if not isinstance(h.inner, Composition) else classify(h.inner)
    outer_c = classify(h.outer)
    if not inner_c.regulated or not outer_c.regulated:
        w = inner_c.witness if not inner_c.regulated else None
        return Classification(False, False, w, "a factor is not regulated")
    jumps = h.outer.discontinuities(tol=0.0)
    for c, why in _not_wr_points(h.inner):
        left, right = h.inner.side_limits(c)
        for lim in (left, right):
            if lim is not None and any(abs(lim - j) <= 1e-12 for j in jumps):
                return Classification(False, False, c,
                                      f"inner oscillates around {lim:g}, a jump of the outer function")
    if inner_c.well_regulated:
        return Classification(True, outer_c.well_regulated, None,
                              "well-regulated inner function preserves regulatedness")
    return Classification(True, False, inner_c.witness,
                           "outer function is continuous at the inner limits")


# numerical probing ----------------------------------------------------------


def composition_probe(f, phi, t0: float, side: str = "right", refinement_depth: int = 40,
                      spread: float | None = None) -> dict:
    """Sample (f o phi)(t0 +/- 2^-k spread), k = 0..depth, and judge the limit."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    a, b = phi.domain
    room = (b - t0) if side == "right" else (t0 - a)
    if room <= 0:
        raise ValueError("no room on the requested side")
    if spread is None:
        spread = min(1.0, 0.5 * room)
    sgn = 1.0 if side == "right" else -1.0
    k = np.arange(refinement_depth + 1)
    pts = t0 + sgn * spread * np.ldexp(1.0, -k)
    vals = np.asarray(f(phi(pts)), dtype=float)
    tail = vals[-5:]
    half = vals[refinement_depth // 2:]
    lo, hi = float(np.min(half)), float(np.max(half))
    if float(np.max(tail) - np.min(tail)) < 1e-9:
        verdict = "exists"
    elif hi - lo > 1e-3 and np.sum(np.abs(half - lo) <= 1e-3) >= 2 and np.sum(np.abs(half - hi) <= 1e-3) >= 2:
        verdict = "diverges-oscillating"
    else:
        verdict = "inconclusive"
    return {"limit_exists": verdict, "sampled_values": vals.tolist(), "points": pts.tolist()}


# the three examples singled out in the theory -----------------------------


def smooth_not_well_regulated() -> PiecewiseFunction:
    """exp(-1/t^2) sin(1/t) on [-1, 1] with value 0 at 0."""
    return single(flat_sin(0.0), -1.0, 1.0)


def sum_counterexample() -> tuple[PiecewiseFunction, PiecewiseFunction]:
    """f(t) = -t (1 - sin(1/t) / 2) and the identity on [-1, 1]."""
    f = single(envelope_sin(0.0, -1.0, 0.5), -1.0, 1.0)
    return f, identity(-1.0, 1.0)


def sign_of_xsin() -> Composition:
    return Composition(sign_function(-2.0, 2.0), single(xsin(0.0), -1.0, 1.0))
