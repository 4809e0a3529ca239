"""Domain types shared by every module.

System matrices, delay descriptors, signals (initial conditions and other
time functions) and the scenario record that bundles them.  All of them are
immutable after construction and serialise to plain JSON-ready dicts.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, ClassVar

import numpy as np

NEG_INF = "-inf"


class DelayDiffError(Exception):
    """Base class for errors raised by this package."""


class DomainError(DelayDiffError, ValueError):
    pass


class DelayEvaluationError(DelayDiffError, ValueError):
    pass


class HistoryEvaluationError(DelayDiffError, ValueError):
    pass


class ConfigError(DelayDiffError, ValueError):
    """Malformed configuration; ``pointer`` is a JSON pointer to the culprit."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer
        self.message = message


def _as_float_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _float_or_none(x):
    return None if x is None else float(x)


# ---------------------------------------------------------------------------
# System matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SystemMatrix:
    """Square real matrix A with lazily cached spectral data."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValueError(f"matrix must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def spectral_radius(self) -> float:
        from .spectral import spectral_radius

        return spectral_radius(self)

    def adapted_norm(self, epsilon: float):
        cache = self.__dict__.setdefault("_adapted", {})
        if epsilon not in cache:
            from .spectral import adapted_norm

            cache[epsilon] = adapted_norm(self, epsilon)
        return cache[epsilon]

    def power(self, n: int) -> np.ndarray:
        """A**n by repeated squaring, memoised per exponent."""
        cache = self.__dict__.setdefault("_powers", {})
        n = int(n)
        if n not in cache:
            cache[n] = np.linalg.matrix_power(self.entries, n)
        return cache[n]

    def to_list(self) -> list:
        return self.entries.tolist()

    def __repr__(self):
        return f"SystemMatrix({self.entries.tolist()!r})"


# ---------------------------------------------------------------------------
# Delay descriptors
# ---------------------------------------------------------------------------

_DELAY_KINDS: dict[str, type] = {}


def _register_delay(cls):
    _DELAY_KINDS[cls.kind] = cls
    return cls


@dataclass(frozen=True, eq=False)
class DelaySpec:
    """Base class of the delay families.

    Subclasses implement ``_tau`` on arrays of nonnegative times together with
    the analytic metadata used by the hypothesis audit.  ``at_zero`` optionally
    overrides the value at t = 0, which is how delays such as
    ``tau(0) = 1, tau(t) = t for t > 0`` are expressed.
    """

    kind: ClassVar[str] = "abstract"

    # -- evaluation ---------------------------------------------------------
    def __call__(self, t):
        arr = _as_float_array(t)
        if np.any(arr < 0) or np.any(np.isnan(arr)):
            raise DomainError("delay is defined for t >= 0 only")
        vals = self._tau(np.atleast_1d(arr))
        az = getattr(self, "at_zero", None)
        if az is not None:
            vals = np.where(np.atleast_1d(arr) == 0.0, az, vals)
        if np.any(~(vals > 0)):
            bad = np.atleast_1d(arr)[~(vals > 0)][0]
            raise DelayEvaluationError(f"delay is not positive at t={bad!r}")
        if arr.ndim == 0:
            return float(vals[0])
        return vals.reshape(arr.shape)

    def sigma1(self, t):
        """The delayed-argument map t - tau(t)."""
        t = _as_float_array(t)
        tau = self(t)
        if type(self)._sigma1 is DelaySpec._sigma1:
            out = t - tau
        else:
            out = self._sigma1(np.atleast_1d(t)).reshape(np.shape(t))
            az = getattr(self, "at_zero", None)
            if az is not None:
                out = np.where(t == 0.0, -az, out)
        if np.ndim(tau) == 0:
            return float(out)
        return out

    def _sigma1(self, t: np.ndarray) -> np.ndarray:
        # subclasses with affine pieces override this to avoid t - (t + c) rounding
        return t - self._tau(t)

    def _tau(self, t: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def left_limit(self, t: float) -> float:
        """tau(t-) for t > 0, approximated one ulp to the left."""
        return float(self._tau(np.array([np.nextafter(t, -np.inf)]))[0])

    # -- analytic metadata --------------------------------------------------
    def breakpoints(self, T: float) -> np.ndarray:
        """Points of [0, T] where the closed form changes."""
        return np.array([0.0])

    def infimum(self, T: float) -> tuple[float, float]:
        """(inf of tau over [0, T], location where it is approached)."""
        raise NotImplementedError

    def supremum(self, T: float) -> float:
        raise NotImplementedError

    @property
    def sigma1_monotone(self) -> str:
        return "unknown"

    def jumps(self, T: float) -> list[float]:
        """Discontinuities of tau inside [0, T]."""
        return []

    def sigma1_flat(self, T: float) -> list[tuple[float, float]]:
        """Intervals of [0, T] on which sigma1 is constant."""
        return []

    def tau_prime_bound(self) -> float | None:
        """Global bound on tau' when tau is C^1 (None when not applicable)."""
        return None

    @property
    def sigma1_to_infinity(self) -> bool | None:
        return None

    @property
    def bounded(self) -> bool | None:
        return None

    @property
    def closed_form(self) -> bool:
        return True

    @property
    def declared_tau_min(self) -> float | None:
        return None

    @property
    def declared_tau_max(self) -> float | None:
        return None

    # -- serialisation ------------------------------------------------------
    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(d: dict, pointer: str = "/delay") -> "DelaySpec":
        if not isinstance(d, dict):
            raise ConfigError(pointer, "delay must be an object")
        kind = d.get("kind")
        if kind not in _DELAY_KINDS:
            raise ConfigError(pointer + "/kind", f"unknown delay kind {kind!r}")
        try:
            return _DELAY_KINDS[kind]._from_dict(d)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(pointer, str(exc)) from exc


def eval_delay(delay: DelaySpec, t: float) -> float:
    """Evaluate tau(t); raises DomainError for t < 0."""
    return delay(t)


@_register_delay
@dataclass(frozen=True, eq=False)
class ConstantDelay(DelaySpec):
    c: float
    kind: ClassVar[str] = "constant"

    def __post_init__(self):
        if not self.c > 0 or not math.isfinite(self.c):
            raise ValueError("constant delay must be positive and finite")

    def _tau(self, t):
        return np.full(t.shape, float(self.c))

    def infimum(self, T):
        return float(self.c), 0.0

    def supremum(self, T):
        return float(self.c)

    @property
    def sigma1_monotone(self):
        return "increasing"

    def tau_prime_bound(self):
        return 0.0

    sigma1_to_infinity = property(lambda self: True)
    bounded = property(lambda self: True)
    declared_tau_min = property(lambda self: float(self.c))
    declared_tau_max = property(lambda self: float(self.c))

    def to_dict(self):
        return {"kind": self.kind, "c": self.c}

    @classmethod
    def _from_dict(cls, d):
        return cls(float(d["c"]))


@_register_delay
@dataclass(frozen=True, eq=False)
class AffineDelay(DelaySpec):
    """tau(t) = a t + b, with an optional separate value at t = 0."""

    a: float
    b: float
    at_zero: float | None = None
    kind: ClassVar[str] = "affine"

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("affine delay needs a >= 0 to stay positive")
        if self.b < 0:
            raise ValueError("affine delay needs b >= 0")
        if self.b == 0 and (self.a == 0 or self.at_zero is None or self.at_zero <= 0):
            raise ValueError("affine delay with b = 0 needs a > 0 and a positive at_zero")
        if self.at_zero is not None and not self.at_zero > 0:
            raise ValueError("at_zero must be positive")

    def _tau(self, t):
        return self.a * t + self.b

    def _sigma1(self, t):
        return (1.0 - self.a) * t - self.b

    def breakpoints(self, T):
        return np.array([0.0])

    def infimum(self, T):
        vals = [(self.b, 0.0)]
        if self.at_zero is not None:
            vals.append((self.at_zero, 0.0))
        return min(vals)

    def supremum(self, T):
        s = self.a * T + self.b
        return max(s, self.at_zero) if self.at_zero is not None else s

    @property
    def sigma1_monotone(self):
        if self.a > 1:
            return "not"
        if self.at_zero is not None and self.at_zero < self.b:
            return "not"
        return "increasing"

    def jumps(self, T):
        if self.at_zero is not None and self.at_zero != self.b:
            return [0.0]
        return []

    def sigma1_flat(self, T):
        return [(0.0, T)] if self.a == 1 else []

    def tau_prime_bound(self):
        if self.at_zero is not None and self.at_zero != self.b:
            return None
        return float(self.a)

    @property
    def sigma1_to_infinity(self):
        return self.a < 1

    @property
    def bounded(self):
        return self.a == 0

    @property
    def declared_tau_min(self):
        v, _ = self.infimum(0.0)
        return v if v > 0 else None

    @property
    def declared_tau_max(self):
        return self.supremum(0.0) if self.a == 0 else None

    def to_dict(self):
        d = {"kind": self.kind, "a": self.a, "b": self.b}
        if self.at_zero is not None:
            d["at_zero"] = self.at_zero
        return d

    @classmethod
    def _from_dict(cls, d):
        return cls(float(d["a"]), float(d["b"]), _float_or_none(d.get("at_zero")))


@_register_delay
@dataclass(frozen=True, eq=False)
class PiecewiseAffineDelay(DelaySpec):
    """tau(t) = values[i] + slopes[i] (t - breakpoints[i]) on [b_i, b_{i+1}).

    The last piece extends to +infinity; ``breakpoints[0]`` must be 0.
    """

    breakpoints_: tuple
    values: tuple
    slopes: tuple
    kind: ClassVar[str] = "piecewise_affine"

    def __post_init__(self):
        b = tuple(float(x) for x in self.breakpoints_)
        v = tuple(float(x) for x in self.values)
        s = tuple(float(x) for x in self.slopes)
        object.__setattr__(self, "breakpoints_", b)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "slopes", s)
        if not (len(b) == len(v) == len(s) >= 1):
            raise ValueError("breakpoints, values and slopes must have equal length")
        if b[0] != 0.0 or any(y <= x for x, y in zip(b, b[1:])):
            raise ValueError("breakpoints must start at 0 and increase strictly")
        if any(x <= 0 for x in v):
            raise ValueError("piece values must be positive")
        for i in range(len(b) - 1):
            if v[i] + s[i] * (b[i + 1] - b[i]) < 0:
                raise ValueError(f"piece {i} becomes negative")
        if s[-1] < 0:
            raise ValueError("last piece must have a nonnegative slope")

    def _tau(self, t):
        b = np.asarray(self.breakpoints_)
        idx = np.searchsorted(b, t, side="right") - 1
        return np.asarray(self.values)[idx] + np.asarray(self.slopes)[idx] * (t - b[idx])

    def _sigma1(self, t):
        b = np.asarray(self.breakpoints_)
        idx = np.searchsorted(b, t, side="right") - 1
        sl = np.asarray(self.slopes)[idx]
        return (1.0 - sl) * t + sl * b[idx] - np.asarray(self.values)[idx]

    def _right_limit(self, i):
        b, v, s = self.breakpoints_, self.values, self.slopes
        return v[i] + s[i] * (b[i + 1] - b[i])

    def left_limit(self, t):
        b = self.breakpoints_
        i = int(np.searchsorted(b, t, side="left")) - 1
        if i < 0:
            raise DomainError("no left limit at 0")
        return self.values[i] + self.slopes[i] * (t - b[i])

    def _pieces(self, T):
        b = self.breakpoints_
        for i in range(len(b)):
            if b[i] > T:
                break
            right = b[i + 1] if i + 1 < len(b) else math.inf
            yield i, b[i], min(right, T)

    def breakpoints(self, T):
        return np.array([x for x in self.breakpoints_ if x <= T])

    def infimum(self, T):
        best = (math.inf, 0.0)
        for i, lo, hi in self._pieces(T):
            end = self.values[i] + self.slopes[i] * (hi - lo)
            best = min(best, (self.values[i], lo), (end, hi))
        return best

    def supremum(self, T):
        out = -math.inf
        for i, lo, hi in self._pieces(T):
            out = max(out, self.values[i], self.values[i] + self.slopes[i] * (hi - lo))
        return out

    def jumps(self, T):
        return [self.breakpoints_[i] for i in range(1, len(self.breakpoints_))
                if self.breakpoints_[i] <= T and self.values[i] != self._right_limit(i - 1)]

    @property
    def sigma1_monotone(self):
        if any(s > 1 for s in self.slopes):
            return "not"
        if any(self.values[i] > self._right_limit(i - 1) for i in range(1, len(self.values))):
            return "not"
        return "increasing"

    def sigma1_flat(self, T):
        return [(lo, hi) for i, lo, hi in self._pieces(T) if self.slopes[i] == 1 and hi > lo]

    def tau_prime_bound(self):
        if self.jumps(math.inf):
            return None
        return max(self.slopes)

    @property
    def sigma1_to_infinity(self):
        return self.slopes[-1] < 1

    @property
    def bounded(self):
        return self.slopes[-1] == 0

    @property
    def declared_tau_min(self):
        if self.slopes[-1] < 0:
            return None
        v, _ = self.infimum(self.breakpoints_[-1])
        return v if v > 0 else None

    @property
    def declared_tau_max(self):
        return self.supremum(self.breakpoints_[-1]) if self.bounded else None

    def to_dict(self):
        return {"kind": self.kind, "breakpoints": list(self.breakpoints_),
                "values": list(self.values), "slopes": list(self.slopes)}

    @classmethod
    def _from_dict(cls, d):
        return cls(tuple(d["breakpoints"]), tuple(d["values"]), tuple(d["slopes"]))


def floor_shift_delay(T: float) -> PiecewiseAffineDelay:
    """tau(t) = floor(t + 1) on [0, T], held constant afterwards."""
    n = int(math.ceil(T)) + 1
    return PiecewiseAffineDelay(tuple(range(n)), tuple(float(k + 1) for k in range(n)),
                                (0.0,) * n)


@_register_delay
@dataclass(frozen=True, eq=False)
class DyadicSpikeDelay(DelaySpec):
    """tau(t) = k on [2^k, 2^k + 1) for k >= 1 and 1 elsewhere."""

    kind: ClassVar[str] = "dyadic_spike"

    def _tau(self, t):
        fl = np.floor(t).astype(np.int64)
        pow2 = (fl >= 2) & ((fl & (fl - 1)) == 0)
        k = np.frexp(np.maximum(fl, 1).astype(float))[1] - 1
        return np.where(pow2, k.astype(float), 1.0)

    def _spikes(self, T):
        k = 2
        while 2 ** k <= T:
            yield k
            k += 1

    def breakpoints(self, T):
        pts = [0.0]
        for k in self._spikes(T):
            pts += [float(2 ** k), float(2 ** k + 1)]
        return np.array([p for p in pts if p <= T])

    def left_limit(self, t):
        return float(self._tau(np.array([np.nextafter(t, -np.inf)]))[0])

    def infimum(self, T):
        return 1.0, 0.0

    def supremum(self, T):
        return float(max([1] + list(self._spikes(T))))

    def jumps(self, T):
        return [float(x) for x in self.breakpoints(T)[1:]]

    sigma1_monotone = property(lambda self: "not")
    sigma1_to_infinity = property(lambda self: True)
    bounded = property(lambda self: False)
    declared_tau_min = property(lambda self: 1.0)

    def to_dict(self):
        return {"kind": self.kind}

    @classmethod
    def _from_dict(cls, d):
        return cls()


def dyadic_count_closed_form(t: float) -> int:
    """Closed-form iteration count of the dyadic spike delay."""
    if t < 0:
        return 0
    if t < 1:
        return 1
    fl = int(math.floor(t))
    lg = fl.bit_length() - 1
    return fl - (lg - 2) * (lg + 1) // 2


@_register_delay
@dataclass(frozen=True, eq=False)
class TabulatedDelay(DelaySpec):
    """Delay given on a grid starting at 0; held constant after the last node."""

    grid: tuple
    values: tuple
    interpolation: str = "linear"
    tau_min: float | None = None
    tau_max: float | None = None
    kind: ClassVar[str] = "tabulated"

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 1:
            raise ValueError("grid and values must be 1-D of equal length")
        if g[0] != 0 or np.any(np.diff(g) <= 0):
            raise ValueError("grid must start at 0 and increase strictly")
        if self.interpolation not in ("linear", "left-constant"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        if not np.all(np.isfinite(v)):
            raise ValueError("tabulated values must be finite")
        if np.any(v <= 0):
            raise DelayEvaluationError("tabulated delay has a nonpositive value")
        object.__setattr__(self, "grid", tuple(g.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))
        audit = self(np.unique(np.concatenate([np.linspace(0, g[-1], 10_000), g])))
        if self.tau_min is not None and audit.min() < self.tau_min:
            raise ValueError("declared tau_min violated on the audit grid")
        if self.tau_max is not None and audit.max() > self.tau_max:
            raise ValueError("declared tau_max violated on the audit grid")

    def _tau(self, t):
        g, v = np.asarray(self.grid), np.asarray(self.values)
        if self.interpolation == "linear":
            return np.interp(t, g, v)
        return v[np.searchsorted(g, t, side="right") - 1]

    def breakpoints(self, T):
        return np.array([x for x in self.grid if x <= T])

    def infimum(self, T):
        pts = np.append(self.breakpoints(T), T)
        vals = self(pts)
        i = int(np.argmin(vals))
        return float(vals[i]), float(pts[i])

    def supremum(self, T):
        return float(np.max(self(np.append(self.breakpoints(T), T))))

    @property
    def sigma1_monotone(self):
        v, g = np.diff(self.values), np.diff(self.grid)
        if self.interpolation == "linear":
            return "increasing" if np.all(v <= g) else "not"
        return "increasing" if np.all(v <= 0) else "not"

    def jumps(self, T):
        if self.interpolation == "linear":
            return []
        return [self.grid[i] for i in range(1, len(self.grid))
                if self.grid[i] <= T and self.values[i] != self.values[i - 1]]

    closed_form = property(lambda self: False)
    sigma1_to_infinity = property(lambda self: True)
    bounded = property(lambda self: True)

    @property
    def declared_tau_min(self):
        return self.tau_min

    @property
    def declared_tau_max(self):
        return self.tau_max

    def to_dict(self):
        d = {"kind": self.kind, "grid": list(self.grid), "values": list(self.values),
             "interpolation": self.interpolation}
        if self.tau_min is not None:
            d["tau_min"] = self.tau_min
        if self.tau_max is not None:
            d["tau_max"] = self.tau_max
        return d

    @classmethod
    def _from_dict(cls, d):
        return cls(tuple(d["grid"]), tuple(d["values"]), d.get("interpolation", "linear"),
                   _float_or_none(d.get("tau_min")), _float_or_none(d.get("tau_max")))


@_register_delay
@dataclass(frozen=True, eq=False)
class TransportInducedDelay(DelaySpec):
    """tau(t) = t - R(t, 1) for a transport field's characteristic maps."""

    maps: Any
    kind: ClassVar[str] = "transport_induced"

    def _tau(self, t):
        return np.atleast_1d(self.maps.induced_delay(t))

    def left_limit(self, t):
        return float(self._tau(np.array([t]))[0])

    def infimum(self, T):
        return 1.0 / self.maps.field.lambda_max, 0.0

    def supremum(self, T):
        return 1.0 / self.maps.field.lambda_min

    sigma1_monotone = property(lambda self: "increasing")
    sigma1_to_infinity = property(lambda self: True)
    bounded = property(lambda self: True)

    def tau_prime_bound(self):
        return self.maps.field.alpha

    @property
    def declared_tau_min(self):
        return 1.0 / self.maps.field.lambda_max

    @property
    def declared_tau_max(self):
        return 1.0 / self.maps.field.lambda_min

    def to_dict(self):
        m = self.maps
        return {"kind": self.kind, "field": m.field.to_dict(), "ode_step": m.ode_step,
                "root_tol": m.root_tol}

    @classmethod
    def _from_dict(cls, d):
        from .transport import CharacteristicMaps, TransportField

        field_ = TransportField.from_dict(d["field"])
        return cls(CharacteristicMaps(field_, d.get("ode_step"), d.get("root_tol", 1e-10)))


# ---------------------------------------------------------------------------
# Signals
# ---------------------------------------------------------------------------

REGULARITY_TAGS = ("continuous", "regulated", "Lp", "Linf")
_SIGNAL_FORMS: dict[str, type] = {}


def _register_signal(cls):
    _SIGNAL_FORMS[cls.form] = cls
    return cls


def _vec(v) -> np.ndarray:
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if a.ndim != 1:
        raise ValueError("vector value expected")
    return a


@dataclass(frozen=True, eq=False)
class Signal:
    """Vector-valued function on an interval [a, b) (or [a, b] when closed).

    ``a`` may be ``-inf``.  Calling a signal on a scalar returns a vector of
    length ``dim``; calling it on an array of shape (N,) returns (N, dim).
    ``overrides`` pins exact values at isolated points.
    """

    form: ClassVar[str] = "abstract"

    def _init_common(self):
        a, b = (float(x) for x in self.support)
        if not a < b:
            raise ValueError("empty support")
        if math.isinf(a) and self.form not in ("constant", "power"):
            raise ValueError("only constant and power signals may have infinite history")
        object.__setattr__(self, "support", (a, b))
        if self.regularity not in REGULARITY_TAGS:
            raise ValueError(f"unknown regularity tag {self.regularity!r}")
        ov = tuple((float(s), tuple(_vec(v).tolist())) for s, v in self.overrides)
        object.__setattr__(self, "overrides", ov)

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def _eval(self, s: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def contains(self, s) -> np.ndarray:
        a, b = self.support
        s = np.asarray(s, dtype=float)
        return (s >= a) & ((s <= b) if self.closed_right else (s < b))

    def __call__(self, s):
        arr = np.asarray(s, dtype=float)
        flat = np.atleast_1d(arr).ravel()
        inside = self.contains(flat)
        if not np.all(inside):
            raise HistoryEvaluationError(
                f"signal evaluated at {flat[~inside][0]!r} outside support {self.support}")
        out = np.array(self._eval(flat), dtype=float).reshape(flat.size, self.dim)
        for p, v in self.overrides:
            out[flat == p] = v
        if arr.ndim == 0:
            return out[0]
        return out

    def sup_norm(self, weight: np.ndarray | None = None) -> float:
        """sup |x(s)| (optionally |P x(s)|) over the support."""
        raise NotImplementedError

    def left_limit_at_end(self) -> np.ndarray:
        """Value approached at the right end of the support."""
        b = self.support[1]
        return self(np.nextafter(b, -np.inf)) if not self.closed_right else self(b)

    def _common_dict(self) -> dict:
        a, b = self.support
        d = {"form": self.form, "support": [NEG_INF if math.isinf(a) else a, b],
             "regularity": self.regularity}
        if self.closed_right:
            d["closed_right"] = True
        if self.p is not None:
            d["p"] = self.p
        if self.overrides:
            d["overrides"] = [[s, list(v)] for s, v in self.overrides]
        return d

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(d: dict, pointer: str = "/initial") -> "Signal":
        if not isinstance(d, dict):
            raise ConfigError(pointer, "signal must be an object")
        form = d.get("form")
        if form not in _SIGNAL_FORMS:
            raise ConfigError(pointer + "/form", f"unknown signal form {form!r}")
        try:
            sup = d.get("support", [-1.0, 0.0])
            support = (-math.inf if sup[0] == NEG_INF else float(sup[0]), float(sup[1]))
            common = dict(support=support, regularity=d.get("regularity", "continuous"),
                          p=_float_or_none(d.get("p")),
                          closed_right=bool(d.get("closed_right", False)),
                          overrides=tuple((s, tuple(v)) for s, v in d.get("overrides", [])))
            return _SIGNAL_FORMS[form]._from_dict(d, common)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ConfigError(pointer, str(exc)) from exc


def _weighted_norm(v: np.ndarray, weight) -> float:
    return float(np.linalg.norm(v if weight is None else weight @ v))


@_register_signal
@dataclass(frozen=True, eq=False)
class ConstantSignal(Signal):
    value: tuple
    support: tuple = (-1.0, 0.0)
    regularity: str = "continuous"
    p: float | None = None
    closed_right: bool = False
    overrides: tuple = ()
    form: ClassVar[str] = "constant"

    def __post_init__(self):
        object.__setattr__(self, "value", tuple(_vec(self.value).tolist()))
        self._init_common()

    @property
    def dim(self):
        return len(self.value)

    def _eval(self, s):
        return np.tile(np.asarray(self.value), (s.size, 1))

    def sup_norm(self, weight=None):
        vals = [_weighted_norm(np.asarray(self.value), weight)]
        vals += [_weighted_norm(np.asarray(v), weight) for _, v in self.overrides]
        return max(vals)

    def to_dict(self):
        return {**self._common_dict(), "value": list(self.value)}

    @classmethod
    def _from_dict(cls, d, common):
        return cls(tuple(d["value"]), **common)


@_register_signal
@dataclass(frozen=True, eq=False)
class PowerSignal(Signal):
    """s -> |s|^(-beta) v; unbounded at 0 when beta > 0 (Lp tag required)."""

    beta: float
    direction: tuple
    support: tuple = (-1.0, 0.0)
    regularity: str = "Lp"
    p: float | None = 1.0
    closed_right: bool = False
    overrides: tuple = ()
    form: ClassVar[str] = "power"

    def __post_init__(self):
        object.__setattr__(self, "direction", tuple(_vec(self.direction).tolist()))
        self._init_common()
        a, b = self.support
        touches_zero = a <= 0 <= b
        if self.beta > 0 and touches_zero:
            if self.regularity != "Lp":
                raise ValueError("unbounded power signal must carry the Lp tag")
            if self.p is not None and self.beta * self.p >= 1:
                raise ValueError("power signal is not p-integrable near 0")

    @property
    def dim(self):
        return len(self.direction)

    def _eval(self, s):
        with np.errstate(divide="ignore"):
            mag = np.abs(s) ** (-self.beta)
        return mag[:, None] * np.asarray(self.direction)[None, :]

    def sup_norm(self, weight=None):
        a, b = self.support
        base = _weighted_norm(np.asarray(self.direction), weight)
        if self.beta > 0:
            if a <= 0 <= b:
                return math.inf
            return base * min(abs(a), abs(b)) ** (-self.beta)
        if self.beta < 0 and math.isinf(a):
            return math.inf
        return base * max(abs(a), abs(b)) ** (-self.beta)

    def to_dict(self):
        return {**self._common_dict(), "beta": self.beta, "direction": list(self.direction)}

    @classmethod
    def _from_dict(cls, d, common):
        return cls(float(d["beta"]), tuple(d["direction"]), **common)


@_register_signal
@dataclass(frozen=True, eq=False)
class PowerLawFamily(Signal):
    """s -> Re(rho * exp(alpha ln s) * v) on a positive support."""

    rho: complex
    alpha: complex
    direction: tuple
    support: tuple = (0.0, math.inf)
    regularity: str = "continuous"
    p: float | None = None
    closed_right: bool = False
    overrides: tuple = ()
    form: ClassVar[str] = "power_family"

    def __post_init__(self):
        object.__setattr__(self, "direction",
                           tuple(complex(x) for x in np.atleast_1d(self.direction)))
        a, b = (float(x) for x in self.support)
        if a < 0:
            raise ValueError("power-law family lives on positive times")
        object.__setattr__(self, "support", (a, b))
        object.__setattr__(self, "overrides", ())

    @property
    def dim(self):
        return len(self.direction)

    def contains(self, s):
        a, b = self.support
        s = np.asarray(s, dtype=float)
        return (s > a) & (s < b) if a == 0 else (s >= a) & (s < b)

    def _eval(self, s):
        v = np.asarray(self.direction, dtype=complex)
        z = complex(self.rho) * np.exp(complex(self.alpha) * np.log(s))
        return np.real(z[:, None] * v[None, :])

    def to_dict(self):
        rho = complex(self.rho)
        return {"form": self.form, "rho": [rho.real, rho.imag],
                "alpha": [complex(self.alpha).real, complex(self.alpha).imag],
                "direction": [[complex(x).real, complex(x).imag] for x in self.direction]}

    @classmethod
    def _from_dict(cls, d, common):
        return cls(complex(*d["rho"]), complex(*d["alpha"]), tuple(complex(*x) for x in d["direction"]))


@_register_signal
@dataclass(frozen=True, eq=False)
class SampledSignal(Signal):
    """Grid values with linear or left-constant interpolation.

    The support defaults to [grid[0], grid[-1]); with left-constant
    interpolation the last value holds up to the right end.
    """

    grid: tuple
    values: tuple
    interpolation: str = "linear"
    support: tuple | None = None
    regularity: str | None = None
    p: float | None = None
    closed_right: bool = False
    overrides: tuple = ()
    form: ClassVar[str] = "sampled"

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if g.ndim != 1 or v.shape[0] != g.size or g.size < 2:
            raise ValueError("sampled signal needs at least two grid points and matching values")
        if np.any(np.diff(g) <= 0):
            raise ValueError("sampled grid must increase strictly")
        if not np.all(np.isfinite(v)):
            raise ValueError("sampled values must be finite")
        if self.interpolation not in ("linear", "left-constant"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        object.__setattr__(self, "grid", tuple(g.tolist()))
        object.__setattr__(self, "values", tuple(map(tuple, v.tolist())))
        if self.support is None:
            object.__setattr__(self, "support", (float(g[0]), float(g[-1])))
        if self.regularity is None:
            object.__setattr__(self, "regularity",
                               "continuous" if self.interpolation == "linear" else "regulated")
        self._init_common()
        a, b = self.support
        if a < g[0] or b > g[-1] + (0 if self.interpolation == "linear" else math.inf):
            raise ValueError("support exceeds the sampled grid")
        if self.regularity == "continuous" and self.interpolation == "left-constant":
            inner = np.abs(np.diff(v, axis=0))[:-1] if g.size > 2 else np.zeros((0, 1))
            if np.any(inner > 1e-12):
                raise ValueError("left-constant signal tagged continuous has a jump")

    @property
    def dim(self):
        return len(self.values[0])

    def _eval(self, s):
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        if self.interpolation == "linear":
            return np.column_stack([np.interp(s, g, v[:, j]) for j in range(v.shape[1])])
        idx = np.clip(np.searchsorted(g, s, side="right") - 1, 0, g.size - 1)
        return v[idx]

    def sup_norm(self, weight=None):
        v = np.asarray(self.values)
        if weight is not None:
            v = v @ np.asarray(weight).T
        vals = list(np.linalg.norm(v, axis=1))
        vals += [_weighted_norm(np.asarray(x), weight) for _, x in self.overrides]
        return float(max(vals))

    def to_dict(self):
        return {**self._common_dict(), "grid": list(self.grid),
                "values": [list(r) for r in self.values], "interpolation": self.interpolation}

    @classmethod
    def _from_dict(cls, d, common):
        return cls(tuple(d["grid"]), d["values"], d.get("interpolation", "linear"), **common)


@dataclass(frozen=True, eq=False)
class FunctionSignal(Signal):
    """Wraps a vectorised callable s -> (N, dim) array; not serialisable."""

    fn: Callable
    dim_: int
    support: tuple = (-1.0, 0.0)
    regularity: str = "continuous"
    p: float | None = None
    closed_right: bool = False
    overrides: tuple = ()
    sup: float | None = None
    form: ClassVar[str] = "function"

    def __post_init__(self):
        self._init_common()

    @property
    def dim(self):
        return self.dim_

    def _eval(self, s):
        return np.asarray(self.fn(s), dtype=float).reshape(s.size, self.dim_)

    def sup_norm(self, weight=None):
        if self.sup is not None and weight is None:
            return self.sup
        a, b = self.support
        s = np.linspace(a, b, 4001)[:-1] if not self.closed_right else np.linspace(a, b, 4001)
        v = self(s)
        if weight is not None:
            v = v @ np.asarray(weight).T
        return float(np.max(np.linalg.norm(v, axis=1)))

    def to_dict(self):
        raise TypeError("function signals cannot be serialised")


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormRequest:
    p: float
    window: str | float = "h"

    def __post_init__(self):
        if not (self.p >= 1):
            raise ValueError("norm exponent must be >= 1")
        if self.window != "h" and not (float(self.window) > 0):
            raise ValueError("window must be 'h' or a positive number")

    def to_dict(self):
        return {"p": "inf" if math.isinf(self.p) else self.p, "window": self.window}

    @classmethod
    def from_dict(cls, d):
        p = d["p"]
        p = math.inf if p in ("inf", "Infinity") else float(p)
        w = d.get("window", "h")
        return cls(p, w if w == "h" else float(w))


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything needed to solve one equation instance."""

    matrix: SystemMatrix
    delay: DelaySpec
    initial: Signal
    horizon: float
    grid: np.ndarray = field(default=None)
    norms: tuple = ()

    def __post_init__(self):
        if not isinstance(self.matrix, SystemMatrix):
            object.__setattr__(self, "matrix", SystemMatrix(self.matrix))
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        grid = self.grid
        if grid is None:
            grid = np.linspace(0.0, self.horizon, 201)
        grid = np.array(grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
            raise ValueError("output grid must be strictly increasing")
        if grid[-1] > self.horizon:
            raise ValueError("output grid exceeds the horizon")
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        if self.initial.support[1] != 0.0:
            raise ValueError("initial condition must end at 0")
        if self.initial.dim != self.matrix.dim:
            raise ValueError("initial condition and matrix dimensions differ")
        object.__setattr__(self, "norms", tuple(self.norms))

    @property
    def dim(self):
        return self.matrix.dim

    def replace(self, **changes) -> "Scenario":
        kw = dict(matrix=self.matrix, delay=self.delay, initial=self.initial,
                  horizon=self.horizon, grid=self.grid, norms=self.norms)
        kw.update(changes)
        if "horizon" in changes and "grid" not in changes:
            g = np.asarray(self.grid)
            g = g[g <= kw["horizon"]]
            kw["grid"] = g if g.size else np.array([0.0])
        return Scenario(**kw)

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.to_list(), "delay": self.delay.to_dict(),
                "initial": self.initial.to_dict(), "horizon": self.horizon,
                "grid": self.grid.tolist(), "norms": [n.to_dict() for n in self.norms]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if not isinstance(d, dict):
            raise ConfigError("", "configuration must be a JSON object")
        for key in ("matrix", "delay", "initial", "horizon"):
            if key not in d:
                raise ConfigError("/" + key, "missing required field")
        try:
            matrix = SystemMatrix(d["matrix"])
        except (ValueError, TypeError) as exc:
            raise ConfigError("/matrix", str(exc)) from exc
        delay = DelaySpec.from_dict(d["delay"], "/delay")
        initial = Signal.from_dict(d["initial"], "/initial")
        try:
            horizon = float(d["horizon"])
        except (TypeError, ValueError) as exc:
            raise ConfigError("/horizon", "horizon must be a number") from exc
        grid = d.get("grid")
        if isinstance(grid, dict):
            try:
                grid = np.linspace(float(grid["start"]), float(grid["stop"]), int(grid["num"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError("/grid", "grid object needs start, stop, num") from exc
        norms = []
        for i, n in enumerate(d.get("norms", [])):
            try:
                norms.append(NormRequest.from_dict(n))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"/norms/{i}", str(exc)) from exc
        try:
            return cls(matrix, delay, initial, horizon, grid, tuple(norms))
        except ValueError as exc:
            msg = str(exc)
            ptr = "/grid" if "grid" in msg else "/initial" if "initial" in msg else "/horizon"
            raise ConfigError(ptr, msg) from exc

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"invalid JSON: {exc}") from exc
        return cls.from_dict(d)
