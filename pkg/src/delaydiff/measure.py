"""Push-forward density of Lebesgue measure under sigma_1 and the H6/H9 checks."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .core import DelaySpec, SystemMatrix

DEFAULT_SEED = 20240917
GUARD_BAND = 0.05


def default_seed() -> int:
    """Sampling seed, overridable through DELAYDIFF_SEED."""
    env = os.environ.get("DELAYDIFF_SEED")
    return int(env) if env not in (None, "") else DEFAULT_SEED


@dataclass(frozen=True, eq=False)
class PushforwardDensity:
    bin_edges: np.ndarray
    density: np.ndarray
    source_interval: tuple
    sup_estimate: float
    seed: int
    samples: int

    @property
    def mass(self) -> float:
        return float(np.sum(self.density * np.diff(self.bin_edges)))

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_left", "bin_right", "density"])
            for lo, hi, d in zip(self.bin_edges[:-1], self.bin_edges[1:], self.density):
                w.writerow([repr(float(lo)), repr(float(hi)), repr(float(d))])

    def to_dict(self):
        return {"bin_edges": self.bin_edges.tolist(), "density": self.density.tolist(),
                "source_interval": list(self.source_interval), "sup_estimate": self.sup_estimate,
                "seed": self.seed, "samples": self.samples}


def estimate_pushforward(delay: DelaySpec, T: float, bins: int = 64, samples: int = 100_000,
                         seed: int | None = None, chunk: int = 1_000_000) -> PushforwardDensity:
    """Histogram estimate of the density of (sigma_1 on [0, T]) pushed forward.

    One uniform draw per stratum of width T / samples; each sample carries
    mass T / samples, so the histogram integrates to T.
    """
    if bins < 16:
        raise ValueError("bins must be >= 16")
    if samples < 10_000:
        raise ValueError("samples must be >= 10^4")
    seed = default_seed() if seed is None else int(seed)
    rng = np.random.default_rng(seed)
    h = T / samples
    values = np.empty(samples)
    for start in range(0, samples, chunk):
        stop = min(start + chunk, samples)
        u = (np.arange(start, stop) + rng.random(stop - start)) * h
        values[start:stop] = delay.sigma1(u)
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        hi = lo + 1e-12
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(values, bins=edges)
    density = counts * h / np.diff(edges)
    return PushforwardDensity(edges, density, (0.0, float(T)), float(density.max()), seed, samples)


def analytic_phi_bound(delay: DelaySpec) -> float | None:
    """1 / (1 - alpha) when tau is C^1 with tau' <= alpha < 1, else None."""
    if not delay.closed_form:
        return None
    alpha = delay.tau_prime_bound()
    if alpha is None or not alpha < 1:
        return None
    return 1.0 / (1.0 - alpha)


def _verdict(x: float, band: float) -> str:
    if x < 1 - band:
        return "holds"
    if x > 1 + band:
        return "fails"
    return "undecidable"


def check_H6_H9(delay: DelaySpec, A, p: float, T: float, bins: int = 64,
                samples: int = 100_000, seed: int | None = None) -> dict:
    """phi bound, the product phi * rho(A)^p, and H6/H9 verdicts.

    Analytic bounds are exact and compared with 1 directly; estimated bounds
    use a 5% guard band.  For estimates, H6 fails when the histogram peak
    doubles with the bin count (an atom), and H9 also fails when the peak
    keeps growing with T (the global push-forward is not sigma-finite).
    """
    if math.isinf(p):
        raise ValueError("H9 needs a finite exponent p")
    if p < 1:
        raise ValueError("p must be >= 1")
    A = A if isinstance(A, SystemMatrix) else SystemMatrix(A)
    rho = A.spectral_radius
    bound = analytic_phi_bound(delay)
    out = {"rho": rho, "p": p}
    if bound is not None:
        product = bound * rho ** p
        out.update(phi_sup=bound, product=product, source="analytic", verdict_H6="holds",
                   verdict_H9="holds" if product < 1 else "fails")
        return out
    if delay.sigma1_flat(T):
        out.update(phi_sup=math.inf, product=math.inf, source="analytic",
                   verdict_H6="fails", verdict_H9="fails",
                   note="sigma_1 is constant on an interval")
        return out
    est = estimate_pushforward(delay, T, bins, samples, seed)
    fine = estimate_pushforward(delay, T, 2 * bins, samples, seed)
    longer = estimate_pushforward(delay, 2 * T, bins, 2 * samples, seed)
    phi = est.sup_estimate
    product = phi * rho ** p
    atom = fine.sup_estimate > 1.8 * phi
    growing = longer.sup_estimate > 1.5 * phi
    v9 = "fails" if (atom or growing) else _verdict(product, GUARD_BAND)
    out.update(phi_sup=phi, product=product, source="estimate", seed=est.seed,
               verdict_H6="fails" if atom else "holds", verdict_H9=v9,
               sigma_finite=not growing)
    return out
