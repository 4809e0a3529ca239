"""Spectral radius, adapted norms and the Hale-Silkowski radius."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import DelayDiffError, SystemMatrix


class SpectralError(DelayDiffError, RuntimeError):
    pass


def _entries(A) -> np.ndarray:
    return A.entries if isinstance(A, SystemMatrix) else np.atleast_2d(np.asarray(A, dtype=float))


def _schur(a: np.ndarray):
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    try:
        return scipy.linalg.schur(a.astype(complex), output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SpectralError(f"Schur iteration failed: {exc}") from exc


def spectral_radius(A) -> float:
    """Largest eigenvalue modulus, read off the complex Schur form."""
    a = _entries(A)
    T, _ = _schur(a)
    return float(np.max(np.abs(np.diag(T))))


@dataclass(frozen=True, eq=False)
class AdaptedNorm:
    """Vector norm |x|_P = ||P x||_2 in which ||A||_P <= rho(A) + epsilon.

    ``lower`` and ``upper`` are the equivalence constants
    lower |x| <= |x|_P <= upper |x| with the Euclidean norm.
    """

    weight: np.ndarray
    achieved_operator_norm: float
    epsilon: float
    scaling: float

    def __call__(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        y = x @ self.weight.T
        n = np.linalg.norm(y, axis=-1)
        return float(n) if np.ndim(n) == 0 else n

    @property
    def lower(self) -> float:
        return float(np.linalg.svd(self.weight, compute_uv=False)[-1])

    @property
    def upper(self) -> float:
        return float(np.linalg.svd(self.weight, compute_uv=False)[0])

    def to_dict(self):
        return {"weight": self.weight.tolist(), "achieved_operator_norm": self.achieved_operator_norm,
                "epsilon": self.epsilon, "lower": self.lower, "upper": self.upper}


def adapted_norm(A, epsilon: float, max_halvings: int = 200) -> AdaptedNorm:
    """Schur-based weight P with ||P A P^-1||_2 <= rho(A) + epsilon.

    A = Z T Z^H with T upper triangular.  Conjugating T by
    D = diag(s^(d-1), ..., s, 1) multiplies the entry T_ij by s^(j-i), so the
    off-diagonal part vanishes as s -> 0.  The complex weight D Z^H is turned
    into a real d x d matrix with the same induced norm on real vectors
    through a QR factorisation of its stacked real and imaginary parts.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    a = _entries(A)
    d = a.shape[0]
    T, Z = _schur(a)
    rho = float(np.max(np.abs(np.diag(T))))
    target = rho + epsilon
    s = 1.0
    idx = np.arange(d)
    for _ in range(max_halvings):
        D = s ** (d - 1 - idx).astype(float)
        M = (D[:, None] * T) / D[None, :]
        if np.linalg.norm(M, 2) <= target:
            break
        s *= 0.5
    else:
        raise SpectralError("could not reach the requested operator norm")
    Pc = D[:, None] * Z.conj().T
    R = np.linalg.qr(np.vstack([Pc.real, Pc.imag]), mode="r")
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    P = signs[:, None] * R
    P = P / np.max(np.abs(P))
    achieved = float(np.linalg.norm(P @ a @ np.linalg.inv(P), 2))
    return AdaptedNorm(P, achieved, float(epsilon), s)


def rho_hale_silkowski(matrices, grid_points_per_angle: int = 64) -> float:
    """max over a uniform angle grid of rho(sum_j A_j exp(i theta_j)).

    A common phase does not change the spectral radius, so the first angle is
    pinned to 0; the remaining N - 1 angles are searched exhaustively.  The
    result is a lower bound on the exact radius.
    """
    mats = [_entries(m) for m in matrices]
    if not mats:
        raise ValueError("need at least one matrix")
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise ValueError("matrices must share one dimension")
    K = int(grid_points_per_angle)
    if K < 8:
        raise ValueError("grid_points_per_angle must be >= 8")
    phases = np.exp(1j * 2 * np.pi * np.arange(K) / K)
    stack = np.stack(mats).astype(complex)
    best = 0.0
    for combo in itertools.product(range(K), repeat=len(mats) - 1):
        w = np.concatenate([[1.0], phases[list(combo)]])
        S = np.tensordot(w, stack, axes=1)
        best = max(best, float(np.max(np.abs(np.linalg.eigvals(S)))))
    return best
