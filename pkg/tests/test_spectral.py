import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from delaydiff.spectral import adapted_norm, rho_hale_silkowski, spectral_radius


@pytest.mark.parametrize("A, rho", [([[0.5]], 0.5), ([[0, 1], [0, 0]], 0.0),
                                    ([[0.3, 0.4], [0, 0.6]], 0.6)])
def test_spectral_radius_examples(A, rho):
    assert spectral_radius(A) == pytest.approx(rho, abs=1e-12)


def test_spectral_radius_rejects_nonfinite():
    with pytest.raises(ValueError):
        spectral_radius([[np.inf]])


def _probe(A, norm, n=10_000, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, A.shape[0]))
    P = norm.weight
    return np.max(np.linalg.norm(X @ A.T @ P.T, axis=1) / np.linalg.norm(X @ P.T, axis=1))


@pytest.mark.parametrize("A, eps, bound", [([[0.5]], 0.01, 0.5),
                                           ([[0.5, 100.0], [0.0, 0.5]], 0.1, 0.6),
                                           ([[0.0, 1.0], [0.0, 0.0]], 0.05, 0.05)])
def test_adapted_norm_examples(A, eps, bound):
    A = np.asarray(A, dtype=float)
    n = adapted_norm(A, eps)
    assert n.achieved_operator_norm <= bound + 1e-12
    assert _probe(A, n) <= n.achieved_operator_norm * (1 + 1e-12)


def test_adapted_norm_scalar_weight():
    n = adapted_norm([[0.5]], 0.01)
    assert abs(n.weight[0, 0]) == pytest.approx(1.0)
    assert n.achieved_operator_norm == pytest.approx(0.5)


def test_adapted_norm_equivalence_constants():
    A = np.array([[0.5, 100.0], [0.0, 0.5]])
    n = adapted_norm(A, 0.1)
    rng = np.random.default_rng(1)
    X = rng.standard_normal((1000, 2))
    ratio = np.linalg.norm(X @ n.weight.T, axis=1) / np.linalg.norm(X, axis=1)
    assert np.all(ratio >= n.lower * (1 - 1e-12))
    assert np.all(ratio <= n.upper * (1 + 1e-12))


matrices = st.integers(1, 4).flatmap(
    lambda d: arrays(np.float64, (d, d), elements=st.floats(-3, 3, allow_nan=False)))


@given(matrices, st.floats(1e-3, 0.5))
def test_adapted_norm_bound_property(A, eps):
    n = adapted_norm(A, eps)
    rho = spectral_radius(A)
    assert n.achieved_operator_norm <= rho + eps + 1e-9
    assert _probe(A, n, n=500) <= n.achieved_operator_norm * (1 + 1e-9) + 1e-12


def test_gelfand_cross_check():
    rng = np.random.default_rng(3)
    for _ in range(30):
        d = int(rng.integers(1, 4))
        A = rng.standard_normal((d, d))
        rho = spectral_radius(A)
        x = rng.standard_normal(d)
        y = np.linalg.matrix_power(A / rho, 64) @ x
        est = rho * np.linalg.norm(y) ** (1 / 64)
        assert est == pytest.approx(rho, rel=0.05)


def test_rho_hs_examples():
    assert rho_hale_silkowski([[[0.5]]]) == pytest.approx(0.5)
    assert rho_hale_silkowski([[[0.4]], [[0.4]]]) == pytest.approx(0.8)
    assert rho_hale_silkowski([[[0.4]], [[-0.4]]]) == pytest.approx(0.8)


def test_rho_hs_errors():
    with pytest.raises(ValueError):
        rho_hale_silkowski([[[0.4]], [[0.1, 0], [0, 0.1]]])
    with pytest.raises(ValueError):
        rho_hale_silkowski([[[0.4]]], grid_points_per_angle=4)


def test_rho_hs_monotone_under_refinement():
    rng = np.random.default_rng(5)
    mats = [rng.standard_normal((2, 2)) * 0.3 for _ in range(2)]
    vals = [rho_hale_silkowski(mats, g) for g in (8, 16, 32, 64)]
    assert all(b >= a - 1e-14 for a, b in zip(vals, vals[1:]))
    assert vals[0] >= spectral_radius(sum(mats)) - 1e-12
