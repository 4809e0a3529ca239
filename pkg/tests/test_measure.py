import numpy as np
import pytest

from delaydiff.core import AffineDelay, ConstantDelay, DyadicSpikeDelay, floor_shift_delay
from delaydiff.measure import (DEFAULT_SEED, analytic_phi_bound, check_H6_H9, default_seed,
                               estimate_pushforward)


def test_affine_density_is_four():
    pf = estimate_pushforward(AffineDelay(0.75, 1.0), 100.0, bins=64, samples=1_000_000)
    assert np.all(np.abs(pf.density - 4.0) <= 0.08)
    assert pf.mass == pytest.approx(100.0, rel=0.01)
    assert pf.bin_edges[0] == pytest.approx(-1.0, abs=1e-3)
    assert pf.bin_edges[-1] == pytest.approx(24.0, abs=1e-3)


def test_constant_density_is_one():
    pf = estimate_pushforward(ConstantDelay(1.0), 10.0, samples=100_000)
    assert np.allclose(pf.density, 1.0, atol=0.03)
    assert pf.mass == pytest.approx(10.0, rel=0.01)


def test_density_matches_inverse_slope():
    d = AffineDelay(0.5, 1.0)
    pf = estimate_pushforward(d, 50.0, bins=32, samples=400_000)
    # sigma_1(t) = 0.5 t - 1, so phi = 2 everywhere on the image
    assert np.all(np.abs(pf.density / 2.0 - 1) < 0.03)


def test_floor_delay_mass_concentrates():
    small = estimate_pushforward(floor_shift_delay(10.0), 10.0, samples=100_000)
    large = estimate_pushforward(floor_shift_delay(20.0), 20.0, samples=100_000)
    assert small.sup_estimate > 5
    assert large.sup_estimate > 1.5 * small.sup_estimate


def test_seed_recorded_and_env_override(monkeypatch):
    pf = estimate_pushforward(ConstantDelay(1.0), 5.0, samples=10_000)
    assert pf.seed == DEFAULT_SEED
    monkeypatch.setenv("DELAYDIFF_SEED", "7")
    assert default_seed() == 7
    assert estimate_pushforward(ConstantDelay(1.0), 5.0, samples=10_000).seed == 7


def test_estimator_is_deterministic_and_stable():
    d = DyadicSpikeDelay()
    a = estimate_pushforward(d, 64.0, samples=100_000, seed=3)
    b = estimate_pushforward(d, 64.0, samples=100_000, seed=3)
    assert np.array_equal(a.density, b.density)
    c = estimate_pushforward(d, 64.0, samples=200_000, seed=3)
    assert c.sup_estimate == pytest.approx(a.sup_estimate, rel=0.05)


def test_argument_checks():
    with pytest.raises(ValueError):
        estimate_pushforward(ConstantDelay(1.0), 5.0, bins=8)
    with pytest.raises(ValueError):
        estimate_pushforward(ConstantDelay(1.0), 5.0, samples=100)
    with pytest.raises(ValueError):
        check_H6_H9(ConstantDelay(1.0), [[0.5]], float("inf"), 10.0)


@pytest.mark.parametrize("delay, A, p, product, verdict", [
    (AffineDelay(0.75, 1.0), 0.5, 1, 2.0, "fails"),
    (ConstantDelay(1.0), 0.5, 1, 0.5, "holds"),
    (AffineDelay(0.5, 1.0), 0.9, 2, 1.62, "fails"),
])
def test_check_H6_H9_examples(delay, A, p, product, verdict):
    out = check_H6_H9(delay, [[A]], p, 100.0)
    assert out["product"] == pytest.approx(product, abs=1e-12)
    assert out["verdict_H9"] == verdict
    assert out["source"] == "analytic"


def test_analytic_bound_needs_slope_below_one():
    assert analytic_phi_bound(AffineDelay(0.75, 1.0)) == 4.0
    assert analytic_phi_bound(AffineDelay(1.0, 1.0)) is None
    assert analytic_phi_bound(DyadicSpikeDelay()) is None


def test_flat_sigma_fails_h6():
    out = check_H6_H9(AffineDelay(1.0, 1.0), [[0.5]], 1, 10.0)
    assert out["verdict_H6"] == "fails"
    # the floor delay keeps a bounded density on any finite window
    out = check_H6_H9(floor_shift_delay(10.0), [[0.5]], 1, 10.0)
    assert out["verdict_H6"] == "holds"
    assert out["phi_sup"] == pytest.approx(10.0, rel=0.05)


def test_density_csv(tmp_path):
    pf = estimate_pushforward(ConstantDelay(1.0), 5.0, bins=16, samples=10_000)
    p = tmp_path / "d.csv"
    pf.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "bin_left,bin_right,density"
    assert len(lines) == 17
