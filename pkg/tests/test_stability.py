import math

import numpy as np
import pytest

from delaydiff.core import (AffineDelay, ConstantDelay, ConstantSignal, DyadicSpikeDelay, Scenario,
                            SystemMatrix)
from delaydiff.solver import solve_trajectory
from delaydiff.stability import (CertificateRefused, certify_exponential, certify_exponential_Lp,
                                 continuous_dependence_sweep, empirical_decay, fit_log_rate,
                                 scalar_shift_family, verify_H11)


def _scn(A=0.5, delay=None, horizon=30.0):
    return Scenario(SystemMatrix([[A]]), delay or ConstantDelay(1.0), ConstantSignal((1.0,)),
                    horizon)


def test_h11_bounded_delay_is_analytic():
    out = verify_H11(ConstantDelay(2.0), 10.0)
    assert (out["alpha"], out["beta"], out["verdict"]) == (0.5, 0.0, "holds")


def test_h11_dyadic_grid_minorant():
    out = verify_H11(DyadicSpikeDelay(), 256.0)
    assert out["verdict"] == "holds"
    ts = np.linspace(0, 256, 6401)
    from delaydiff.kernel import iteration_counts
    n, _ = iteration_counts(DyadicSpikeDelay(), ts)
    assert np.all(n >= out["alpha"] * ts + out["beta"] - 1e-9)


def test_h11_logarithmic_count_is_not_certified():
    out = verify_H11(AffineDelay(0.75, 1.0), 100.0)
    assert out["verdict"] == "undecidable"
    assert out["alpha_doubled"] < 0.75 * out["alpha"]


def test_pointwise_certificate_constant_delay():
    c = certify_exponential(_scn())
    assert c.C == pytest.approx(1.0)
    assert c.gamma == pytest.approx(math.log(2))


def test_certificate_with_supplied_h11():
    c = certify_exponential(_scn(delay=DyadicSpikeDelay()), h11=(0.5, -1.0))
    assert c.C == pytest.approx(2.0)
    assert c.gamma == pytest.approx(0.5 * math.log(2))


def test_window_certificate():
    c = certify_exponential(_scn(), kind="sup-window-exp")
    assert c.C == pytest.approx(2.0)
    with pytest.raises(ValueError):
        certify_exponential(_scn(), kind="nope")


def test_nilpotent_certificate():
    scn = Scenario(SystemMatrix([[0.0, 1.0], [0.0, 0.0]]), ConstantDelay(1.0),
                   ConstantSignal((1.0, 1.0)), 10.0)
    c = certify_exponential(scn)
    assert c.gamma >= -math.log(0.05) - 1e-12
    tr = solve_trajectory(scn)
    assert np.all(tr.values[tr.times >= 1.0] == 0)


def test_Lp_certificate():
    c = certify_exponential_Lp(_scn(), 1.0)
    assert c.C == pytest.approx(4.0)
    assert c.gamma == pytest.approx(math.log(2))
    assert c.norm_rate == c.gamma
    c2 = certify_exponential_Lp(_scn(), 2.0)
    assert c2.norm_rate == pytest.approx(c2.gamma / 2)


def test_Lp_refusals():
    with pytest.raises(CertificateRefused) as err:
        certify_exponential_Lp(_scn(delay=AffineDelay(0.75, 1.0)), 1.0)
    assert err.value.info["q"] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        certify_exponential_Lp(_scn(), math.inf)


def test_unstable_matrix_refused():
    with pytest.raises(CertificateRefused):
        certify_exponential(_scn(A=1.0))
    with pytest.raises(CertificateRefused):
        certify_exponential(_scn(delay=AffineDelay(0.75, 1.0)))


def test_empirical_decay_respects_certificate():
    scn = _scn(horizon=30.0)
    c = certify_exponential(scn)
    out = empirical_decay(solve_trajectory(scn), (5.0, 30.0), c)
    assert out["bound_satisfied"]
    assert out["gamma_hat"] == pytest.approx(math.log(2), rel=0.1)


def test_fit_log_rate():
    t = np.linspace(0, 5, 50)
    slope, icpt = fit_log_rate(t, 3 * np.exp(-2 * t))
    assert slope == pytest.approx(-2) and icpt == pytest.approx(math.log(3))
    with pytest.raises(ValueError):
        fit_log_rate([0, 1], [0, 0])


def test_sweep_constant_sequence_is_zero():
    scn = _scn(horizon=10.0)
    out = continuous_dependence_sweep(lambda k: scn.matrix, lambda k: scn.initial, scn, 5)
    assert all(r["distance"] == 0 for r in out["rows"])


def test_sweep_shift_family_decreases():
    A_seq, x_seq = scalar_shift_family(0.5)
    scn = _scn(horizon=10.0).replace(initial=ConstantSignal((0.5,)))
    out = continuous_dependence_sweep(A_seq, x_seq, scn, 40)
    d = [r["distance"] for r in out["rows"]]
    assert out["eventually_decreasing"]
    assert d[-1] < d[0]
    assert d[-1] == pytest.approx(1 / 40 + 1 / 1600, rel=1e-12)


def test_sweep_global_mode_reports_tail():
    A_seq, x_seq = scalar_shift_family(0.5)
    out = continuous_dependence_sweep(A_seq, x_seq, _scn(horizon=5.0), 5, mode="uniform-global")
    assert out["tail"]["gamma"] == pytest.approx(math.log(2))
    with pytest.raises(ValueError):
        continuous_dependence_sweep(A_seq, x_seq, _scn(), 3, mode="other")
