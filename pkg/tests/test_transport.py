import math

import numpy as np
import pytest
from scipy.integrate import quad

from delaydiff.core import ConstantSignal, FunctionSignal
from delaydiff.transport import (BracketError, CharacteristicMaps, TransportField,
                                 norm_sandwich, solve_transport)


@pytest.fixture(scope="module")
def varying():
    return CharacteristicMaps(TransportField.sinusoidal(1.0, 0.4))


def test_constant_speed_delay():
    m = CharacteristicMaps(TransportField.constant(2.0))
    assert m.T0 == pytest.approx(0.5, abs=1e-9)
    assert m.induced_delay(3.0) == pytest.approx(0.5, abs=1e-8)
    assert m.flow(1.0, 0.0, 0.25) == pytest.approx(2.25, abs=1e-12)


def test_field_constants():
    f = TransportField.sinusoidal(1.0, 0.4)
    assert (f.lambda_min, f.lambda_max, f.L) == pytest.approx((0.6, 1.4, 0.4))
    assert f.alpha == pytest.approx(0.78, abs=1e-3)
    assert f.beta0 == pytest.approx(0.3667, abs=1e-4)
    assert f.beta1 == pytest.approx(3.246, abs=1e-3)
    with pytest.raises(ValueError):
        TransportField.sinusoidal(0.3, 0.4)
    with pytest.raises(ValueError):
        TransportField("weird")


def test_T0_matches_quadrature(varying):
    ref, _ = quad(lambda x: 1.0 / (1.0 + 0.4 * math.sin(x)), 0.0, 1.0, epsabs=1e-13)
    assert varying.T0 == pytest.approx(ref, abs=1e-8)


def test_semigroup_and_reversibility(varying):
    f = CharacteristicMaps(TransportField.sinusoidal(1.0, 0.3, ct=0.2, wt=2.0))
    rng = np.random.default_rng(0)
    t, s, r = rng.uniform(-2, 2, (3, 1000))
    x = rng.uniform(0, 1, 1000)
    direct = f.flow(t, r, x)
    composed = f.flow(t, s, f.flow(s, r, x))
    assert np.max(np.abs(direct - composed)) < 1e-8
    assert np.max(np.abs(f.flow(r, t, f.flow(t, r, x)) - x)) < 1e-8


def test_hitting_time_reaches_boundary(varying):
    t = np.linspace(0.0, 5.0, 11)
    x = np.linspace(0.05, 1.0, 11)
    R = varying.hitting_time(t, x)
    assert np.max(np.abs(varying.flow(R, t, x))) < 1e-8
    gap = t - R
    assert np.all(gap >= x / 1.4 - 1e-9) and np.all(gap <= x / 0.6 + 1e-9)


def test_hitting_time_derivative(varying):
    for t, x in [(1.0, 0.3), (2.5, 0.7), (4.0, 1.0)]:
        _, dR = varying.hitting_time(t, x, with_derivative=True)
        h = 1e-5
        fd = (varying.hitting_time(t, x + h) - varying.hitting_time(t, x - h)) / (2 * h)
        assert dR == pytest.approx(fd, rel=1e-4)


def test_induced_delay_bounds(varying):
    t = np.linspace(0.0, 10.0, 201)
    tau = varying.induced_delay(t)
    assert np.all(tau >= 1 / 1.4 - 1e-9) and np.all(tau <= 1 / 0.6 + 1e-9)
    slope = np.diff(tau) / np.diff(t)
    assert np.max(slope) <= varying.field.alpha + 1e-6


class _SlowField(TransportField):
    # true speed is ten times below the declared lower bound
    def __call__(self, t, x):
        return 0.1 * super().__call__(t, x)


def test_bracket_error_when_bounds_lie():
    with pytest.raises(BracketError):
        CharacteristicMaps(_SlowField("constant", {"lambda0": 1.0}))


def test_constant_speed_solution_value():
    m = CharacteristicMaps(TransportField.constant(2.0))
    u0 = FunctionSignal(lambda x: 1.0 + np.asarray(x).reshape(-1, 1), 1, support=(0.0, 1.0),
                        closed_right=True)
    sol = solve_transport(m, [[0.5]], u0, 0.5, [0.25])
    # R = 0.375, one step back to s = -0.125, which started at x = 0.25
    assert sol.u[0, 0] == pytest.approx(0.5 * 1.25, abs=1e-8)
    assert sol.compatibility_gap == pytest.approx(0.0)


def test_norm_sandwich(varying):
    u0 = ConstantSignal((1.0,), (0.0, 1.0), closed_right=True)
    for t in (0.5, 2.0, 5.0):
        out = norm_sandwich(varying, [[0.2]], u0, t, 2.0, cells=400)
        assert out["lower"] <= out["u_norm"] * (1 + 1e-6)
        assert out["u_norm"] <= out["upper"] * (1 + 1e-6)
