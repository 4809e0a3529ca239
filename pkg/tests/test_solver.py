import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from delaydiff.core import (AffineDelay, ConstantDelay, ConstantSignal, HistoryEvaluationError,
                            PiecewiseAffineDelay, SampledSignal, Scenario, SystemMatrix)
from delaydiff.solver import (compatibility_gap, nonuniqueness_family,
                              nonuniqueness_solution, representation, solve_representation,
                              solve_state_dependent, solve_stepping, solve_trajectory, window_norm,
                              zero_signal)

from conftest import closed_form_delays


def test_representation_scalar_example(scalar_scenario):
    assert solve_representation(scalar_scenario, 3.5)[0] == 0.0625
    assert solve_representation(scalar_scenario, -0.25)[0] == 1.0


def test_representation_shift_family_closed_form():
    a = 0.7
    scn = Scenario(SystemMatrix([[a]]), ConstantDelay(1.0), ConstantSignal((a,)), 10.0)
    ts = scn.grid
    assert np.allclose(representation(scn, ts)[:, 0], a ** (np.floor(ts) + 2), rtol=1e-14, atol=0)


def test_truncated_history_raises():
    scn = Scenario(SystemMatrix([[0.5]]), ConstantDelay(2.0), ConstantSignal((1.0,)), 5.0)
    with pytest.raises(HistoryEvaluationError):
        solve_representation(scn, 0.5)


def test_stepping_matches_representation(scalar_scenario):
    a = solve_trajectory(scalar_scenario)
    b = solve_stepping(scalar_scenario)
    assert np.max(np.abs(a.values - b.values)) < 1e-12
    assert b.residual_report < 1e-9
    assert b.method == "stepping"
    assert b.notes["h1_verified"]


def test_stepping_h2_remark_delay():
    scn = Scenario(SystemMatrix([[0.5]]), AffineDelay(1.0, 0.0, at_zero=1.0),
                   ConstantSignal((2.0,)), 3.0, np.array([0.0, 0.5, 1.0, 3.0]))
    tr = solve_stepping(scn)
    assert tr.values[0, 0] == 1.0
    assert np.all(tr.values[1:, 0] == 0.5)


def test_zero_history_gives_zero(scalar_scenario):
    scn = scalar_scenario.replace(initial=zero_signal(1))
    assert np.all(solve_stepping(scn).values == 0)


def _random_scenario(rng, delay):
    d = int(rng.integers(1, 4))
    A = rng.standard_normal((d, d))
    A *= 0.9 / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-12)
    h = float(delay.declared_tau_max or 0) or 3.0
    h = max(h, 1.0, float(delay.supremum(0.0)) if hasattr(delay, "supremum") else 1.0)
    grid = np.linspace(-h, 0, 6)
    vals = rng.standard_normal((6, d))
    x0 = SampledSignal(tuple(grid), tuple(map(tuple, vals)))
    return Scenario(SystemMatrix(A), delay, x0, 30.0, np.linspace(0, 30, 601))


@pytest.mark.parametrize("name", ["constant", "constant-short", "affine", "affine-slow",
                                  "piecewise", "sawtooth"])
def test_oracle_equivalence_random(name):
    rng = np.random.default_rng(len(name))
    scn = _random_scenario(rng, closed_form_delays()[name])
    a = solve_trajectory(scn)
    b = solve_stepping(scn)
    assert np.max(np.abs(a.values - b.values)) < 1e-10
    assert a.residual_report < 1e-9 and b.residual_report < 1e-9


def test_uniqueness_bit_for_bit(scalar_scenario):
    a = solve_stepping(scalar_scenario)
    b = solve_stepping(scalar_scenario)
    assert np.array_equal(a.values, b.values)


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 1000))
def test_linearity(alpha, beta, seed):
    rng = np.random.default_rng(seed)
    g = np.linspace(-1, 0, 5)
    x = SampledSignal(tuple(g), tuple(rng.standard_normal(5)))
    y = SampledSignal(tuple(g), tuple(rng.standard_normal(5)))
    z = SampledSignal(tuple(g), tuple(alpha * np.array(x.values)[:, 0]
                                      + beta * np.array(y.values)[:, 0]))
    base = Scenario(SystemMatrix([[0.8]]), AffineDelay(0.3, 1.0), x, 10.0,
                    np.linspace(0, 10, 51))
    sx = solve_trajectory(base).values
    sy = solve_trajectory(base.replace(initial=y)).values
    sz = solve_trajectory(base.replace(initial=z)).values
    assert np.max(np.abs(sz - (alpha * sx + beta * sy))) <= 1e-12 * max(1, abs(alpha) + abs(beta)) * 10


def test_compatibility_gap():
    x0 = SampledSignal((-1.0, 0.0), (2.0, 1.0))
    scn = Scenario(SystemMatrix([[0.5]]), ConstantDelay(1.0), x0, 3.0)
    assert compatibility_gap(scn) == pytest.approx(0.0, abs=1e-12)
    scn2 = scn.replace(initial=ConstantSignal((1.0,)))
    assert compatibility_gap(scn2) == pytest.approx(0.5)


def test_regulated_preservation_jump_set_finite():
    # discontinuous delay with a regulated history: jumps only at a finite set of times
    delay = PiecewiseAffineDelay((0.0, 1.0, 2.0), (1.0, 2.0, 1.0), (1.0, 0.0, 1.0))
    x0 = SampledSignal((-1.0, -0.5, 0.0), (0.0, 1.0, 1.0), interpolation="left-constant")
    scn = Scenario(SystemMatrix([[0.5]]), delay, x0, 6.0, np.linspace(0, 6, 6001))
    v = solve_trajectory(scn).values[:, 0]
    jumps = np.nonzero(np.abs(np.diff(v)) > 1e-3)[0]
    assert len(jumps) <= 6


def test_window_norm_constant():
    scn = Scenario(SystemMatrix([[1.0]]), ConstantDelay(1.0), ConstantSignal((3.0,)), 5.0)
    tr = solve_trajectory(scn)
    assert window_norm(tr, 4.0, 1.0, 2.0) == pytest.approx(6.0, rel=1e-12)
    assert window_norm(tr, 4.0, math.inf, 2.0) == 3.0
    with pytest.raises(ValueError):
        window_norm(tr, 0.5, 1.0, 3.0)


def test_window_norm_example_blowup():
    scn = Scenario(SystemMatrix([[0.5]]), AffineDelay(0.75, 1.0), ConstantSignal((1.0,)), 84.0)
    tr = solve_trajectory(scn)
    norms = [window_norm(tr, t, 1.0, scn.delay(t)) for t in (4.0, 20.0, 84.0)]
    assert norms == pytest.approx([2.0, 4.0, 8.0], rel=0.01)


def test_window_norm_sup_of_monotone():
    scn = Scenario(SystemMatrix([[0.5]]), ConstantDelay(1.0), ConstantSignal((1.0,)), 10.0,
                   np.linspace(0, 10, 101))
    tr = solve_trajectory(scn)
    assert window_norm(tr, 6.0, math.inf, 1.0) == tr.values[50, 0]


def test_nonuniqueness_family():
    A = SystemMatrix([[0.5]])
    assert nonuniqueness_family(A, 1.0, 1.0)[0] == pytest.approx(1.0)
    ts = np.array([0.5, 1.0, 2.0, 5.0])
    x = nonuniqueness_family(A, 1.0, ts)
    xe = nonuniqueness_family(A, 1.0, ts / math.e)
    assert np.max(np.abs(x - 0.5 * xe)) < 1e-12
    assert np.all(nonuniqueness_family(A, 0.0, ts) == 0)
    with pytest.raises(ValueError):
        nonuniqueness_family(SystemMatrix([[0.0, 1.0], [0.0, 0.0]]), 1.0, 1.0)


def test_nonuniqueness_solutions_share_history():
    A = SystemMatrix([[0.5]])
    x0 = ConstantSignal((1.0,))
    a, b = nonuniqueness_solution(A, 0.0, x0), nonuniqueness_solution(A, 1.0, x0)
    s = np.linspace(-1, -0.01, 20)
    assert np.array_equal(a(s), b(s))
    assert a([0.0])[0, 0] == b([0.0])[0, 0] == 0.5
    assert a([2.0])[0, 0] != b([2.0])[0, 0]


def test_state_dependent_constant_matches_stepping():
    A = SystemMatrix([[0.5]])
    x0 = ConstantSignal((1.0,))
    sd = solve_state_dependent(A, lambda t, w: 1.0, x0, 8.0, 1.0, 1.0)
    ref = solve_stepping(Scenario(A, ConstantDelay(1.0), x0, 8.0, sd.times))
    assert np.max(np.abs(sd.values - ref.values)) < 1e-12


def test_state_dependent_decay_and_trace():
    A = SystemMatrix([[0.5]])
    tau = lambda t, w: 1.0 + 0.5 * min(1.0, abs(w(0.0)[0]))
    tr = solve_state_dependent(A, tau, ConstantSignal((1.0,), (-1.5, 0.0)), 20.0, 1.0, 1.5)
    assert np.all(np.abs(tr.values[:, 0]) <= np.exp(-math.log(2) / 1.5 * tr.times) + 1e-15)
    assert tr.delay_trace.min() >= 1.0 and tr.delay_trace.max() <= 1.5
    zero = solve_state_dependent(A, tau, ConstantSignal((0.0,), (-1.5, 0.0)), 5.0, 1.0, 1.5)
    assert np.all(zero.values == 0) and np.all(zero.delay_trace == 1.0)


def test_state_dependent_rejects_out_of_range_delay():
    with pytest.raises(ValueError):
        solve_state_dependent([[0.5]], lambda t, w: 3.0, ConstantSignal((1.0,)), 2.0, 0.5, 1.0)


def test_trajectory_csv(tmp_path, scalar_scenario):
    tr = solve_trajectory(scalar_scenario)
    p = tmp_path / "t.csv"
    tr.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,x_1"
    assert len(lines) == 302
    assert float(lines[36].split(",")[1]) == 0.0625
