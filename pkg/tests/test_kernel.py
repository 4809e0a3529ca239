
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from delaydiff.core import AffineDelay, ConstantDelay, DyadicSpikeDelay, dyadic_count_closed_form
from delaydiff.kernel import (NonTerminationError, iterate_sigma, iteration_count,
                              iteration_counts, largest_delay, largest_delay_batch, step_cap)

from conftest import closed_form_delays


def test_iterate_sigma_examples():
    assert iterate_sigma(ConstantDelay(1.0), 3.5, 2) == 1.5
    d = AffineDelay(1.0, 1.0)
    assert iterate_sigma(d, 5.0, 1) == -1.0
    assert iterate_sigma(d, 5.0, 2) is None
    assert iterate_sigma(ConstantDelay(1.0), -0.3, 0) == -0.3


def test_iteration_count_examples():
    tab = iteration_count(ConstantDelay(1.0), 3.5)
    assert tab.n_of_t == 4 and tab.final == -0.5
    assert iteration_count(DyadicSpikeDelay(), 10.0).n_of_t == 8
    neg = iteration_count(ConstantDelay(1.0), -1.0)
    assert neg.n_of_t == 0 and neg.orbit == (-1.0,)


def test_orbit_structure():
    d = AffineDelay(0.75, 1.0)
    tab = iteration_count(d, 40.0)
    orb = tab.orbit
    for a, b in zip(orb, orb[1:]):
        assert b == d.sigma1(a)
    assert all(s >= 0 for s in orb[:-1]) and orb[-1] < 0


def test_boundary_zero_counts_as_inside():
    # sigma_1(1) = 0 lies in D_1, so one more step is taken
    assert iteration_count(ConstantDelay(1.0), 1.0).n_of_t == 2


def test_constant_counts_vectorised():
    ts = np.round(np.arange(5001) * 0.01, 10)
    n, final = iteration_counts(ConstantDelay(1.0), ts)
    assert np.array_equal(n, np.floor(ts).astype(int) + 1)
    assert np.all(final < 0)


def test_dyadic_counts_match_closed_form():
    ts = np.round(np.arange(6401) * 0.01, 10)
    n, _ = iteration_counts(DyadicSpikeDelay(), ts)
    assert np.array_equal(n, [dyadic_count_closed_form(t) for t in ts])


def test_h1_failure_cases():
    d = AffineDelay(1.0, 0.0, at_zero=1.0)
    # sigma_1(t) = 0 for t > 0, then tau(0) = 1 sends the orbit to -1
    assert iteration_count(d, 3.0).n_of_t == 2
    assert step_cap(d, 5.0) == 100_000


def test_step_cap_is_a_tripwire(monkeypatch):
    import delaydiff.kernel as kernel

    monkeypatch.setattr(kernel, "step_cap", lambda delay, t: 3)
    with pytest.raises(NonTerminationError):
        kernel.iteration_count(ConstantDelay(1.0), 10.0)
    with pytest.raises(NonTerminationError):
        kernel.iteration_counts(ConstantDelay(1.0), [10.0])


def test_largest_delay_examples():
    assert largest_delay(AffineDelay(1.0, 1.0), 0.0, 10.0).h_of_t == 1.0
    v = largest_delay(AffineDelay(0.75, 1.0), 5.0, 10.0)
    assert v.h_of_t == 4.75 and v.method == "monotone-shortcut"
    assert largest_delay(ConstantDelay(1.0), 7.0, 10.0).h_of_t == 1.0


@pytest.mark.parametrize("name", list(closed_form_delays()))
def test_t_minus_h_nondecreasing(name):
    d = closed_form_delays()[name]
    ts = np.linspace(0, 20, 801)
    h = largest_delay_batch(d, ts, 40.0)
    assert np.all(h > 0)
    assert np.all(np.diff(ts - h) >= -1e-12)


def _families():
    return closed_form_delays()


@pytest.mark.parametrize("name", list(closed_form_delays()))
def test_kernel_identities_on_random_draws(name):
    """Shift, composition, membership and nesting on 10^4 draws per family."""
    d = _families()[name]
    rng = np.random.default_rng(abs(hash(name)) % 2**32)
    ts = rng.uniform(0, 30, 10_000)
    n, _ = iteration_counts(d, ts)
    n1, _ = iteration_counts(d, d.sigma1(ts))
    assert np.array_equal(n1, n - 1)
    # composition sigma_n = sigma_{n-k} o sigma_k, vectorised over the draws
    kk = (rng.random(ts.size) * (n + 1)).astype(int)
    mm = kk + (rng.random(ts.size) * (n - kk + 1)).astype(int)
    s, sk = ts.copy(), ts.copy()
    for step in range(int(mm.max())):
        move = step < mm
        s[move] = d.sigma1(s[move])
        mk = step < kk
        sk[mk] = d.sigma1(sk[mk])
    s2 = sk.copy()
    rest = mm - kk
    for step in range(int(rest.max())):
        move = step < rest
        s2[move] = d.sigma1(s2[move])
    assert np.array_equal(s, s2)
    # nesting: orbit stays nonnegative for the first n - 1 steps, membership in D_n
    for t, nt in zip(ts[:200], n[:200]):
        assert iterate_sigma(d, t, int(nt)) is not None
        assert iterate_sigma(d, t, int(nt) + 1) is None


@given(st.floats(0, 50), st.integers(0, 5))
def test_membership_identity(t, k):
    d = AffineDelay(0.5, 1.0)
    in_next = iterate_sigma(d, t, k + 1) is not None
    s1 = d.sigma1(t)
    assert in_next == (iterate_sigma(d, s1, k) is not None or k == 0)
