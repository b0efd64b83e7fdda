"""Tail-inequality evaluator tests and small Monte Carlo falsifications.

The full 10^4-trial falsification grid lives in the acceptance suite; here
the samplers run at reduced trial counts to keep the unit suite fast.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randesign import tails
from randesign.errors import DomainError


def test_quad_form_identity_hand_value():
    # sigma=1, Sigma=I_4, delta=1/e: 4 + 2*sqrt(4) + 2 = 10
    assert tails.quad_form_bound(4, 4, 1, 1.0, np.exp(-1)) == pytest.approx(10.0)


def test_quad_form_zero_sigma():
    assert tails.quad_form_bound(4, 4, 1, 0.0, 0.1) == 0.0


def test_quad_form_sigma_homogeneity():
    base = tails.quad_form_bound(3, 2, 1, 1.0, 0.05)
    assert tails.quad_form_bound(3, 2, 1, 2.0, 0.05) == pytest.approx(4 * base)


def test_quad_form_rejects_bad_delta():
    with pytest.raises(DomainError):
        tails.quad_form_bound(1, 1, 1, 1.0, 1.5)


def test_h1_hand_values_and_roundtrip():
    assert tails.h1(0.0) == 0.0
    assert tails.h1(4.0) == pytest.approx(2.0)
    assert tails.h1_inv(2.0) == pytest.approx(4.0)
    for a in (0.1, 1.0, 10.0, 100.0):
        assert tails.h1_inv(tails.h1(a)) == pytest.approx(a, abs=1e-10)


def test_vector_bernstein_hand_value():
    # v=4, b=3, delta=1/e: 2(1+2*sqrt(2)) + 4 = 6 + 4*sqrt(2)
    got = tails.vector_bernstein_bound(4, 3, np.exp(-1))
    assert got == pytest.approx(6 + 4 * np.sqrt(2))
    assert tails.vector_bernstein_bound(0, 0, 0.5) == 0.0


def test_covariance_eps_hand_value():
    # choose (d, eta, delta) with t = d log(1+2/eta) + log(2/delta) = 10, n=320
    eta = 0.05
    d = 2
    delta = 2.0 / np.exp(10 - d * np.log(1 + 2 / eta))
    eps = tails.covariance_subgaussian_eps(1.0, d, 320, delta, eta)
    assert eps == pytest.approx(1.0 + 20.0 / 320.0)


def test_covariance_eps_monotone_in_n():
    vals = [tails.covariance_subgaussian_eps(1.0, 3, n, 0.1, 0.05)
            for n in (100, 1000, 10**4, 10**6)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_matrix_chernoff_hand_value():
    delta = 2 * np.exp(-4.0)  # log(d/delta) = 4 at d=2
    assert tails.matrix_chernoff_lower(1.0, 2, 32, delta) == pytest.approx(0.5)


def test_matrix_chernoff_may_be_negative():
    assert tails.matrix_chernoff_lower(2.0, 4, 4, 0.01) < 0


def test_matrix_bernstein_hand_value():
    threshold, prob = tails.matrix_bernstein_tail(1.0, 3.0, 1.0, 9, 2.0)
    assert threshold == pytest.approx(8.0 / 9.0)
    assert prob == pytest.approx(2.0 / (np.exp(2) - 3))


def test_matrix_bernstein_vacuous_small_t():
    _, prob = tails.matrix_bernstein_tail(1.0, 1.0, 1.0, 10, 1e-9)
    assert prob > 1e6  # diverges, un-clipped


def test_matrix_bernstein_consistency_with_spectral_use():
    """t = 2 log(d1/delta) makes the probability bound <= delta for
    delta <= 1/8."""
    for d1 in (2.0, 10.0):
        for delta in (0.01, 0.1):
            t = 2.0 * np.log(d1 / delta)
            _, prob = tails.matrix_bernstein_tail(1.0, 1.0, d1, 100, t)
            assert prob <= delta


def test_mc_violation_rate_degenerate_predicates():
    assert tails.mc_violation_rate(lambda rng: False, 100, 0) == 0.0
    assert tails.mc_violation_rate(lambda rng: True, 100, 0) == 1.0


def test_mc_violation_rate_fair_coin():
    rate = tails.mc_violation_rate(lambda rng: rng.random() < 0.5, 10**4, 1)
    assert rate == pytest.approx(0.5, abs=0.02)


def test_mc_violation_rate_deterministic():
    event = lambda rng: rng.random() < 0.3
    assert tails.mc_violation_rate(event, 500, 7) == \
        tails.mc_violation_rate(event, 500, 7)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.001, 0.5), st.floats(0.001, 0.4))
def test_thresholds_monotone_in_delta(d_small, gap):
    """Every threshold is nondecreasing in log(1/delta)."""
    d_large = d_small + gap
    assert tails.quad_form_bound(3, 2, 1, 1.0, d_small) >= \
        tails.quad_form_bound(3, 2, 1, 1.0, d_large)
    assert tails.vector_bernstein_bound(2, 1, d_small) >= \
        tails.vector_bernstein_bound(2, 1, d_large)
    assert tails.matrix_chernoff_lower(1.5, 3, 50, d_small) <= \
        tails.matrix_chernoff_lower(1.5, 3, 50, d_large)


def test_reference_samplers_smoke():
    """Each reference sampler keeps its violation rate near or below delta
    (small trial counts; the full grid runs in the acceptance suite)."""
    delta, trials = 0.1, 2000
    se = np.sqrt(delta * (1 - delta) / trials)
    for name, sampler in tails.REFERENCE_SAMPLERS.items():
        rate = sampler({}, delta, trials, 12345)
        assert rate <= delta + 3 * se, f"{name}: {rate}"


def test_quad_form_sampler_zero_sigma():
    rate = tails.quad_form_violation_rate(4, 0.0, 0.1, 100, 0)
    assert rate == 0.0
