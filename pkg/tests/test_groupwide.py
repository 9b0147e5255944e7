import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import builtin, equilibrium
from votetrade.geometry import mass_table, naive_profile
from votetrade.groupwide import effective_q, effective_q_from_table, effective_q_with_overlaps, j_integrals
from votetrade.distributions import make_builtin
from votetrade.simulator import vote_frequencies


def test_j_at_naive_uniform():
    np.testing.assert_allclose(j_integrals(make_builtin("uniform"), naive_profile()), 0.0, atol=1e-15)


def test_j_full_quadrants():
    np.testing.assert_allclose(j_integrals(make_builtin("uniform"), np.full(8, np.pi / 2)), 0.25, atol=1e-12)


def test_skewed_equilibrium_has_first_quadrant_overlap():
    assert j_integrals(builtin("skewed_quadrants"), equilibrium("skewed_quadrants").theta_star)[0] > 0


@pytest.mark.parametrize("name", ["uniform", "skewed_quadrants", "power4"])
def test_three_voters_leave_probabilities_unchanged(name):
    theta = equilibrium(name).theta_star
    t = mass_table(builtin(name), theta)
    q = effective_q(builtin(name), theta, 3)
    assert q.as_tuple() == (t.q1_plus, t.q1_minus, t.q2_plus, t.q2_minus)


@pytest.mark.parametrize("name", ["uniform", "tent", "vee"])
def test_point_symmetric_naive_is_half(name):
    np.testing.assert_allclose(effective_q(builtin(name), naive_profile(), 11).as_tuple(), 0.5, atol=1e-12)


def test_skewed_naive_by_hand():
    t = mass_table(builtin("skewed_quadrants"), naive_profile())
    I = t.I
    expected = 0.3 + (8 / 9) * ((I[5] + I[6]) * (I[0] + I[3]) - (I[4] + I[7]) * (I[1] + I[2]))
    assert effective_q(builtin("skewed_quadrants"), naive_profile(), 11).q1_plus == pytest.approx(expected, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(theta=st.lists(st.floats(0, np.pi / 2), min_size=8, max_size=8), n=st.sampled_from([3, 5, 11, 21]))
def test_overlap_terms_cancel(theta, n):
    t = mass_table(builtin("skewed_quadrants"), np.array(theta))
    a = effective_q_from_table(t, n, clamp=False).as_tuple()
    b = effective_q_with_overlaps(t, n).as_tuple()
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert a[0] + a[1] == pytest.approx(1.0, abs=1e-14)
    assert a[2] + a[3] == pytest.approx(1.0, abs=1e-14)


def test_clamped_into_open_interval():
    t = mass_table(builtin("power4"), np.full(8, np.pi / 2))
    q = effective_q_from_table(t, 11)
    assert all(0 < v < 1 for v in q.as_tuple())


def test_simulated_ballots_match_at_small_sample():
    theta = equilibrium("power4", "groupwide").theta_star
    freq = vote_frequencies(builtin("power4"), theta, 11, trials=60_000, seed=5)
    q = effective_q(builtin("power4"), theta, 11)
    for key in ("q1_plus", "q2_plus"):
        mean, se = freq[key]
        assert abs(mean - getattr(q, key)) < 4 * se


def test_groupwide_lowers_welfare_for_power4():
    from votetrade.welfare import beneficial_trade_probability

    my = beneficial_trade_probability(builtin("power4"), equilibrium("power4").theta_star, 11)
    gw = beneficial_trade_probability(builtin("power4"), equilibrium("power4", "groupwide").theta_star, 11,
                                      mode="groupwide")
    assert gw.beneficial_probability < my.beneficial_probability
