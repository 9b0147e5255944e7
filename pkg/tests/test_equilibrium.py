import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from conftest import builtin, equilibrium
from votetrade.distributions import DomainError, make_builtin, transpose
from votetrade.equilibrium import (
    ConvergenceError,
    SolverOptions,
    StrategyProfile,
    TradingError,
    best_response,
    find_equilibria,
    offers,
    pivot_probability,
    project,
    residual,
    solve_equilibrium,
    theta_min,
    trade_expected_value,
)
from votetrade.geometry import PLAYER, REGION_SIGNS, mass_table, naive_profile
from votetrade.groupwide import effective_q_from_table

PAIRS = ((0, 2), (1, 3), (4, 6), (5, 7))


def brute_pivot(q_minus, q_plus, n):
    """Enumerate the n-2 other ballots; count configurations where one extra '+' flips the result."""
    total = 0.0
    for votes in itertools.product((1, -1), repeat=n - 2):
        k = sum(v == 1 for v in votes)
        p = q_plus**k * q_minus ** (n - 2 - k)
        # the voter is against, one more voter is for: tie broken only by the pivotal ballot
        if sum(votes) == -1:
            total += p
    return total


def expected_outcome(q_plus, n_others, fixed):
    """E[outcome] for a +/-1 majority with ``n_others`` random ballots and a fixed ballot sum."""
    k = np.arange(n_others + 1)
    pk = binom.pmf(k, n_others, q_plus)
    s = 2 * k - n_others + fixed
    return float(np.sum(pk * np.sign(s)))


def enumerated_trade_value(table, n, trade_type, u, q):
    """Utility change of a trade, averaging outcomes over partner regions and binomial ballots.

    Utility on an issue is ``u_k * outcome``; the trader gains the partner's
    ballot on one issue and casts the partner's preferred ballot on the other.
    """
    player = PLAYER[trade_type]
    gain, give = (0, 1) if player == 1 else (1, 0)
    own = np.sign(u)
    partners = range(5, 9) if player == 1 else range(1, 5)
    total = sum(table.I[j - 1] for j in partners)
    value = 0.0
    for j in partners:
        w = table.I[j - 1] / total
        ps = REGION_SIGNS[j]
        qg = q[gain]
        qd = q[give]
        before = expected_outcome(qg, n - 2, own[gain] + ps[gain]) * u[gain]
        after = expected_outcome(qg, n - 2, 2 * own[gain]) * u[gain]
        before += expected_outcome(qd, n - 2, own[give] + ps[give]) * u[give]
        after += expected_outcome(qd, n - 2, 2 * ps[give]) * u[give]
        value += w * (after - before)
    return value


# -- pivot probability -----------------------------------------------------


@pytest.mark.parametrize("qm,qp,n", [(0.5, 0.5, 11), (0.7, 0.3, 11), (0.2, 0.8, 7), (0.9, 0.1, 5)])
def test_pivot_probability_matches_enumeration(qm, qp, n):
    assert pivot_probability(qm, qp, n) == pytest.approx(brute_pivot(qm, qp, n), rel=1e-12)


def test_pivot_probability_values():
    assert pivot_probability(0.7, 0.3, 11) == pytest.approx(0.17153, abs=5e-6)
    assert pivot_probability(0.5, 0.5, 11) == pytest.approx(126 / 512)
    assert pivot_probability(0.3, 0.6, 3) == pytest.approx(0.3)


@pytest.mark.parametrize("n", [4, 10, 1, 2.5])
def test_pivot_probability_rejects_bad_n(n):
    with pytest.raises(DomainError):
        pivot_probability(0.5, 0.5, n)


# -- expected value --------------------------------------------------------


def test_uniform_naive_values():
    d = make_builtin("uniform")
    assert trade_expected_value(d, naive_profile(), 11, 1, (0.8, 0.2)) == pytest.approx(0.147656, abs=1e-6)
    assert trade_expected_value(d, naive_profile(), 11, 1, (0.5, 0.5)) == pytest.approx(0.0, abs=1e-15)
    assert trade_expected_value(d, naive_profile(), 11, 1, (0.2, 0.8)) == pytest.approx(-0.147656, abs=1e-6)


@pytest.mark.parametrize("name", ["skewed_quadrants", "power4"])
@pytest.mark.parametrize("mode", ["myopic", "groupwide"])
@pytest.mark.parametrize("n", [5, 11])
def test_value_matches_ballot_enumeration(name, mode, n):
    d = builtin(name)
    theta = np.array([0.3, 0.9, 1.2, 0.5, 0.7, 1.0, 0.4, 1.4])
    table = mass_table(d, theta)
    probs = effective_q_from_table(table, n) if mode == "groupwide" else table
    q = (probs.Q(1, 1), probs.Q(2, 1))
    rng = np.random.default_rng(n)
    for i in range(1, 9):
        sx, sy = REGION_SIGNS[i]
        for _ in range(5):
            u = rng.uniform(0, 1, 2) * (sx, sy)
            got = trade_expected_value(d, theta, n, i, u, mode)
            assert got == pytest.approx(enumerated_trade_value(table, n, i, u, q), abs=1e-12)


def test_value_is_linear_and_monotone():
    d = builtin("skewed_quadrants")
    theta = equilibrium("skewed_quadrants").theta_star
    base = trade_expected_value(d, theta, 11, 2, (-0.3, 0.4))
    more_gain = trade_expected_value(d, theta, 11, 2, (-0.6, 0.4))
    more_give = trade_expected_value(d, theta, 11, 2, (-0.3, 0.8))
    assert more_gain > base > more_give
    mid = trade_expected_value(d, theta, 11, 2, (-0.45, 0.4))
    assert mid == pytest.approx(0.5 * (base + more_gain), abs=1e-14)


def test_wrong_quadrant_rejected():
    with pytest.raises(DomainError):
        trade_expected_value(make_builtin("uniform"), naive_profile(), 11, 1, (-0.1, 0.5))


def test_zero_vote_probability_raises():
    d = make_builtin("quadrant_constant", weights=[0.5, 0.5, 0.0, 0.0])
    with pytest.raises(TradingError):
        trade_expected_value(d, naive_profile(), 11, 1, (0.5, 0.5))


# -- best response and fixed points --------------------------------------------


@pytest.mark.parametrize("name", ["uniform", "skewed_quadrants", "power4", "tent", "vee"])
@pytest.mark.parametrize("mode", ["myopic", "groupwide"])
def test_equilibrium_is_fixed_point(name, mode):
    sol = equilibrium(name, mode)
    assert sol.converged
    assert residual(builtin(name), sol.theta_star, 11, mode) <= 1e-7


def test_best_response_boundary_has_zero_value():
    d = builtin("skewed_quadrants")
    theta = np.array([0.3, 0.9, 1.2, 0.5, 0.7, 1.0, 0.4, 1.4])
    br = best_response(d, theta).theta
    for i in range(1, 9):
        sx, sy = REGION_SIGNS[i]
        r = 0.6
        if i <= 4:
            u = (sx * r * math.cos(br[i - 1]), sy * r * math.sin(br[i - 1]))
        else:
            u = (sx * r * math.sin(br[i - 1]), sy * r * math.cos(br[i - 1]))
        assert trade_expected_value(d, theta, 11, i, u) == pytest.approx(0.0, abs=1e-12)


def test_off_equilibrium_residual():
    assert residual(make_builtin("uniform"), np.full(8, math.pi / 3)) > 0.1


def test_transposed_distribution_permutes_angles():
    d = builtin("skewed_quadrants")
    a = equilibrium("skewed_quadrants").theta_star
    b = solve_equilibrium(transpose(d), SolverOptions(n=11)).theta_star
    np.testing.assert_allclose(b, a[[4, 7, 6, 5, 0, 3, 2, 1]], atol=1e-5)


@pytest.mark.parametrize("name", ["uniform", "tent", "vee"])
def test_modes_agree_for_point_symmetric(name):
    np.testing.assert_allclose(
        equilibrium(name, "myopic").theta_star, equilibrium(name, "groupwide").theta_star, atol=1e-8
    )


@pytest.mark.parametrize("name", ["skewed_quadrants", "power4"])
@pytest.mark.parametrize("mode", ["myopic", "groupwide"])
def test_pair_sums_respect_lower_bound(name, mode):
    sol = equilibrium(name, mode)
    tmin = theta_min(sol.table, 11, mode)
    for a, b in PAIRS:
        assert sol.theta_star[a] + sol.theta_star[b] >= tmin - 1e-8


@settings(max_examples=50, deadline=None)
@given(theta=st.lists(st.floats(0, math.pi / 2), min_size=8, max_size=8), tmin=st.floats(0, 1.5))
def test_projection_lands_in_admissible_set(theta, tmin):
    p = project(theta, tmin)
    assert np.all((p >= 0) & (p <= math.pi / 2))
    for a, b in PAIRS:
        assert p[a] + p[b] >= tmin - 1e-12
    again = project(p, tmin)
    np.testing.assert_allclose(again, p, atol=1e-12)


def test_iteration_cap_raises_with_state():
    with pytest.raises(ConvergenceError) as info:
        solve_equilibrium(builtin("skewed_quadrants"), SolverOptions(n=11, max_iterations=1))
    assert info.value.theta.shape == (8,) and len(info.value.history) == 1


def test_multistart_is_deterministic():
    opts = SolverOptions(n=11, starts=4, seed=3)
    a = find_equilibria(builtin("power4"), opts)
    b = find_equilibria(builtin("power4"), SolverOptions(n=11, starts=4, seed=3, workers=2))
    assert len(a) == len(b) == 1
    np.testing.assert_array_equal(a[0].theta_star, b[0].theta_star)


def test_options_validation():
    for bad in ({"n": 10}, {"damping": 0}, {"max_iterations": 0}, {"tolerance": -1}):
        with pytest.raises((ValueError, DomainError)):
            SolverOptions(**bad)


def test_profile_validation():
    with pytest.raises(DomainError):
        StrategyProfile(np.zeros(7))
    with pytest.raises(DomainError):
        StrategyProfile(np.full(8, 2.0))
    np.testing.assert_allclose(StrategyProfile.naive().slopes, 1.0)


def test_offers_at_naive():
    assert offers(naive_profile(), (0.8, 0.2)) == (True, False)
    assert offers(naive_profile(), (0.2, -0.8)) == (False, True)
