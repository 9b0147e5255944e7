import math

import numpy as np
import pytest

from conftest import builtin, equilibrium
from votetrade.distributions import make_builtin
from votetrade.geometry import REGION_SIGNS, naive_profile
from votetrade.simulator import offer_masks, simulate
from votetrade.welfare import (
    beneficial_trade_probability,
    group_expected_value,
    welfare_coefficients,
    welfare_mask_grid,
)


def monte_carlo_group_value(dist, theta, n, trade_type, u, trials, seed):
    """Summed utility change of a forced trade; others vote sincerely."""
    rng = np.random.default_rng(seed)
    player1 = trade_type <= 4
    partners = []
    while sum(len(p) for p in partners) < trials:
        cand = dist.sample(rng, 4 * trials)
        give2, give1 = offer_masks(cand, theta)
        partners.append(cand[give1 if player1 else give2])
    partner = np.concatenate(partners)[:trials]
    others = dist.sample(rng, trials * (n - 2)).reshape(trials, n - 2, 2)
    u = np.asarray(u, dtype=float)
    vote = lambda v: np.where(v > 0, 1, -1)  # noqa: E731
    base = vote(others).sum(axis=1)
    before = base + vote(u) + vote(partner)
    after = base.copy()
    if player1:
        after[:, 0] += 2 * vote(u[0])
        after[:, 1] += 2 * vote(partner[:, 1])
    else:
        after[:, 0] += 2 * vote(partner[:, 0])
        after[:, 1] += 2 * vote(u[1])
    delta = np.sign(after) - np.sign(before)
    total = others.sum(axis=1) + u + partner
    val = (delta * total).sum(axis=1)
    return val.mean(), val.std(ddof=1) / math.sqrt(trials)


@pytest.mark.parametrize(
    "name,trade_type,u",
    [("uniform", 1, (0.8, 0.2)), ("skewed_quadrants", 2, (-0.7, 0.3)), ("power4", 6, (-0.2, 0.9))],
)
def test_group_value_against_monte_carlo(name, trade_type, u):
    d = builtin(name)
    theta = equilibrium(name).theta_star
    mean, se = monte_carlo_group_value(d, theta, 11, trade_type, u, 300_000, seed=trade_type)
    assert abs(group_expected_value(d, theta, 11, trade_type, u) - mean) < 4 * se


@pytest.mark.parametrize("name", ["skewed_quadrants", "power4"])
def test_boundary_slopes_match_equilibrium(name):
    theta = equilibrium(name).theta_star
    coef = welfare_coefficients(builtin(name), theta, 11)
    np.testing.assert_allclose(coef.slope, np.tan(theta), rtol=1e-5)


@pytest.mark.parametrize("name", ["uniform", "tent", "vee"])
def test_symmetric_slopes_are_one(name):
    np.testing.assert_allclose(welfare_coefficients(builtin(name), naive_profile(), 11).slope, 1.0, atol=1e-9)


def test_group_value_examples_uniform():
    d = make_builtin("uniform")
    t = naive_profile()
    assert group_expected_value(d, t, 11, 1, (0.99, 0.0)) > 0
    assert group_expected_value(d, t, 11, 1, (0.5, 0.45)) < 0
    coef = welfare_coefficients(d, t, 11)
    ax, ay, c0 = coef.linear_form(1)
    # a point on the boundary line
    x = 0.9
    y = -(ax * x + c0) / ay
    assert group_expected_value(d, t, 11, 1, (x, y)) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("name", ["skewed_quadrants", "power4", "tent"])
def test_sign_matches_halfplane(name, rng):
    d = builtin(name)
    theta = equilibrium(name).theta_star
    coef = welfare_coefficients(d, theta, 11)
    for i in range(1, 9):
        sx, sy = REGION_SIGNS[i]
        u = rng.uniform(0, 1, size=(1000, 2)) * (sx, sy)
        ax, ay, c0 = coef.linear_form(i)
        lin = ax * u[:, 0] + ay * u[:, 1] + c0
        val = group_expected_value(d, theta, 11, i, u)
        far = np.abs(lin) > 1e-9
        assert np.array_equal(np.sign(val[far]), np.sign(lin[far]))


def test_headline_probabilities():
    assert beneficial_trade_probability(make_builtin("uniform"), naive_profile(), 11).beneficial_probability == (
        pytest.approx(1 / 9, abs=1e-9)
    )
    p = beneficial_trade_probability(builtin("skewed_quadrants"), equilibrium("skewed_quadrants").theta_star, 11)
    assert p.beneficial_probability == pytest.approx(0.18568, abs=1e-4)
    assert 0 <= p.overlap_weighted_probability <= 1 and 0 <= p.unconditional_probability <= 1


def test_polarisation_raises_welfare():
    probs = []
    for alpha in (0, 2, 4, 6):
        d = make_builtin("product_power", alpha=alpha)
        from votetrade import SolverOptions, solve_equilibrium

        theta = solve_equilibrium(d, SolverOptions(n=11)).theta_star
        probs.append(beneficial_trade_probability(d, theta, 11).beneficial_probability)
    assert all(a < b for a, b in zip(probs, probs[1:]))


def test_mask_grid_codes():
    rep = beneficial_trade_probability(make_builtin("uniform"), naive_profile(), 11)
    g = welfare_mask_grid(rep, 8)
    code = dict(((x, y), int(c)) for x, y, c in g)
    # strongly lopsided first-issue voter offers and helps; a near-diagonal one offers but hurts
    assert code[(0.875, 0.125)] == 0b0101
    assert code[(0.625, 0.375)] == 0b0001
    assert code[(0.125, 0.875)] == 0b1010


def test_simulated_beneficial_share_agrees():
    d = make_builtin("uniform")
    rep = simulate(d, naive_profile(), n=11, mode="single", trials=200_000, seed=4)
    assert abs(rep.beneficial_fraction[0] - 1 / 9) < 3 * rep.beneficial_fraction[1] + 1e-3
