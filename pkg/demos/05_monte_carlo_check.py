# coding: utf-8

# # Checking the formulas by simulation
#
# Play many committees and compare the averages with the closed forms.

# In[1]:

import math

from votetrade import effective_q, make_builtin, naive_profile, pivot_probability, trade_expected_value
from votetrade import SolverOptions, solve_equilibrium
from votetrade.simulator import empirical_trade_value, pivot_frequency, simulate, vote_frequencies

dist = make_builtin("uniform")
theta = naive_profile()
mean, se = empirical_trade_value(dist, theta, 11, 1, (0.8, 0.2), trials=200_000, seed=1)
exact = trade_expected_value(dist, theta, 11, 1, (0.8, 0.2))
print(f"trade value {mean:.4f} +/- {se:.4f}, formula {exact:.4f}")

pf, pse = pivot_frequency(dist, 11, trials=200_000, seed=2)
print(f"pivot {pf:.4f} +/- {pse:.4f}, formula {pivot_probability(0.5, 0.5, 11):.4f} = {math.comb(9, 4) / 2**9:.4f}")


# Beneficial share from the regression oracle (single trade per committee).

# In[2]:

rep = simulate(make_builtin("product_tent"), theta, trials=200_000, seed=3, workers=4)
print("tent beneficial share:", rep.beneficial_fraction, "trades:", rep.trades_executed)


# With everyone paired off, the ballots other voters cast shift away from
# their sincere votes. Compare with the adjusted vote probabilities.

# In[3]:

power = make_builtin("product_power", alpha=4)
gw = solve_equilibrium(power, SolverOptions(n=11), mode="groupwide").theta_star
freq = vote_frequencies(power, gw, 11, trials=200_000, seed=4)
q = effective_q(power, gw, 11)
for key in ("q1_plus", "q2_plus"):
    m, s = freq[key]
    print(f"{key}: simulated {m:.4f} +/- {s:.4f}, adjusted {getattr(q, key):.4f}")
