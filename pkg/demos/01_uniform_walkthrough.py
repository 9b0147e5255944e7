# coding: utf-8

# # Uniform utilities, end to end
#
# Start with the flat density on the square. Every quadrant carries a quarter
# of the mass, so nothing pushes the wedges away from the diagonal.

# In[1]:

import numpy as np

from votetrade import (
    SolverOptions,
    beneficial_trade_probability,
    make_builtin,
    solve_equilibrium,
    trade_expected_value,
)

dist = make_builtin("uniform")
sol = solve_equilibrium(dist, SolverOptions(n=11))
print("angles / (pi/4):", np.round(sol.theta_star / (np.pi / 4), 8))
print("iterations:", sol.iterations, "residual:", sol.residual)


# A voter at (0.8, 0.2) cares mostly about the first issue. Giving away the
# second-issue ballot for a first-issue ballot is worth this much to them:

# In[2]:

for u in [(0.8, 0.2), (0.5, 0.5), (0.2, 0.8)]:
    print(u, round(trade_expected_value(dist, sol.theta_star, 11, 1, u), 6))


# How often does an offered trade raise total utility?

# In[3]:

rep = beneficial_trade_probability(dist, sol.theta_star, 11)
print("beneficial:", rep.beneficial_probability, "vs 1/9 =", 1 / 9)
print("per direction:", rep.player_probabilities)
