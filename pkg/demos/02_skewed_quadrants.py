# coding: utf-8

# # A lopsided population
#
# Quadrant weights 0.1, 0.4, 0.3, 0.2 (counter-clockwise from (+,+)). Fewer
# voters favour the first issue than oppose it, and the wedges tilt.

# In[1]:

import numpy as np

from votetrade import SolverOptions, beneficial_trade_probability, make_builtin, solve_equilibrium
from votetrade.equilibrium import offers
from votetrade.geometry import mass_table

dist = make_builtin("quadrant_constant", weights=[0.1, 0.4, 0.3, 0.2])
sol = solve_equilibrium(dist, SolverOptions(n=11))
for i, t in enumerate(sol.theta_star, start=1):
    print(f"R{i}: theta={t:.5f} slope={np.tan(t):.5f}")


# Region masses and sincere vote shares at the fixed point.

# In[2]:

table = mass_table(dist, sol.theta_star)
print("I:", np.round(table.I, 5))
print("Q1+ =", table.q1_plus, " Q2+ =", table.q2_plus)


# Some voters sit inside both a first-issue and a second-issue wedge.

# In[3]:

print("(0.8, 0.4):", offers(sol.theta_star, (0.8, 0.4)))
print("(-0.9, 0.4):", offers(sol.theta_star, (-0.9, 0.4)))


# In[4]:

my = beneficial_trade_probability(dist, sol.theta_star, 11)
gw_sol = solve_equilibrium(dist, SolverOptions(n=11), mode="groupwide")
gw = beneficial_trade_probability(dist, gw_sol.theta_star, 11, mode="groupwide")
print("myopic:", round(my.beneficial_probability, 5), " group-wide:", round(gw.beneficial_probability, 5))
