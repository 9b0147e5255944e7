# coding: utf-8

# # From Likert answers to an equilibrium
#
# Fake a survey on a 1..7 scale with a correlation between the two answers,
# smooth it with a Gaussian kernel and solve the game on the result.

# In[1]:

import numpy as np

from votetrade import SolverOptions, beneficial_trade_probability, kde_from_survey, solve_equilibrium, validate

k = np.arange(1, 8)
a, b = np.meshgrid(k, k, indexing="ij")
w = np.exp(-0.5 * ((a - 3.0) ** 2 + (b - 5.0) ** 2 - 1.2 * (a - 3.0) * (b - 5.0)) / 2.5)
cells = np.random.default_rng(7).choice(49, size=2000, p=(w / w.sum()).ravel())
records = [(c // 7 + 1, c % 7 + 1) for c in cells]

dist = kde_from_survey(records)
rep = validate(dist, tol=1e-6)
print("bandwidth:", dist.bandwidth)
print("mass:", rep.mass, "quadrants:", np.round(rep.quadrant_masses, 4))


# In[2]:

sol = solve_equilibrium(dist, SolverOptions(n=11))
print("theta:", np.round(sol.theta_star, 5))
print("beneficial:", beneficial_trade_probability(dist, sol.theta_star, 11).beneficial_probability)


# The same thing from the shell:
#
#     votetrade ingest --csv survey.csv --out survey.json --grid 101
#     votetrade solve --dist survey.json --out survey_solution.json
