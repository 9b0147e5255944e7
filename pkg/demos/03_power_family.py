# coding: utf-8

# # Polarisation sweep
#
# The product-power family puts more mass near the corners as alpha grows.
# Strong preferences on both issues make trades more useful to the group.

# In[1]:

from votetrade import SolverOptions, beneficial_trade_probability, make_builtin, solve_equilibrium

rows = []
for alpha in (0, 2, 4, 6, 8):
    dist = make_builtin("product_power", alpha=alpha)
    out = []
    for mode in ("myopic", "groupwide"):
        sol = solve_equilibrium(dist, SolverOptions(n=11), mode=mode)
        out.append(beneficial_trade_probability(dist, sol.theta_star, 11, mode=mode).beneficial_probability)
    rows.append((alpha, *out))

print("alpha  myopic   group-wide")
for alpha, my, gw in rows:
    print(f"{alpha:5d}  {my:.4f}   {gw:.4f}")


# Peaked and valley-shaped marginals are the two extremes.

# In[2]:

for family in ("product_tent", "product_vee"):
    dist = make_builtin(family)
    sol = solve_equilibrium(dist, SolverOptions(n=11))
    print(family, round(beneficial_trade_probability(dist, sol.theta_star, 11).beneficial_probability, 5))
