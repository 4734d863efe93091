# coding: utf-8

# # One agent's tour

# In[1]:

import numpy as np

from dkprg import spatial, tsp


# Ten restaurants, an agent at the centre, and a random ranking of the restaurants.

# In[2]:

pts = spatial.sample_uniform_points(10, seed=3)
prefs = np.random.default_rng(3).permutation(10) + 1
inst = tsp.build_personal_instance((0.5, 0.5), pts, prefs, lam=0.3)


# Held-Karp gives the optimum; the local search should land on it or close.

# In[3]:

best = tsp.solve_exact(inst)
nn = tsp.nearest_neighbor(inst)
meta = tsp.solve_metaheuristic(inst, budget=20_000, seed=0)
for name, t in [("exact", best), ("nearest", nn), ("gvns", meta)]:
    print(f"{name:8s} {tsp.tour_cost(inst, t):.4f} {t.visit_order}")


# Raising lambda makes well-ranked restaurants cheaper to reach from the start.

# In[4]:

for lam in (0.0, 0.3, 0.9):
    costs = tsp.build_personal_instance((0.5, 0.5), pts, prefs, lam=lam).costs
    top, bottom = prefs[0], prefs[-1]
    print(lam, round(costs[0, top], 4), round(costs[0, bottom], 4))


# Each restaurant sits on exactly two edges of a closed tour, so the preference part of the cost adds the same total to every tour. The optimal order is the geometric one; lambda only shifts and rescales the cost.

# In[5]:

for lam in (0.0, 0.3, 0.9):
    inst = tsp.build_personal_instance((0.5, 0.5), pts, prefs, lam=lam)
    t = tsp.solve_exact(inst)
    print(lam, t.visit_order[:4], round(tsp.tour_cost(inst, t), 4))
