# coding: utf-8

# # Simulated games against the closed form

# In[1]:

from dkprg.harness import compare

# Two readings of a day. Counting marks a restaurant used when any tour lists it in the first `m` stops. Behavioral actually walks the agents, and a loser can find its second choice already taken.

# In[2]:

rows = compare(100, 2, 2000, master_seed=1, horizon=4)
print("day  exact     counting  behavioral  gap")
for r in rows:
    print(f"{r.day:3d}  {r.exact:.5f}  {r.counting_mean:.5f}   {r.behavioral_mean:.5f}    "
          f"{r.gap_mean:+.4f} +/- {r.gap_ci95:.4f}")


# Same seeds, personalised tours instead of shuffled ones. Agents start spread over the square.

# In[3]:

rows = compare(100, 2, 200, master_seed=1, policy="tsp", horizon=4)
for r in rows:
    print(r.day, round(r.counting_mean, 4), round(r.behavioral_mean, 4))
