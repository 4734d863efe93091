# coding: utf-8

# # Expected utilization, day by day
#
# Every agent walks the first `m` stops of its own tour. A restaurant nobody lists in those stops stays empty for the day.

# In[1]:

from dkprg.analytics import ModelParams, approx_utilization, trajectory


# With 100 agents and two stops each, about 98.5% have a restaurant by the end of day 2.

# In[2]:

traj = trajectory(ModelParams(100, 2))
for d in traj.days:
    print(f"day {d.t}: active {d.n_t:10.4f}  vacancy {d.vp_t:.6f}  served {d.f_t:.7f}")


# The active count is never rounded, so day 3 starts with fewer agents than stops and clears everyone.

# In[3]:

for n, m in [(1000, 2), (10**6, 2), (10**9, 2), (10**9, 3)]:
    f = trajectory(ModelParams(n, m)).utilization
    print(f"n={n:>10} m={m}: {len(f):2d} days, day 1 {f[0]:.7f}")


# For large `n` the first day approaches `1 - exp(-m)`.

# In[4]:

for m in (1, 2, 3, 4):
    exact = trajectory(ModelParams(10**9, m)).days[0].f_t
    print(m, round(exact, 9), round(approx_utilization(m, 1), 9))
