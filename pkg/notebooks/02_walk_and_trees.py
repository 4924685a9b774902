# %% [markdown]
# # The walk and its tree representation
#
# A shark swim repeats a uniformly chosen past step with probability p and
# draws a fresh stable step otherwise.  Grouping steps by the fresh step
# they copy gives the clusters of a percolated random recursive tree, so
# `S_n = sum_i |c_i| xi_i`.

# %%
import numpy as np

from sharkswim import analytics, rrt, walk
from sharkswim.stable_rng import RngStream, StableSpec

# %%
params = walk.ModelParams(walk.Mode.P, 10, alpha=1.5, p=0.5)
traj = walk.simulate(params, RngStream(3))
print(traj.to_csv())

# %% [markdown]
# The same law from the tree side: grow a forest, give each cluster one
# spin and sum.

# %%
forest = rrt.grow(10, 0.5, RngStream(4))
spins = rrt.draw_spins(forest, StableSpec(1.5, 1), RngStream(5))
print("cluster sizes by root:", forest.size_map())
print("S_10 =", rrt.position_from_clusters(forest, spins))

# %% [markdown]
# Exact enumeration of all `(n-1)! 2^(n-1)` outcomes gives the root
# cluster law; its mean matches the closed form.

# %%
law = rrt.enumerate_exact(3, "1/2")
print({k: float(v) for k, v in law.root_law().items()})
print(analytics.root_cluster_moment(3, 0.5, 1))

# %% [markdown]
# Monte Carlo root-cluster moments against the closed form.

# %%
roots = rrt.grow_roots_batch(10**5, 128, 0.75, RngStream(6))
size = rrt.cluster_sizes_batch(roots)[:, 0].astype(float)
for order in (1, 2):
    m = (size**order).mean()
    se = (size**order).std() / np.sqrt(size.size)
    print(order, m, "+-", se, analytics.root_cluster_moment(128, 0.75, order))

# %% [markdown]
# In Q mode every step is a signed copy of the first, so `S_n / xi_1`
# follows the elephant random walk.

# %%
print(walk.enumerate_q_mode_law(4, "3/4"))
print(walk.erw_law(4, "3/4", first_step=1))
