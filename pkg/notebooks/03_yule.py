# %% [markdown]
# # Yule process with mutation
#
# Individuals give birth at rate 1; a child clones its parent's type with
# probability p.  Stopped when n individuals exist, the type counts have the
# law of the cluster sizes of the percolated tree.

# %%
import math

import numpy as np
from scipy import stats

from sharkswim import rrt, yule
from sharkswim.stable_rng import RngStream

# %%
state = yule.simulate_until_n(2000, 0.5, RngStream(7))
print("types:", state.num_types, "largest counts:", np.sort(state.type_counts)[-5:])

# %% [markdown]
# The embedded chain of type counts reproduces the tree law exactly.

# %%
print(yule.embedded_chain_law(4, "1/2") == rrt.enumerate_exact(4, "1/2").ordered_sizes_law())

# %% [markdown]
# `exp(-T(k)) k` is a martingale with an Exp(1) limit.

# %%
w = np.exp(-yule.birth_times(10**4, RngStream(8), 1000)[:, -1]) * 10**4
print("mean", w.mean(), "KS p-value", stats.kstest(w, "expon").pvalue)

# %% [markdown]
# A type's population `t` after its birth is geometric with parameter
# `exp(-t p)`.

# %%
x = yule.type_population_after_birth(0.5, math.log(4), RngStream(9), 10**5)
print("mean", x.mean(), "P(1), P(2):", np.mean(x == 1), np.mean(x == 2))
