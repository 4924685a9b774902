# %% [markdown]
# # Limit constants and the three regimes
#
# The product alpha p decides the scaling: `n^(1/alpha)` below 1,
# `(n log n)^(1/alpha)` at 1, and `n^p` above 1 (random limit).

# %%
from sharkswim import analytics, verifier

# %%
for alpha, p in [("2", "1/4"), ("1", "1/2"), ("3/2", "1/3"), ("2", "1/2"), ("2", "3/4")]:
    print(alpha, p, analytics.regime(alpha, p))
print(analytics.c_constant("2", "1/4"), analytics.c_constant("3/2", "1/3"))

# %% [markdown]
# The exact identity behind the proofs: the CF of `S_n` equals the average
# of `exp(-|theta|^alpha sum |c_i|^alpha)` over forests.

# %%
for n, ecf, rb, rb_se, res in verifier.identity_check(2, 0.5, 1, [100, 1000], 20000, seed=10):
    print(n, res.passed, round(res.statistic, 2))

# %% [markdown]
# Small regime experiments (the CLI `verify` command runs the full ones).

# %%
sub = verifier.subcritical_experiment(2, 0.25, n_list=[10**3, 10**4], reps=300, rng=11)
for t in sub.tests:
    print("sub", t.name, t.passed)
sup = verifier.supercritical_experiment(2, 0.75, n_list=[2**10, 2**11, 2**12], reps=300, rng=12)
for t in sup.tests:
    print("super", t.name, t.passed)
