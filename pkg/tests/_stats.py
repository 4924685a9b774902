"""Small Monte Carlo helpers shared by the tests."""

import math

import numpy as np


def mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def within_se(x, target, k=3.0):
    """True when the sample mean of ``x`` is within ``k`` standard errors of ``target``."""
    m, se = mean_se(x)
    return abs(m - target) <= k * se, m, se
