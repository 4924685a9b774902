"""Closed-form quantities of the cluster and limit laws.

Gamma ratios go through :func:`scipy.special.poch`, which stays accurate
for arguments up to 1e9 where a plain difference of ``gammaln`` values
loses about six digits.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import gamma

import numpy as np
from scipy.special import betaln, digamma, gammaln, poch, zeta

__all__ = [
    "DomainError",
    "SupportWarning",
    "MomentQuery",
    "QuadratureConfig",
    "as_exact",
    "regime",
    "beta_binomial_pmf",
    "beta_binomial_moment",
    "root_cluster_moment",
    "squared_cluster_sum_mean",
    "ml_moment",
    "xi_moment",
    "xi_moment_partial_sums",
    "geometric_alpha_moment",
    "f_integrand",
    "c_constant",
    "critical_constant",
    "constants_table",
    "adaptive_simpson",
]


class DomainError(ValueError):
    """Raised when (alpha, p) falls outside the regime a formula requires."""


class SupportWarning(UserWarning):
    """A pmf was evaluated outside its support; the value 0 was returned."""


@dataclass(frozen=True)
class MomentQuery:
    p: float
    q: float = 1.0
    i: int = 1
    alpha: float = 2.0

    def __post_init__(self):
        if not (0 < self.p < 1):
            raise DomainError(f"p must lie in (0, 1), got {self.p!r}")
        if self.q < 0:
            raise DomainError("moment order must be nonnegative")
        if self.i < 1:
            raise DomainError("cluster index starts at 1")
        if not (0 < self.alpha <= 2):
            raise DomainError("alpha must lie in (0, 2]")

    def value(self) -> float:
        if self.i == 1:
            return ml_moment(self.p, self.q)
        return xi_moment(self.i, self.p, self.q)


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-8
    max_depth: int = 50
    series_tol: float = 1e-12

    def __post_init__(self):
        if self.rel_tol <= 0 or self.series_tol <= 0 or self.max_depth < 1:
            raise ValueError("tolerances must be positive and depth at least 1")


DEFAULT_QUADRATURE = QuadratureConfig()


def as_exact(x) -> Fraction | float:
    """Parse ``"3/4"``-style strings and Fractions exactly; leave floats alone."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        if "/" in s:
            return Fraction(s)
        try:
            return Fraction(int(s))
        except ValueError:
            return float(s)
    return float(x)


def regime(alpha, p, tol: float = 1e-12) -> str:
    """Classify (alpha, p): ``"sub"`` (alpha p < 1), ``"crit"`` or ``"super"``.

    Exact when both inputs are rational (int, Fraction or "a/b" strings);
    otherwise products within ``tol`` of 1 count as critical.
    """
    a, q = as_exact(alpha), as_exact(p)
    prod = a * q
    if isinstance(prod, Fraction):
        if prod == 1:
            return "crit"
        return "sub" if prod < 1 else "super"
    if abs(prod - 1.0) <= tol:
        return "crit"
    return "sub" if prod < 1 else "super"


def _gamma_ratio(x, a):
    """Gamma(x + a) / Gamma(x)."""
    return poch(x, a)


# ---------------------------------------------------------------------------
# Polya urn


def beta_binomial_pmf(n: int, m: int, i: int) -> float:
    """P(i black draws in n draws from an urn starting with 1 black, m white).

    ``C(n, i) B(i+1, n-i+m) / B(1, m)`` on the support {0, ..., n}.
    """
    if n < 0 or m < 1:
        raise DomainError("need n >= 0 draws and m >= 1 white balls")
    if i < 0 or i > n:
        warnings.warn(f"i={i} outside support {{0..{n}}}", SupportWarning, stacklevel=2)
        return 0.0
    log_c = gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
    return float(np.exp(log_c + betaln(i + 1, n - i + m) - betaln(1, m)))


def beta_binomial_moment(n: int, m: int, order: int = 1) -> float:
    """Raw moment of the Beta-binomial(n, 1, m) count, by direct summation."""
    return float(sum(i**order * beta_binomial_pmf(n, m, i) for i in range(n + 1)))


# ---------------------------------------------------------------------------
# Cluster moments


def root_cluster_moment(n: int, p: float, order: int = 1) -> float:
    """Exact E|c_1,n| (order 1) or E|c_1,n|^2 (order 2) of the root cluster."""
    if n < 1:
        raise DomainError("n must be at least 1")
    if not (0 < p < 1):
        raise DomainError("p must lie in (0, 1)")
    if order == 1:
        return float(_gamma_ratio(n, p) / gamma(p + 1))
    if order == 2:
        return float((_gamma_ratio(n, 2 * p) / gamma(2 * p) - _gamma_ratio(n, p) / gamma(p)) / p)
    raise DomainError("only orders 1 and 2 have closed forms")


def squared_cluster_sum_mean(n: int, p: float) -> float:
    """Exact E[sum_i |c_i,n|^2] at finite n.

    Adding a node to a cluster of size s raises the sum of squares by 2s+1,
    and the attachment cluster is size-biased, so the mean obeys
    ``A(n+1) = (1 + 2p/n) A(n) + 1`` with ``A(1) = 1``.
    """
    if n < 1 or not (0 < p < 1):
        raise DomainError("need n >= 1 and 0 < p < 1")
    if p == 0.5:
        # the recursion solves to n * H_n at the critical point of the squares
        return float(n * (digamma(n + 1) + np.euler_gamma))
    lead = n / (1 - 2 * p)
    return float(lead - 2 * p / (1 - 2 * p) * _gamma_ratio(n, 2 * p) / gamma(1 + 2 * p))


def ml_moment(p: float, q: float) -> float:
    """q-th moment of the Mittag-Leffler(p) law, Gamma(q+1)/Gamma(pq+1)."""
    if not (0 < p < 1) or q < 0:
        raise DomainError("need 0 < p < 1 and q >= 0")
    return float(np.exp(gammaln(q + 1) - gammaln(p * q + 1)))


def xi_moment(i: int, p: float, q: float) -> float:
    """q-th moment of the limit of n^{-p}|c_i,n| for i >= 2.

    ``(1-p) Gamma(q+1) Gamma(i) / Gamma(pq+i)``.  Index 1 is the root and
    is routed to :func:`ml_moment`, which carries no deletion factor.
    """
    if i == 1:
        return ml_moment(p, q)
    if i < 1 or not (0 < p < 1) or q < 0:
        raise DomainError("need i >= 1, 0 < p < 1, q >= 0")
    return float((1 - p) * gamma(q + 1) / _gamma_ratio(i, p * q))


def xi_moment_partial_sums(p: float, q: float, checkpoints) -> np.ndarray:
    """Partial sums of ``xi_moment(i, p, q)`` over ``i = 2..I`` for each I in ``checkpoints``."""
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    top = int(checkpoints.max())
    i = np.arange(2, top + 1, dtype=float)
    terms = (1 - p) * gamma(q + 1) / _gamma_ratio(i, p * q)
    cums = np.concatenate([[0.0, 0.0], np.cumsum(terms)])
    return cums[checkpoints]


# ---------------------------------------------------------------------------
# Geometric alpha-moment and the subcritical constant

_SMALL_R = 0.05
_POLYLOG_TERMS = 60


def geometric_alpha_moment(r: float, alpha: float, config: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """E[G**alpha] for G geometric on {1, 2, ...} with success probability r.

    Closed forms for alpha in {1, 2}.  Otherwise the series is summed
    directly with a geometric tail bound for r >= 0.05, and for smaller r
    the polylogarithm expansion around 1 is used:
    ``E[G^a] = r/(1-r) Li_{-a}(1-r)`` with
    ``Li_s(e^mu) = Gamma(1-s)(-mu)^(s-1) + sum_k zeta(s-k) mu^k / k!``.
    """
    if not (0 < r <= 1):
        raise DomainError(f"r must lie in (0, 1], got {r!r}")
    if r == 1:
        return 1.0
    if alpha == 1:
        return 1.0 / r
    if alpha == 2:
        return (2.0 - r) / (r * r)
    if alpha == 0:
        return 1.0
    if r >= _SMALL_R:
        return _geometric_series(r, alpha, config.series_tol)
    return _geometric_polylog(r, alpha)


def _geometric_series(r: float, alpha: float, tol: float) -> float:
    total = 0.0
    k = 1
    block = 256
    log_q = np.log1p(-r)
    while True:
        ks = np.arange(k, k + block, dtype=float)
        terms = np.exp(alpha * np.log(ks) + (ks - 1) * log_q) * r
        total += terms.sum()
        k += block
        last = terms[-1]
        kk = k - 1
        ratio = ((kk + 1) / kk) ** alpha * (1 - r)
        if ratio < 1:
            tail = last * ratio / (1 - ratio)
            if tail < tol * total:
                return float(total)


def _geometric_polylog(r: float, alpha: float) -> float:
    return _scaled_polylog(r, alpha) / r**alpha


def _scaled_polylog(r: float, alpha: float) -> float:
    """``r**alpha * E[G**alpha]`` from the polylog expansion; finite as r -> 0."""
    s = -alpha
    mu = np.log1p(-r)
    lead = gamma(1 - s) * (r / -mu) ** (alpha + 1)
    series = 0.0
    term_pow = 1.0
    fact = 1.0
    for k in range(_POLYLOG_TERMS):
        if k > 0:
            term_pow *= mu
            fact *= k
        series += zeta(s - k) * term_pow / fact
    return float((lead + r ** (alpha + 1) * series) / (1 - r))


def _scaled_geometric_moment(r: float, alpha: float, config: QuadratureConfig) -> float:
    if alpha in (1, 2) or r >= _SMALL_R:
        return geometric_alpha_moment(r, alpha, config) * r**alpha
    return _scaled_polylog(r, alpha)


def f_integrand(x: float, alpha: float, p: float) -> float:
    """E[G**alpha] with G ~ Geom((x/(1-p))**p), for 0 < x <= 1-p."""
    return geometric_alpha_moment((x / (1 - p)) ** p, alpha)


def adaptive_simpson(func, a: float, b: float, rel_tol: float = 1e-8, max_depth: int = 50,
                     panels: int = 64) -> float:
    """Adaptive Simpson quadrature with Richardson correction.

    The interval is first cut into ``panels`` equal pieces so that a
    localised feature cannot hide from the initial three-point estimate.
    """
    xs = np.linspace(a, b, 2 * panels + 1)
    fs = [func(x) for x in xs]
    h = (b - a) / panels
    rough = sum(h / 6 * (fs[2 * j] + 4 * fs[2 * j + 1] + fs[2 * j + 2]) for j in range(panels))
    scale = abs(rough) if rough != 0 else 1.0
    stack = []
    for j in range(panels):
        lo, hi = xs[2 * j], xs[2 * j + 2]
        est = h / 6 * (fs[2 * j] + 4 * fs[2 * j + 1] + fs[2 * j + 2])
        stack.append((lo, hi, fs[2 * j], fs[2 * j + 1], fs[2 * j + 2], est, max_depth,
                      rel_tol * scale / panels))
    if not np.all(np.isfinite(fs)):
        raise FloatingPointError("integrand is not finite on the initial grid")
    total = 0.0
    while stack:
        lo, hi, flo, fmid, fhi, est, depth, tol = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = func(lm), func(rm)
        if not (np.isfinite(flm) and np.isfinite(frm)):
            raise FloatingPointError(f"integrand is not finite near {mid!r}")
        left = (mid - lo) / 6 * (flo + 4 * flm + fmid)
        right = (hi - mid) / 6 * (fmid + 4 * frm + fhi)
        diff = left + right - est
        if depth <= 0 or abs(diff) <= 15 * tol:
            total += left + right + diff / 15
        else:
            stack.append((lo, mid, flo, flm, fmid, left, depth - 1, tol / 2))
            stack.append((mid, hi, fmid, frm, fhi, right, depth - 1, tol / 2))
    return total


def c_constant(alpha, p, config: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Subcritical scale constant ``c(alpha, p) = int_0^{1-p} f(x) dx``.

    The integrable singularity ``f(x) ~ Gamma(1+alpha) ((1-p)/x)^{alpha p}``
    at 0 is removed by ``x = (1-p) s**(1/(1-alpha p))``, which turns the
    integrand into a bounded function on [0, 1].
    """
    if regime(alpha, p) != "sub":
        raise DomainError(f"c(alpha, p) needs alpha*p < 1, got alpha={alpha}, p={p}")
    a, q = float(as_exact(alpha)), float(as_exact(p))
    if not (0 < q < 1) or not (0 < a <= 2):
        raise DomainError("need 0 < p < 1 and 0 < alpha <= 2")
    if a == 1:
        return 1.0
    if a == 2:
        return 2 * (1 - q) / (1 - 2 * q) - 1
    return _c_quadrature(a, q, config)


def _c_quadrature(a: float, q: float, config: QuadratureConfig) -> float:
    beta = 1.0 - a * q
    expo = 1.0 / beta

    def g(s):
        # with r = s**(q*expo) the Jacobian s**(expo-1) cancels r**(-a) exactly
        r = s ** (q * expo)
        if r == 0.0:
            return expo * gamma(1 + a)
        return expo * _scaled_geometric_moment(r, a, config)

    return (1 - q) * adaptive_simpson(g, 0.0, 1.0, config.rel_tol, config.max_depth)


def critical_constant(alpha, p, tol: float = 1e-12) -> float:
    """``(1-p) Gamma(1+alpha)`` at the boundary alpha p = 1."""
    if regime(alpha, p, tol) != "crit":
        raise DomainError(f"critical constant needs alpha*p = 1, got alpha={alpha}, p={p}")
    a, q = float(as_exact(alpha)), float(as_exact(p))
    if not (q < 1):
        raise DomainError("p must be below 1")
    return (1 - q) * gamma(1 + a)


def constants_table(pairs) -> dict:
    """JSON-ready constants keyed by ``"alpha,p"``."""
    rows = {}
    for alpha, p in pairs:
        a, q = float(as_exact(alpha)), float(as_exact(p))
        if not (0 < a <= 2) or not (0 < q < 1):
            raise DomainError(f"need 0 < alpha <= 2 and 0 < p < 1, got alpha={alpha}, p={p}")
        reg = regime(alpha, p)
        entry: dict = {"alpha": str(alpha), "p": str(p), "regime": reg}
        if reg == "sub":
            c = c_constant(alpha, p)
            entry.update(c=c, c_root_alpha=c ** (1 / a))
        elif reg == "crit":
            c = critical_constant(alpha, p)
            entry.update(critical=c, critical_root_alpha=c ** (1 / a))
        else:
            entry.update(xi_alpha_moment_sum=float(
                ml_moment(q, a) + xi_moment_partial_sums(q, a, [10**6])[0]
            ))
        entry["ml_alpha_moment"] = ml_moment(q, a)
        rows[f"{alpha},{p}"] = entry
    return rows


def dumps_constants(pairs, meta: dict | None = None) -> str:
    doc = {"schema": 1, "meta": meta or {}, "constants": constants_table(pairs)}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
