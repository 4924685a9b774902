"""Random streams and exact samplers for the non-uniform laws of the model.

All samplers are pure functions of their parameters and the stream they
draw from.  Stable laws are parametrised in the exponent: a ``StableSpec``
with ``scale_alpha = c`` has characteristic function ``exp(-c * |theta|**alpha)``.
Multiplying samples by ``s`` multiplies ``c`` by ``s**alpha``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ParameterError",
    "StableSpec",
    "RngStream",
    "as_generator",
    "sample_isotropic_stable",
    "sample_symmetric_stable_1d",
    "sample_positive_stable",
    "sample_mittag_leffler",
    "sample_geometric",
    "sample_beta",
    "sample_beta_binomial",
    "sample_exponential",
    "stable_cf",
]

_MASK64 = (1 << 64) - 1


class ParameterError(ValueError):
    """Raised when a distribution parameter is outside its domain."""


@dataclass(frozen=True)
class StableSpec:
    """Isotropic strictly stable law on R^d with CF ``exp(-scale_alpha * |theta|**alpha)``."""

    alpha: float
    dimension: int = 1
    scale_alpha: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ParameterError(f"alpha must lie in (0, 2], got {self.alpha!r}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ParameterError(f"dimension must be a positive integer, got {self.dimension!r}")
        if not (self.scale_alpha >= 0.0):
            raise ParameterError(f"scale_alpha must be nonnegative, got {self.scale_alpha!r}")

    @property
    def sample_scale(self) -> float:
        """Multiplicative factor applied to standard (c = 1) samples."""
        return float(self.scale_alpha) ** (1.0 / self.alpha)


@dataclass
class RngStream:
    """A reproducible random stream keyed by ``(seed, stream_id)``.

    Backed by numpy's counter-based Philox generator.  The key is mixed
    through :class:`numpy.random.SeedSequence`, so distinct keys give
    independent streams and an identical key replays the same sequence.
    Substreams extend the key, never consume state from the parent.
    """

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.seed = int(self.seed) & _MASK64
        self.stream_id = int(self.stream_id) & _MASK64
        ss = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream_id, *self.path)
        )
        self.generator = np.random.Generator(np.random.Philox(ss))

    def substream(self, *key: int) -> "RngStream":
        """Independent child stream; depends only on this stream's key and ``key``."""
        return RngStream(self.seed, self.stream_id, self.path + tuple(int(k) & _MASK64 for k in key))

    @property
    def key(self) -> tuple[int, ...]:
        return (self.seed, self.stream_id, *self.path)

    # Convenience passthroughs so a stream can be used where a Generator is.
    def random(self, size=None):
        return self.generator.random(size)

    def integers(self, *args, **kwargs):
        return self.generator.integers(*args, **kwargs)

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def standard_exponential(self, size=None):
        return self.generator.standard_exponential(size)


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream, a numpy Generator, or an int seed."""
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return RngStream(0 if rng is None else int(rng)).generator
    raise TypeError(f"cannot use {type(rng).__name__} as a random stream")


def _shape(size) -> tuple[int, ...]:
    if size is None:
        return ()
    if isinstance(size, (int, np.integer)):
        return (int(size),)
    return tuple(size)


def sample_symmetric_stable_1d(alpha: float, rng, size=None) -> np.ndarray:
    """Standard symmetric alpha-stable variates, CF ``exp(-|t|**alpha)``.

    Chambers-Mallows-Stuck transform with the Gaussian (alpha = 2) and
    Cauchy (alpha = 1) endpoints handled in closed form.
    """
    if not (0.0 < alpha <= 2.0):
        raise ParameterError(f"alpha must lie in (0, 2], got {alpha!r}")
    g = as_generator(rng)
    shape = _shape(size)
    if alpha == 2.0:
        return np.sqrt(2.0) * g.standard_normal(shape)
    v = np.pi * (g.random(shape) - 0.5)
    if alpha == 1.0:
        return np.tan(v)
    w = g.standard_exponential(shape)
    return (
        np.sin(alpha * v)
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha)
    )


def sample_positive_stable(alpha: float, rng, size=None) -> np.ndarray:
    """One-sided stable variates with Laplace transform ``exp(-lam**alpha)``.

    Kanter's representation; exact and rejection free.
    """
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha!r}")
    g = as_generator(rng)
    shape = _shape(size)
    # u in (0, 1]: drop the exact zero so sin(pi u) never vanishes
    u = 1.0 - g.random(shape)
    e = g.standard_exponential(shape)
    a = np.pi * u
    zolotarev = (
        np.sin(alpha * a) ** (1.0 / (1.0 - alpha) * alpha)
        * np.sin((1.0 - alpha) * a)
        / np.sin(a) ** (1.0 / (1.0 - alpha))
    )
    out = (zolotarev / e) ** ((1.0 - alpha) / alpha)
    # underflow for tiny alpha can give exact zeros; the law is strictly positive
    return np.maximum(out, np.finfo(float).tiny)


def sample_isotropic_stable(spec: StableSpec, rng, size=None) -> np.ndarray:
    """Isotropic alpha-stable vectors in R^d.

    Returns shape ``(d,)`` for ``size=None`` and ``(*size, d)`` otherwise.
    In one dimension the CMS transform is used directly; for d >= 2 the
    vector is ``sqrt(2A) G`` with ``G`` standard Gaussian and ``A``
    one-sided (alpha/2)-stable, which has CF ``exp(-|theta|**alpha)``.
    """
    g = as_generator(rng)
    shape = _shape(size)
    d = int(spec.dimension)
    if spec.scale_alpha == 0.0:
        return np.zeros(shape + (d,))
    alpha = spec.alpha
    if d == 1:
        x = sample_symmetric_stable_1d(alpha, g, shape + (1,))
    elif alpha == 2.0:
        x = np.sqrt(2.0) * g.standard_normal(shape + (d,))
    elif alpha == 1.0:
        # multivariate Cauchy: sqrt(2A) = 1/|Z| when A is Levy with LT exp(-sqrt(lam))
        z = g.standard_normal(shape + (1,))
        x = g.standard_normal(shape + (d,)) / np.abs(z)
    else:
        a = sample_positive_stable(alpha / 2.0, g, shape + (1,))
        x = np.sqrt(2.0 * a) * g.standard_normal(shape + (d,))
    return spec.sample_scale * x


def sample_mittag_leffler(p: float, rng, size=None) -> np.ndarray:
    """Mittag-Leffler(p) variates, ``X = A**(-p)`` with A positive p-stable.

    Moments are ``E[X**q] = Gamma(q+1) / Gamma(p q + 1)``.
    """
    if not (0.0 < p < 1.0):
        raise ParameterError(f"p must lie in (0, 1), got {p!r}")
    return sample_positive_stable(p, rng, size) ** (-p)


def sample_geometric(r: float, rng, size=None) -> np.ndarray:
    """Geometric variates on {1, 2, ...} with success probability ``r``."""
    if not (0.0 < r <= 1.0):
        raise ParameterError(f"r must lie in (0, 1], got {r!r}")
    return as_generator(rng).geometric(r, _shape(size))


def sample_beta(a: float, b: float, rng, size=None) -> np.ndarray:
    if a <= 0 or b <= 0:
        raise ParameterError("Beta parameters must be positive")
    return as_generator(rng).beta(a, b, _shape(size))


def sample_beta_binomial(n: int, a: float, b: float, rng, size=None) -> np.ndarray:
    """Beta-binomial(n, a, b): binomial count with a Beta(a, b) success rate."""
    if n < 0:
        raise ParameterError("n must be nonnegative")
    g = as_generator(rng)
    return g.binomial(n, sample_beta(a, b, g, size))


def sample_exponential(rate: float, rng, size=None) -> np.ndarray:
    if rate <= 0:
        raise ParameterError("rate must be positive")
    return as_generator(rng).standard_exponential(_shape(size)) / rate


def stable_cf(spec: StableSpec, theta) -> float | np.ndarray:
    """``exp(-scale_alpha * |theta|**alpha)``.

    ``theta`` may be a scalar (taken as a norm), a vector of length d, or
    an array whose last axis has length d.
    """
    t = np.asarray(theta, dtype=float)
    if t.ndim == 0:
        norm = np.abs(t)
    else:
        norm = np.linalg.norm(t, axis=-1)
    out = np.exp(-spec.scale_alpha * norm**spec.alpha)
    return float(out) if np.ndim(out) == 0 else out
