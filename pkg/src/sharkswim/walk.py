"""Direct simulation of the memory walks.

Three dynamics share one trajectory representation:

* ``Mode.P``: with probability p repeat a uniformly chosen past step,
  otherwise take a fresh stable step.
* ``Mode.Q``: repeat a uniformly chosen past step with probability q,
  otherwise take its negative.  Every step is then ``+-xi_1``.
* ``Mode.ERW``: the elephant random walk, i.e. ``Mode.Q`` with ``xi_1 = +-1``.

A trajectory stores the fresh step vectors once, plus per step the index
of the fresh step it copies (its origin) and a sign.  Steps and positions
are rebuilt on demand, so memory is one vector per fresh step.
"""

from __future__ import annotations

import csv
import enum
import io
import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .stable_rng import ParameterError, StableSpec, as_generator, sample_isotropic_stable

__all__ = [
    "Mode",
    "Tag",
    "ModelParams",
    "Trajectory",
    "simulate",
    "simulate_p_mode",
    "simulate_q_mode",
    "simulate_erw",
    "p_mode_positions_batch",
    "enumerate_q_mode_law",
    "erw_law",
]


class Mode(str, enum.Enum):
    P = "p"
    Q = "q"
    ERW = "erw"


class Tag(enum.IntEnum):
    FRESH = 0
    REPEATED = 1
    FLIPPED = 2


@dataclass(frozen=True)
class ModelParams:
    """Law of one walk.  Exactly one of ``p`` (P mode) or ``q`` (Q, ERW) is set."""

    mode: Mode
    n: int
    alpha: float = 2.0
    p: float | None = None
    q: float | None = None
    dimension: int = 1
    scale_alpha: float = 1.0
    erw_first_step: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"horizon n must be a positive integer, got {self.n!r}")
        if self.mode is Mode.P:
            if self.p is None or self.q is not None:
                raise ParameterError("P mode takes p and no q")
            if not (0 < self.p < 1):
                raise ParameterError(f"p must lie in (0, 1), got {self.p!r}")
        else:
            if self.q is None or self.p is not None:
                raise ParameterError(f"{self.mode.name} mode takes q and no p")
            if not (0 <= self.q < 1):
                raise ParameterError(f"q must lie in [0, 1), got {self.q!r}")
        if self.mode is Mode.ERW:
            if self.dimension != 1:
                raise ParameterError("the elephant random walk is one-dimensional")
            if self.erw_first_step not in (None, 1, -1):
                raise ParameterError("erw_first_step must be +1, -1 or None (random sign)")
        else:
            StableSpec(self.alpha, self.dimension, self.scale_alpha)

    @property
    def step_law(self) -> StableSpec:
        return StableSpec(self.alpha, self.dimension, self.scale_alpha)


@dataclass
class Trajectory:
    """Steps ``Y_1..Y_n`` as ``sign[k] * fresh[origin[k]]`` with provenance.

    ``source[k]`` is the 0-based index of the remembered step for
    REPEATED/FLIPPED steps and -1 for FRESH ones.
    """

    fresh: np.ndarray
    origin: np.ndarray
    sign: np.ndarray
    tag: np.ndarray
    source: np.ndarray

    @property
    def n(self) -> int:
        return int(self.origin.size)

    @property
    def dimension(self) -> int:
        return int(self.fresh.shape[1])

    @property
    def steps(self) -> np.ndarray:
        return self.sign[:, None] * self.fresh[self.origin]

    @property
    def positions(self) -> np.ndarray:
        return np.cumsum(self.steps, axis=0)

    def position(self, k: int | None = None) -> np.ndarray:
        """``S_k`` (1-based ``k``, default n) from origin multiplicities."""
        k = self.n if k is None else k
        mult = np.bincount(self.origin[:k], weights=self.sign[:k], minlength=self.fresh.shape[0])
        return mult @ self.fresh

    def cluster_sizes(self) -> np.ndarray:
        """Number of steps copying each fresh step, in order of fresh steps."""
        return np.bincount(self.origin, minlength=self.fresh.shape[0])

    def provenance(self) -> list[str]:
        names = []
        for t, s in zip(self.tag.tolist(), self.source.tolist()):
            if t == Tag.FRESH:
                names.append("FRESH")
            else:
                names.append(f"{Tag(t).name}({s + 1})")
        return names

    def check(self) -> None:
        steps = self.steps
        rep = self.tag == Tag.REPEATED
        flip = self.tag == Tag.FLIPPED
        if not np.array_equal(steps[rep], steps[self.source[rep]]):
            raise AssertionError("REPEATED step differs from its source")
        if not np.array_equal(steps[flip], -steps[self.source[flip]]):
            raise AssertionError("FLIPPED step is not the negated source")
        if np.any(self.source[rep | flip] >= np.flatnonzero(rep | flip)):
            raise AssertionError("a step may only remember the past")

    def to_csv(self, meta: dict | None = None) -> str:
        """Columns ``k, S_k components, tag``; 1-based k and tag indices."""
        buf = io.StringIO()
        if meta is not None:
            buf.write("# " + json.dumps(meta, sort_keys=True) + "\r\n")
        w = csv.writer(buf, lineterminator="\r\n")
        d = self.dimension
        w.writerow(["k"] + [f"S_{j + 1}" for j in range(d)] + ["tag"])
        for k, (pos, tag) in enumerate(zip(self.positions, self.provenance()), start=1):
            w.writerow([k] + [repr(float(x)) for x in pos] + [tag])
        return buf.getvalue()


def _memory_draws(n: int, g: np.random.Generator):
    """Per step: uniform in [0,1) for the decision and a uniform past index."""
    decide = g.random(n)
    past = (g.random(n) * np.arange(n)).astype(np.int64)
    return decide, past


def simulate_p_mode(params: ModelParams, rng) -> Trajectory:
    if params.mode is not Mode.P:
        raise ParameterError("simulate_p_mode needs a P-mode ModelParams")
    g = as_generator(rng)
    n, p = params.n, params.p
    decide, past = _memory_draws(n, g)
    origin = np.empty(n, dtype=np.int64)
    tag = np.empty(n, dtype=np.int8)
    source = np.full(n, -1, dtype=np.int64)
    origin[0] = 0
    tag[0] = Tag.FRESH
    fresh = 1
    for k in range(1, n):
        if decide[k] < p:
            j = past[k]
            origin[k] = origin[j]
            tag[k] = Tag.REPEATED
            source[k] = j
        else:
            origin[k] = fresh
            tag[k] = Tag.FRESH
            fresh += 1
    values = sample_isotropic_stable(params.step_law, g, fresh)
    return Trajectory(values, origin, np.ones(n, dtype=np.int8), tag, source)


def _signed_memory_walk(n: int, q: float, first: np.ndarray, g: np.random.Generator) -> Trajectory:
    decide, past = _memory_draws(n, g)
    sign = np.empty(n, dtype=np.int8)
    tag = np.empty(n, dtype=np.int8)
    source = np.full(n, -1, dtype=np.int64)
    sign[0] = 1
    tag[0] = Tag.FRESH
    for k in range(1, n):
        j = past[k]
        source[k] = j
        if decide[k] < q:
            sign[k] = sign[j]
            tag[k] = Tag.REPEATED
        else:
            sign[k] = -sign[j]
            tag[k] = Tag.FLIPPED
    return Trajectory(np.atleast_2d(first).astype(float), np.zeros(n, dtype=np.int64), sign, tag, source)


def simulate_q_mode(params: ModelParams, rng) -> Trajectory:
    if params.mode is not Mode.Q:
        raise ParameterError("simulate_q_mode needs a Q-mode ModelParams")
    g = as_generator(rng)
    xi1 = sample_isotropic_stable(params.step_law, g)
    return _signed_memory_walk(params.n, params.q, xi1, g)


def simulate_erw(q: float, n: int, rng, first_step: int | None = None) -> Trajectory:
    """Elephant random walk with +-1 steps.

    ``first_step=None`` draws the first step as +-1 with probability 1/2;
    pass +1 or -1 to pin it.
    """
    params = ModelParams(Mode.ERW, n, q=q, erw_first_step=first_step)
    g = as_generator(rng)
    first = params.erw_first_step
    if first is None:
        first = 1 if g.random() < 0.5 else -1
    return _signed_memory_walk(n, q, np.array([[float(first)]]), g)


def simulate(params: ModelParams, rng) -> Trajectory:
    if params.mode is Mode.P:
        return simulate_p_mode(params, rng)
    if params.mode is Mode.Q:
        return simulate_q_mode(params, rng)
    return simulate_erw(params.q, params.n, rng, params.erw_first_step)


def p_mode_positions_batch(params: ModelParams, reps: int, rng, checkpoints=None) -> np.ndarray:
    """``S_m`` for ``reps`` independent P-mode walks, shape ``(reps, len(checkpoints), d)``.

    Steps forward in time exactly like :func:`simulate_p_mode`, but on
    all replicates at once; fresh stable vectors are drawn only for fresh
    steps.  ``checkpoints`` are 1-based times (default ``[n]``).
    """
    if params.mode is not Mode.P:
        raise ParameterError("batch simulation is for P mode")
    g = as_generator(rng)
    n, p, d = params.n, params.p, params.dimension
    checkpoints = [n] if checkpoints is None else sorted(int(m) for m in checkpoints)
    if checkpoints[0] < 1 or checkpoints[-1] > n:
        raise ParameterError("checkpoints must lie in [1, n]")
    decide = g.random((reps, n)) < p
    past = (g.random((reps, n)) * np.arange(n)).astype(np.int64)
    decide[:, 0] = False
    rows = np.arange(reps)
    origin = np.empty((reps, n), dtype=np.int64)
    origin[:, 0] = 0
    for k in range(1, n):
        origin[:, k] = np.where(decide[:, k], origin[rows, past[:, k]], k)
    is_fresh = ~decide
    xi = np.zeros((reps, n, d))
    xi[is_fresh] = sample_isotropic_stable(params.step_law, g, int(is_fresh.sum()))
    steps = xi[rows[:, None], origin]
    positions = np.cumsum(steps, axis=1)
    return positions[:, [m - 1 for m in checkpoints], :]


# ---------------------------------------------------------------------------
# Exact laws for the signed dynamics


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def enumerate_q_mode_law(n: int, q) -> dict[int, Fraction]:
    """Exact law of ``S_n / xi_1`` in Q mode by listing every memory path.

    There are ``prod_{k=2..n} 2(k-1)`` paths, each a choice of remembered
    step and of repeat/flip.
    """
    if n < 1 or n > 9:
        raise ParameterError("exhaustive enumeration supports 1 <= n <= 9")
    q = _frac(q)
    law: dict[int, Fraction] = {}
    choices = [range(k) for k in range(1, n)]
    for path in itertools.product(*choices):
        for flips in itertools.product((False, True), repeat=n - 1):
            coef = [1]
            pr = Fraction(1)
            for k, (j, flip) in enumerate(zip(path, flips), start=1):
                coef.append(-coef[j] if flip else coef[j])
                pr *= (1 - q if flip else q) / k
            s = sum(coef)
            law[s] = law.get(s, Fraction(0)) + pr
    return {s: v for s, v in sorted(law.items()) if v}


def erw_law(n: int, q, first_step: int | None = 1) -> dict[int, Fraction]:
    """Exact law of the ERW displacement ``S_n`` via its Markov chain.

    From position ``s`` at time ``k`` the next step is +1 with probability
    ``q (k+s)/(2k) + (1-q) (k-s)/(2k)``.  ``first_step=None`` mixes the two
    starting signs equally.
    """
    if first_step is None:
        up, down = erw_law(n, q, 1), erw_law(n, q, -1)
        keys = sorted(set(up) | set(down))
        return {s: (up.get(s, 0) + down.get(s, 0)) / 2 for s in keys}
    q = _frac(q)
    dist = {int(first_step): Fraction(1)}
    for k in range(1, n):
        nxt: dict[int, Fraction] = {}
        for s, pr in dist.items():
            plus_frac = Fraction(k + s, 2 * k)
            up = q * plus_frac + (1 - q) * (1 - plus_frac)
            nxt[s + 1] = nxt.get(s + 1, Fraction(0)) + pr * up
            nxt[s - 1] = nxt.get(s - 1, Fraction(0)) + pr * (1 - up)
        dist = {s: v for s, v in nxt.items() if v}
    return dict(sorted(dist.items()))
