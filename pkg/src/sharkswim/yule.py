"""Yule process with mutation.

Each individual gives birth at rate 1.  A child is a clone of its parent
with probability p and founds a new type otherwise.  The simulation is
event driven over births: with ``k`` individuals alive the next birth
comes after an Exp(k) holding time and the parent is uniform among them.

Parent choice is done on type counters (a Fenwick tree over counts), so
picking type ``i`` has probability ``count_i / k``.  That is exactly the
uniform-individual rule without per-individual arrays.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .stable_rng import as_generator

__all__ = [
    "YuleState",
    "simulate_until_n",
    "simulate_batch",
    "martingale_value",
    "type_population_after_birth",
    "killed_subprocess_values",
    "type_counts_at_n",
    "birth_times",
    "embedded_chain_law",
    "chain_step",
]


class _Fenwick:
    """Prefix sums over type counts with O(log D) search by cumulative weight."""

    def __init__(self, capacity: int):
        self.size = 1
        while self.size < capacity:
            self.size *= 2
        self.tree = [0] * (self.size + 1)

    def add(self, i: int, delta: int) -> None:
        i += 1
        tree, size = self.tree, self.size
        while i <= size:
            tree[i] += delta
            i += i & -i

    def find(self, target: int) -> int:
        """Smallest index whose prefix sum exceeds ``target`` (0 <= target < total)."""
        pos = 0
        tree = self.tree
        step = self.size
        while step:
            nxt = pos + step
            if nxt <= self.size and tree[nxt] <= target:
                pos = nxt
                target -= tree[nxt]
            step //= 2
        return pos


@dataclass
class YuleState:
    """Birth history of a Yule process with mutation, stopped at ``n`` individuals.

    ``birth_times[k-1]`` is ``T(k)``; ``type_of[k-1]`` the type of the k-th
    individual.  Types are labelled 0, 1, ... in creation order, type 0
    being the founder's.
    """

    n: int
    p: float
    birth_times: np.ndarray
    type_of: np.ndarray
    type_counts: np.ndarray
    type_birth: np.ndarray

    @property
    def num_types(self) -> int:
        return int(self.type_counts.size)

    def to_csv(self, meta: dict | None = None) -> str:
        """Type snapshot with columns ``type, b_i, count``."""
        buf = io.StringIO()
        if meta is not None:
            buf.write("# " + json.dumps(meta, sort_keys=True) + "\r\n")
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["type", "b_i", "count"])
        for i, (b, c) in enumerate(zip(self.type_birth, self.type_counts)):
            w.writerow([i, repr(float(b)), int(c)])
        return buf.getvalue()


def birth_times(n: int, rng, size=None) -> np.ndarray:
    """``T(1..n)`` as cumulative Exp(k) holding times; shape ``(*size, n)``."""
    g = as_generator(rng)
    shape = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    if n == 1:
        return np.zeros(shape + (1,))
    rates = np.arange(1, n, dtype=float)
    gaps = g.standard_exponential(shape + (n - 1,)) / rates
    out = np.zeros(shape + (n,))
    np.cumsum(gaps, axis=-1, out=out[..., 1:])
    return out


def simulate_until_n(n: int, p: float, rng) -> YuleState:
    """Run the process until ``n`` individuals are alive."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not (0 < p < 1):
        raise ValueError("p must lie in (0, 1)")
    g = as_generator(rng)
    times = birth_times(n, g)
    u_parent = g.random(n)
    u_clone = g.random(n)
    counts = _Fenwick(n)
    counts.add(0, 1)
    type_of = np.zeros(n, dtype=np.int64)
    type_count = [1]
    type_birth = [0.0]
    for k in range(1, n):
        # k individuals alive; parent type with probability count/k
        parent_type = counts.find(int(u_parent[k] * k))
        if u_clone[k] < p:
            t = parent_type
            type_count[t] += 1
        else:
            t = len(type_count)
            type_count.append(1)
            type_birth.append(float(times[k]))
        counts.add(t, 1)
        type_of[k] = t
    return YuleState(n, float(p), times, type_of, np.array(type_count, dtype=np.int64),
                     np.array(type_birth))


def simulate_batch(reps: int, n: int, p: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """``reps`` independent runs on per-individual arrays, stepped across replicates.

    The parent of the (k+1)-th individual is a uniform index among the
    first k, and its type is copied or renewed.  Returns ``(birth_times,
    type_of)``, each of shape ``(reps, n)``, with creation-ordered types.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not (0 < p < 1):
        raise ValueError("p must lie in (0, 1)")
    g = as_generator(rng)
    times = birth_times(n, g, reps)
    parent = (g.random((reps, n)) * np.arange(n)).astype(np.int64)
    mutate = g.random((reps, n)) >= p
    mutate[:, 0] = False
    # new types are numbered in order of appearance within each replicate
    new_label = np.cumsum(mutate, axis=1)
    rows = np.arange(reps)
    type_of = np.zeros((reps, n), dtype=np.int64)
    for k in range(1, n):
        type_of[:, k] = np.where(mutate[:, k], new_label[:, k], type_of[rows, parent[:, k]])
    return times, type_of


def martingale_value(state: YuleState, k: int) -> float:
    """``exp(-T(k)) k`` for 1 <= k <= n."""
    if not (1 <= k <= state.n):
        raise ValueError("k must lie in [1, n]")
    return float(np.exp(-state.birth_times[k - 1]) * k)


def type_counts_at_n(state: YuleState) -> np.ndarray:
    """Population of each type at ``T(n)``, in type creation order."""
    return state.type_counts.copy()


def type_population_after_birth(p: float, t: float, rng, size=None) -> np.ndarray:
    """Size at time ``t`` of a rate-p Yule process started from one individual.

    This is the law of a type's population ``t`` after its birth; it is
    geometric with parameter ``exp(-t p)``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if not (0 < p <= 1):
        raise ValueError("p must lie in (0, 1]")
    g = as_generator(rng)
    shape = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    total = int(np.prod(shape)) if shape else 1
    pop = np.ones(total, dtype=np.int64)
    clock = np.zeros(total)
    idx = np.arange(total)
    while idx.size:
        clock[idx] += g.standard_exponential(idx.size) / (p * pop[idx])
        idx = idx[clock[idx] <= t]
        pop[idx] += 1
    return pop.reshape(shape) if shape else int(pop[0])


def killed_subprocess_values(p: float, t: float, rng, size) -> np.ndarray:
    """``exp(-t p) Y^(p)(t)`` for the clone-only subprocess of the founder."""
    return np.exp(-t * p) * type_population_after_birth(p, t, rng, size)


# ---------------------------------------------------------------------------
# Embedded jump chain of the type counts


def chain_step(counts: tuple, p) -> dict[tuple, object]:
    """Transition law of the type-count vector at one birth."""
    k = sum(counts)
    out: dict = {}
    for i, c in enumerate(counts):
        w = Fraction(c, k) if isinstance(p, Fraction) else c / k
        grown = counts[:i] + (c + 1,) + counts[i + 1:]
        out[grown] = out.get(grown, 0) + w * p
        mutated = counts + (1,)
        out[mutated] = out.get(mutated, 0) + w * (1 - p)
    return out


def embedded_chain_law(n: int, p) -> dict[tuple, object]:
    """Exact law of the type counts (creation order) once ``n`` individuals exist."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(p, str):
        p = Fraction(p)
    law: dict = {(1,): 1 if not isinstance(p, Fraction) else Fraction(1)}
    for _ in range(n - 1):
        nxt: dict = {}
        for state, pr in law.items():
            for new, w in chain_step(state, p).items():
                nxt[new] = nxt.get(new, 0) + pr * w
        law = nxt
    return law
