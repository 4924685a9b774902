"""Random recursive trees with Bernoulli bond percolation.

Nodes are 0-based: node 0 is the root (label 1 in the usual 1-based
convention) and node ``k`` attaches to a uniform node in ``{0, ..., k-1}``.
The edge above node ``k`` is kept with probability ``p`` at insertion
time.  A node's cluster root is itself when its edge is deleted, else its
parent's root, so clusters never merge and no union-find is needed.

Because every quantity of node ``k`` depends only on nodes ``<= k``, the
first ``m`` entries of a forest grown to ``n`` are a forest grown to
``m``.  :meth:`ClusterForest.prefix` exploits this for coupled snapshots.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np

from .stable_rng import StableSpec, as_generator, sample_isotropic_stable

__all__ = [
    "ConsistencyError",
    "SizeError",
    "ClusterForest",
    "SpinAssignment",
    "grow",
    "draw_spins",
    "position_from_clusters",
    "subtree_size",
    "cluster_alpha_sum",
    "resolve_roots",
    "grow_roots_batch",
    "cluster_sizes_batch",
    "ExactLaw",
    "enumerate_exact",
    "MAX_EXACT_N",
]

MAX_EXACT_N = 8


class ConsistencyError(RuntimeError):
    """Spins or cluster bookkeeping do not match the forest."""


class SizeError(ValueError):
    """Requested exact enumeration is too large."""


def _check_p(p):
    if not (0 < p < 1):
        raise ValueError(f"percolation parameter p must lie in (0, 1), got {p!r}")


def resolve_roots(parent: np.ndarray, kept: np.ndarray) -> np.ndarray:
    """Cluster root of every node, along the last axis.

    ``parent[..., k] < k`` for ``k >= 1``; entry 0 is ignored.  Uses
    pointer doubling on the kept-edge forest, so the number of passes is
    logarithmic in the cluster depth.
    """
    n = parent.shape[-1]
    idx = np.broadcast_to(np.arange(n), parent.shape)
    link = np.where(kept, parent, idx)
    link[..., 0] = 0
    while True:
        nxt = np.take_along_axis(link, link, axis=-1)
        if np.array_equal(nxt, link):
            return link
        link = nxt


def _draw_structure(n: int, p: float, g: np.random.Generator, rows: int | None = None):
    shape = (n,) if rows is None else (rows, n)
    k = np.arange(n)
    parent = (g.random(shape) * k).astype(np.int64)
    kept = g.random(shape) < p
    kept[..., 0] = False
    return parent, kept


@dataclass
class ClusterForest:
    """A percolated random recursive tree on ``n`` nodes."""

    n: int
    p: float
    parent: np.ndarray
    edge_kept: np.ndarray
    cluster_root: np.ndarray
    _sizes: np.ndarray | None = field(default=None, repr=False)

    @property
    def cluster_sizes(self) -> np.ndarray:
        """Length-n array: size of the cluster rooted at each node, 0 for non-roots."""
        if self._sizes is None:
            self._sizes = np.bincount(self.cluster_root, minlength=self.n)
        return self._sizes

    @property
    def roots(self) -> np.ndarray:
        return np.flatnonzero(self.cluster_root == np.arange(self.n))

    @property
    def num_clusters(self) -> int:
        return int(self.roots.size)

    @property
    def num_deleted(self) -> int:
        return int(self.n - 1 - np.count_nonzero(self.edge_kept[1:]))

    def size_map(self) -> dict[int, int]:
        sizes = self.cluster_sizes
        return {int(r): int(sizes[r]) for r in self.roots}

    def prefix(self, m: int) -> "ClusterForest":
        """The forest restricted to its first ``m`` nodes (its state at time m)."""
        if not (1 <= m <= self.n):
            raise ValueError(f"prefix length must lie in [1, {self.n}]")
        return ClusterForest(m, self.p, self.parent[:m], self.edge_kept[:m], self.cluster_root[:m])

    def check(self) -> None:
        """Raise ConsistencyError if any structural invariant fails."""
        n = self.n
        k = np.arange(n)
        if n > 1 and np.any(self.parent[1:] >= k[1:]):
            raise ConsistencyError("parent label must be smaller than the node label")
        is_root = self.cluster_root == k
        if not np.array_equal(is_root[1:], ~self.edge_kept[1:]) or not is_root[0]:
            raise ConsistencyError("cluster roots must be exactly the nodes with deleted edges")
        shared = self.cluster_root[self.parent[1:]] == self.cluster_root[1:]
        if not np.array_equal(shared, self.edge_kept[1:]):
            raise ConsistencyError("kept edges must join nodes of the same cluster")
        if int(self.cluster_sizes.sum()) != n:
            raise ConsistencyError("cluster sizes must sum to n")
        if self.num_clusters != 1 + self.num_deleted:
            raise ConsistencyError("clusters must equal one plus the deleted edges")

    def to_csv(self, meta: dict | None = None) -> str:
        """Cluster-size histogram, columns ``root,size`` (0-based roots)."""
        buf = io.StringIO()
        if meta is not None:
            buf.write("# " + json.dumps(meta, sort_keys=True) + "\r\n")
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["root", "size"])
        for r, s in self.size_map().items():
            w.writerow([r, s])
        return buf.getvalue()


def grow(n: int, p: float, rng) -> ClusterForest:
    """Grow a percolated random recursive tree to ``n`` nodes."""
    if n < 1:
        raise ValueError("n must be at least 1")
    _check_p(p)
    g = as_generator(rng)
    parent, kept = _draw_structure(n, p, g)
    parent[0] = 0
    root = resolve_roots(parent, kept)
    return ClusterForest(n, float(p), parent, kept, root)


def grow_roots_batch(rows: int, n: int, p: float, rng) -> np.ndarray:
    """Cluster-root arrays of ``rows`` independent forests, shape ``(rows, n)``."""
    _check_p(p)
    g = as_generator(rng)
    parent, kept = _draw_structure(n, p, g, rows)
    return resolve_roots(parent, kept)


def cluster_sizes_batch(roots: np.ndarray, m: int | None = None) -> np.ndarray:
    """Per-row cluster sizes of the first ``m`` nodes, shape ``(rows, m)``."""
    roots = np.atleast_2d(roots)
    rows, n = roots.shape
    m = n if m is None else m
    flat = roots[:, :m] + (np.arange(rows) * m)[:, None]
    return np.bincount(flat.ravel(), minlength=rows * m).reshape(rows, m)


@dataclass
class SpinAssignment:
    """One spin vector per cluster root; every node of a cluster shares it."""

    roots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.roots = np.asarray(self.roots, dtype=np.int64)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[0] != self.roots.size:
            raise ConsistencyError("need exactly one spin per root")

    def as_dict(self) -> dict[int, np.ndarray]:
        return {int(r): v for r, v in zip(self.roots, self.values)}


def draw_spins(forest: ClusterForest, spec: StableSpec, rng) -> SpinAssignment:
    """Independent stable spins for every cluster root of ``forest``."""
    roots = forest.roots
    return SpinAssignment(roots, sample_isotropic_stable(spec, rng, roots.size))


def position_from_clusters(forest: ClusterForest, spins: SpinAssignment) -> np.ndarray:
    """``S_n = sum_i |c_i,n| xi_i`` over the cluster roots of ``forest``."""
    roots = forest.roots
    lookup = dict(zip(spins.roots.tolist(), range(spins.roots.size)))
    missing = [int(r) for r in roots if int(r) not in lookup]
    if missing:
        raise ConsistencyError(f"no spin for cluster roots {missing[:5]}")
    rows = np.fromiter((lookup[int(r)] for r in roots), dtype=np.int64, count=roots.size)
    sizes = forest.cluster_sizes[roots].astype(float)
    return sizes @ spins.values[rows]


def subtree_size(forest: ClusterForest, k: int) -> int:
    """Size of the percolated subtree at node ``k`` (0-based).

    Counts ``k`` and every later node joined to it by a chain of kept
    edges with increasing labels.  The edge above ``k`` itself is ignored.
    """
    if not (0 <= k < forest.n):
        raise ValueError("node out of range")
    if k == 0:
        return int(forest.cluster_sizes[0])
    member = np.zeros(forest.n, dtype=bool)
    member[k] = True
    parent, kept = forest.parent, forest.edge_kept
    for j in range(k + 1, forest.n):
        if kept[j] and member[parent[j]]:
            member[j] = True
    return int(member.sum())


def cluster_alpha_sum(forest: ClusterForest, alpha: float) -> float:
    """``sum_i |c_i,n|**alpha`` over cluster roots, unnormalised."""
    sizes = forest.cluster_sizes
    sizes = sizes[sizes > 0].astype(float)
    return float(np.sum(sizes**alpha))


# ---------------------------------------------------------------------------
# Exact enumeration oracle


def _as_prob(p):
    if isinstance(p, Fraction):
        return p, True
    if isinstance(p, str):
        return Fraction(p), True
    if isinstance(p, int):
        return Fraction(p), True
    return float(p), False


@dataclass
class ExactLaw:
    """Exact law of the percolated tree on ``n`` nodes.

    ``joint`` maps the 0-based cluster-size vector (zeros for non-roots)
    to its probability; ``subtree[k]`` maps subtree sizes of node ``k`` to
    probabilities.  Probabilities are Fractions for rational ``p``.
    """

    n: int
    p: object
    joint: dict
    subtree: list
    exact: bool

    def total(self):
        return sum(self.joint.values())

    def marginal(self, i: int) -> dict:
        out: dict = {}
        for sizes, pr in self.joint.items():
            out[sizes[i]] = out.get(sizes[i], 0) + pr
        return dict(sorted(out.items()))

    def root_law(self) -> dict:
        return self.marginal(0)

    def multiset_law(self) -> dict:
        """Law of the sorted tuple of nonzero cluster sizes."""
        out: dict = {}
        for sizes, pr in self.joint.items():
            key = tuple(sorted((s for s in sizes if s), reverse=True))
            out[key] = out.get(key, 0) + pr
        return out

    def ordered_sizes_law(self) -> dict:
        """Law of the nonzero cluster sizes listed in root-label order."""
        out: dict = {}
        for sizes, pr in self.joint.items():
            key = tuple(s for s in sizes if s)
            out[key] = out.get(key, 0) + pr
        return out

    def alpha_sum_law(self, alpha: float) -> dict:
        out: dict = {}
        for sizes, pr in self.joint.items():
            key = float(sum(float(s) ** alpha for s in sizes if s))
            out[key] = out.get(key, 0) + pr
        return dict(sorted(out.items()))

    def expect(self, func):
        return sum(pr * func(sizes) for sizes, pr in self.joint.items())

    def to_json(self, meta: dict | None = None) -> str:
        doc = {
            "schema": 1,
            "meta": meta or {},
            "n": self.n,
            "p": str(self.p),
            "joint": [{"sizes": list(k), "prob": str(v) if self.exact else float(v)}
                      for k, v in sorted(self.joint.items())],
            "root_law": {str(k): (str(v) if self.exact else float(v)) for k, v in self.root_law().items()},
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def enumerate_exact(n: int, p) -> ExactLaw:
    """Exhaustive law over all attachment sequences and edge patterns.

    There are ``(n-1)! * 2**(n-1)`` outcomes; ``n`` is capped at 8.
    Outcomes are processed with the plain sequential root rule (not the
    pointer-doubling path used by :func:`grow`), and counted per number of
    kept edges so that probabilities can be formed exactly at the end.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > MAX_EXACT_N:
        raise SizeError(f"exact enumeration supports n <= {MAX_EXACT_N}, got {n}")
    prob, exact = _as_prob(p)
    if not (0 < prob < 1):
        raise ValueError("p must lie in (0, 1)")
    m = n - 1
    attach = np.array(list(itertools.product(*[range(k) for k in range(1, n)])), dtype=np.int64)
    attach = attach.reshape(factorial(m), m)
    masks = ((np.arange(2**m)[:, None] >> np.arange(m)) & 1).astype(bool)
    A, M = attach.shape[0], masks.shape[0]
    parent = np.zeros((A * M, n), dtype=np.int64)
    kept = np.zeros((A * M, n), dtype=bool)
    parent[:, 1:] = np.repeat(attach, M, axis=0)
    kept[:, 1:] = np.tile(masks, (A, 1))
    rows = np.arange(A * M)

    root = np.zeros((A * M, n), dtype=np.int64)
    for k in range(1, n):
        root[:, k] = np.where(kept[:, k], root[rows, parent[:, k]], k)
    sizes = np.zeros((A * M, n), dtype=np.int64)
    for k in range(n):
        sizes[rows, root[:, k]] += 1

    sub = np.zeros((A * M, n), dtype=np.int64)
    for k in range(n):
        member = np.zeros((A * M, n), dtype=bool)
        member[:, k] = True
        for j in range(k + 1, n):
            member[:, j] = kept[:, j] & member[rows, parent[:, j]]
        sub[:, k] = member.sum(axis=1)

    n_kept = kept.sum(axis=1)
    weights = [prob**j * (1 - prob) ** (m - j) / factorial(m) for j in range(n)]

    base = n + 1
    radix = base ** np.arange(n, dtype=np.int64)
    joint: dict = {}
    codes = (sizes @ radix) * n + n_kept
    for code, c in zip(*np.unique(codes, return_counts=True)):
        code, j = divmod(int(code), n)
        sz = tuple((code // base**i) % base for i in range(n))
        joint[sz] = joint.get(sz, 0) + int(c) * weights[j]

    subtree = []
    for k in range(n):
        law: dict = {}
        codes = sub[:, k] * n + n_kept
        for code, c in zip(*np.unique(codes, return_counts=True)):
            size, j = divmod(int(code), n)
            law[size] = law.get(size, 0) + int(c) * weights[j]
        subtree.append(dict(sorted(law.items())))

    out = ExactLaw(n, prob, joint, subtree, exact)
    tot = out.total()
    if not exact and abs(tot - 1.0) > 1e-12:
        raise ConsistencyError(f"enumerated probabilities sum to {tot!r}")
    if exact and tot != 1:
        raise ConsistencyError(f"enumerated probabilities sum to {tot}")
    return out
