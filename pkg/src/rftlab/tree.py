"""Append-only rooted labelled trees.

Vertices are labelled by arrival time: the seed tree has vertices {1, 2}
joined by an edge, and the m-th attachment creates vertex m+2. Labels are
1-based and never change. Two representations exist:

* :class:`GrowthTree` — the mutable tree being grown. Backed by plain
  Python lists, O(1) amortized attach, O(1) uniform-neighbour sampling.
* :class:`FrozenTree` — an immutable numpy-array snapshot for statistics.
  Frozen trees may be shared freely across threads.

Neighbour indexing contract (shared with the fast kernels, so that the
same draw sequence grows the same tree on either path): for vertex v >= 2
index 0 is the parent and indices 1..deg-1 are the children in arrival
order; for vertex 1 all indices are children in arrival order.

Frozen-tree file format: a header line ``n=<int>`` followed by n-1 lines
``<child> <parent>`` in arrival order. Round-trips are byte-exact.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import LabelError
from .rng import RngStream


class GrowthTree:
    """Growing labelled tree with per-vertex degree, leaf-neighbour count and depth.

    Index 0 of every internal list is an unused sentinel so that vertex v
    lives at index v. ``debug=True`` recomputes leaf counts from scratch
    after every attach and compares (slow; for tests).
    """

    __slots__ = ("_n", "_parent", "_degree", "_leaf", "_depth", "_children", "_debug")

    def __init__(self, debug: bool = False):
        # seed tree T_2: single edge {1, 2}
        self._n = 2
        self._parent = [0, 0, 1]
        self._degree = [0, 1, 1]
        self._leaf = [0, 1, 1]
        self._depth = [0, 0, 1]
        self._children: list[list[int] | None] = [None, [2], []]
        self._debug = debug

    @property
    def n(self) -> int:
        return self._n

    def parent(self, v: int) -> int | None:
        """Parent label of v; None for vertex 1."""
        self._check(v)
        return self._parent[v] if v >= 2 else None

    def degree(self, v: int) -> int:
        self._check(v)
        return self._degree[v]

    def leaf_count(self, v: int) -> int:
        self._check(v)
        return self._leaf[v]

    def depth(self, v: int) -> int:
        self._check(v)
        return self._depth[v]

    def children(self, v: int) -> list[int]:
        self._check(v)
        return list(self._children[v])

    def neighbours(self, v: int) -> list[int]:
        """Neighbour labels of v in index order (parent first for v >= 2)."""
        self._check(v)
        ch = self._children[v]
        if v >= 2:
            return [self._parent[v]] + ch
        return list(ch)

    def neighbour_at(self, v: int, j: int) -> int:
        """j-th neighbour of v under the indexing contract; 0 <= j < degree(v)."""
        if v >= 2:
            return self._parent[v] if j == 0 else self._children[v][j - 1]
        return self._children[v][j]

    def is_leaf(self, v: int) -> bool:
        self._check(v)
        return self._degree[v] == 1

    def attach(self, target: int) -> int:
        """Attach a new vertex to ``target`` and return its label (= n+1).

        Maintains degree, leaf-neighbour counts and depth incrementally:
        two integer updates cover the leaf bookkeeping (the new leaf joins
        target's count; if target itself was a leaf, its unique prior
        neighbour loses one).
        """
        n = self._n
        if not (isinstance(target, int) and 1 <= target <= n):
            raise LabelError(f"attach target {target!r} not in [1, {n}]")
        parent = self._parent
        degree = self._degree
        leaf = self._leaf
        children = self._children
        m = n + 1
        old = degree[target]
        if old == 1:
            nb = parent[target] if target >= 2 else children[target][0]
            leaf[nb] -= 1
        parent.append(target)
        degree[target] = old + 1
        degree.append(1)
        leaf[target] += 1
        leaf.append(0)
        self._depth.append(self._depth[target] + 1)
        children[target].append(m)
        children.append([])
        self._n = m
        if self._debug:
            self._recheck_leaf_counts()
        return m

    def sample_uniform_neighbour(self, v: int, rng: RngStream) -> int:
        """Uniform neighbour of v; consumes exactly one draw."""
        self._check(v)
        j = rng.index(self._degree[v])
        return self.neighbour_at(v, j)

    def distance(self, u: int, v: int) -> int:
        """Graph distance, via walking the deeper endpoint up to the LCA."""
        self._check(u)
        self._check(v)
        return _walk_distance(self._parent, self._depth, u, v)

    def freeze(self) -> "FrozenTree":
        """Immutable numpy snapshot of the current tree."""
        return FrozenTree(
            n=self._n,
            parent=np.array(self._parent, dtype=np.int64),
            degree=np.array(self._degree, dtype=np.int64),
            leaf_count=np.array(self._leaf, dtype=np.int64),
            depth=np.array(self._depth, dtype=np.int64),
        )

    def validate(self) -> None:
        """Recompute every maintained field from the parent sequence and compare."""
        n = self._n
        deg = [0] * (n + 1)
        for m in range(2, n + 1):
            deg[self._parent[m]] += 1
            deg[m] += 1
        if deg[1:] != self._degree[1:]:
            raise AssertionError("degree mismatch against parent-sequence recount")
        if sum(self._degree[1:]) != 2 * (n - 1):
            raise AssertionError("degree sum is not 2(n-1)")
        for m in range(2, n + 1):
            if self._depth[m] != self._depth[self._parent[m]] + 1:
                raise AssertionError(f"depth({m}) != depth(parent)+1")
        self._recheck_leaf_counts()
        for v in range(1, n + 1):
            for u in self.neighbours(v):
                if v not in self.neighbours(u):
                    raise AssertionError(f"neighbour lists inconsistent at ({v},{u})")

    def _recheck_leaf_counts(self) -> None:
        n = self._n
        for v in range(1, n + 1):
            expect = sum(1 for u in self.neighbours(v) if self._degree[u] == 1)
            if expect != self._leaf[v]:
                raise AssertionError(
                    f"leaf_count({v}) = {self._leaf[v]}, recount gives {expect}"
                )

    def _check(self, v: int) -> None:
        if not (isinstance(v, (int, np.integer)) and 1 <= v <= self._n):
            raise LabelError(f"vertex label {v!r} not in [1, {self._n}]")


def seed_tree(debug: bool = False) -> GrowthTree:
    """The two-vertex seed tree: one edge, both endpoints leaves at depth 0/1."""
    return GrowthTree(debug=debug)


def _walk_distance(parent, depth, u: int, v: int) -> int:
    """LCA distance using parent pointers; works on lists and numpy arrays."""
    du, dv = depth[u], depth[v]
    d = 0
    while du > dv:
        u = parent[u]
        du -= 1
        d += 1
    while dv > du:
        v = parent[v]
        dv -= 1
        d += 1
    while u != v:
        u = parent[u]
        v = parent[v]
        d += 2
    return d


@dataclass(frozen=True)
class FrozenTree:
    """Immutable tree snapshot: five parallel int64 arrays indexed by label.

    Slot 0 is a sentinel. ``parent[1]`` is 0 (vertex 1 has no parent).
    """

    n: int
    parent: np.ndarray
    degree: np.ndarray
    leaf_count: np.ndarray
    depth: np.ndarray
    _csr: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("a frozen tree has at least 2 vertices")
        for name in ("parent", "degree", "leaf_count", "depth"):
            a = getattr(self, name)
            if a.shape != (self.n + 1,):
                raise ValueError(f"{name} must have shape (n+1,)")

    # -- adjacency ----------------------------------------------------------

    def children_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(offsets, order): children of v are order[offsets[v]:offsets[v+1]], arrival order."""
        cached = self._csr.get("children")
        if cached is None:
            pa = self.parent[2 : self.n + 1]
            counts = np.bincount(pa, minlength=self.n + 2)
            offsets = np.zeros(self.n + 2, dtype=np.int64)
            np.cumsum(counts[: self.n + 1], out=offsets[1:])
            order = np.argsort(pa, kind="stable").astype(np.int64) + 2
            cached = (offsets, order)
            self._csr["children"] = cached
        return cached

    def children(self, v: int) -> list[int]:
        self._check(v)
        offsets, order = self.children_csr()
        return order[offsets[v] : offsets[v + 1]].tolist()

    def neighbours(self, v: int) -> list[int]:
        self._check(v)
        ch = self.children(v)
        if v >= 2:
            return [int(self.parent[v])] + ch
        return ch

    def is_leaf(self, v: int) -> bool:
        self._check(v)
        return int(self.degree[v]) == 1

    def distance(self, u: int, v: int) -> int:
        self._check(u)
        self._check(v)
        return _walk_distance(self.parent, self.depth, int(u), int(v))

    def edges(self) -> Iterable[tuple[int, int]]:
        """(child, parent) pairs in arrival order."""
        pa = self.parent
        for m in range(2, self.n + 1):
            yield m, int(pa[m])

    # -- persistence ----------------------------------------------------------

    def save(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as f:
            self.write(f)

    def write(self, f: io.TextIOBase) -> None:
        f.write(f"n={self.n}\n")
        pa = self.parent
        chunk = []
        for m in range(2, self.n + 1):
            chunk.append(f"{m} {pa[m]}\n")
            if len(chunk) >= 65536:
                f.write("".join(chunk))
                chunk.clear()
        f.write("".join(chunk))

    @classmethod
    def load(cls, path) -> "FrozenTree":
        with open(path, "r", encoding="ascii") as f:
            return cls.read(f)

    @classmethod
    def read(cls, f: io.TextIOBase) -> "FrozenTree":
        header = f.readline().strip()
        if not header.startswith("n="):
            raise ValueError(f"bad frozen-tree header: {header!r}")
        n = int(header[2:])
        if n < 2:
            raise ValueError(f"frozen tree must have n >= 2, got {n}")
        parent = np.zeros(n + 1, dtype=np.int64)
        for m in range(2, n + 1):
            line = f.readline().split()
            if len(line) != 2 or int(line[0]) != m:
                raise ValueError(f"bad frozen-tree line for vertex {m}: {line!r}")
            p = int(line[1])
            if not 1 <= p < m:
                raise ValueError(f"parent of {m} must be in [1, {m-1}], got {p}")
            parent[m] = p
        return cls.from_parents(parent, n)

    @classmethod
    def from_parents(cls, parent: np.ndarray, n: int) -> "FrozenTree":
        """Rebuild degree, leaf counts and depth from a parent array."""
        parent = np.asarray(parent[: n + 1], dtype=np.int64)
        degree = np.bincount(parent[2 : n + 1], minlength=n + 1).astype(np.int64)
        degree[2 : n + 1] += 1
        depth = np.zeros(n + 1, dtype=np.int64)
        for m in range(2, n + 1):  # parent[m] < m, so a forward scan suffices
            depth[m] = depth[parent[m]] + 1
        is_leaf = (degree == 1).astype(np.int64)
        is_leaf[0] = 0
        leaf_count = np.zeros(n + 1, dtype=np.int64)
        ch = np.arange(2, n + 1)
        np.add.at(leaf_count, parent[ch], is_leaf[ch])
        leaf_count[ch] += is_leaf[parent[ch]]
        return cls(n=n, parent=parent, degree=degree, leaf_count=leaf_count, depth=depth)

    def validate(self) -> None:
        """Check all structural invariants from the parent sequence."""
        rebuilt = FrozenTree.from_parents(self.parent, self.n)
        if int(self.degree[1:].sum()) != 2 * (self.n - 1):
            raise AssertionError("degree sum is not 2(n-1)")
        for name in ("degree", "leaf_count", "depth"):
            if not np.array_equal(getattr(self, name)[1:], getattr(rebuilt, name)[1:]):
                raise AssertionError(f"{name} disagrees with parent-sequence rebuild")
        if np.any(self.leaf_count[1:] > self.degree[1:]):
            raise AssertionError("leaf_count exceeds degree somewhere")

    def _check(self, v) -> None:
        if not 1 <= int(v) <= self.n:
            raise LabelError(f"vertex label {v!r} not in [1, {self.n}]")


def grow_tree_from_parents(parents: Iterable[int]) -> GrowthTree:
    """Replay an attach sequence (parents of vertices 3, 4, ...) onto the seed tree.

    The seed edge {1,2} is implicit; ``parents`` starts with the target of
    vertex 3.
    """
    t = seed_tree()
    for target in parents:
        t.attach(target)
    return t
