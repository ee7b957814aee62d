"""Joint friend-tree / uniform-tree growth and its verified guarantees.

One shared uniform draw V per step attaches the new vertex to V in the
uniform recursive tree and to a uniform neighbour W of V in the friend
tree. Under this construction two properties hold deterministically, for
every realization, and are enforced here as hard checks:

* distances: d_friend(i, j) <= 2 * d_uniform(i, j) for all vertex pairs;
* leaf proximity: every leaf of the uniform tree is within distance 1 of
  some leaf of the friend tree.

A violation of either is an implementation bug and raises
:class:`~rftlab.errors.CouplingInvariantError`.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import CouplingInvariantError
from .rng import RngStream
from .tree import FrozenTree, GrowthTree, seed_tree

EXHAUSTIVE_LIMIT = 500  # all-pairs distance check below this size


@dataclass
class CoupledPair:
    """Two trees grown jointly from the same vertex draws; labels coincide."""

    rft: GrowthTree
    urrt: GrowthTree

    @property
    def n(self) -> int:
        return self.rft.n

    def freeze(self) -> "FrozenPair":
        return FrozenPair(rft=self.rft.freeze(), urrt=self.urrt.freeze())


@dataclass(frozen=True)
class FrozenPair:
    rft: FrozenTree
    urrt: FrozenTree

    @property
    def n(self) -> int:
        return self.rft.n

    def save(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        self.rft.save(os.path.join(directory, "friend_tree.txt"))
        self.urrt.save(os.path.join(directory, "uniform_tree.txt"))
        manifest = {"n": self.n, "files": ["friend_tree.txt", "uniform_tree.txt"],
                    "construction": "shared uniform vertex draw per step"}
        with open(os.path.join(directory, "manifest.json"), "w") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, directory) -> "FrozenPair":
        rft = FrozenTree.load(os.path.join(directory, "friend_tree.txt"))
        urrt = FrozenTree.load(os.path.join(directory, "uniform_tree.txt"))
        if rft.n != urrt.n:
            raise ValueError("coupled trees have different sizes")
        return cls(rft=rft, urrt=urrt)


def new_pair() -> CoupledPair:
    return CoupledPair(rft=seed_tree(), urrt=seed_tree())


def coupled_step(pair: CoupledPair, rng: RngStream) -> tuple[int, int]:
    """One joint step; returns (friend-tree target W, uniform-tree target V).

    Consumes exactly two draws: the shared V and W's neighbour index.
    """
    v = rng.label(pair.n)
    w = pair.rft.sample_uniform_neighbour(v, rng)
    pair.rft.attach(w)
    pair.urrt.attach(v)
    return w, v


def grow_coupled(n_target: int, rng: RngStream, use_kernel: bool = True) -> FrozenPair:
    """Grow a coupled pair from the shared seed edge to n_target vertices."""
    if n_target < 2:
        raise ValueError("n_target must be at least 2")
    if not use_kernel:
        pair = new_pair()
        while pair.n < n_target:
            coupled_step(pair, rng)
        return pair.freeze()

    size = n_target + 1
    def fresh():
        a = np.zeros(size, np.int64)
        return a
    rp, rd, rl, rdep = fresh(), fresh(), fresh(), fresh()
    rfc, rns, rlc = fresh(), fresh(), fresh()
    up, ud, ul, udep = fresh(), fresh(), fresh(), fresh()
    ufc, uns, ulc = fresh(), fresh(), fresh()
    for parent, degree, leaf, depth, fc, lc in (
        (rp, rd, rl, rdep, rfc, rlc),
        (up, ud, ul, udep, ufc, ulc),
    ):
        parent[2] = 1
        degree[1] = degree[2] = 1
        leaf[1] = leaf[2] = 1
        depth[2] = 1
        fc[1] = 2
        lc[1] = 2
    buf = rng.raw_block((n_target - 2) * 2)
    _kernels.coupled_grow_kernel(rp, rd, rl, rdep, rfc, rns, rlc,
                                 up, ud, ul, udep, ufc, uns, ulc,
                                 2, n_target, buf, 0)
    rft = FrozenTree(n=n_target, parent=rp, degree=rd, leaf_count=rl, depth=rdep)
    urrt = FrozenTree(n=n_target, parent=up, degree=ud, leaf_count=ul, depth=udep)
    return FrozenPair(rft=rft, urrt=urrt)


# -- verification --------------------------------------------------------------


@dataclass
class DistanceBoundReport:
    n: int
    pairs_checked: int
    exhaustive: bool
    violations: int
    max_ratio: float  # max d_friend / d_uniform over distinct pairs


@dataclass
class LeafProximityReport:
    n: int
    uniform_leaves: int
    violations: int
    max_distance: int  # max over uniform-tree leaves of distance to nearest friend-tree leaf


def verify_distance_bound(pair: FrozenPair, sample_pairs: int,
                          rng: RngStream | None = None) -> DistanceBoundReport:
    """Check d_friend(i,j) <= 2 d_uniform(i,j); exhaustive below the size limit.

    Raises CouplingInvariantError on any violation.
    """
    n = pair.n
    if n <= EXHAUSTIVE_LIMIT:
        us, vs = np.triu_indices(n, k=1)
        us = (us + 1).astype(np.int64)
        vs = (vs + 1).astype(np.int64)
        exhaustive = True
    else:
        if rng is None:
            raise ValueError("sampled verification needs an RngStream")
        if sample_pairs < 1:
            raise ValueError("sample_pairs must be positive")
        raws = rng.raw_block(2 * sample_pairs)
        us = (1 + raws[0::2] % np.uint64(n)).astype(np.int64)
        vs = (1 + raws[1::2] % np.uint64(n)).astype(np.int64)
        exhaustive = False
    d_f = _kernels.distance_pairs(pair.rft.parent, pair.rft.depth, us, vs)
    d_u = _kernels.distance_pairs(pair.urrt.parent, pair.urrt.depth, us, vs)
    bad = d_f > 2 * d_u
    nviol = int(bad.sum())
    distinct = d_u > 0
    max_ratio = float((d_f[distinct] / d_u[distinct]).max()) if distinct.any() else 0.0
    report = DistanceBoundReport(n=n, pairs_checked=len(us), exhaustive=exhaustive,
                                 violations=nviol, max_ratio=max_ratio)
    if nviol:
        i = int(np.flatnonzero(bad)[0])
        raise CouplingInvariantError(
            f"distance bound failed at pair ({us[i]}, {vs[i]}): "
            f"d_friend={d_f[i]} > 2*d_uniform={2*d_u[i]} (n={n}, {nviol} violations)"
        )
    return report


def verify_leaf_proximity(pair: FrozenPair) -> LeafProximityReport:
    """Every uniform-tree leaf must be within distance 1 of a friend-tree leaf.

    Exhaustive: one multi-source BFS from all friend-tree leaves.
    Raises CouplingInvariantError on any violation.
    """
    n = pair.n
    rft = pair.rft
    offsets, order = rft.children_csr()
    sources = np.flatnonzero(rft.degree[1 : n + 1] == 1).astype(np.int64) + 1
    dist = _kernels.multi_source_bfs(offsets, order, rft.parent, n, sources)
    u_leaves = np.flatnonzero(pair.urrt.degree[1 : n + 1] == 1) + 1
    d = dist[u_leaves]
    nviol = int((d > 1).sum())
    report = LeafProximityReport(n=n, uniform_leaves=len(u_leaves),
                                 violations=nviol, max_distance=int(d.max()))
    if nviol:
        bad = int(u_leaves[int(np.argmax(d))])
        raise CouplingInvariantError(
            f"uniform-tree leaf {bad} is at distance {int(dist[bad])} > 1 "
            f"from every friend-tree leaf (n={n}, {nviol} violations)"
        )
    return report
