"""Stochastic attachment laws and the generic grow loop.

Four growth laws share one step interface: given the current tree and an
:class:`~rftlab.rng.RngStream`, produce the attachment target for the next
vertex, consuming a fixed number of draws:

* ``friend(k)`` — sample a uniform vertex, walk k uniform-neighbour steps
  (backtracking allowed), attach to the endpoint. k+1 draws.
* ``urrt`` — attach to a uniform vertex directly. 1 draw.
* ``pa`` — attach proportionally to degree, realized exactly by picking a
  uniform non-root vertex and then it or its parent with equal probability
  (a uniform edge endpoint). 2 draws.
* ``redirect(p)`` — sample a uniform vertex V and a uniform neighbour W of
  V; attach to V with probability p, else to W. 3 draws.

Fixed per-step draw counts make replica runs exactly reproducible. The
grow loop runs either through the numba kernels (default) or through the
pure-Python step functions below; both consume the identical draw sequence
and grow the identical tree, which the test suite pins.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np

from . import _kernels, stats as _stats
from .errors import LabelError, ModelError
from .rng import RngStream
from .tree import FrozenTree, GrowthTree, seed_tree

_KIND_CODES = {"friend": _kernels.FRIEND, "urrt": _kernels.URRT,
               "pa": _kernels.PA, "redirect": _kernels.REDIRECT}


@dataclass(frozen=True)
class ModelSpec:
    """Which growth law to apply at every step."""

    kind: str
    walk_length: int = 1
    redirect_prob: float | None = None

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ModelError(f"unknown model kind {self.kind!r}")
        if self.kind == "friend":
            if not (isinstance(self.walk_length, int) and self.walk_length >= 1):
                raise ModelError(
                    "friend requires walk_length >= 1; use kind='urrt' for direct uniform attachment"
                )
        if self.kind == "redirect":
            p = self.redirect_prob
            if p is None or not (0.0 < p < 1.0):
                raise ModelError("redirect requires 0 < redirect_prob < 1")
        elif self.redirect_prob is not None:
            raise ModelError("redirect_prob is only valid for kind='redirect'")

    @classmethod
    def friend(cls, k: int = 1) -> "ModelSpec":
        return cls(kind="friend", walk_length=k)

    @classmethod
    def urrt(cls) -> "ModelSpec":
        return cls(kind="urrt")

    @classmethod
    def pa(cls) -> "ModelSpec":
        return cls(kind="pa")

    @classmethod
    def redirect(cls, p: float) -> "ModelSpec":
        return cls(kind="redirect", redirect_prob=p)

    @property
    def draws_per_step(self) -> int:
        return {"friend": self.walk_length + 1, "urrt": 1, "pa": 2, "redirect": 3}[self.kind]

    def describe(self) -> str:
        if self.kind == "friend":
            return f"friend(k={self.walk_length})"
        if self.kind == "redirect":
            return f"redirect(p={self.redirect_prob})"
        return self.kind


# -- single steps (pure-Python reference path) -------------------------------


def friend_step(tree: GrowthTree, rng: RngStream, k: int = 1) -> int:
    """Endpoint of a k-step simple random walk from a uniform vertex."""
    if tree.n < 2:
        raise LabelError("friend_step needs n >= 2")
    if k < 1:
        raise ModelError("friend walk length must be >= 1; use urrt_step for k = 0")
    cur = rng.label(tree.n)
    for _ in range(k):
        cur = tree.sample_uniform_neighbour(cur, rng)
    return cur


def urrt_step(tree: GrowthTree, rng: RngStream) -> int:
    """Uniform vertex."""
    return rng.label(tree.n)


def pa_step(tree: GrowthTree, rng: RngStream) -> int:
    """Degree-proportional vertex via a uniform edge endpoint: each edge is
    {u, parent(u)} for a unique non-root u, so a uniform u plus a fair coin
    lands on w with probability deg(w)/(2(n-1)) exactly."""
    n = tree.n
    if n < 2:
        raise LabelError("pa_step needs n >= 2")
    u = 2 + rng.index(n - 1)
    if rng.index(2) == 0:
        return u
    return tree.parent(u)


def redirect_step(tree: GrowthTree, rng: RngStream, p: float) -> int:
    """Uniform vertex V with probability p, else a uniform neighbour of V."""
    if not 0.0 < p < 1.0:
        raise ModelError("redirect requires 0 < p < 1")
    v = rng.label(tree.n)
    w = tree.sample_uniform_neighbour(v, rng)
    return v if rng.unit() < p else w


def model_step(tree: GrowthTree, rng: RngStream, model: ModelSpec) -> int:
    if model.kind == "friend":
        return friend_step(tree, rng, model.walk_length)
    if model.kind == "urrt":
        return urrt_step(tree, rng)
    if model.kind == "pa":
        return pa_step(tree, rng)
    return redirect_step(tree, rng, model.redirect_prob)


# -- snapshot schedules -------------------------------------------------------


def geometric_schedule(n0: int, ratio: float, n_target: int) -> list[int]:
    """n0, n0*ratio, n0*ratio^2, ... capped at and always including n_target."""
    if n0 < 2:
        raise ValueError("schedule must start at n0 >= 2")
    if ratio <= 1:
        raise ValueError("schedule ratio must exceed 1")
    if n_target < n0:
        return [n_target]
    out = []
    x = float(n0)
    while round(x) <= n_target:
        v = int(round(x))
        if not out or v > out[-1]:
            out.append(v)
        x *= ratio
    if out[-1] != n_target:
        out.append(n_target)
    return out


def normalize_schedule(snapshots: Sequence[int] | None, n_target: int) -> list[int]:
    if snapshots is None:
        return [n_target]
    sched = sorted(set(int(s) for s in snapshots))
    if any(s < 2 or s > n_target for s in sched):
        raise ValueError(f"snapshot times must lie in [2, {n_target}]")
    if not sched or sched[-1] != n_target:
        sched.append(n_target)
    return sched


# -- observers ----------------------------------------------------------------


class TreeView(Protocol):
    """What an observer may read at a snapshot."""

    @property
    def n(self) -> int: ...
    def degree(self, v: int) -> int: ...
    def leaf_count(self, v: int) -> int: ...


class _ArrayView:
    __slots__ = ("n", "_degree", "_leaf")

    def __init__(self, n, degree, leaf):
        self.n = n
        self._degree = degree
        self._leaf = leaf

    def degree(self, v: int) -> int:
        return int(self._degree[v])

    def leaf_count(self, v: int) -> int:
        return int(self._leaf[v])


class Observer(Protocol):
    def observe(self, view: TreeView) -> None: ...


# -- grow loop -----------------------------------------------------------------


@dataclass
class GrowResult:
    snapshots: list[_stats.StatSnapshot]
    tree: FrozenTree


class KernelRun:
    """Array-backed growth run usable incrementally (grow, inspect, grow more).

    Owns its arrays and its RngStream; not thread-shareable while growing.
    """

    def __init__(self, model: ModelSpec, capacity: int, rng: RngStream):
        if capacity < 2:
            raise ValueError("capacity must be at least 2")
        self.model = model
        self.capacity = capacity
        self.rng = rng
        size = capacity + 1
        self.parent = np.zeros(size, np.int64)
        self.degree = np.zeros(size, np.int64)
        self.leaf_count = np.zeros(size, np.int64)
        self.depth = np.zeros(size, np.int64)
        self._fc = np.zeros(size, np.int64)
        self._ns = np.zeros(size, np.int64)
        self._lc = np.zeros(size, np.int64)
        self.parent[2] = 1
        self.degree[1] = self.degree[2] = 1
        self.leaf_count[1] = self.leaf_count[2] = 1
        self.depth[2] = 1
        self._fc[1] = 2
        self._lc[1] = 2
        self.n = 2

    def advance(self, n_to: int) -> None:
        if n_to > self.capacity:
            raise ValueError(f"cannot grow past capacity {self.capacity}")
        if n_to < self.n:
            raise ValueError("cannot shrink")
        steps = n_to - self.n
        if steps == 0:
            return
        buf = self.rng.raw_block(steps * self.model.draws_per_step)
        kind = _KIND_CODES[self.model.kind]
        p = self.model.redirect_prob if self.model.redirect_prob is not None else 0.0
        self.n, _ = _kernels.grow_kernel(
            kind, self.model.walk_length, p,
            self.parent, self.degree, self.leaf_count, self.depth,
            self._fc, self._ns, self._lc,
            self.n, n_to, buf, 0,
        )

    def view(self) -> _ArrayView:
        return _ArrayView(self.n, self.degree, self.leaf_count)

    def snapshot(self, stats: frozenset, cap: int) -> _stats.StatSnapshot:
        return _stats.snapshot_from_arrays(
            self.parent, self.degree, self.leaf_count, self.depth, self.n,
            stats=stats, cap=cap,
        )

    def freeze(self) -> FrozenTree:
        n = self.n
        copy = n < self.capacity
        def take(a):
            out = a[: n + 1].copy() if copy else a[: n + 1]
            out.flags.writeable = False
            return out
        return FrozenTree(n=n, parent=take(self.parent), degree=take(self.degree),
                          leaf_count=take(self.leaf_count), depth=take(self.depth))


def grow(model: ModelSpec, n_target: int, rng: RngStream,
         snapshots: Sequence[int] | None = None,
         observers: Iterable[Observer] = (),
         stats: frozenset = _stats.DEFAULT_STATS,
         cap: int = _stats.DEGREE_CAP,
         use_kernel: bool = True) -> GrowResult:
    """Grow one tree to n_target, emitting a StatSnapshot at each scheduled n.

    Deterministic given (model, n_target, rng): rerunning with an equal
    stream yields an identical tree and identical snapshots.
    """
    if n_target < 2:
        raise ValueError("n_target must be at least 2")
    sched = normalize_schedule(snapshots, n_target)
    observers = list(observers)
    out: list[_stats.StatSnapshot] = []

    if use_kernel:
        run = KernelRun(model, n_target, rng)
        for s in sched:
            run.advance(s)
            out.append(run.snapshot(stats, cap))
            view = run.view()
            for ob in observers:
                ob.observe(view)
        return GrowResult(snapshots=out, tree=run.freeze())

    tree = seed_tree()
    it = iter(sched)
    nxt = next(it)
    while True:
        if tree.n == nxt:
            frozen = tree.freeze()
            out.append(_stats.snapshot_from_tree(frozen, stats=stats, cap=cap))
            for ob in observers:
                ob.observe(tree)
            nxt = next(it, None)
            if nxt is None:
                return GrowResult(snapshots=out, tree=frozen)
        tree.attach(model_step(tree, rng, model))
