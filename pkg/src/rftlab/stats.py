"""Exact per-snapshot statistics and the deterministic inequality suite.

Everything here is a pure function of a frozen tree. The conditional
drifts are computed in closed form from the attachment distribution

    pi(w) = P(next vertex attaches to w | tree) = (1/n) * sum_{u ~ w} 1/deg(u),

which turns the model's one-step expectations into deterministic per-tree
assertions: every inequality in :func:`check_exact_inequalities` must hold
on every friend tree, with zero violations, up to a 1e-9 float tolerance.
Census quantities are exact integers throughout.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import LabelError
from .rng import RngStream
from .tree import FrozenTree, GrowthTree

DEGREE_CAP = 64
CHECK_TOL = 1e-9

STAT_NAMES = frozenset(
    {"census", "refined", "drifts", "y", "diameter", "leaf_depth",
     "branchpoint", "edge_cover", "checks"}
)
DEFAULT_STATS = frozenset(
    {"census", "refined", "drifts", "y", "diameter", "leaf_depth",
     "branchpoint", "edge_cover"}
)


def _frozen(tree) -> FrozenTree:
    if isinstance(tree, GrowthTree):
        return tree.freeze()
    return tree


# -- attachment distribution and drifts -------------------------------------


def attach_distribution(tree) -> np.ndarray:
    """pi indexed by label (slot 0 is 0); sums to 1 within 1e-9."""
    t = _frozen(tree)
    return _pi(t.parent, t.degree, t.n)


def _pi(parent, degree, n) -> np.ndarray:
    inv = np.zeros(n + 1, dtype=np.float64)
    inv[1:] = 1.0 / degree[1 : n + 1]
    pi = np.zeros(n + 1, dtype=np.float64)
    ch = parent[2 : n + 1]
    pi[2 : n + 1] = inv[ch]          # parent's contribution to each child
    np.add.at(pi, ch, inv[2 : n + 1])  # children's contributions to parents
    pi /= n
    return pi


def _neighbour_sums(parent, values, n) -> np.ndarray:
    """out[v] = sum of values[u] over neighbours u of v."""
    out = np.zeros(n + 1, dtype=np.float64)
    ch = parent[2 : n + 1]
    out[2 : n + 1] = values[ch]
    np.add.at(out, ch, values[2 : n + 1])
    return out


def drift_X_geq(tree, k: int) -> float:
    """E[increase of #{v: deg >= k} in one step | tree], exact: the count rises
    precisely when the attachment target has degree k-1."""
    if k < 2:
        raise ValueError("drift is defined for k >= 2")
    t = _frozen(tree)
    pi = _pi(t.parent, t.degree, t.n)
    mask = t.degree[1 : t.n + 1] == k - 1
    return float(pi[1 : t.n + 1][mask].sum())


def drift_vector(tree, cap: int = DEGREE_CAP) -> np.ndarray:
    """drift[k] for k = 2..cap+1 (index by k; slots 0,1 are zero)."""
    t = _frozen(tree)
    pi = _pi(t.parent, t.degree, t.n)
    w = np.bincount(t.degree[1 : t.n + 1], weights=pi[1 : t.n + 1], minlength=cap + 1)
    out = np.zeros(cap + 2, dtype=np.float64)
    out[2:] = w[1 : cap + 1]  # target of degree k-1 creates a degree-k vertex
    return out


# -- censuses ----------------------------------------------------------------


def degree_histogram(tree) -> dict[int, int]:
    t = _frozen(tree)
    hist = np.bincount(t.degree[1 : t.n + 1])
    return {k: int(c) for k, c in enumerate(hist) if k >= 1 and c > 0}


def count_at_least(tree, k: int) -> int:
    """#{v: deg(v) >= k}."""
    t = _frozen(tree)
    return int((t.degree[1 : t.n + 1] >= k).sum())


def _higher_degree_neighbour_counts(parent, degree, n) -> np.ndarray:
    """out[v] = #{u ~ v : deg(u) > deg(v)}."""
    out = np.zeros(n + 1, dtype=np.int64)
    ch = np.arange(2, n + 1)
    pa = parent[ch]
    cd = degree[ch]
    pd = degree[pa]
    out[ch] += (pd > cd).astype(np.int64)
    np.add.at(out, pa[cd > pd], 1)
    return out


def refined_census(tree, k: int) -> tuple[int, int]:
    """Degree-k vertices split by #neighbours of degree >= k+1: (at most one, at least two)."""
    if k < 1:
        raise ValueError("refined census is defined for k >= 1")
    t = _frozen(tree)
    higher = _higher_degree_neighbour_counts(t.parent, t.degree, t.n)
    at_k = t.degree[1 : t.n + 1] == k
    h = higher[1 : t.n + 1][at_k]
    le = int((h <= 1).sum())
    return le, int(at_k.sum()) - le


# -- neighbour-degree functionals -------------------------------------------


def expected_Y(tree) -> float:
    """Y = E[deg of the attachment target | tree] = (1/n) sum_i (1/deg_i) sum_{j~i} deg_j."""
    t = _frozen(tree)
    s = _neighbour_sums(t.parent, t.degree.astype(np.float64), t.n)
    return float((s[1 : t.n + 1] / t.degree[1 : t.n + 1]).mean())


def expected_leaf_counts(tree) -> np.ndarray:
    """E[leaf-neighbour count of each vertex after one more step | tree].

    A vertex v gains a leaf neighbour when the new vertex attaches to v
    (probability pi(v)) and loses one when the sampled start vertex is v and
    the walk lands on one of its leaf neighbours (probability L(v)/(n deg(v))).
    """
    t = _frozen(tree)
    n = t.n
    pi = _pi(t.parent, t.degree, n)
    out = np.zeros(n + 1, dtype=np.float64)
    lv = t.leaf_count[1 : n + 1].astype(np.float64)
    out[1:] = lv - lv / (n * t.degree[1 : n + 1]) + pi[1 : n + 1]
    return out


def expected_next_scaled_Y(tree) -> float:
    """E[(n+1) * Y_{n+1} | tree], exact, by summing over every candidate target.

    Attaching to w changes three row groups of the double sum
    sum_i sum_{j~i} deg(j)/deg(i): the w row, the new-vertex row, and each
    row of a neighbour of w. Collecting the increments gives a closed form
    per candidate, weighted by pi.
    """
    t = _frozen(tree)
    n = t.n
    deg = t.degree[1 : n + 1].astype(np.float64)
    s = _neighbour_sums(t.parent, t.degree.astype(np.float64), n)[1 : n + 1]
    inv_s = _neighbour_sums(t.parent, 1.0 / t.degree.clip(min=1).astype(np.float64), n)[1 : n + 1]
    pi = _pi(t.parent, t.degree, n)[1 : n + 1]
    base = float((s / deg).sum())  # = n * Y_n
    term = 1.0 / (deg + 1.0) - s * (1.0 / deg - 1.0 / (deg + 1.0)) + deg + 1.0 + inv_s
    return base + float((pi * term).sum())


# -- distances ---------------------------------------------------------------


def _children_csr(t: FrozenTree):
    return t.children_csr()


def diameter(tree) -> int:
    """Exact diameter via two sweeps: farthest vertex from the root is one end
    of a diametral path; a second sweep from it reaches the other end."""
    t = _frozen(tree)
    offsets, order = _children_csr(t)
    a = int(np.argmax(t.depth[1 : t.n + 1])) + 1
    dist = _kernels.bfs_distances(offsets, order, t.parent, t.n, a)
    return int(dist[1 : t.n + 1].max())


def leaf_depth(tree) -> int:
    """Largest distance of any vertex to its nearest leaf."""
    t = _frozen(tree)
    offsets, order = _children_csr(t)
    sources = np.flatnonzero(t.degree[1 : t.n + 1] == 1).astype(np.int64) + 1
    dist = _kernels.multi_source_bfs(offsets, order, t.parent, t.n, sources)
    return int(dist[1 : t.n + 1].max())


def branchpoint_depth(tree) -> int | None:
    """Largest distance from a leaf to the nearest degree->=3 vertex, or None
    when the tree is a path (no branch point exists)."""
    t = _frozen(tree)
    deg = t.degree[1 : t.n + 1]
    sources = np.flatnonzero(deg >= 3).astype(np.int64) + 1
    if sources.shape[0] == 0:
        return None
    offsets, order = _children_csr(t)
    dist = _kernels.multi_source_bfs(offsets, order, t.parent, t.n, sources)
    leaves = np.flatnonzero(deg == 1) + 1
    return int(dist[leaves].max())


def min_edge_cover(tree) -> int:
    """Minimum number of vertices touching every edge (exact, rooted DP)."""
    t = _frozen(tree)
    return int(_kernels.min_edge_cover_dp(t.parent, t.n))


def youngest_subtree_size(tree, v: int) -> int:
    """Size of the subtree hanging below v's largest-labelled neighbour.

    The largest-labelled neighbour is always a child; a vertex with no
    children (no neighbour of larger label) is rejected.
    """
    t = _frozen(tree)
    t._check(v)
    offsets, order = _children_csr(t)
    lo, hi = int(offsets[v]), int(offsets[v + 1])
    if hi == lo:
        raise LabelError(f"vertex {v} has no neighbour with a larger label")
    w = int(order[hi - 1])  # arrival order: last child has the largest label
    sizes = _kernels.subtree_sizes(t.parent, t.n)
    return int(sizes[w])


def typical_distance_sample(tree, rng: RngStream, m: int) -> tuple[Counter, Counter]:
    """Histograms of d(U,V) over m independent uniform ordered pairs and of
    d(1,U) over the same U samples. Consumes exactly 2m draws."""
    if m < 1:
        raise ValueError("need at least one sample pair")
    t = _frozen(tree)
    raws = rng.raw_block(2 * m)
    us = (1 + raws[0::2] % np.uint64(t.n)).astype(np.int64)
    vs = (1 + raws[1::2] % np.uint64(t.n)).astype(np.int64)
    d_uv = _kernels.distance_pairs(t.parent, t.depth, us, vs)
    ones = np.ones(m, dtype=np.int64)
    d_1u = _kernels.distance_pairs(t.parent, t.depth, ones, us)
    pair_hist = Counter({int(k): int(c) for k, c in zip(*np.unique(d_uv, return_counts=True))})
    root_hist = Counter({int(k): int(c) for k, c in zip(*np.unique(d_1u, return_counts=True))})
    return pair_hist, root_hist


# -- snapshots ---------------------------------------------------------------


@dataclass
class CheckResult:
    """One evaluated inequality: lhs <op> rhs with a human-readable name."""

    name: str
    ok: bool
    lhs: float
    rhs: float
    k: int | None = None

    def __str__(self):
        tag = f"{self.name}[k={self.k}]" if self.k is not None else self.name
        status = "ok" if self.ok else "VIOLATED"
        return f"{tag}: {status} (lhs={self.lhs!r}, rhs={self.rhs!r})"


@dataclass
class StatSnapshot:
    """All statistics computed at one snapshot time.

    Array index conventions: ``x_geq[k]`` = #{deg >= k} for k = 0..cap+1;
    ``refined_le[k]`` / ``refined_gt[k]`` for k = 1..cap; ``drift_geq[k]``
    for k = 2..cap+1. Untoggled fields are None.
    """

    n: int
    cap: int
    leaf_fraction: float | None = None
    x1: int | None = None
    degree_histogram: dict[int, int] | None = None
    x_geq: np.ndarray | None = None
    refined_le: np.ndarray | None = None
    refined_gt: np.ndarray | None = None
    drift_geq: np.ndarray | None = None
    y_n: float | None = None
    diameter: int | None = None
    leaf_depth: int | None = None
    branchpoint_depth: int | None = None
    min_edge_cover: int | None = None
    checks: list[CheckResult] | None = field(default=None, repr=False)

    def csv_row(self) -> list[str]:
        cells = [
            str(self.n),
            _cell(self.leaf_fraction),
            _cell(self.x1),
            _cell(self.y_n),
            _cell(self.diameter),
            _cell(self.leaf_depth),
            _cell(self.branchpoint_depth),
            _cell(self.min_edge_cover),
            _hist_cell(self.degree_histogram),
        ]
        cells += _vector_cells(self.x_geq, 2, self.cap)
        cells += _vector_cells(self.refined_le, 1, self.cap)
        cells += _vector_cells(self.refined_gt, 1, self.cap)
        cells += _vector_cells(self.drift_geq, 2, self.cap)
        return cells


CSV_SCHEMA_VERSION = 1


def csv_header(cap: int = DEGREE_CAP) -> list[str]:
    head = ["n", "leaf_fraction", "x1", "y_n", "diameter", "leaf_depth",
            "branchpoint_depth", "min_edge_cover", "degree_histogram"]
    head += [f"x_geq_{k}" for k in range(2, cap + 1)]
    head += [f"refined_le_{k}" for k in range(1, cap + 1)]
    head += [f"refined_gt_{k}" for k in range(1, cap + 1)]
    head += [f"drift_geq_{k}" for k in range(2, cap + 1)]
    return head


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _hist_cell(hist: dict[int, int] | None) -> str:
    if hist is None:
        return ""
    return ";".join(f"{k}:{hist[k]}" for k in sorted(hist))


def _vector_cells(vec, lo: int, cap: int) -> list[str]:
    if vec is None:
        return [""] * (cap - lo + 1)
    out = []
    for k in range(lo, cap + 1):
        v = vec[k] if k < vec.shape[0] else 0
        out.append(repr(float(v)) if np.issubdtype(vec.dtype, np.floating) else str(int(v)))
    return out


def snapshot_from_arrays(parent, degree, leaf_count, depth, n: int,
                         stats: frozenset = DEFAULT_STATS,
                         cap: int = DEGREE_CAP) -> StatSnapshot:
    """Compute a snapshot from live growth arrays (views are fine; nothing is retained)."""
    unknown = stats - STAT_NAMES
    if unknown:
        raise ValueError(f"unknown statistics toggles: {sorted(unknown)}")
    snap = StatSnapshot(n=n, cap=cap)
    deg = degree[1 : n + 1]

    if "census" in stats:
        hist = np.bincount(deg)
        snap.degree_histogram = {k: int(c) for k, c in enumerate(hist) if k >= 1 and c > 0}
        snap.x1 = int(hist[1]) if hist.shape[0] > 1 else 0
        snap.leaf_fraction = snap.x1 / n
        suffix = np.zeros(hist.shape[0] + 1, dtype=np.int64)
        suffix[:-1] = hist[::-1].cumsum()[::-1]
        x_geq = np.zeros(cap + 2, dtype=np.int64)
        top = min(cap + 2, suffix.shape[0])
        x_geq[:top] = suffix[:top]
        snap.x_geq = x_geq

    needs_tree = stats & {"refined", "drifts", "y", "diameter", "leaf_depth",
                          "branchpoint", "edge_cover", "checks"}
    if not needs_tree:
        return snap

    view = FrozenTree(
        n=n,
        parent=parent[: n + 1],
        degree=degree[: n + 1],
        leaf_count=leaf_count[: n + 1],
        depth=depth[: n + 1],
    )
    if "refined" in stats:
        higher = _higher_degree_neighbour_counts(view.parent, view.degree, n)
        h = higher[1 : n + 1]
        le_hist = np.bincount(deg[h <= 1], minlength=cap + 1)
        gt_hist = np.bincount(deg[h >= 2], minlength=cap + 1)
        snap.refined_le = le_hist[: cap + 1].astype(np.int64)
        snap.refined_gt = gt_hist[: cap + 1].astype(np.int64)
    if "drifts" in stats:
        snap.drift_geq = drift_vector(view, cap)
    if "y" in stats:
        snap.y_n = expected_Y(view)
    if "diameter" in stats:
        snap.diameter = diameter(view)
    if "leaf_depth" in stats:
        snap.leaf_depth = leaf_depth(view)
    if "branchpoint" in stats:
        snap.branchpoint_depth = branchpoint_depth(view)
    if "edge_cover" in stats:
        snap.min_edge_cover = min_edge_cover(view)
    if "checks" in stats:
        snap.checks = check_exact_inequalities(view, cap=cap)
    return snap


def snapshot_from_tree(tree, stats: frozenset = DEFAULT_STATS,
                       cap: int = DEGREE_CAP) -> StatSnapshot:
    t = _frozen(tree)
    return snapshot_from_arrays(t.parent, t.degree, t.leaf_count, t.depth, t.n,
                                stats=stats, cap=cap)


# -- the exact inequality suite ----------------------------------------------


def check_exact_inequalities(tree, cap: int = DEGREE_CAP,
                             tol: float = CHECK_TOL) -> list[CheckResult]:
    """Evaluate every deterministic drift/census inequality on one tree.

    Every check must pass on every friend tree; a failure signals an
    implementation bug (or a tree grown by a different model, for the
    drift bounds that are friend-specific).
    """
    t = _frozen(tree)
    n = t.n
    deg = t.degree[1 : n + 1]
    hist = np.bincount(deg, minlength=cap + 3)
    suffix = np.zeros(hist.shape[0] + 1, dtype=np.int64)
    suffix[:-1] = hist[::-1].cumsum()[::-1]

    def x_exact(k):
        return int(hist[k]) if k < hist.shape[0] else 0

    def x_geq(k):
        return int(suffix[k]) if k < suffix.shape[0] else 0

    pi = _pi(t.parent, t.degree, n)
    w = np.bincount(deg, weights=pi[1 : n + 1], minlength=cap + 3)

    def drift(k):  # E[delta #{deg >= k}]
        return float(w[k - 1]) if k - 1 < w.shape[0] else 0.0

    higher = _higher_degree_neighbour_counts(t.parent, t.degree, n)
    h = higher[1 : n + 1]
    le_hist = np.bincount(deg[h <= 1], minlength=cap + 2)
    gt_hist = np.bincount(deg[h >= 2], minlength=cap + 2)

    out: list[CheckResult] = []

    def add(name, ok, lhs, rhs, k=None):
        out.append(CheckResult(name=name, ok=bool(ok), lhs=float(lhs), rhs=float(rhs), k=k))

    pi_sum = float(pi.sum())
    add("attach_distribution_sums_to_one", abs(pi_sum - 1.0) <= tol, pi_sum, 1.0)
    add("census_total", int(hist.sum()) == n, int(hist.sum()), n)
    add("leaves_complement_nonleaves", x_exact(1) == n - x_geq(2), x_exact(1), n - x_geq(2))

    if n >= 3:
        lhs = drift(2)
        rhs = x_geq(3) / (3 * n)
        add("drift_geq2_at_least_third_of_geq3_rate", lhs >= rhs - tol, lhs, rhs)
    if n >= 4:
        lhs = drift(2)
        rhs = (x_geq(2) + x_geq(3)) / (2 * n)
        add("drift_geq2_upper", lhs <= rhs + tol, lhs, rhs)
    if n >= 5:
        lhs = drift(3)
        rhs = 4 * x_exact(2) / (3 * n)
        add("drift_geq3_upper", lhs <= rhs + tol, lhs, rhs)

    for k in range(1, cap + 1):
        le = int(le_hist[k])
        gt = int(gt_hist[k])
        if n >= 3:
            add("census_split", x_exact(k) == le + gt, x_exact(k), le + gt, k=k)
            add("upgrade_headroom", x_geq(k + 1) >= gt, x_geq(k + 1), gt, k=k)
        if k >= 2 and n >= 3:
            lhs = drift(k + 1)
            rhs = (k - 1) / (k * n) * le
            add("drift_lower_refined", lhs >= rhs - tol, lhs, rhs, k=k)
        if n >= k + 2:
            lhs = drift(k + 1)
            rhs = (k - 0.5) / n * x_exact(k)
            add("drift_upper_census", lhs <= rhs + tol, lhs, rhs, k=k)

    ec = min_edge_cover(t)
    add("edge_cover_at_least_half_nonleaves", ec >= x_geq(2) / 2, ec, x_geq(2) / 2)
    return out


def check_leaf_submartingale(tree, tol: float = CHECK_TOL) -> list[CheckResult]:
    """(E[L_{n+1}(v)] - 1)/(n+1) >= (L_n(v) - 1)/n for every vertex, exactly."""
    t = _frozen(tree)
    n = t.n
    exp_l = expected_leaf_counts(t)[1 : n + 1]
    lhs = (exp_l - 1.0) / (n + 1)
    rhs = (t.leaf_count[1 : n + 1] - 1.0) / n
    margin = lhs - rhs
    worst = int(np.argmin(margin))
    out = [CheckResult("leaf_count_submartingale", float(margin[worst]) >= -tol,
                       float(lhs[worst]), float(rhs[worst]), k=worst + 1)]
    return out


def check_y_supermartingale(tree, tol: float = CHECK_TOL) -> list[CheckResult]:
    """E[(n+1) Y_{n+1} | tree] <= (n+2) Y_n + 1, exactly."""
    t = _frozen(tree)
    lhs = expected_next_scaled_Y(t)
    rhs = (t.n + 2) * expected_Y(t) + 1.0
    return [CheckResult("y_supermartingale_step", lhs <= rhs + tol, lhs, rhs)]


def verify_tree(tree, cap: int = DEGREE_CAP,
                martingale_n_limit: int = 1000,
                y_n_limit: int = 500) -> list[CheckResult]:
    """The full exact-invariant suite for one tree: structure, inequalities,
    and (on small enough trees) the per-vertex martingale steps."""
    t = _frozen(tree)
    t.validate()
    results = check_exact_inequalities(t, cap=cap)
    if t.n <= martingale_n_limit:
        results += check_leaf_submartingale(t)
    if t.n <= y_n_limit:
        results += check_y_supermartingale(t)
    return results


def violations(results: Iterable[CheckResult]) -> list[CheckResult]:
    return [r for r in results if not r.ok]
