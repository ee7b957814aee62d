"""Asymptotic-behaviour estimators: trajectories, exponent fits, survival,
hubs, and normalized edge degrees.

The limit objects themselves (normalized-degree limits, almost-sure
exponents) are not observable at finite n; everything here is an explicitly
finite-n proxy. Normalized degree D_n(v)/n at the final snapshot stands in
for its limit, hub statements are threshold counts, and exponents are
log-log regression slopes over a snapshot schedule.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import FitError, LabelError
from .models import KernelRun, ModelSpec, TreeView
from .rng import RngStream
from .tree import FrozenTree, GrowthTree

logger = logging.getLogger(__name__)


# -- vertex trajectories -------------------------------------------------------


@dataclass
class Trajectory:
    """Samples of (n, degree, leaf-neighbour count) for one tracked vertex."""

    vertex: int
    samples: list[tuple[int, int, int]] = field(default_factory=list)

    def normalized_degrees(self) -> list[tuple[int, float]]:
        return [(n, d / n) for n, d, _ in self.samples]

    def max_oscillation_last_decade(self) -> float:
        """Spread of D/n over the samples in the last decade of n (a
        path-stability diagnostic; convergence is reported, never asserted)."""
        if not self.samples:
            return math.nan
        n_final = self.samples[-1][0]
        vals = [d / n for n, d, _ in self.samples if n >= n_final / 10]
        return max(vals) - min(vals)


class TrajectoryTracker:
    """Observer recording (n, D_n(v), L_n(v)) for chosen vertices at snapshots.

    Labels must exist by the first snapshot; pass ``must_exist_by`` to have
    that rejected at registration time, otherwise the first observation
    enforces it.
    """

    def __init__(self, vertices: Sequence[int], must_exist_by: int | None = None):
        seen = []
        for v in vertices:
            if not (isinstance(v, int) and v >= 1):
                raise LabelError(f"tracked vertex {v!r} is not a positive label")
            if must_exist_by is not None and v > must_exist_by:
                raise LabelError(
                    f"tracked vertex {v} does not exist by the first snapshot (n={must_exist_by})"
                )
            seen.append(v)
        self.trajectories = {v: Trajectory(vertex=v) for v in seen}

    def observe(self, view: TreeView) -> None:
        n = view.n
        for v, traj in self.trajectories.items():
            if v > n:
                raise LabelError(f"tracked vertex {v} does not exist at snapshot n={n}")
            traj.samples.append((n, view.degree(v), view.leaf_count(v)))

    def __iter__(self):
        return iter(self.trajectories.values())


# -- exponent fits ---------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_range: tuple[int, int]


def exponent_fit(series: Sequence[tuple[int, float]]) -> FitResult:
    """Least-squares slope of log(count) against log(n).

    Rejects non-positive counts (log undefined) and fewer than 3 points.
    """
    if len(series) < 3:
        raise FitError(f"exponent fit needs at least 3 points, got {len(series)}")
    ns = np.array([s[0] for s in series], dtype=np.float64)
    cs = np.array([s[1] for s in series], dtype=np.float64)
    if np.any(cs <= 0):
        raise FitError("exponent fit needs strictly positive counts")
    if np.any(ns <= 0):
        raise FitError("exponent fit needs strictly positive n")
    x = np.log(ns)
    y = np.log(cs)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FitResult(slope=float(slope), intercept=float(intercept), r_squared=r2,
                     n_range=(int(ns.min()), int(ns.max())))


def exponent_fit_replicas(series_by_replica: Sequence[Sequence[tuple[int, float]]]
                          ) -> tuple[FitResult, list[FitResult]]:
    """Average log-counts across replicas before the regression (variance
    reduction); per-replica fits are returned alongside."""
    if not series_by_replica:
        raise FitError("no replicas to fit")
    per = [exponent_fit(s) for s in series_by_replica]
    ns = [n for n, _ in series_by_replica[0]]
    for s in series_by_replica[1:]:
        if [n for n, _ in s] != ns:
            raise FitError("replicas must share the same snapshot schedule")
    mean_logs = np.mean(
        [[math.log(c) for _, c in s] for s in series_by_replica], axis=0
    )
    pooled = [(n, math.exp(v)) for n, v in zip(ns, mean_logs)]
    return exponent_fit(pooled), per


# -- eternal-degree survival -------------------------------------------------------


def survival_estimate(model: ModelSpec, k: int, n0: int, n1: int,
                      replicas: int, rng: RngStream) -> float:
    """Fraction of degree-k vertices at size n0 whose degree is unchanged at n1,
    averaged over replicas: an empirical lower-bound proxy for the eternal
    degree-k probability.

    Replicas draw sequentially from ``rng``. A replica with no degree-k
    vertex at n0 has no defined sample; it is excluded with a warning.
    """
    if not 2 <= n0 <= n1:
        raise ValueError("need 2 <= n0 <= n1")
    if k < 1:
        raise ValueError("k must be >= 1")
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    fractions = []
    for rep in range(replicas):
        run = KernelRun(model, n1, rng)
        run.advance(n0)
        marked = np.flatnonzero(run.degree[1 : n0 + 1] == k) + 1
        if marked.shape[0] == 0:
            logger.warning("survival replica %d: no degree-%d vertices at n0=%d; excluded",
                           rep, k, n0)
            continue
        run.advance(n1)
        survived = run.degree[marked] == k
        fractions.append(float(survived.mean()))
    if not fractions:
        raise ValueError(f"no replica had a degree-{k} vertex at n0={n0}")
    return float(np.mean(fractions))


# -- hubs and edge degrees -----------------------------------------------------------


def hub_count(tree, threshold: float) -> int:
    """#{v : D_n(v)/n > threshold} — the finite-n hub proxy."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    t = tree.freeze() if isinstance(tree, GrowthTree) else tree
    return int((t.degree[1 : t.n + 1] > threshold * t.n).sum())


def hub_count_from_histogram(histogram: dict[int, int], n: int, threshold: float) -> int:
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    return sum(c for k, c in histogram.items() if k > threshold * n)


def sum_top_normalized_degrees(histogram: dict[int, int], n: int, top: int = 100) -> float:
    """Sum of the ``top`` largest D/n values, from an exact degree histogram.

    Reported as evidence on whether the normalized degrees sum to one in the
    limit; never asserted.
    """
    total = 0
    left = top
    for k in sorted(histogram, reverse=True):
        take = min(left, histogram[k])
        total += take * k
        left -= take
        if left == 0:
            break
    return total / n


@dataclass
class EdgeDegreeStats:
    """Per-edge normalized degree (deg(u)+deg(v))/n: minimum plus a histogram."""

    minimum: float
    histogram: np.ndarray
    bin_edges: np.ndarray


def edge_degree_minima(tree, bins: int = 40) -> EdgeDegreeStats:
    """Minimum and distribution of (deg(u)+deg(v))/n over all edges."""
    t = tree.freeze() if isinstance(tree, GrowthTree) else tree
    vals = _edge_normalized_degrees(t, 2)
    hist, edges = np.histogram(vals, bins=bins, range=(0.0, 2.0))
    return EdgeDegreeStats(minimum=float(vals.min()), histogram=hist, bin_edges=edges)


def early_edge_normalized_degrees(tree, created_before: int = 100) -> np.ndarray:
    """Normalized degrees of the edges created while n < created_before."""
    t = tree.freeze() if isinstance(tree, GrowthTree) else tree
    hi = min(created_before, t.n)
    return _edge_normalized_degrees(t, 2, hi + 1)


def _edge_normalized_degrees(t: FrozenTree, lo: int, hi: int | None = None) -> np.ndarray:
    hi = t.n + 1 if hi is None else hi
    ch = np.arange(lo, hi)
    return (t.degree[ch] + t.degree[t.parent[ch]]) / t.n
