"""Experiment orchestration: plans, replica scheduling, persistence.

Plan files are flat ``key = value`` text (no nesting). Schema:

    model     friend | urrt | pa | redirect
    k         walk length (friend only, default 1)
    p         redirect probability (redirect only)
    n_target  final tree size (>= 2)
    schedule  geometric | explicit          (default geometric)
    n0        first geometric snapshot      (default 128)
    ratio     geometric ratio > 1           (default 2)
    snapshots comma-separated n values      (explicit schedule only)
    replicas  number of independent runs    (default 1)
    seed      master seed                   (default 0)
    track     comma-separated vertex labels (optional)
    stats     comma-separated toggles       (default: all statistics + checks)
    cap       degree cap for census/drift arrays (default 64)
    workers   worker threads                (default 1)
    out       output directory

Each replica owns RngStream(seed, replica_index) and its own tree, so runs
are reproducible byte-for-byte regardless of worker count: workers race
only on who computes first, results are merged in replica order.

Outputs: one ``snapshots_r<idx>.csv`` per replica, ``result.json`` with
aggregates (means, standard errors, fits, invariant tallies) and
``manifest.json`` echoing the plan.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from . import __version__ as _pkg_version
from . import stats as _stats
from .errors import InvariantViolation, ModelError, PlanError
from .estimators import (TrajectoryTracker, exponent_fit_replicas,
                         edge_degree_minima, hub_count_from_histogram,
                         sum_top_normalized_degrees)
from .models import ModelSpec, geometric_schedule, grow, normalize_schedule
from .rng import RngStream

HUB_PROXY_THRESHOLD = 0.001
ALL_TOGGLES = _stats.DEFAULT_STATS | {"checks"}


@dataclass
class ExperimentPlan:
    model: ModelSpec
    n_target: int
    replicas: int = 1
    master_seed: int = 0
    schedule: str = "geometric"
    n0: int = 128
    ratio: float = 2.0
    snapshots: tuple[int, ...] = ()
    tracked_vertices: tuple[int, ...] = ()
    stats: frozenset = ALL_TOGGLES
    cap: int = _stats.DEGREE_CAP
    workers: int = 1
    out_dir: str = "results"

    def __post_init__(self):
        if self.n_target < 2:
            raise PlanError("n_target must be at least 2")
        if self.replicas < 1:
            raise PlanError("replicas must be at least 1")
        if self.schedule not in ("geometric", "explicit"):
            raise PlanError(f"unknown schedule kind {self.schedule!r}")
        if self.schedule == "geometric":
            if self.n0 < 2:
                raise PlanError("n0 must be at least 2")
            if self.ratio <= 1:
                raise PlanError("ratio must exceed 1")
        elif not self.snapshots:
            raise PlanError("explicit schedule needs a snapshots list")
        unknown = self.stats - ALL_TOGGLES
        if unknown:
            raise PlanError(f"unknown stats toggles: {sorted(unknown)}")
        if self.workers < 1:
            raise PlanError("workers must be at least 1")

    def snapshot_times(self) -> list[int]:
        if self.schedule == "geometric":
            return geometric_schedule(self.n0, self.ratio, self.n_target)
        return normalize_schedule(self.snapshots, self.n_target)

    # -- flat key=value persistence ------------------------------------------

    def to_text(self) -> str:
        lines = [f"model = {self.model.kind}"]
        if self.model.kind == "friend":
            lines.append(f"k = {self.model.walk_length}")
        if self.model.kind == "redirect":
            lines.append(f"p = {self.model.redirect_prob!r}")
        lines.append(f"n_target = {self.n_target}")
        lines.append(f"schedule = {self.schedule}")
        if self.schedule == "geometric":
            lines.append(f"n0 = {self.n0}")
            lines.append(f"ratio = {self.ratio!r}")
        else:
            lines.append("snapshots = " + ",".join(str(s) for s in self.snapshots))
        lines.append(f"replicas = {self.replicas}")
        lines.append(f"seed = {self.master_seed}")
        if self.tracked_vertices:
            lines.append("track = " + ",".join(str(v) for v in self.tracked_vertices))
        lines.append("stats = " + ",".join(sorted(self.stats)))
        lines.append(f"cap = {self.cap}")
        lines.append(f"workers = {self.workers}")
        lines.append(f"out = {self.out_dir}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_text())

    @classmethod
    def from_text(cls, text: str, source: str = "<plan>") -> "ExperimentPlan":
        values: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise PlanError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key in values:
                raise PlanError(f"{source}:{lineno}: duplicate key {key!r}")
            values[key] = value
        return cls._from_values(values, source)

    @classmethod
    def load(cls, path) -> "ExperimentPlan":
        with open(path) as f:
            return cls.from_text(f.read(), source=str(path))

    @classmethod
    def _from_values(cls, values: dict[str, str], source: str) -> "ExperimentPlan":
        known = {"model", "k", "p", "n_target", "schedule", "n0", "ratio", "snapshots",
                 "replicas", "seed", "track", "stats", "cap", "workers", "out"}
        unknown = set(values) - known
        if unknown:
            raise PlanError(f"{source}: unknown keys {sorted(unknown)}")

        def get_int(key, default=None):
            if key not in values:
                if default is None:
                    raise PlanError(f"{source}: missing required key {key!r}")
                return default
            try:
                return int(values[key])
            except ValueError:
                raise PlanError(f"{source}: field {key!r} must be an integer, got {values[key]!r}")

        def get_float(key, default=None):
            if key not in values:
                return default
            try:
                return float(values[key])
            except ValueError:
                raise PlanError(f"{source}: field {key!r} must be a number, got {values[key]!r}")

        def get_ints(key):
            if key not in values or not values[key]:
                return ()
            try:
                return tuple(int(x) for x in values[key].split(","))
            except ValueError:
                raise PlanError(f"{source}: field {key!r} must be comma-separated integers")

        kind = values.get("model")
        if kind is None:
            raise PlanError(f"{source}: missing required key 'model'")
        try:
            if kind == "friend":
                model = ModelSpec.friend(get_int("k", 1))
            elif kind == "redirect":
                p = get_float("p")
                if p is None:
                    raise PlanError(f"{source}: redirect model needs key 'p'")
                model = ModelSpec.redirect(p)
            else:
                model = ModelSpec(kind=kind)
        except ModelError as e:
            raise PlanError(f"{source}: bad model spec: {e}")

        stats_value = values.get("stats", "")
        toggles = (frozenset(s.strip() for s in stats_value.split(",") if s.strip())
                   if stats_value else ALL_TOGGLES)
        try:
            return cls(
                model=model,
                n_target=get_int("n_target"),
                replicas=get_int("replicas", 1),
                master_seed=get_int("seed", 0),
                schedule=values.get("schedule", "geometric"),
                n0=get_int("n0", 128),
                ratio=get_float("ratio", 2.0),
                snapshots=get_ints("snapshots"),
                tracked_vertices=get_ints("track"),
                stats=toggles,
                cap=get_int("cap", _stats.DEGREE_CAP),
                workers=get_int("workers", 1),
                out_dir=values.get("out", "results"),
            )
        except PlanError as e:
            msg = str(e)
            raise PlanError(msg if msg.startswith(source) else f"{source}: {msg}") from None


@dataclass
class ExperimentResult:
    plan: ExperimentPlan
    csv_paths: list[str]
    json_path: str
    manifest_path: str
    aggregate: dict
    invariant_tally: dict


@dataclass
class _ReplicaOutput:
    index: int
    rows: list[list[str]]
    snapshots: list
    trajectories: dict
    edge_degree_min: float
    early_edge_quantiles: list[float]


def _run_replica(plan: ExperimentPlan, index: int, sched: list[int]) -> _ReplicaOutput:
    rng = RngStream(plan.master_seed, index)
    observers = []
    tracker = None
    if plan.tracked_vertices:
        tracker = TrajectoryTracker(plan.tracked_vertices, must_exist_by=sched[0])
        observers.append(tracker)
    result = grow(plan.model, plan.n_target, rng, snapshots=sched,
                  observers=observers, stats=plan.stats, cap=plan.cap)
    for snap in result.snapshots:
        if snap.checks is not None:
            bad = _stats.violations(snap.checks)
            if bad:
                dump = os.path.join(plan.out_dir, f"violation_r{index:03d}_n{snap.n}.txt")
                os.makedirs(plan.out_dir, exist_ok=True)
                result.tree.save(dump)
                raise InvariantViolation(
                    f"replica {index} snapshot n={snap.n}: {bad[0]} (tree dumped to {dump})"
                )
    rows = [snap.csv_row() for snap in result.snapshots]
    trajectories = {}
    if tracker is not None:
        trajectories = {v: t.samples for v, t in tracker.trajectories.items()}
    eds = edge_degree_minima(result.tree)
    early = early_quantiles(result.tree)
    return _ReplicaOutput(index=index, rows=rows, snapshots=result.snapshots,
                          trajectories=trajectories, edge_degree_min=eds.minimum,
                          early_edge_quantiles=early)


def early_quantiles(tree) -> list[float]:
    from .estimators import early_edge_normalized_degrees

    vals = early_edge_normalized_degrees(tree, created_before=100)
    if vals.size == 0:
        return []
    qs = np.quantile(vals, [0.0, 0.25, 0.5, 0.75, 1.0])
    return [float(q) for q in qs]


def run(plan: ExperimentPlan, workers: int | None = None) -> ExperimentResult:
    """Execute a plan: replica-parallel growth, snapshot CSVs, aggregate JSON.

    Re-running an identical plan produces byte-identical CSV content for any
    worker count.
    """
    sched = plan.snapshot_times()
    nworkers = plan.workers if workers is None else workers
    indices = range(plan.replicas)
    if nworkers > 1:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            outputs = list(pool.map(lambda i: _run_replica(plan, i, sched), indices))
    else:
        outputs = [_run_replica(plan, i, sched) for i in indices]
    outputs.sort(key=lambda o: o.index)

    os.makedirs(plan.out_dir, exist_ok=True)
    header = _stats.csv_header(plan.cap)
    preamble = (f"# rftlab snapshot schema v{_stats.CSV_SCHEMA_VERSION} "
                f"cap={plan.cap} model={plan.model.describe()} seed={plan.master_seed}\n")
    csv_paths = []
    for out in outputs:
        path = os.path.join(plan.out_dir, f"snapshots_r{out.index:03d}.csv")
        with open(path, "w", encoding="ascii", newline="\n") as f:
            f.write(preamble)
            f.write(",".join(header) + "\n")
            for row in out.rows:
                f.write(",".join(row) + "\n")
        csv_paths.append(path)

    aggregate, tally = _aggregate(plan, sched, outputs)
    json_path = os.path.join(plan.out_dir, "result.json")
    with open(json_path, "w", encoding="ascii", newline="\n") as f:
        json.dump(aggregate, f, indent=2, sort_keys=True)
        f.write("\n")

    manifest = {
        "plan": plan.to_text(),
        "master_seed": plan.master_seed,
        "schedule": sched,
        "versions": {"rftlab": _pkg_version, "numpy": np.__version__},
    }
    manifest_path = os.path.join(plan.out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="ascii", newline="\n") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")

    return ExperimentResult(plan=plan, csv_paths=csv_paths, json_path=json_path,
                            manifest_path=manifest_path, aggregate=aggregate,
                            invariant_tally=tally)


def _mean_se(values: list[float]) -> dict:
    arr = np.array(values, dtype=np.float64)
    se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return {"mean": float(arr.mean()), "std_error": se, "replicas": len(arr)}


def _aggregate(plan: ExperimentPlan, sched: list[int],
               outputs: list[_ReplicaOutput]) -> tuple[dict, dict]:
    per_snapshot = []
    tally: dict[str, dict] = {}
    for j, n in enumerate(sched):
        snaps = [out.snapshots[j] for out in outputs]
        entry: dict = {"n": n}
        for name in ("leaf_fraction", "x1", "y_n", "diameter", "leaf_depth", "min_edge_cover"):
            vals = [getattr(s, name) for s in snaps]
            if all(v is not None for v in vals):
                entry[name] = _mean_se([float(v) for v in vals])
        bp = [s.branchpoint_depth for s in snaps]
        present = [float(v) for v in bp if v is not None]
        if present and "branchpoint" in plan.stats:
            entry["branchpoint_depth"] = _mean_se(present)
            entry["branchpoint_defined_replicas"] = len(present)
        if snaps[0].x_geq is not None:
            entry["x_geq"] = {
                str(k): _mean_se([float(s.x_geq[k]) for s in snaps])
                for k in range(2, min(plan.cap, snaps[0].x_geq.shape[0] - 1) + 1)
            }
            entry["hub_count_proxy"] = _mean_se([
                float(hub_count_from_histogram(s.degree_histogram, n, HUB_PROXY_THRESHOLD))
                for s in snaps
            ])
        if snaps[0].drift_geq is not None:
            entry["drift_geq"] = {
                str(k): _mean_se([float(s.drift_geq[k]) for s in snaps])
                for k in range(2, plan.cap + 1)
            }
        for s in snaps:
            if s.checks is None:
                continue
            for c in s.checks:
                slot = tally.setdefault(c.name, {"evaluated": 0, "violations": 0})
                slot["evaluated"] += 1
                slot["violations"] += 0 if c.ok else 1
        per_snapshot.append(entry)

    aggregate: dict = {
        "model": plan.model.describe(),
        "n_target": plan.n_target,
        "replicas": plan.replicas,
        "master_seed": plan.master_seed,
        "per_snapshot": per_snapshot,
        "invariant_tally": tally,
        "edge_degree_min": _mean_se([o.edge_degree_min for o in outputs]),
        "early_edge_quantiles": [o.early_edge_quantiles for o in outputs],
    }

    final = [out.snapshots[-1] for out in outputs]
    if final[0].degree_histogram is not None:
        aggregate["sum_top100_normalized_degree"] = _mean_se([
            sum_top_normalized_degrees(s.degree_histogram, plan.n_target) for s in final
        ])

    if final[0].x_geq is not None and len(sched) >= 3:
        series = [
            [(n, float(out.snapshots[j].x_geq[2])) for j, n in enumerate(sched)]
            for out in outputs
        ]
        if all(c > 0 for s in series for _, c in s):
            pooled, per = exponent_fit_replicas(series)
            aggregate["x_geq_2_exponent_fit"] = {
                "pooled": asdict(pooled),
                "per_replica": [asdict(f) for f in per],
            }

    if plan.tracked_vertices:
        aggregate["trajectories"] = {
            str(out.index): {str(v): s for v, s in out.trajectories.items()}
            for out in outputs
        }
    return aggregate, tally
