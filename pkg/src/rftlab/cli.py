"""Command-line surface.

Subcommands: grow | experiment | couple | oracle | fit | verify.
Exit codes: 0 success, 1 usage/parse error, 2 invariant violation, 3 I/O.
"""

from __future__ import annotations

import argparse
import sys

from . import coupling, estimators, harness, models, oracle, stats
from .errors import FitError, InvariantViolation, LabelError, ModelError, PlanError
from .rng import RngStream
from .tree import FrozenTree

USAGE_EXIT, VIOLATION_EXIT, IO_EXIT = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we reserve that
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _model_from_args(args) -> models.ModelSpec:
    if args.model == "friend":
        return models.ModelSpec.friend(args.k)
    if args.model == "redirect":
        if args.p is None:
            raise ModelError("redirect model needs --p")
        return models.ModelSpec.redirect(args.p)
    return models.ModelSpec(kind=args.model)


def _add_model_flags(p):
    p.add_argument("--model", default="friend", choices=["friend", "urrt", "pa", "redirect"])
    p.add_argument("--k", type=int, default=1, help="friend walk length")
    p.add_argument("--p", type=float, default=None, help="redirect probability")


def cmd_grow(args) -> int:
    model = _model_from_args(args)
    rng = RngStream(args.seed)
    result = models.grow(model, args.n, rng, stats=frozenset({"census"}))
    result.tree.save(args.out)
    print(f"grew {model.describe()} tree to n={args.n}, saved to {args.out}")
    return 0


def cmd_experiment(args) -> int:
    plan = harness.ExperimentPlan.load(args.plan)
    if args.out:
        plan.out_dir = args.out
    result = harness.run(plan)
    total_viol = sum(t["violations"] for t in result.invariant_tally.values())
    print(f"ran {plan.replicas} replica(s) to n={plan.n_target}; "
          f"outputs in {plan.out_dir}")
    for name, t in sorted(result.invariant_tally.items()):
        print(f"  check {name}: {t['evaluated']} evaluated, {t['violations']} violations")
    if total_viol:
        return VIOLATION_EXIT
    return 0


def cmd_couple(args) -> int:
    rng = RngStream(args.seed)
    pair = coupling.grow_coupled(args.n, rng)
    dist_report = coupling.verify_distance_bound(pair, args.pairs, rng)
    leaf_report = coupling.verify_leaf_proximity(pair)
    kind = "exhaustive" if dist_report.exhaustive else "sampled"
    print(f"coupled pair n={args.n}: distance bound ok over "
          f"{dist_report.pairs_checked} {kind} pairs (max ratio {dist_report.max_ratio:.3f}); "
          f"leaf proximity ok over {leaf_report.uniform_leaves} uniform-tree leaves "
          f"(max distance {leaf_report.max_distance})")
    if args.out:
        pair.save(args.out)
        print(f"pair saved to {args.out}")
    return 0


_ORACLE_STATS = {
    "diam": lambda t: stats.diameter(t),
    "x1": lambda t: sum(1 for v in range(1, t.n + 1) if t.degree(v) == 1),
    "x_geq_2": lambda t: sum(1 for v in range(1, t.n + 1) if t.degree(v) >= 2),
    "leaf_depth": lambda t: stats.leaf_depth(t),
    "y": lambda t: stats.expected_Y(t),
    "edge_cover": lambda t: stats.min_edge_cover(t),
}


def cmd_oracle(args) -> int:
    model = _model_from_args(args)
    if args.stat not in _ORACLE_STATS:
        raise ModelError(f"unknown statistic {args.stat!r}; choices: {sorted(_ORACLE_STATS)}")
    value = oracle.oracle_expectation(model, args.n, _ORACLE_STATS[args.stat])
    print(f"E[{args.stat}] under {model.describe()} at n={args.n}: {value}")
    if args.mc_replicas:
        rng = RngStream(args.seed)
        report = oracle.compare_to_monte_carlo(model, args.n, _ORACLE_STATS[args.stat],
                                               args.mc_replicas, rng)
        print(f"monte carlo: {report}")
    return 0


def cmd_fit(args) -> int:
    series_by_replica = []
    for path in args.csv:
        series = _read_series(path, args.column)
        series_by_replica.append(series)
    pooled, per = estimators.exponent_fit_replicas(series_by_replica)
    print(f"exponent fit of {args.column} over n in {pooled.n_range}: "
          f"slope={pooled.slope:.4f} r2={pooled.r_squared:.4f} "
          f"({len(per)} replica(s))")
    for i, f in enumerate(per):
        print(f"  replica {i}: slope={f.slope:.4f} r2={f.r_squared:.4f}")
    return 0


def _read_series(path, column) -> list[tuple[int, float]]:
    out = []
    with open(path) as f:
        header = None
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = line.split(",")
            if header is None:
                header = cells
                if column not in header:
                    raise PlanError(f"{path}: no column {column!r}")
                ncol = header.index("n")
                vcol = header.index(column)
                continue
            out.append((int(cells[ncol]), float(cells[vcol])))
    if not out:
        raise PlanError(f"{path}: no data rows")
    return out


def cmd_verify(args) -> int:
    tree = FrozenTree.load(args.tree)
    results = stats.verify_tree(tree)
    bad = stats.violations(results)
    print(f"verified tree n={tree.n}: {len(results)} checks, {len(bad)} violations")
    for r in bad:
        print(f"  {r}")
    return VIOLATION_EXIT if bad else 0


def build_parser() -> _Parser:
    parser = _Parser(prog="rftlab", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("grow", help="grow one tree and save it")
    _add_model_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grow)

    p = sub.add_parser("experiment", help="run a plan file")
    p.add_argument("plan")
    p.add_argument("--out", default=None, help="override the plan's output directory")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("couple", help="coupled growth plus both guarantees")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--pairs", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="directory for the saved pair")
    p.set_defaults(func=cmd_couple)

    p = sub.add_parser("oracle", help="exact small-n expectations, optionally vs Monte Carlo")
    _add_model_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--stat", required=True)
    p.add_argument("--mc-replicas", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("fit", help="exponent regression over snapshot CSVs")
    p.add_argument("csv", nargs="+")
    p.add_argument("--column", default="x_geq_2")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("verify", help="run the exact-invariant suite on a stored tree")
    p.add_argument("tree")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse exits on usage errors and --help
        return int(e.code or 0)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return USAGE_EXIT
    try:
        return args.func(args)
    except (PlanError, ModelError, LabelError, FitError, ValueError) as e:
        print(f"rftlab: {e}", file=sys.stderr)
        return USAGE_EXIT
    except InvariantViolation as e:
        print(f"rftlab: invariant violation: {e}", file=sys.stderr)
        return VIOLATION_EXIT
    except OSError as e:
        print(f"rftlab: i/o error: {e}", file=sys.stderr)
        return IO_EXIT


if __name__ == "__main__":
    sys.exit(main())
