"""Brute-force enumeration of all growth histories at small n.

Every history is an atom: the parent sequence (W_1=1, W_2, ..., W_{n-1})
together with its exact probability, carried as a Fraction. Expanding
every per-step target with its exact conditional probability and summing
over histories yields exact distributions and expectations against which
the simulators are gated.

Enumeration is capped at n = 8; the atom count grows factorially beyond
that.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import _kernels
from .errors import ModelError
from .models import ModelSpec, model_step
from .rng import RngStream
from .tree import GrowthTree, grow_tree_from_parents, seed_tree

MAX_ENUMERATION_N = 8
PROBABILITY_TOL = 1e-12


@dataclass(frozen=True)
class OutcomeAtom:
    """One complete growth history: parents of vertices 2..n and its probability."""

    parents: tuple[int, ...]
    probability: Fraction

    def tree(self) -> GrowthTree:
        # parents[0] is the seed edge (always 1); replay the rest
        return grow_tree_from_parents(self.parents[1:])


def step_distribution(tree: GrowthTree, model: ModelSpec) -> dict[int, Fraction]:
    """Exact law of the attachment target given the current tree."""
    n = tree.n
    if model.kind == "urrt":
        u = Fraction(1, n)
        return {v: u for v in range(1, n + 1)}
    if model.kind == "pa":
        return {v: Fraction(tree.degree(v), 2 * (n - 1)) for v in range(1, n + 1)}
    if model.kind == "friend":
        dist = {v: Fraction(1, n) for v in range(1, n + 1)}
        for _ in range(model.walk_length):
            nxt = {v: Fraction(0) for v in range(1, n + 1)}
            for u, pu in dist.items():
                if pu == 0:
                    continue
                share = pu / tree.degree(u)
                for w in tree.neighbours(u):
                    nxt[w] += share
            dist = nxt
        return dist
    # redirect: p * uniform + (1-p) * one-step friend law
    p = Fraction(model.redirect_prob)
    friend = step_distribution(tree, ModelSpec.friend(1))
    u = Fraction(1, n)
    return {v: p * u + (1 - p) * friend[v] for v in range(1, n + 1)}


def enumerate_histories(model: ModelSpec, n: int) -> list[OutcomeAtom]:
    """All growth histories of size n with exact probabilities (sum to 1)."""
    if not 2 <= n <= MAX_ENUMERATION_N:
        raise ValueError(f"enumeration supports 2 <= n <= {MAX_ENUMERATION_N}, got {n}")
    acc: dict[tuple[int, ...], Fraction] = {}

    def rec(parents: tuple[int, ...], prob: Fraction):
        if len(parents) + 2 == n:
            acc[parents] = acc.get(parents, Fraction(0)) + prob
            return
        tree = grow_tree_from_parents(parents)
        for w, pw in sorted(step_distribution(tree, model).items()):
            if pw:
                rec(parents + (w,), prob * pw)

    rec((), Fraction(1))
    total = sum(acc.values())
    if total != 1:
        raise AssertionError(f"atom probabilities sum to {total}, not 1")
    return [OutcomeAtom(parents=(1,) + key, probability=prob)
            for key, prob in sorted(acc.items())]


def oracle_expectation(model: ModelSpec, n: int,
                       statistic: Callable[[GrowthTree], object]):
    """Sum of probability * statistic(tree) over all histories.

    Exact (a Fraction) whenever the statistic returns ints or Fractions on
    every atom; a float otherwise.
    """
    atoms = enumerate_histories(model, n)
    values = [statistic(a.tree()) for a in atoms]
    if all(isinstance(v, (bool, int, np.integer, Fraction)) for v in values):
        total = Fraction(0)
        for a, v in zip(atoms, values):
            total += a.probability * (v if isinstance(v, Fraction) else Fraction(int(v)))
        return total
    return float(sum(float(a.probability) * float(v) for a, v in zip(atoms, values)))


@dataclass
class MonteCarloReport:
    model: str
    n: int
    replicas: int
    mean: float
    std_error: float
    oracle_value: float
    abs_error: float
    ok: bool

    def __str__(self):
        status = "ok" if self.ok else "MISMATCH"
        return (f"{self.model} n={self.n}: mc={self.mean!r} +- {self.std_error!r} "
                f"vs oracle={self.oracle_value!r} [{status}]")


def compare_to_monte_carlo(model: ModelSpec, n: int,
                           statistic: Callable[[GrowthTree], float],
                           replicas: int, rng: RngStream) -> MonteCarloReport:
    """Grow ``replicas`` trees with the production step functions and require
    the sample mean to sit within four standard errors of the exact value.

    A mismatch signals a simulator bug and raises InvariantViolation.
    """
    from .errors import InvariantViolation

    if n > MAX_ENUMERATION_N:
        raise ValueError(f"oracle comparison needs n <= {MAX_ENUMERATION_N}")
    if replicas < 2:
        raise ValueError("need at least two replicas")
    oracle_value = float(oracle_expectation(model, n, statistic))
    values = np.empty(replicas, dtype=np.float64)
    for r in range(replicas):
        tree = seed_tree()
        while tree.n < n:
            tree.attach(model_step(tree, rng, model))
        values[r] = float(statistic(tree))
    mean = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(replicas))
    err = abs(mean - oracle_value)
    ok = err <= 4 * se if se > 0 else err == 0.0
    report = MonteCarloReport(model=model.describe(), n=n, replicas=replicas,
                              mean=mean, std_error=se, oracle_value=oracle_value,
                              abs_error=err, ok=ok)
    if not ok:
        raise InvariantViolation(f"Monte Carlo disagrees with the enumeration oracle: {report}")
    return report


# -- bundled fast Monte Carlo (same kernels as production growth) -------------

BUNDLE_STATS = ("diameter", "x1", "x_geq_2", "leaf_depth", "y")


def mc_statistic_table(model: ModelSpec, n: int, replicas: int,
                       rng: RngStream) -> dict[str, tuple[float, float]]:
    """Means and standard errors of the five bundled statistics over
    ``replicas`` trees grown through the production kernels."""
    if not 2 <= n <= MAX_ENUMERATION_N:
        raise ValueError(f"bundle supports 2 <= n <= {MAX_ENUMERATION_N}")
    kind = {"friend": _kernels.FRIEND, "urrt": _kernels.URRT,
            "pa": _kernels.PA, "redirect": _kernels.REDIRECT}[model.kind]
    p = model.redirect_prob if model.redirect_prob is not None else 0.0
    raws = rng.raw_block((n - 2) * model.draws_per_step * replicas)
    table = _kernels.mc_small_stats(kind, model.walk_length, p, n, replicas, raws)
    out = {}
    for i, name in enumerate(BUNDLE_STATS):
        col = table[:, i]
        out[name] = (float(col.mean()), float(col.std(ddof=1) / np.sqrt(replicas)))
    return out


def oracle_statistic_table(model: ModelSpec, n: int) -> dict[str, float]:
    """Exact expectations of the five bundled statistics (via rftlab.stats)."""
    from . import stats as _stats

    def evaluators():
        yield "diameter", lambda t: _stats.diameter(t.freeze())
        yield "x1", lambda t: sum(1 for v in range(1, t.n + 1) if t.degree(v) == 1)
        yield "x_geq_2", lambda t: sum(1 for v in range(1, t.n + 1) if t.degree(v) >= 2)
        yield "leaf_depth", lambda t: _stats.leaf_depth(t.freeze())
        yield "y", lambda t: _stats.expected_Y(t.freeze())

    atoms = enumerate_histories(model, n)
    trees = [a.tree() for a in atoms]
    probs = [float(a.probability) for a in atoms]
    out = {}
    for name, fn in evaluators():
        out[name] = float(sum(p * float(fn(t)) for p, t in zip(probs, trees)))
    return out
