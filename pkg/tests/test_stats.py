"""Exact statistics and the deterministic inequality suite.

Claims:
    - the attachment distribution, drifts, censuses, Y, distance statistics
      and edge cover all match hand-derived values on canonical shapes
    - diameter / leaf depth / branchpoint depth / edge cover equal
      brute-force oracles on random trees
    - the closed-form one-step expectations equal expectation-by-enumeration
      over every candidate target (1e-12)
    - every exact inequality holds on grown trees with zero violations,
      including the per-vertex submartingale step and the Y supermartingale
      step
    - the youngest-subtree law P(size >= l) = 1/l is exact under the
      enumeration oracle
"""

from collections import deque
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hst

import rftlab.stats as st
from rftlab import (LabelError, ModelSpec, RngStream, attach_distribution,
                    drift_X_geq, expected_Y, grow, grow_tree_from_parents,
                    min_edge_cover, oracle_expectation, refined_census,
                    seed_tree, youngest_subtree_size)
from conftest import as_growth

CENSUS = frozenset({"census"})


def path4():
    t = seed_tree()
    t.attach(2)
    t.attach(3)
    return t  # 1-2-3-4


def star4():
    t = seed_tree()
    t.attach(1)
    t.attach(1)
    return t  # centre 1, leaves 2,3,4


def spider_1_2_3():
    t = seed_tree()          # leg A: 1-2
    t.attach(1)              # 3
    t.attach(1)              # 4
    t.attach(3)              # leg B: 1-3-5
    t.attach(4)              # 6
    t.attach(6)              # leg C: 1-4-6-7
    return t


def random_tree(n, seed, spec=None):
    return as_growth(grow(spec or ModelSpec.friend(1), n, RngStream(seed), stats=CENSUS).tree)


def all_pairs_bfs(tree):
    dist = {}
    for src in range(1, tree.n + 1):
        d = {src: 0}
        q = deque([src])
        while q:
            v = q.popleft()
            for u in tree.neighbours(v):
                if u not in d:
                    d[u] = d[v] + 1
                    q.append(u)
        dist[src] = d
    return dist


class TestAttachDistribution:
    def test_seed_tree_symmetric(self):
        pi = attach_distribution(seed_tree())
        assert pi[1] == pi[2] == pytest.approx(0.5)

    def test_three_path(self):
        t = seed_tree()
        t.attach(1)
        pi = attach_distribution(t)
        assert pi[1] == pytest.approx(2 / 3)
        assert pi[2] == pi[3] == pytest.approx(1 / 6)

    def test_star(self):
        pi = attach_distribution(star4())
        assert pi[1] == pytest.approx(3 / 4)
        for leaf in (2, 3, 4):
            assert pi[leaf] == pytest.approx(1 / 12)

    @given(hst.integers(min_value=0, max_value=10_000))
    @settings(max_examples=25, deadline=None)
    def test_sums_to_one(self, seed):
        t = random_tree(60, seed)
        assert abs(attach_distribution(t).sum() - 1.0) <= 1e-9


class TestDrift:
    def test_three_path_k2(self):
        t = seed_tree()
        t.attach(1)
        assert drift_X_geq(t, 2) == pytest.approx(1 / 3)

    def test_star_k2_meets_upper_bound_exactly(self):
        t = star4()
        d = drift_X_geq(t, 2)
        assert d == pytest.approx(1 / 4)
        n, x_geq2, x_geq3 = 4, 1, 1
        assert d == pytest.approx((x_geq2 + x_geq3) / (2 * n))

    def test_zero_above_max_degree(self):
        t = star4()
        assert drift_X_geq(t, 12) == 0.0
        with pytest.raises(ValueError):
            drift_X_geq(t, 1)

    def test_vector_matches_scalar(self):
        t = random_tree(500, 3)
        vec = st.drift_vector(t, cap=16)
        for k in range(2, 17):
            assert vec[k] == pytest.approx(drift_X_geq(t, k), abs=1e-12)


class TestRefinedCensus:
    def test_path4_k2(self):
        assert refined_census(path4(), 2) == (2, 0)

    def test_star4_k1(self):
        assert refined_census(star4(), 1) == (3, 0)

    def test_absent_degree(self):
        assert refined_census(star4(), 7) == (0, 0)

    @given(hst.integers(min_value=0, max_value=10_000))
    @settings(max_examples=20, deadline=None)
    def test_partition_sums_to_census(self, seed):
        t = random_tree(80, seed)
        f = t.freeze()
        hist = np.bincount(f.degree[1:])
        for k in range(1, len(hist)):
            le, gt = refined_census(f, k)
            assert le + gt == hist[k]
            # brute recount
            le_b = gt_b = 0
            for v in range(1, t.n + 1):
                if t.degree(v) != k:
                    continue
                higher = sum(1 for u in t.neighbours(v) if t.degree(u) >= k + 1)
                if higher <= 1:
                    le_b += 1
                else:
                    gt_b += 1
            assert (le, gt) == (le_b, gt_b)


class TestExpectedY:
    def test_seed(self):
        assert expected_Y(seed_tree()) == pytest.approx(1.0)

    def test_star4(self):
        assert expected_Y(star4()) == pytest.approx(2.5)

    def test_path4(self):
        assert expected_Y(path4()) == pytest.approx(7 / 4)

    def test_equals_pi_weighted_degree(self):
        t = random_tree(300, 5)
        pi = attach_distribution(t)
        f = t.freeze()
        direct = float((pi[1:] * f.degree[1:]).sum())
        assert expected_Y(t) == pytest.approx(direct, abs=1e-12)


class TestDistanceStats:
    def test_diameter_small(self):
        assert st.diameter(seed_tree()) == 1
        t = seed_tree()
        t.attach(1)
        assert st.diameter(t) == 2
        assert st.diameter(path4()) == 3
        assert st.diameter(star4()) == 2

    def test_diameter_matches_brute_force(self):
        for seed in range(40):
            n = 20 + (seed * 17) % 180
            t = random_tree(n, seed, ModelSpec.urrt() if seed % 2 else ModelSpec.friend(1))
            oracle = max(max(d.values()) for d in all_pairs_bfs(t).values())
            assert st.diameter(t) == oracle

    def test_leaf_depth_small(self):
        assert st.leaf_depth(seed_tree()) == 0
        t = seed_tree()
        t.attach(1)
        assert st.leaf_depth(t) == 1
        assert st.leaf_depth(star4()) == 1
        assert st.leaf_depth(spider_1_2_3()) == 2

    def test_leaf_depth_matches_brute_force(self):
        for seed in range(25):
            t = random_tree(30 + seed * 7, seed, ModelSpec.urrt())
            dist = all_pairs_bfs(t)
            leaves = [v for v in range(1, t.n + 1) if t.degree(v) == 1]
            oracle = max(min(dist[v][l] for l in leaves) for v in range(1, t.n + 1))
            assert st.leaf_depth(t) == oracle

    def test_branchpoint_depth(self):
        assert st.branchpoint_depth(path4()) is None
        assert st.branchpoint_depth(star4()) == 1
        assert st.branchpoint_depth(spider_1_2_3()) == 3

    def test_branchpoint_matches_brute_force(self):
        for seed in range(25):
            t = random_tree(30 + seed * 5, seed + 100, ModelSpec.pa())
            dist = all_pairs_bfs(t)
            branch = [v for v in range(1, t.n + 1) if t.degree(v) >= 3]
            leaves = [v for v in range(1, t.n + 1) if t.degree(v) == 1]
            got = st.branchpoint_depth(t)
            if not branch:
                assert got is None
            else:
                assert got == max(min(dist[l][b] for b in branch) for l in leaves)

    def test_typical_distance_seed(self):
        ph, rh = st.typical_distance_sample(seed_tree().freeze(), RngStream(1), 500)
        assert set(ph) <= {0, 1} and set(rh) <= {0, 1}

    def test_typical_distance_three_path(self):
        t = seed_tree()
        t.attach(1)
        m = 90_000
        ph, _ = st.typical_distance_sample(t.freeze(), RngStream(2), m)
        p2 = ph.get(2, 0) / m
        sigma = (2 / 9 * 7 / 9 / m) ** 0.5
        assert abs(p2 - 2 / 9) <= 4 * sigma

    def test_draw_discipline(self):
        rng = RngStream(3)
        st.typical_distance_sample(seed_tree().freeze(), rng, 250)
        assert rng.position == 500


class TestMinEdgeCover:
    def test_small_shapes(self):
        assert min_edge_cover(seed_tree()) == 1
        assert min_edge_cover(path4()) == 2
        assert min_edge_cover(star4()) == 1

    def test_brute_force_subsets(self):
        for seed in range(30):
            t = random_tree(4 + seed % 9, seed + 7, ModelSpec.urrt())
            edges = [(m, t.parent(m)) for m in range(2, t.n + 1)]
            best = t.n
            for r in range(0, t.n + 1):
                found = False
                for subset in combinations(range(1, t.n + 1), r):
                    s = set(subset)
                    if all(a in s or b in s for a, b in edges):
                        best = r
                        found = True
                        break
                if found:
                    break
            assert min_edge_cover(t) == best

    def test_matches_maximum_matching(self):
        nx = pytest.importorskip("networkx")
        for seed in range(8):
            t = random_tree(100 + 40 * seed, seed, ModelSpec.friend(1))
            g = nx.Graph((m, t.parent(m)) for m in range(2, t.n + 1))
            matching = nx.max_weight_matching(g, maxcardinality=True)
            assert min_edge_cover(t) == len(matching)

    def test_dominates_half_nonleaves(self):
        for seed in range(10):
            t = random_tree(400, seed + 50)
            f = t.freeze()
            x_geq2 = int((f.degree[1:] >= 2).sum())
            assert min_edge_cover(f) >= x_geq2 / 2


class TestYoungestSubtree:
    def test_seed(self):
        assert youngest_subtree_size(seed_tree(), 1) == 1

    def test_rejects_leaf(self):
        with pytest.raises(LabelError):
            youngest_subtree_size(seed_tree(), 2)

    def test_law_is_exact_under_oracle(self):
        # P(size >= l) = 1/l for l < n, and 0 at l = n, at the root of a
        # uniform recursive tree; exact via enumeration at n = 8
        n = 8
        for ell in range(2, n):
            p = oracle_expectation(
                ModelSpec.urrt(), n,
                lambda t, e=ell: 1 if youngest_subtree_size(t, 1) >= e else 0)
            assert p == Fraction(1, ell)
        p = oracle_expectation(ModelSpec.urrt(), n,
                               lambda t: 1 if youngest_subtree_size(t, 1) >= n else 0)
        assert p == 0

    def test_hand_example(self):
        t = grow_tree_from_parents([2, 2, 1])  # children of 1: {2, 5}; of 2: {3, 4}
        assert youngest_subtree_size(t, 1) == 1   # youngest child of 1 is 5, a leaf
        assert youngest_subtree_size(t, 2) == 1   # youngest child of 2 is 4


class TestOneStepExpectations:
    def test_leaf_counts_match_enumeration(self):
        for seed in range(6):
            t = random_tree(25, seed + 11)
            f = t.freeze()
            pi = attach_distribution(f)
            got = st.expected_leaf_counts(f)
            n = t.n
            brute = np.zeros(n + 1)
            for w in range(1, n + 1):
                t2 = as_growth(f)
                t2.attach(w)
                for v in range(1, n + 1):
                    brute[v] += pi[w] * t2.leaf_count(v)
            assert np.allclose(got[1:], brute[1:], atol=1e-12)

    def test_scaled_y_matches_enumeration(self):
        for seed in range(6):
            t = random_tree(25, seed + 21)
            f = t.freeze()
            pi = attach_distribution(f)
            brute = 0.0
            for w in range(1, t.n + 1):
                t2 = as_growth(f)
                t2.attach(w)
                brute += pi[w] * (t.n + 1) * expected_Y(t2)
            assert st.expected_next_scaled_Y(f) == pytest.approx(brute, abs=1e-10)


class TestInequalitySuite:
    @pytest.mark.parametrize("spec", [ModelSpec.friend(1), ModelSpec.friend(2),
                                      ModelSpec.urrt(), ModelSpec.pa(),
                                      ModelSpec.redirect(0.5)])
    def test_zero_violations_on_grown_trees(self, spec):
        # the inequalities are deterministic facts about arbitrary trees
        res = grow(spec, 3000, RngStream(17), stats=CENSUS)
        assert st.violations(st.check_exact_inequalities(res.tree)) == []

    def test_submartingale_step_on_trees_up_to_1000(self):
        for n in (10, 100, 1000):
            res = grow(ModelSpec.friend(1), n, RngStream(n), stats=CENSUS)
            assert st.violations(st.check_leaf_submartingale(res.tree)) == []

    def test_supermartingale_step_on_trees_up_to_500(self):
        for n in (10, 50, 500):
            res = grow(ModelSpec.friend(1), n, RngStream(n + 1), stats=CENSUS)
            assert st.violations(st.check_y_supermartingale(res.tree)) == []

    @given(hst.lists(hst.integers(min_value=1, max_value=60), min_size=1, max_size=60))
    @settings(max_examples=40, deadline=None)
    def test_zero_violations_on_arbitrary_trees(self, raw_targets):
        t = seed_tree()
        for raw in raw_targets:
            t.attach(1 + raw % t.n)
        results = st.verify_tree(t.freeze(), cap=16)
        assert st.violations(results) == []

    def test_verify_tree_runs_martingale_checks_when_small(self):
        res = grow(ModelSpec.friend(1), 200, RngStream(23), stats=CENSUS)
        names = {r.name for r in st.verify_tree(res.tree)}
        assert "leaf_count_submartingale" in names
        assert "y_supermartingale_step" in names


class TestSnapshots:
    def test_csv_row_alignment(self):
        res = grow(ModelSpec.friend(1), 300, RngStream(2), cap=16)
        snap = res.snapshots[-1]
        assert len(snap.csv_row()) == len(st.csv_header(16))

    def test_untoggled_fields_empty(self):
        res = grow(ModelSpec.friend(1), 100, RngStream(2), stats=CENSUS, cap=8)
        snap = res.snapshots[-1]
        assert snap.y_n is None and snap.diameter is None
        row = snap.csv_row()
        header = st.csv_header(8)
        assert row[header.index("y_n")] == ""
        assert row[header.index("x1")] != ""

    def test_census_values(self):
        res = grow(ModelSpec.friend(1), 1000, RngStream(4))
        snap = res.snapshots[-1]
        f = res.tree
        assert snap.x1 == int((f.degree[1:] == 1).sum())
        assert snap.x_geq[2] == 1000 - snap.x1
        assert sum(snap.degree_histogram.values()) == 1000
        assert snap.leaf_fraction == pytest.approx(snap.x1 / 1000)

    def test_checks_toggle_collects_results(self):
        res = grow(ModelSpec.friend(1), 200, RngStream(4),
                   stats=frozenset({"census", "checks"}))
        snap = res.snapshots[-1]
        assert snap.checks and all(c.ok for c in snap.checks)

    def test_unknown_toggle_rejected(self):
        with pytest.raises(ValueError):
            grow(ModelSpec.friend(1), 50, RngStream(0), stats=frozenset({"entropy"}))
