"""Joint friend/uniform growth and its deterministic guarantees.

Claims:
    - a coupled step consumes two draws, adds the same label to both trees,
      and wires the documented edges
    - both guarantees (distance factor two, leaf proximity) hold with zero
      exceptions on every generated pair, exhaustively below n=500
    - the marginal law of each component equals the corresponding
      single-tree model, exactly, by joint enumeration at small n
    - kernel and pure-Python coupled growth are draw-for-draw identical
    - corrupted pairs are rejected loudly
"""

from fractions import Fraction

import numpy as np
import pytest

from rftlab import (CouplingInvariantError, FrozenPair, ModelSpec, RngStream,
                    coupled_step, enumerate_histories, grow_coupled, new_pair,
                    verify_distance_bound, verify_leaf_proximity)
from rftlab.tree import grow_tree_from_parents


class TestCoupledStep:
    def test_seed_step_wiring(self):
        pair = new_pair()
        rng = RngStream(0)
        before = rng.position
        w, v = coupled_step(pair, rng)
        assert rng.position - before == 2
        assert pair.n == 3
        assert pair.urrt.parent(3) == v
        assert pair.rft.parent(3) == w
        assert w != v  # at n=2 the friend target is V's only neighbour

    def test_sizes_stay_equal(self):
        pair = new_pair()
        rng = RngStream(1)
        for _ in range(200):
            coupled_step(pair, rng)
        assert pair.rft.n == pair.urrt.n == 202

    def test_determinism(self):
        a = grow_coupled(3000, RngStream(9))
        b = grow_coupled(3000, RngStream(9))
        assert np.array_equal(a.rft.parent, b.rft.parent)
        assert np.array_equal(a.urrt.parent, b.urrt.parent)

    def test_kernel_equals_pure(self):
        a = grow_coupled(1500, RngStream(21))
        b = grow_coupled(1500, RngStream(21), use_kernel=False)
        assert np.array_equal(a.rft.parent, b.rft.parent)
        assert np.array_equal(a.urrt.parent, b.urrt.parent)
        assert np.array_equal(a.rft.leaf_count, b.rft.leaf_count)


class TestDistanceBound:
    def test_tiny_exhaustive(self):
        pair = grow_coupled(3, RngStream(2))
        report = verify_distance_bound(pair, 0)
        assert report.exhaustive and report.violations == 0

    def test_exhaustive_at_500(self):
        pair = grow_coupled(500, RngStream(3))
        report = verify_distance_bound(pair, 0)
        assert report.exhaustive
        assert report.pairs_checked == 500 * 499 // 2
        assert report.violations == 0
        assert report.max_ratio <= 2.0

    def test_sampled_at_20k(self):
        pair = grow_coupled(20_000, RngStream(4))
        report = verify_distance_bound(pair, 50_000, RngStream(5))
        assert not report.exhaustive
        assert report.violations == 0

    def test_identity_pairs_trivial(self):
        pair = grow_coupled(100, RngStream(6))
        assert pair.rft.distance(7, 7) == 0

    def test_violation_raises(self):
        rft = grow_tree_from_parents([2, 3, 4, 5]).freeze()   # path 1-..-6
        urrt = grow_tree_from_parents([1, 1, 1, 1]).freeze()  # star at 1
        with pytest.raises(CouplingInvariantError):
            verify_distance_bound(FrozenPair(rft=rft, urrt=urrt), 0)


class TestLeafProximity:
    def test_seed(self):
        report = verify_leaf_proximity(grow_coupled(2, RngStream(0)))
        assert report.violations == 0 and report.max_distance == 0

    def test_medium(self):
        report = verify_leaf_proximity(grow_coupled(50_000, RngStream(7)))
        assert report.violations == 0
        assert report.max_distance <= 1

    def test_case_split_uniform_leaf_not_friend_leaf(self):
        # a vertex that is a uniform-tree leaf but not a friend-tree leaf
        # must have a friend-tree leaf neighbour
        pair = grow_coupled(5_000, RngStream(8))
        checked = 0
        for v in range(1, pair.n + 1):
            if pair.urrt.degree[v] == 1 and pair.rft.degree[v] > 1:
                assert any(pair.rft.degree[u] == 1 for u in pair.rft.neighbours(v))
                checked += 1
        assert checked > 0

    def test_violation_raises(self):
        rft = grow_tree_from_parents([2, 3, 4, 5, 6]).freeze()   # path 1-..-7
        urrt = grow_tree_from_parents([1, 1, 1, 1, 1]).freeze()  # star at 1
        with pytest.raises(CouplingInvariantError):
            verify_leaf_proximity(FrozenPair(rft=rft, urrt=urrt))


class TestMarginals:
    @staticmethod
    def _joint_marginals(n):
        """Enumerate every (V, neighbour-index) draw sequence with exact
        probabilities and project both components' parent-sequence laws."""
        rft_law: dict[tuple, Fraction] = {}
        urrt_law: dict[tuple, Fraction] = {}

        def rec(rft_parents, urrt_parents, prob):
            m = len(rft_parents) + 2
            if m == n:
                key_r = (1,) + rft_parents
                key_u = (1,) + urrt_parents
                rft_law[key_r] = rft_law.get(key_r, Fraction(0)) + prob
                urrt_law[key_u] = urrt_law.get(key_u, Fraction(0)) + prob
                return
            rft = grow_tree_from_parents(rft_parents)
            for v in range(1, m + 1):
                deg = rft.degree(v)
                for j in range(deg):
                    w = rft.neighbour_at(v, j)
                    rec(rft_parents + (w,), urrt_parents + (v,),
                        prob * Fraction(1, m * deg))

        rec((), (), Fraction(1))
        return rft_law, urrt_law

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_components_have_single_tree_laws(self, n):
        rft_law, urrt_law = self._joint_marginals(n)
        assert sum(rft_law.values()) == 1
        friend_atoms = {a.parents: a.probability
                        for a in enumerate_histories(ModelSpec.friend(1), n)}
        urrt_atoms = {a.parents: a.probability
                      for a in enumerate_histories(ModelSpec.urrt(), n)}
        assert rft_law == friend_atoms
        assert urrt_law == urrt_atoms


class TestPersistence:
    def test_pair_round_trip(self, tmp_path):
        pair = grow_coupled(300, RngStream(10))
        pair.save(tmp_path / "pair")
        loaded = FrozenPair.load(tmp_path / "pair")
        assert np.array_equal(loaded.rft.parent, pair.rft.parent)
        assert np.array_equal(loaded.urrt.parent, pair.urrt.parent)
        assert (tmp_path / "pair" / "manifest.json").exists()
