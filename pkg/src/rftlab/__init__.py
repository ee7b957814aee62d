"""rftlab: simulation and exact verification for random friend trees.

Grows friend trees (attach to a uniform neighbour of a uniform vertex),
k-step walk variants, redirection trees, uniform recursive trees and
preferential attachment trees; computes exact per-snapshot statistics and
conditional drifts; verifies deterministic inequalities and coupling
guarantees; and estimates degree-growth exponents, all reproducibly.
"""

__version__ = "0.1.0"

from .errors import (CouplingInvariantError, FitError, InvariantViolation,
                     LabelError, ModelError, PlanError)
from .rng import RngStream
from .tree import FrozenTree, GrowthTree, grow_tree_from_parents, seed_tree
from .models import (GrowResult, KernelRun, ModelSpec, friend_step,
                     geometric_schedule, grow, model_step, pa_step,
                     redirect_step, urrt_step)
from .stats import (DEGREE_CAP, DEFAULT_STATS, CheckResult, StatSnapshot,
                    attach_distribution, branchpoint_depth,
                    check_exact_inequalities, check_leaf_submartingale,
                    check_y_supermartingale, degree_histogram, diameter,
                    drift_X_geq, drift_vector, expected_Y, leaf_depth,
                    min_edge_cover, refined_census, snapshot_from_tree,
                    typical_distance_sample, verify_tree, violations,
                    youngest_subtree_size)
from .coupling import (CoupledPair, FrozenPair, coupled_step, grow_coupled,
                       new_pair, verify_distance_bound, verify_leaf_proximity)
from .oracle import (MonteCarloReport, OutcomeAtom, compare_to_monte_carlo,
                     enumerate_histories, mc_statistic_table,
                     oracle_expectation, oracle_statistic_table,
                     step_distribution)
from .estimators import (EdgeDegreeStats, FitResult, Trajectory,
                         TrajectoryTracker, edge_degree_minima, exponent_fit,
                         exponent_fit_replicas, hub_count,
                         hub_count_from_histogram, survival_estimate)
from .harness import ExperimentPlan, ExperimentResult, run

__all__ = [name for name in dir() if not name.startswith("_")]
