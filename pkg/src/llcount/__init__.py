"""Certified approximate counting via truncated cluster expansions.

A library and CLI that approximates abstract polymer-model partition
functions by truncated cluster expansion and applies the engine to four
counting problems under Lovász-local-lemma-type weak-dependence hypotheses:
probability of intersection of events (including #SAT of k-CNF formulae),
kernel-intersection dimension for commuting projectors, the same for general
projectors under an inclusion-exclusion stability condition, and a
detectability-based affine approximation under a spectral-gap assumption.
"""

from .clusters import (ApproxResult, Cluster, ConditionCheck, WeightOracle,
                       approx_partition_function, check_weight_condition,
                       choose_truncation_order, enumerate_clusters,
                       incompatible, truncated_expansion, ursell,
                       weight_decay_threshold)
from .cnf import (CnfFormula, CountResult, EventTableOracle,
                  ProbabilityResult, approx_probability_intersection,
                  cnf_dependency_graph, cnf_polymer_weight, count_satisfying,
                  parse_dimacs)
from .errors import (HypothesisViolation, LLCountError, NumericFailure,
                     ResourceCapExceeded, SpecParseError)
from .graphs import (Coloring, DependencyGraph, build_graph,
                     enumerate_connected_subgraphs, greedy_coloring,
                     induced_components, strong_product_with_complete)
from .oracles import (OracleBudget, brute_force_polymer_z,
                      brute_force_sat_count, exact_detectability_trace,
                      exact_dimension_full_diagonalization,
                      exact_inclusion_exclusion_probability,
                      ursell_bruteforce)
from .projectors import (LocalProjector, ProjectorSet, kernel_intersection_dim,
                         normalized_product_trace, rank_normalized,
                         spectral_gap, support_dependency_graph,
                         validate_projector, verify_commuting)
from .qsat import (AffineResult, DetectabilityParams, DimensionResult,
                   approx_dim_commuting, approx_dim_detectability,
                   approx_dim_general, commuting_weight, detectability_weight,
                   general_ie_weight, stability_check, suggest_delta_general)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
