"""The three projector counting pipelines: commuting kernel-intersection
dimension, general projectors under an inclusion-exclusion stability
condition, and the detectability-based affine approximation under a spectral
gap assumption.

All dimensions are normalized (full space = 1); absolute dimensions are
normalized times d^qudit_count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .clusters import (ApproxResult, ConditionCheck, WeightOracle,
                       approx_partition_function, certified_delta,
                       check_weight_condition, choose_truncation_order,
                       weight_decay_threshold, DEFAULT_MAX_ORDER)
from .errors import HypothesisViolation, ResourceCapExceeded
from .graphs import (Coloring, greedy_coloring,
                     strong_product_with_complete)
from .projectors import (ProjectorSet, kernel_intersection_dim,
                         normalized_product_trace, rank_normalized,
                         spectral_gap, support_dependency_graph,
                         verify_commuting)

_DELTA_CEILING = 50.0


@dataclass
class DimensionResult:
    """Normalized and absolute kernel-intersection dimension estimates."""

    approx: ApproxResult
    normalized: float
    absolute: float
    chi_used: int
    method: str
    delta_requested: float


def _rank_check(ps: ProjectorSet, delta: float, max_degree: int, chi: int,
                name: str = "rank-condition",
                threshold: float | None = None) -> tuple[ConditionCheck, float]:
    if threshold is None:
        threshold = weight_decay_threshold(delta, max_degree) ** chi
    ranks = [rank_normalized(p, ps.d) for p in ps.projectors]
    worst = max(ranks, default=0.0)
    detail = (f"max normalized rank = {worst:.6g} vs bound = {threshold:.6g} "
              f"(delta={delta}, D={max_degree}, chi={chi})")
    return ConditionCheck(name, worst <= threshold, threshold - worst, detail), worst


def commuting_weight(ps: ProjectorSet, polymer: Sequence[int]) -> float:
    """(-1)^|polymer| times the normalized dimension of the intersection of
    images, computed as the product trace (valid for commuting families)."""
    tr = normalized_product_trace(ps, tuple(polymer))
    return -tr if len(polymer) % 2 else tr


def approx_dim_commuting(ps: ProjectorSet, epsilon: float, delta: float, *,
                         coloring: Coloring | None = None, force: bool = False,
                         threads: int = 1, commuting_declared: bool = False,
                         commute_tol: float = 1e-8) -> DimensionResult:
    """FPTAS for the normalized kernel-intersection dimension of a commuting
    projector family, under the per-projector rank bound."""
    graph = support_dependency_graph(ps)
    col = coloring if coloring is not None else greedy_coloring(graph)
    if coloring is not None:
        col.assert_proper(graph)
    chi = col.num_colors
    dmax = graph.max_degree()
    checks = []
    if not commuting_declared:
        commrep = verify_commuting(ps, commute_tol)
        checks.append(ConditionCheck(
            "pairwise-commutation", commrep.commuting,
            0.0 if commrep.commuting else -1.0,
            f"{commrep.pairs_checked} overlapping pairs checked; "
            f"failures: {list(commrep.failures)}"))
        if not commrep.commuting and not force:
            raise HypothesisViolation(
                f"projector pairs do not commute: {list(commrep.failures)}",
                checks)
    rank_chk, worst_rank = _rank_check(ps, delta, dmax, chi)
    checks.append(rank_chk)
    if not rank_chk.passed and not force:
        raise HypothesisViolation("rank condition fails: " + rank_chk.detail,
                                  checks)
    delta_used = _holder_delta(worst_rank, chi, dmax, delta, rank_chk.passed)
    oracle = WeightOracle(lambda p: commuting_weight(ps, p))
    approx = approx_partition_function(
        graph, oracle, epsilon, delta_used, force=force, threads=threads,
        extra_checks=checks)
    normalized = approx.real_value()
    return DimensionResult(approx, normalized,
                           normalized * ps.d ** ps.qudit_count,
                           chi, "commuting", delta)


def _holder_delta(worst: float, exponent_classes: int, max_degree: int,
                  delta: float, hypothesis_ok: bool) -> float:
    # Hoelder bound across coloring classes: |w| <= worst^(|polymer|/classes),
    # so the decay base worst^(1/classes) certifies a (usually larger) delta
    # than requested.
    if not hypothesis_ok:
        return delta
    if worst <= 0.0:
        return max(delta, _DELTA_CEILING)
    eta = worst ** (1.0 / exponent_classes)
    return max(delta, min(certified_delta(eta, max_degree), _DELTA_CEILING))


class _KernelDimCache:
    """Memoized normalized kernel-intersection dimensions per index subset."""

    def __init__(self, ps: ProjectorSet):
        self.ps = ps
        self._memo: dict[tuple[int, ...], float] = {}

    def dim(self, indices: tuple[int, ...]) -> float:
        got = self._memo.get(indices)
        if got is None:
            got = kernel_intersection_dim(self.ps, indices)
            self._memo[indices] = got
        return got


def general_ie_weight(ps: ProjectorSet, polymer: Sequence[int],
                      cache: _KernelDimCache | None = None,
                      subset_cap: int = 20) -> float:
    """Alternating sum over subsets of the polymer of kernel-intersection
    dimensions; the empty subset contributes the full space, 1."""
    polymer = tuple(sorted(polymer))
    if len(polymer) > subset_cap:
        raise ResourceCapExceeded(
            f"polymer of size {len(polymer)} needs 2^{len(polymer)} kernel "
            f"computations (cap {subset_cap})")
    if cache is None:
        cache = _KernelDimCache(ps)
    total = 0.0
    t = len(polymer)
    for mask in range(1 << t):
        subset = tuple(polymer[i] for i in range(t) if mask >> i & 1)
        term = cache.dim(subset) if subset else 1.0
        total += -term if mask.bit_count() % 2 else term
    return -total if t % 2 else total


@dataclass
class StabilityReport:
    """Observed inclusion-exclusion sums for connected sets up to a size cap.

    The certified guarantee's hypothesis quantifies over every subset; only
    connected sets up to the cap (what the truncated expansion consumes) are
    checked, the rest is assumed.
    """

    size_cap: int
    delta: float
    threshold: float
    max_abs_root_by_size: dict[int, float]
    violations: list[tuple[tuple[int, ...], float, float]]

    @property
    def passed(self) -> bool:
        return not self.violations

    def as_check(self) -> ConditionCheck:
        observed = max(self.max_abs_root_by_size.values(), default=0.0)
        detail = (f"max |IE sum|^(1/|U|) = {observed:.6g} vs eta = "
                  f"{self.threshold:.6g} over connected U with |U| <= "
                  f"{self.size_cap}; larger and disconnected U assumed")
        return ConditionCheck("stability", self.passed,
                              self.threshold - observed, detail)


def stability_check(ps: ProjectorSet, size_cap: int, delta: float, *,
                    oracle: WeightOracle | None = None,
                    threads: int = 1) -> StabilityReport:
    """Check the inclusion-exclusion stability bound on connected sets.

    The checked quantity for a connected U is exactly the polymer weight
    magnitude |w_U| of the general-projector polymer model.
    """
    graph = support_dependency_graph(ps)
    if oracle is None:
        cache = _KernelDimCache(ps)
        oracle = WeightOracle(lambda p: general_ie_weight(ps, p, cache))
    rep = check_weight_condition(graph, oracle, size_cap, delta,
                                 threads=threads)
    return StabilityReport(size_cap, delta, rep.threshold,
                           rep.max_abs_root_by_size,
                           [(p, aw, allowed) for p, aw, allowed in rep.violations])


def approx_dim_general(ps: ProjectorSet, epsilon: float, delta: float, *,
                       force: bool = False, threads: int = 1,
                       max_order: int = DEFAULT_MAX_ORDER) -> DimensionResult:
    """FPTAS for the normalized kernel-intersection dimension of general
    projectors, conditional on the global stability hypothesis at the given
    delta (verified on connected sets up to the truncation order)."""
    graph = support_dependency_graph(ps)
    cache = _KernelDimCache(ps)
    oracle = WeightOracle(lambda p: general_ie_weight(ps, p, cache))
    m = choose_truncation_order(graph.vertex_count, graph.max_degree(),
                                delta, epsilon)
    if m > max_order:
        raise ResourceCapExceeded(
            f"truncation order {m} exceeds cap {max_order}; "
            "increase delta or epsilon, or raise the cap")
    stab = stability_check(ps, m, delta, oracle=oracle, threads=threads)
    if not stab.passed and not force:
        u, aw, allowed = stab.violations[0]
        raise HypothesisViolation(
            f"stability condition fails at connected set {u}: "
            f"|IE sum| = {aw:.6g} > {allowed:.6g}", [stab.as_check()])
    approx = approx_partition_function(
        graph, oracle, epsilon, delta, force=force, threads=threads,
        max_order=max_order, extra_checks=[stab.as_check()])
    normalized = approx.real_value()
    chi = greedy_coloring(graph).num_colors
    return DimensionResult(approx, normalized,
                           normalized * ps.d ** ps.qudit_count,
                           chi, "general-stability", delta)


def suggest_delta_general(ps: ProjectorSet, epsilon: float, *,
                          initial_probe: int = 3, safety: float = 0.02,
                          max_order: int = DEFAULT_MAX_ORDER) -> float:
    """Near-largest delta consistent with the observed inclusion-exclusion
    decay, backed off by ``safety`` so the stability check is not knife-edge.

    Probes connected sets up to the truncation order the suggestion itself
    implies; the result certifies nothing beyond the probed sizes.
    """
    graph = support_dependency_graph(ps)
    dmax = graph.max_degree()
    cache = _KernelDimCache(ps)
    oracle = WeightOracle(lambda p: general_ie_weight(ps, p, cache))
    probe = max(1, initial_probe)
    while True:
        rep = check_weight_condition(graph, oracle, probe, 0.0)
        observed = max(rep.max_abs_root_by_size.values(), default=0.0)
        if observed <= 0.0:
            return _DELTA_CEILING
        delta = min(certified_delta(observed, dmax) - safety, _DELTA_CEILING)
        if delta <= 0.0:
            return delta
        m = choose_truncation_order(graph.vertex_count, dmax, delta, epsilon)
        if m <= probe or probe >= max_order:
            return delta
        probe = min(m, max_order)


# ---------------------------------------------------------------------------
# Detectability

@dataclass
class DetectabilityParams:
    """Inputs of the detectability pipeline: number of rounds, coloring,
    spectral gap (exact or a certified lower bound) and target epsilon."""

    t: int
    epsilon: float
    coloring: Coloring | None = None
    lambda_star: float | None = None


@dataclass
class AffineResult:
    """Affine approximation z to the kernel-intersection dimension.

    |z - dim| <= relative_coefficient * dim + additive_part, where the first
    term's dim is unknown; worst_case_total bounds the sum using dim <= 1.
    """

    z: float
    relative_coefficient: float
    additive_part: float
    worst_case_total: float
    lambda_star: float
    t: int
    chi_used: int
    approx: ApproxResult
    absolute_z: float
    delta_requested: float


def product_vertex_order(coloring: Coloring, t: int, polymer: Sequence[int]) -> list[int]:
    """Base-graph vertices of a product-graph polymer, in the lexicographic
    (round, color, vertex) product order."""
    decorated = []
    for pv in polymer:
        v, tau = divmod(pv, t)
        decorated.append((tau, coloring.class_of[v], v))
    decorated.sort()
    return [v for _, _, v in decorated]


def detectability_weight(ps: ProjectorSet, coloring: Coloring, t: int,
                         polymer: Sequence[int]) -> float:
    """Weight of a polymer of the round-expanded product graph: signed
    normalized trace of the ordered projector product."""
    order = product_vertex_order(coloring, t, polymer)
    tr = normalized_product_trace(ps, order)
    return -tr if len(polymer) % 2 else tr


def detectability_additive_part(epsilon: float, lambda_star: float, chi: int,
                                t: int) -> float:
    return (1.0 + epsilon) * (1.0 / (1.0 + lambda_star / chi ** 2)) ** (t / 2.0)


def approx_dim_detectability(ps: ProjectorSet, params: DetectabilityParams,
                             delta: float, *, force: bool = False,
                             threads: int = 1,
                             max_order: int = DEFAULT_MAX_ORDER) -> AffineResult:
    """Affine approximation of the kernel-intersection dimension via the
    detectability trace, computed by the cluster engine on the strong product
    of the dependency graph with a complete graph on t rounds."""
    t = params.t
    if t < 1:
        raise ValueError("t must be a positive integer")
    graph = support_dependency_graph(ps)
    col = params.coloring if params.coloring is not None else greedy_coloring(graph)
    if params.coloring is not None:
        col.assert_proper(graph)
    chi = max(col.num_colors, 1)
    dmax = graph.max_degree()
    product_base = 2 * t * (dmax + 1) - 1
    threshold = (1.0 / (math.exp(1.0 + delta) * product_base)) ** (t * chi)
    rank_chk, worst_rank = _rank_check(
        ps, delta, dmax, chi, name="detectability-rank-condition",
        threshold=threshold)
    checks = [rank_chk]
    if not rank_chk.passed and not force:
        raise HypothesisViolation(
            "detectability rank condition fails: " + rank_chk.detail, checks)
    lam = params.lambda_star
    if lam is None:
        lam = spectral_gap_or_error(ps)
    product = strong_product_with_complete(graph, t)
    delta_used = _holder_delta(worst_rank, t * chi, product.max_degree(),
                               delta, rank_chk.passed)
    oracle = WeightOracle(lambda p: detectability_weight(ps, col, t, p))
    approx = approx_partition_function(
        product, oracle, params.epsilon, delta_used, force=force,
        threads=threads, max_order=max_order, extra_checks=checks)
    z = approx.real_value()
    additive = detectability_additive_part(params.epsilon, lam, chi, t)
    return AffineResult(
        z=z, relative_coefficient=params.epsilon, additive_part=additive,
        worst_case_total=params.epsilon + additive, lambda_star=lam, t=t,
        chi_used=chi, approx=approx, absolute_z=z * ps.d ** ps.qudit_count,
        delta_requested=delta)


def spectral_gap_or_error(ps: ProjectorSet) -> float:
    try:
        return spectral_gap(ps)
    except ResourceCapExceeded as exc:
        raise ResourceCapExceeded(
            str(exc) + " (detectability needs lambda_star; pass a certified "
            "lower bound)") from None
