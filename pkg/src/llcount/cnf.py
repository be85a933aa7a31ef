"""Probability-of-intersection pipeline: generic event families via a joint
complement-probability table, and the concrete k-CNF satisfying-assignment
counter.

Events are indexed by vertices of a strong dependency graph; disconnected
parts of the graph must correspond to fully independent event sets (for the
table path this is an unverifiable promise of the input).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .clusters import (ApproxResult, ConditionCheck, WeightOracle,
                       approx_partition_function, certified_delta,
                       weight_decay_threshold)
from .errors import HypothesisViolation, SpecParseError
from .graphs import Coloring, DependencyGraph, build_graph, greedy_coloring


@dataclass(frozen=True)
class CnfFormula:
    """CNF over variables 1..variable_count with DIMACS-style signed literals.

    Each clause is a tuple of nonzero ints with pairwise distinct variables.
    """

    variable_count: int
    clauses: tuple[tuple[int, ...], ...]

    @property
    def clause_count(self) -> int:
        return len(self.clauses)

    def uniform_k(self) -> int | None:
        """Common clause width, or None if widths differ (or no clauses)."""
        widths = {len(c) for c in self.clauses}
        if len(widths) == 1:
            return widths.pop()
        return None

    def min_width(self) -> int | None:
        return min((len(c) for c in self.clauses), default=None)


def parse_dimacs(text: str) -> CnfFormula:
    """Parse DIMACS CNF text; raises SpecParseError with a line number.

    A clause mentioning the same variable twice is rejected.  The `p cnf`
    header is optional; without it the variable count is inferred.
    """
    declared_vars = None
    clauses: list[tuple[int, ...]] = []
    max_var = 0
    current: list[int] = []
    current_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s.startswith("c") or s.startswith("%"):
            continue
        if s.startswith("p"):
            parts = s.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise SpecParseError(f"bad problem line {s!r}", lineno)
            try:
                declared_vars = int(parts[2])
                int(parts[3])
            except ValueError:
                raise SpecParseError(f"bad problem line {s!r}", lineno) from None
            continue
        for tok in s.split():
            try:
                lit = int(tok)
            except ValueError:
                raise SpecParseError(f"bad literal {tok!r}", lineno) from None
            if lit == 0:
                _append_clause(clauses, current, current_line or lineno)
                current = []
                current_line = None
                continue
            if current_line is None:
                current_line = lineno
            current.append(lit)
            max_var = max(max_var, abs(lit))
    if current:
        _append_clause(clauses, current, current_line)
    n = declared_vars if declared_vars is not None else max_var
    if max_var > n:
        raise SpecParseError(
            f"variable {max_var} exceeds declared count {n}")
    return CnfFormula(n, tuple(clauses))


def _append_clause(clauses: list, literals: list[int], lineno: int) -> None:
    if not literals:
        raise SpecParseError("empty clause", lineno)
    seen = set()
    for lit in literals:
        v = abs(lit)
        if v in seen:
            raise SpecParseError(f"variable {v} repeated in clause", lineno)
        seen.add(v)
    clauses.append(tuple(literals))


def cnf_dependency_graph(f: CnfFormula) -> DependencyGraph:
    """One vertex per clause; an edge iff the clauses share a variable."""
    var_sets = [frozenset(abs(l) for l in c) for c in f.clauses]
    edges = []
    for i in range(len(var_sets)):
        for j in range(i + 1, len(var_sets)):
            if var_sets[i] & var_sets[j]:
                edges.append((i, j))
    return build_graph(len(f.clauses), edges)


def clause_forcing(clause: Sequence[int]) -> tuple[int, int]:
    """Bit-encoded assignment forced by falsifying the clause.

    Literal +v forces v=0, -v forces v=1; returned as (mask, pattern) ints
    with bit v-1 set in mask, and in pattern when the forced value is 1.
    """
    mask = 0
    pattern = 0
    for lit in clause:
        bit = 1 << (abs(lit) - 1)
        mask |= bit
        if lit < 0:
            pattern |= bit
    return mask, pattern


def joint_false_probability(f: CnfFormula, clause_indices: Sequence[int]) -> Fraction:
    """Exact probability that all listed clauses are simultaneously false."""
    mask = 0
    pattern = 0
    for i in clause_indices:
        cm, cp = clause_forcing(f.clauses[i])
        if (mask & cm) & (pattern ^ cp):
            return Fraction(0)
        mask |= cm
        pattern |= cp
    return Fraction(1, 1 << mask.bit_count())


def cnf_polymer_weight(f: CnfFormula, polymer: Sequence[int]) -> Fraction:
    """(-1)^|polymer| times the probability all clauses in it are false."""
    p = joint_false_probability(f, polymer)
    return -p if len(polymer) % 2 else p


class EventTableOracle:
    """Joint complement probabilities keyed by connected vertex sets.

    Backed by an explicit table (the events-spec file format); a lookup for a
    missing connected set is an input error.
    """

    def __init__(self, graph: DependencyGraph, table: dict[tuple[int, ...], float],
                 max_size: int):
        self.graph = graph
        self.table = dict(table)
        self.max_size = max_size

    def joint_complement_probability(self, vertices: Sequence[int]) -> float:
        key = tuple(sorted(vertices))
        if not key:
            return 1.0
        try:
            return self.table[key]
        except KeyError:
            raise SpecParseError(
                f"events table has no entry for connected set {key}; "
                f"declared max-size is {self.max_size}") from None

    def per_event_probabilities(self) -> list[float]:
        return [self.joint_complement_probability((v,))
                for v in self.graph.vertices()]


@dataclass
class ProbabilityResult:
    """Probability of the intersection of all events, with provenance."""

    approx: ApproxResult
    probability: float
    chi_used: int
    delta_requested: float


def _per_event_check(probs: Sequence[float], delta: float, max_degree: int,
                     chi: int) -> ConditionCheck:
    bound = weight_decay_threshold(delta, max_degree) ** chi
    worst = max(probs, default=0.0)
    detail = (f"max Pr[complement] = {worst:.6g} vs "
              f"(1/(e^(1+delta)(2D+1)))^chi = {bound:.6g} "
              f"(delta={delta}, D={max_degree}, chi={chi})")
    return ConditionCheck("per-event-probability", worst <= bound,
                          bound - worst, detail)


def k_condition_check(f: CnfFormula, delta: float, max_degree: int,
                      chi: int) -> ConditionCheck:
    """Width condition under which k-CNF counting is certified."""
    k = f.min_width()
    if k is None:
        return ConditionCheck("k-condition", True, math.inf, "no clauses")
    required = (chi / math.log(2)) * (math.log(2 * max_degree + 1) + 1 + delta)
    uniform = f.uniform_k()
    note = "" if uniform is not None else " (non-uniform widths; using min width)"
    detail = (f"k = {k} vs required {required:.4f} "
              f"(chi={chi}, D={max_degree}, delta={delta}){note}")
    return ConditionCheck("k-condition", k >= required, k - required, detail)


def approx_probability_intersection(source, epsilon: float, delta: float, *,
                                    coloring: Coloring | None = None,
                                    force: bool = False, threads: int = 1,
                                    exact: bool = False) -> ProbabilityResult:
    """Multiplicative epsilon-approximation of Pr[all events occur].

    ``source`` is a CnfFormula or an EventTableOracle.  The per-event
    complement probabilities must satisfy the coloring-exponent bound; when
    they do, the certified decay rate (which is at least the requested delta)
    is used to pick the truncation order.
    """
    if isinstance(source, CnfFormula):
        graph = cnf_dependency_graph(source)
        per_event = [float(joint_false_probability(source, (v,)))
                     for v in graph.vertices()]

        def weight_fn(polymer):
            return cnf_polymer_weight(source, polymer)
    elif hasattr(source, "joint_complement_probability"):
        # any oracle with a .graph and joint complement probabilities; the
        # strong-dependency factorization across disconnected parts is the
        # caller's (unverifiable) promise
        graph = source.graph
        per_event = [float(source.joint_complement_probability((v,)))
                     for v in graph.vertices()]
        exact = False

        def weight_fn(polymer):
            p = source.joint_complement_probability(polymer)
            return -p if len(polymer) % 2 else p
    else:
        raise TypeError("source must be a CnfFormula or an event oracle")

    if coloring is None:
        coloring = greedy_coloring(graph)
    else:
        coloring.assert_proper(graph)
    chi = coloring.num_colors
    dmax = graph.max_degree()
    check = _per_event_check(per_event, delta, dmax, chi)
    if not check.passed and not force:
        raise HypothesisViolation(
            "per-event probability bound fails: " + check.detail, [check])
    delta_used = _usable_delta(per_event, delta, dmax, chi, check.passed)
    oracle = WeightOracle(weight_fn)
    approx = approx_partition_function(
        graph, oracle, epsilon, delta_used, force=force, threads=threads,
        exact=exact, extra_checks=[check])
    return ProbabilityResult(approx, approx.real_value(), chi, delta)


_DELTA_CEILING = 50.0


def _usable_delta(per_event: Sequence[float], delta: float, max_degree: int,
                  chi: int, hypothesis_ok: bool) -> float:
    """Largest decay rate certified by the per-event bound via the coloring
    (Hoelder) weight bound; falls back to the requested delta."""
    if not hypothesis_ok:
        return delta
    worst = max(per_event, default=0.0)
    if worst <= 0.0:
        return max(delta, _DELTA_CEILING)
    eta = worst ** (1.0 / chi)
    return max(delta, min(certified_delta(eta, max_degree), _DELTA_CEILING))


@dataclass
class CountResult:
    """Approximate satisfying-assignment count."""

    approx: ApproxResult
    count: float
    probability: float
    variable_count: int
    chi_used: int
    delta_requested: float


def count_satisfying(f: CnfFormula, epsilon: float, delta: float, *,
                     coloring: Coloring | None = None, force: bool = False,
                     threads: int = 1, exact: bool = False) -> CountResult:
    """Approximate the number of satisfying assignments of a k-CNF.

    Requires the width condition k >= (chi/log 2)(log(2D+1)+1+delta); the
    count is 2^n times the approximate probability of satisfying all clauses.
    """
    graph = cnf_dependency_graph(f)
    col = coloring if coloring is not None else greedy_coloring(graph)
    if coloring is not None:
        col.assert_proper(graph)
    kcheck = k_condition_check(f, delta, graph.max_degree(), col.num_colors)
    if not kcheck.passed and not force:
        raise HypothesisViolation(
            "k-condition fails: " + kcheck.detail, [kcheck])
    prob = approx_probability_intersection(
        f, epsilon, delta, coloring=col, force=force, threads=threads,
        exact=exact)
    prob.approx.checks.insert(0, kcheck)
    count = math.ldexp(prob.probability, f.variable_count)
    return CountResult(prob.approx, count, prob.probability,
                       f.variable_count, prob.chi_used, delta)
