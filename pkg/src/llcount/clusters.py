"""Abstract polymer models on a host graph and the truncated cluster expansion.

Polymers are connected induced subgraphs of a host ``DependencyGraph``,
identified by their sorted vertex tuple.  Two polymers are compatible exactly
when their vertex sets are disjoint and no host edge joins them.  A cluster is
an ordered tuple of polymers whose incompatibility graph is connected; the
expansion sums, over clusters of bounded total size, the product of polymer
weights times the Ursell function of the incompatibility graph.

Clusters are stored as sorted multisets together with the number of distinct
orderings, which is the multiplicity of the multiset among ordered tuples.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .errors import HypothesisViolation, NumericFailure, ResourceCapExceeded
from .graphs import DependencyGraph, enumerate_connected_subgraphs

Polymer = tuple[int, ...]

# Ursell values beyond this order would need ~3^m subset-sieve work per
# distinct incompatibility pattern; refuse rather than stall.
DEFAULT_MAX_ORDER = 14


def incompatible(a: Polymer, b: Polymer, g: DependencyGraph) -> bool:
    """True iff the polymers share a vertex or a host edge joins them.

    Every polymer is incompatible with itself (its vertex set meets itself).
    """
    sa = frozenset(a)
    if sa.intersection(b):
        return True
    for v in b:
        if g.neighbor_set(v) & sa:
            return True
    return False


class WeightOracle:
    """Maps a polymer to a complex weight; pure in the vertex set.

    ``decay_base`` is the claimed eta with |w_gamma| <= eta^|gamma|, used only
    for reporting.  Evaluations are memoized by polymer tuple, so the oracle
    is safe for concurrent use (pure function plus an idempotent cache).
    """

    def __init__(self, fn: Callable[[Polymer], complex], decay_base: float | None = None):
        self._fn = fn
        self.decay_base = decay_base
        self._memo: dict[Polymer, complex] = {}

    def weight(self, polymer: Polymer):
        w = self._memo.get(polymer)
        if w is None:
            w = self._fn(polymer)
            self._memo[polymer] = w
        return w


@dataclass(frozen=True)
class Cluster:
    """A sorted multiset of polymers with connected incompatibility graph."""

    polymers: tuple[Polymer, ...]
    total_size: int
    orderings: int
    incompatibility_masks: tuple[int, ...]


# ---------------------------------------------------------------------------
# Ursell function

_URSELL_MEMO: dict[tuple[int, ...], Fraction] = {}


def _connected_masks(masks: Sequence[int]) -> bool:
    t = len(masks)
    seen = 1
    stack = [0]
    while stack:
        v = stack.pop()
        row = masks[v] & ~seen
        while row:
            low = row & -row
            seen |= low
            stack.append(low.bit_length() - 1)
            row ^= low
    return seen == (1 << t) - 1


def _ursell_from_masks(masks: tuple[int, ...]) -> Fraction:
    t = len(masks)
    if t == 1:
        return Fraction(1)
    full = (1 << t) - 1
    if all(masks[v] == full ^ (1 << v) for v in range(t)):
        # complete graph: matches the log(1+x) series coefficient
        return Fraction((-1) ** (t - 1), t)
    cached = _URSELL_MEMO.get(masks)
    if cached is not None:
        return cached
    # Subset sieve: q[W] = 1 iff W induces no edge; c[W] = signed count of
    # spanning connected edge sets on W, via peeling the component of the
    # lowest vertex.  Runs in O(3^t).
    size = 1 << t
    q = [0] * size
    c = [0] * size
    q[0] = 1
    for w in range(1, size):
        low = w & -w
        v = low.bit_length() - 1
        rest = w ^ low
        q[w] = q[rest] if (masks[v] & rest) == 0 else 0
        if rest == 0:
            c[w] = 1
            continue
        acc = 0
        sub = rest
        while True:
            w1 = sub | low
            if w1 != w:
                acc += c[w1] * q[w ^ w1]
            if sub == 0:
                break
            sub = (sub - 1) & rest
        c[w] = q[w] - acc
    result = Fraction(c[full], math.factorial(t))
    _URSELL_MEMO[masks] = result
    return result


def ursell(h: DependencyGraph) -> Fraction:
    """Exact Ursell function of a connected graph.

    phi(H) = (1/|H|!) * sum over spanning connected edge sets S of (-1)^|S|.
    Disconnected input is rejected (phi would be 0; treat as a caller bug).
    """
    if h.vertex_count < 1:
        raise ValueError("Ursell function needs at least one vertex")
    masks = tuple(sum(1 << w for w in h.neighbors(v)) for v in h.vertices())
    if not _connected_masks(masks):
        raise ValueError("Ursell function of a disconnected graph")
    return _ursell_from_masks(masks)


# ---------------------------------------------------------------------------
# Cluster enumeration

def enumerate_clusters(g: DependencyGraph, m: int) -> Iterator[Cluster]:
    """Yield every cluster of total size <= m exactly once, deterministically.

    A cluster's polymers all lie inside the (connected) union of its vertex
    sets, so enumeration anchors each cluster at that union: for every
    connected set U of at most m vertices, emit the polymer multisets inside U
    that cover U and have a connected incompatibility graph.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    unions = sorted(enumerate_connected_subgraphs(g, m))
    for union in unions:
        yield from _clusters_with_union(g, union, m)


def _polymers_inside(g: DependencyGraph, union: Polymer) -> list[Polymer]:
    # Connected subsets of the induced subgraph G[U]; connectivity of a subset
    # of U is the same in G[U] as in G, so enumerate on the induced graph.
    local_index = {v: i for i, v in enumerate(union)}
    induced = DependencyGraph(
        len(union),
        [[local_index[w] for w in g.neighbors(v) if w in local_index] for v in union])
    out = [tuple(union[i] for i in p)
           for p in enumerate_connected_subgraphs(induced, len(union))]
    out.sort()
    return out


def _clusters_with_union(g: DependencyGraph, union: Polymer, m: int) -> Iterator[Cluster]:
    uset = set(union)
    polymers = _polymers_inside(g, union)
    sizes = [len(p) for p in polymers]
    need = len(union)
    chosen: list[int] = []

    def rec(start: int, covered: set[int], total: int) -> Iterator[Cluster]:
        if covered == uset:
            cluster = _finish_cluster(g, polymers, chosen)
            if cluster is not None:
                yield cluster
        for i in range(start, len(polymers)):
            size = sizes[i]
            new_total = total + size
            if new_total > m:
                continue
            new_covered = covered | set(polymers[i])
            if new_total + (need - len(new_covered)) > m:
                continue
            chosen.append(i)
            yield from rec(i, new_covered, new_total)
            chosen.pop()

    yield from rec(0, set(), 0)


def _finish_cluster(g: DependencyGraph, polymers: list[Polymer],
                    chosen: list[int]) -> Cluster | None:
    t = len(chosen)
    masks = [0] * t
    for i in range(t):
        pi = polymers[chosen[i]]
        for j in range(i + 1, t):
            pj = polymers[chosen[j]]
            if chosen[i] == chosen[j] or incompatible(pi, pj, g):
                masks[i] |= 1 << j
                masks[j] |= 1 << i
    if not _connected_masks(masks):
        return None
    counts: dict[int, int] = {}
    for i in chosen:
        counts[i] = counts.get(i, 0) + 1
    orderings = math.factorial(t)
    for k in counts.values():
        orderings //= math.factorial(k)
    tuple_polymers = tuple(polymers[i] for i in chosen)
    return Cluster(tuple_polymers, sum(len(p) for p in tuple_polymers),
                   orderings, tuple(masks))


# ---------------------------------------------------------------------------
# Truncated expansion and the approximation pipeline

class _KahanComplex:
    """Compensated complex accumulator for a reproducible summation order."""

    __slots__ = ("re", "im", "cre", "cim")

    def __init__(self):
        self.re = 0.0
        self.im = 0.0
        self.cre = 0.0
        self.cim = 0.0

    def add(self, z: complex) -> None:
        y = z.real - self.cre
        t = self.re + y
        self.cre = (t - self.re) - y
        self.re = t
        y = z.imag - self.cim
        t = self.im + y
        self.cim = (t - self.im) - y
        self.im = t

    def total(self) -> complex:
        return complex(self.re, self.im)


def _as_complex(w) -> complex:
    if isinstance(w, Fraction):
        return complex(float(w))
    return complex(w)


def _evaluate_weights(oracle: WeightOracle, polymers: Sequence[Polymer], threads: int) -> None:
    if threads > 1 and len(polymers) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(oracle.weight, polymers))
    else:
        for p in polymers:
            oracle.weight(p)


def _sum_clusters(clusters: Sequence[Cluster], oracle: WeightOracle, *,
                  threads: int = 1, exact: bool = False):
    distinct = sorted({p for c in clusters for p in c.polymers})
    _evaluate_weights(oracle, distinct, threads)
    if exact:
        total = Fraction(0)
        for c in clusters:
            coeff = _ursell_from_masks(c.incompatibility_masks) * c.orderings
            prod = Fraction(1)
            for p in c.polymers:
                prod *= Fraction(oracle.weight(p))
            total += coeff * prod
        return total
    acc = _KahanComplex()
    for c in clusters:
        coeff = float(_ursell_from_masks(c.incompatibility_masks) * c.orderings)
        prod = complex(1.0)
        for p in c.polymers:
            prod *= _as_complex(oracle.weight(p))
        acc.add(coeff * prod)
    return acc.total()


def truncated_expansion(g: DependencyGraph, oracle: WeightOracle, m: int, *,
                        threads: int = 1, exact: bool = False):
    """Truncated cluster expansion of log Z to total cluster size m.

    Returns a complex number, or an exact Fraction when ``exact`` is set (the
    oracle must then return rationals).  The summation order is fixed, so the
    result is bit-identical for any thread count.
    """
    return _sum_clusters(list(enumerate_clusters(g, m)), oracle,
                         threads=threads, exact=exact)


def weight_decay_threshold(delta: float, max_degree: int) -> float:
    """Per-size weight bound eta = 1 / (e^(1+delta) * (2*max_degree + 1))."""
    return 1.0 / (math.exp(1.0 + delta) * (2 * max_degree + 1))


def certified_delta(eta: float, max_degree: int) -> float:
    """Largest delta whose decay threshold is still >= eta (may be <= 0)."""
    if eta <= 0.0:
        return math.inf
    return math.log(1.0 / (eta * (2 * max_degree + 1))) - 1.0


def convergence_bound(graph_order: int, max_degree: int, delta: float, m: int) -> float:
    """Certified tail bound on |T_m - log Z| under the decay condition."""
    c = (max_degree + 1) / (2 * max_degree + 1)
    return c * graph_order * math.exp(-delta * m)


def choose_truncation_order(graph_order: int, max_degree: int, delta: float,
                            epsilon: float) -> int:
    """Smallest m whose tail bound is at most log(1+epsilon).

    Exponentiating then gives |Z_hat / Z - 1| <= epsilon.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    target = math.log1p(epsilon)
    if graph_order == 0:
        return 1
    c = (max_degree + 1) / (2 * max_degree + 1)
    m = max(1, math.ceil(math.log(c * graph_order / target) / delta))
    while m > 1 and convergence_bound(graph_order, max_degree, delta, m - 1) <= target:
        m -= 1
    while convergence_bound(graph_order, max_degree, delta, m) > target:
        m += 1
    return m


@dataclass(frozen=True)
class ConditionCheck:
    """One hypothesis check; margin >= 0 iff the check passed."""

    name: str
    passed: bool
    margin: float
    detail: str


@dataclass
class WeightConditionReport:
    """Observed per-size weight decay against the required threshold."""

    delta: float
    max_degree: int
    threshold: float
    verified_up_to: int
    max_abs_root_by_size: dict[int, float]
    worst_polymer_by_size: dict[int, Polymer]
    violations: list[tuple[Polymer, float, float]]

    @property
    def passed(self) -> bool:
        return not self.violations

    def as_check(self) -> ConditionCheck:
        observed = max(self.max_abs_root_by_size.values(), default=0.0)
        detail = (f"max |w|^(1/|polymer|) = {observed:.6g} vs eta = "
                  f"{self.threshold:.6g}, sizes <= {self.verified_up_to}"
                  " (sizes beyond the truncation order are assumed)")
        return ConditionCheck("weight-decay", self.passed,
                              self.threshold - observed, detail)


def check_weight_condition(g: DependencyGraph, oracle: WeightOracle, m: int,
                           delta: float, *, max_degree: int | None = None,
                           threads: int = 1) -> WeightConditionReport:
    """Verify |w_gamma| <= eta^|gamma| for every polymer of size <= m.

    The condition over all sizes cannot be checked exhaustively; callers
    assert it through application-level hypotheses.
    """
    dmax = g.max_degree() if max_degree is None else max_degree
    eta = weight_decay_threshold(delta, dmax)
    polymers = sorted(enumerate_connected_subgraphs(g, m))
    _evaluate_weights(oracle, polymers, threads)
    max_root: dict[int, float] = {}
    worst: dict[int, Polymer] = {}
    violations: list[tuple[Polymer, float, float]] = []
    for p in polymers:
        size = len(p)
        aw = abs(_as_complex(oracle.weight(p)))
        root = aw ** (1.0 / size)
        if root > max_root.get(size, -1.0):
            max_root[size] = root
            worst[size] = p
        allowed = eta ** size
        if aw > allowed * (1.0 + 1e-9):
            violations.append((p, aw, allowed))
    return WeightConditionReport(delta, dmax, eta, m, max_root, worst, violations)


@dataclass
class ApproxResult:
    """Approximate value with its certified error provenance."""

    value: complex
    log_value: complex
    truncation_order: int
    additive_log_error_bound: float
    epsilon: float
    delta: float
    graph_order: int
    max_degree: int
    condition_report: WeightConditionReport | None
    checks: list[ConditionCheck] = field(default_factory=list)
    forced: bool = False
    cluster_count: int = 0
    elapsed: float = 0.0
    exact_log: Fraction | None = None

    @property
    def value_lower_bound(self) -> float:
        """Certified lower bound on |Z|; positive, hence Z != 0."""
        return abs(self.value) * math.exp(-self.additive_log_error_bound)

    def real_value(self, imag_tol: float = 1e-8) -> float:
        mag = max(1.0, abs(self.value))
        if abs(self.value.imag) > imag_tol * mag:
            raise NumericFailure(
                f"imaginary residue {self.value.imag:.3e} exceeds tolerance")
        return self.value.real


def approx_partition_function(g: DependencyGraph, oracle: WeightOracle,
                              epsilon: float, delta: float, *,
                              max_degree: int | None = None,
                              force: bool = False, threads: int = 1,
                              exact: bool = False,
                              max_order: int = DEFAULT_MAX_ORDER,
                              extra_checks: Sequence[ConditionCheck] = ()) -> ApproxResult:
    """Multiplicative epsilon-approximation of the polymer partition function.

    The guarantee is conditional on the weight-decay bound holding at every
    polymer size; sizes up to the truncation order are verified and a
    violation aborts unless ``force`` is set.
    """
    start = time.perf_counter()
    dmax = g.max_degree() if max_degree is None else max_degree
    m = choose_truncation_order(g.vertex_count, dmax, delta, epsilon)
    if m > max_order:
        raise ResourceCapExceeded(
            f"truncation order {m} exceeds cap {max_order}; "
            "increase delta or epsilon, or raise the cap")
    report = check_weight_condition(g, oracle, m, delta,
                                    max_degree=dmax, threads=threads)
    checks = list(extra_checks) + [report.as_check()]
    if report.violations and not force:
        p, aw, allowed = report.violations[0]
        raise HypothesisViolation(
            f"weight-decay condition fails at polymer {p}: "
            f"|w| = {aw:.6g} > {allowed:.6g}", checks)
    clusters = list(enumerate_clusters(g, m))
    log_value = _sum_clusters(clusters, oracle, threads=threads)
    exact_log = None
    if exact:
        exact_log = _sum_clusters(clusters, oracle, exact=True)
        log_value = complex(float(exact_log))
    if not (math.isfinite(log_value.real) and math.isfinite(log_value.imag)):
        raise NumericFailure("nonfinite truncated expansion value")
    value = _cexp(log_value)
    bound = convergence_bound(g.vertex_count, dmax, delta, m)
    return ApproxResult(
        value=value, log_value=log_value, truncation_order=m,
        additive_log_error_bound=bound, epsilon=epsilon, delta=delta,
        graph_order=g.vertex_count, max_degree=dmax,
        condition_report=report, checks=checks,
        forced=bool(report.violations), cluster_count=len(clusters),
        elapsed=time.perf_counter() - start, exact_log=exact_log)


def _cexp(z: complex) -> complex:
    r = math.exp(z.real)
    return complex(r * math.cos(z.imag), r * math.sin(z.imag))
