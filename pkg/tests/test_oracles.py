"""Brute-force oracle behavior: exact values, caps, and the dyadic fast path."""

import random
from fractions import Fraction

import numpy as np
import pytest

from llcount.cnf import CnfFormula, EventTableOracle, parse_dimacs
from llcount.errors import ResourceCapExceeded
from llcount.graphs import build_graph, greedy_coloring
from llcount.oracles import (OracleBudget, brute_force_polymer_z,
                             brute_force_sat_count, exact_detectability_trace,
                             exact_dimension_full_diagonalization,
                             exact_inclusion_exclusion_probability,
                             ursell_bruteforce, _ie_cnf_fraction)
from llcount.projectors import LocalProjector, ProjectorSet, support_dependency_graph

from gen import random_diag_projector, random_rank_projector


def test_brute_force_polymer_z_examples():
    p3 = build_graph(3, [(0, 1), (1, 2)])
    assert brute_force_polymer_z(p3, lambda p: 0.0) == 1.0

    single = build_graph(1, [])
    x = 0.25
    assert brute_force_polymer_z(single, lambda p: x) == pytest.approx(1 + x)

    # two compatible polymers: 1 + x + y + xy; incompatible: 1 + x + y
    two = build_graph(2, [])
    weights = {(0,): 0.1, (1,): 0.2}
    z = brute_force_polymer_z(two, lambda p: weights.get(tuple(p), 0.0))
    assert z == pytest.approx(1 + 0.1 + 0.2 + 0.02)

    joined = build_graph(2, [(0, 1)])
    weights = {(0,): 0.1, (1,): 0.2, (0, 1): 0.0}
    z = brute_force_polymer_z(joined, lambda p: weights[tuple(p)])
    assert z == pytest.approx(1 + 0.1 + 0.2)


def test_brute_force_polymer_z_cap():
    g = build_graph(17, [])
    with pytest.raises(ResourceCapExceeded):
        brute_force_polymer_z(g, lambda p: 0.0)


def test_inclusion_exclusion_examples():
    f = CnfFormula(3, ())
    assert exact_inclusion_exclusion_probability(f) == 1

    one_clause = CnfFormula(3, ((1, 2, 3),))
    assert exact_inclusion_exclusion_probability(one_clause) == Fraction(7, 8)

    disjoint = CnfFormula(4, ((1, 2), (3, 4)))
    got = exact_inclusion_exclusion_probability(disjoint)
    assert got == Fraction(9, 16)
    # cross-check by enumerating all 16 assignments
    count = sum(all(any(((a >> (abs(l) - 1)) & 1) == (1 if l > 0 else 0)
                        for l in c) for c in disjoint.clauses)
                for a in range(16))
    assert got == Fraction(count, 16)


def test_inclusion_exclusion_dyadic_equals_fraction_path():
    rng = random.Random(17)
    for _ in range(10):
        n = rng.randint(3, 10)
        clauses = []
        for _ in range(rng.randint(1, 6)):
            width = rng.randint(1, min(4, n))
            vars_ = rng.sample(range(1, n + 1), width)
            clauses.append(tuple(v if rng.random() < 0.5 else -v
                                 for v in vars_))
        f = CnfFormula(n, tuple(clauses))
        u = tuple(range(len(clauses)))
        fast = exact_inclusion_exclusion_probability(f)
        slow = _ie_cnf_fraction(f, u)
        assert fast == slow


def test_inclusion_exclusion_event_table():
    g = build_graph(2, [(0, 1)])
    oracle = EventTableOracle(g, {(0,): 0.25, (1,): 0.25, (0, 1): 0.1}, 2)
    got = exact_inclusion_exclusion_probability(oracle)
    assert got == pytest.approx(1 - 0.25 - 0.25 + 0.1)


def test_inclusion_exclusion_cap():
    f = CnfFormula(30, tuple((i + 1,) for i in range(25)))
    with pytest.raises(ResourceCapExceeded):
        exact_inclusion_exclusion_probability(f)


def test_brute_force_sat_count_examples():
    assert brute_force_sat_count(CnfFormula(3, ())) == 8
    assert brute_force_sat_count(CnfFormula(1, ((1,),))) == 1
    f = parse_dimacs("p cnf 2 2\n1 2 0\n-1 2 0\n")
    assert brute_force_sat_count(f) == 2


def test_brute_force_sat_count_cap():
    with pytest.raises(ResourceCapExceeded):
        brute_force_sat_count(CnfFormula(30, ((1, 2),)))


def test_exact_dimension_examples():
    empty = ProjectorSet(2, 2, [])
    got = exact_dimension_full_diagonalization(empty)
    assert got.normalized_dim == 1.0 and got.lambda_star == 0.0

    p0 = np.array([[1, 0], [0, 0]], dtype=complex)
    single = ProjectorSet(2, 1, [LocalProjector((0,), p0)])
    got = exact_dimension_full_diagonalization(single)
    assert got.normalized_dim == pytest.approx(0.5)
    assert got.lambda_star == pytest.approx(1.0)


def test_exact_dimension_diagonal_path_matches_dense():
    rng = random.Random(23)
    projs = [LocalProjector((0, 1), random_diag_projector(rng, 2, 1)),
             LocalProjector((1, 2), random_diag_projector(rng, 2, 2))]
    diag_set = ProjectorSet(2, 3, projs)
    fast = exact_dimension_full_diagonalization(diag_set)
    # closed form by enumerating diagonal entries
    total = np.zeros(8)
    for p in projs:
        for a in range(8):
            if p.support == (0, 1):
                local = a >> 1
            else:
                local = a & 3
            total[a] += p.matrix[local, local].real
    want_dim = float(np.sum(total < 1e-9)) / 8.0
    assert fast.normalized_dim == pytest.approx(want_dim)

    # conjugating by local unitaries leaves the spectrum unchanged
    dense_set = ProjectorSet(2, 3, [
        LocalProjector(p.support, p.matrix + 0.0) for p in projs])
    dense = exact_dimension_full_diagonalization(dense_set)
    assert dense.normalized_dim == pytest.approx(fast.normalized_dim)
    assert dense.lambda_star == pytest.approx(fast.lambda_star)


def test_exact_detectability_trace_examples():
    rng = random.Random(29)
    m = random_rank_projector(rng, 3, 1)
    ps = ProjectorSet(2, 3, [LocalProjector((0, 1, 2), m)])
    col = greedy_coloring(support_dependency_graph(ps))
    for t in (1, 2, 5):
        assert exact_detectability_trace(ps, col, t) == pytest.approx(
            1.0 - 1.0 / 8.0, abs=1e-9)


def test_exact_detectability_trace_error_decreases():
    rng = random.Random(31)
    m1 = random_rank_projector(rng, 2, 1)
    m2 = random_rank_projector(rng, 2, 1)
    ps = ProjectorSet(2, 3, [LocalProjector((0, 1), m1),
                             LocalProjector((1, 2), m2)])
    col = greedy_coloring(support_dependency_graph(ps))
    exact = exact_dimension_full_diagonalization(ps)
    errors = [exact_detectability_trace(ps, col, t) - exact.normalized_dim
              for t in (1, 2, 4, 8)]
    assert all(e >= -1e-9 for e in errors)
    assert all(a >= b - 1e-9 for a, b in zip(errors, errors[1:]))


def test_ursell_bruteforce_examples():
    k2 = build_graph(2, [(0, 1)])
    k3 = build_graph(3, [(0, 1), (1, 2), (0, 2)])
    c4 = build_graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    single = build_graph(1, [])
    disconnected = build_graph(3, [(0, 1)])
    assert ursell_bruteforce(k2) == Fraction(-1, 2)
    assert ursell_bruteforce(k3) == Fraction(1, 3)
    assert ursell_bruteforce(c4) == Fraction(-1, 8)
    assert ursell_bruteforce(single) == 1
    assert ursell_bruteforce(disconnected) == 0


def test_budget_from_env(monkeypatch):
    monkeypatch.setenv("LLCOUNT_MAX_EVENTS", "5")
    monkeypatch.setenv("LLCOUNT_MAX_VARIABLES", "10")
    budget = OracleBudget.from_env()
    assert budget.max_events == 5
    assert budget.max_variables == 10
    assert budget.max_dense_dim == 2 ** 14
    f = CnfFormula(3, tuple((i % 3 + 1,) for i in range(6)))
    with pytest.raises(ResourceCapExceeded):
        exact_inclusion_exclusion_probability(f, budget=budget)
