"""Text input formats.

Edge-list graphs::

    n m          header: vertex count, edge count
    u v          one line per edge, 0-based

Projector specs::

    d 2
    qudits 3
    projector
    support 0 1
    matrix
    <row-major rows: 2*side decimal numbers per row, re im pairs>
    end

Events specs (joint complement probabilities for connected vertex sets)::

    vertices 6
    edges 6
    u v          (edge lines)
    max-size 3
    prob 0 0.01
    prob 0,1 0.001

Weights specs are the same with ``weight KEY re [im]`` lines.  Keys are
comma-joined ascending vertex ids.  Every connected set up to max-size must
have an entry.  Colorings are ``v c`` lines, one per vertex.

All numbers are decimal with optional exponent; ``#`` starts a comment.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .clusters import WeightOracle
from .cnf import EventTableOracle
from .errors import SpecParseError
from .graphs import (Coloring, DependencyGraph, build_graph,
                     enumerate_connected_subgraphs)
from .projectors import LocalProjector, ProjectorSet, validate_projector


def _lines(text: str) -> Iterator[tuple[int, str]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if s:
            yield lineno, s


def _int(tok: str, lineno: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise SpecParseError(f"expected integer {what}, got {tok!r}", lineno) from None


def _float(tok: str, lineno: int, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise SpecParseError(f"expected number {what}, got {tok!r}", lineno) from None


def parse_edge_list(text: str) -> DependencyGraph:
    """Parse the `n m` / `u v` edge-list format."""
    lines = list(_lines(text))
    if not lines:
        raise SpecParseError("empty graph file")
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 2:
        raise SpecParseError("header must be 'n m'", lineno)
    n = _int(parts[0], lineno, "vertex count")
    m = _int(parts[1], lineno, "edge count")
    edges = []
    for lineno, s in lines[1:]:
        parts = s.split()
        if len(parts) != 2:
            raise SpecParseError("edge line must be 'u v'", lineno)
        u = _int(parts[0], lineno, "endpoint")
        v = _int(parts[1], lineno, "endpoint")
        try:
            build_graph(n, [(u, v)])
        except ValueError as exc:
            raise SpecParseError(str(exc), lineno) from None
        edges.append((u, v))
    if len(edges) != m:
        raise SpecParseError(f"header declares {m} edges, found {len(edges)}")
    return build_graph(n, edges)


def format_edge_list(g: DependencyGraph) -> str:
    out = [f"{g.vertex_count} {g.edge_count()}"]
    out.extend(f"{u} {v}" for u, v in g.edges())
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Projector specs

def parse_projector_spec(text: str, *, validate: bool = True,
                         tol: float = 1e-8) -> ProjectorSet:
    """Parse a projector-spec file into a validated ProjectorSet."""
    lines = list(_lines(text))
    pos = 0
    d = None
    qudits = None
    while pos < len(lines) and lines[pos][1].split()[0] in ("d", "qudits"):
        lineno, s = lines[pos]
        key, *rest = s.split()
        if len(rest) != 1:
            raise SpecParseError(f"'{key}' takes one value", lineno)
        if key == "d":
            d = _int(rest[0], lineno, "local dimension")
        else:
            qudits = _int(rest[0], lineno, "qudit count")
        pos += 1
    if d is None or qudits is None:
        raise SpecParseError("header must declare 'd' and 'qudits'")
    projectors = []
    while pos < len(lines):
        lineno, s = lines[pos]
        if s != "projector":
            raise SpecParseError(f"expected 'projector', got {s!r}", lineno)
        pos += 1
        if pos >= len(lines) or not lines[pos][1].startswith("support"):
            raise SpecParseError("projector block needs a 'support' line",
                                 lines[pos - 1][0])
        lineno, s = lines[pos]
        support = tuple(_int(tok, lineno, "qudit index") for tok in s.split()[1:])
        pos += 1
        if pos >= len(lines) or lines[pos][1] != "matrix":
            raise SpecParseError("projector block needs a 'matrix' line",
                                 lineno)
        pos += 1
        side = d ** len(support)
        rows = []
        for _ in range(side):
            if pos >= len(lines):
                raise SpecParseError(
                    f"matrix needs {side} rows, file ended early")
            lineno, s = lines[pos]
            toks = s.split()
            if len(toks) != 2 * side:
                raise SpecParseError(
                    f"matrix row needs {2 * side} numbers (re im pairs), "
                    f"got {len(toks)}", lineno)
            vals = [_float(t, lineno, "matrix entry") for t in toks]
            rows.append([complex(vals[2 * i], vals[2 * i + 1])
                         for i in range(side)])
            pos += 1
        if pos >= len(lines) or lines[pos][1] != "end":
            raise SpecParseError("projector block must close with 'end'",
                                 lines[pos - 1][0])
        pos += 1
        projectors.append(LocalProjector(support, np.array(rows, dtype=np.complex128)))
    try:
        ps = ProjectorSet(d, qudits, projectors)
    except ValueError as exc:
        raise SpecParseError(str(exc)) from None
    if validate:
        for i, p in enumerate(ps.projectors):
            diag = validate_projector(p, tol)
            if not diag.passed:
                raise SpecParseError(
                    f"projector {i} fails validation: hermiticity dev "
                    f"{diag.hermiticity_deviation:.3e}, idempotency dev "
                    f"{diag.idempotency_deviation:.3e}, spectrum dev "
                    f"{diag.spectrum_deviation:.3e}")
    return ps


def format_projector_spec(ps: ProjectorSet) -> str:
    out = [f"d {ps.d}", f"qudits {ps.qudit_count}"]
    for p in ps.projectors:
        out.append("projector")
        out.append("support " + " ".join(str(q) for q in p.support))
        out.append("matrix")
        for row in np.asarray(p.matrix):
            out.append("  ".join(f"{float(z.real)!r} {float(z.imag)!r}"
                                 for z in row))
        out.append("end")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Events and weights tables

def _parse_graph_block(lines: list[tuple[int, str]], pos: int):
    lineno, s = lines[pos]
    parts = s.split()
    if len(parts) != 2 or parts[0] != "vertices":
        raise SpecParseError("expected 'vertices N'", lineno)
    n = _int(parts[1], lineno, "vertex count")
    pos += 1
    lineno, s = lines[pos]
    parts = s.split()
    if len(parts) != 2 or parts[0] != "edges":
        raise SpecParseError("expected 'edges M'", lineno)
    m = _int(parts[1], lineno, "edge count")
    pos += 1
    edges = []
    for _ in range(m):
        if pos >= len(lines):
            raise SpecParseError(f"expected {m} edge lines, file ended early")
        lineno, s = lines[pos]
        parts = s.split()
        if len(parts) != 2:
            raise SpecParseError("edge line must be 'u v'", lineno)
        edges.append((_int(parts[0], lineno, "endpoint"),
                      _int(parts[1], lineno, "endpoint")))
        pos += 1
    try:
        graph = build_graph(n, edges)
    except ValueError as exc:
        raise SpecParseError(str(exc)) from None
    return graph, pos


def _parse_key(tok: str, lineno: int, n: int) -> tuple[int, ...]:
    try:
        key = tuple(int(t) for t in tok.split(","))
    except ValueError:
        raise SpecParseError(f"bad vertex-set key {tok!r}", lineno) from None
    if key != tuple(sorted(key)) or len(set(key)) != len(key):
        raise SpecParseError(
            f"key {tok!r} must list distinct ascending vertices", lineno)
    if key and not (0 <= key[0] and key[-1] < n):
        raise SpecParseError(f"key {tok!r} has a vertex out of range", lineno)
    return key


def _parse_table(lines, pos, keyword: str, graph: DependencyGraph):
    lineno, s = lines[pos]
    parts = s.split()
    if len(parts) != 2 or parts[0] != "max-size":
        raise SpecParseError("expected 'max-size K'", lineno)
    max_size = _int(parts[1], lineno, "max set size")
    if max_size < 1:
        raise SpecParseError("max-size must be at least 1", lineno)
    pos += 1
    table = {}
    while pos < len(lines):
        lineno, s = lines[pos]
        parts = s.split()
        if parts[0] != keyword:
            raise SpecParseError(f"expected '{keyword}' line, got {s!r}", lineno)
        if len(parts) not in (3, 4):
            raise SpecParseError(
                f"'{keyword}' line needs a key and one or two numbers", lineno)
        key = _parse_key(parts[1], lineno, graph.vertex_count)
        if len(key) > max_size:
            raise SpecParseError(
                f"key {parts[1]} exceeds declared max-size {max_size}", lineno)
        re = _float(parts[2], lineno, "value")
        im = _float(parts[3], lineno, "value") if len(parts) == 4 else 0.0
        if key in table:
            raise SpecParseError(f"duplicate entry for {parts[1]}", lineno)
        table[key] = complex(re, im)
        pos += 1
    missing = [p for p in enumerate_connected_subgraphs(graph, max_size)
               if p not in table]
    if missing:
        raise SpecParseError(
            f"table is missing {len(missing)} connected sets up to size "
            f"{max_size}, first: {sorted(missing)[0]}")
    return table, max_size


def parse_events_spec(text: str) -> EventTableOracle:
    """Parse an events-spec into a table-backed event oracle.

    Values must be probabilities in [0, 1], non-increasing when a connected
    set is extended by one vertex (where both sets are in the table).
    """
    lines = list(_lines(text))
    if not lines:
        raise SpecParseError("empty events file")
    graph, pos = _parse_graph_block(lines, 0)
    table_c, max_size = _parse_table(lines, pos, "prob", graph)
    table = {}
    for key, value in table_c.items():
        if value.imag != 0.0 or not 0.0 <= value.real <= 1.0:
            raise SpecParseError(
                f"probability for {key} must be real in [0, 1], got {value}")
        table[key] = value.real
    for key, value in table.items():
        for v in key:
            smaller = tuple(x for x in key if x != v)
            if smaller in table and value > table[smaller] + 1e-12:
                raise SpecParseError(
                    f"probability table is not monotone: P{key} = {value} > "
                    f"P{smaller} = {table[smaller]}")
    return EventTableOracle(graph, table, max_size)


def parse_weights_spec(text: str):
    """Parse a weights-spec; returns (graph, WeightOracle, max_size)."""
    lines = list(_lines(text))
    if not lines:
        raise SpecParseError("empty weights file")
    graph, pos = _parse_graph_block(lines, 0)
    table, max_size = _parse_table(lines, pos, "weight", graph)

    def fn(polymer):
        try:
            return table[tuple(polymer)]
        except KeyError:
            raise SpecParseError(
                f"weights table has no entry for polymer {tuple(polymer)}; "
                f"declared max-size is {max_size}") from None

    return graph, WeightOracle(fn), max_size


def format_events_spec(oracle: EventTableOracle) -> str:
    g = oracle.graph
    out = [f"vertices {g.vertex_count}", f"edges {g.edge_count()}"]
    out.extend(f"{u} {v}" for u, v in g.edges())
    out.append(f"max-size {oracle.max_size}")
    for key in sorted(oracle.table):
        out.append("prob " + ",".join(map(str, key)) + f" {oracle.table[key]!r}")
    return "\n".join(out) + "\n"


def format_weights_spec(graph: DependencyGraph, table: dict, max_size: int) -> str:
    out = [f"vertices {graph.vertex_count}", f"edges {graph.edge_count()}"]
    out.extend(f"{u} {v}" for u, v in graph.edges())
    out.append(f"max-size {max_size}")
    for key in sorted(table):
        w = complex(table[key])
        entry = f"{w.real!r}" if w.imag == 0.0 else f"{w.real!r} {w.imag!r}"
        out.append("weight " + ",".join(map(str, key)) + " " + entry)
    return "\n".join(out) + "\n"


def parse_coloring(text: str, graph: DependencyGraph) -> Coloring:
    """Parse `v c` lines into a proper coloring of the graph."""
    class_of = [-1] * graph.vertex_count
    for lineno, s in _lines(text):
        parts = s.split()
        if len(parts) != 2:
            raise SpecParseError("coloring line must be 'v c'", lineno)
        v = _int(parts[0], lineno, "vertex")
        c = _int(parts[1], lineno, "color")
        if not 0 <= v < graph.vertex_count:
            raise SpecParseError(f"vertex {v} out of range", lineno)
        if c < 0:
            raise SpecParseError("colors must be non-negative", lineno)
        if class_of[v] != -1:
            raise SpecParseError(f"vertex {v} colored twice", lineno)
        class_of[v] = c
    if any(c == -1 for c in class_of):
        raise SpecParseError("coloring does not cover every vertex")
    used = sorted(set(class_of))
    remap = {c: i for i, c in enumerate(used)}
    coloring = Coloring(tuple(remap[c] for c in class_of), len(used))
    try:
        coloring.assert_proper(graph)
    except ValueError as exc:
        raise SpecParseError(str(exc)) from None
    return coloring
