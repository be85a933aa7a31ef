"""Finite simple graphs plus the enumeration, coloring and product primitives
that the polymer-model machinery is built on.

Vertices are dense integer indices 0..n-1; optional labels are carried only
for reporting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


class DependencyGraph:
    """Immutable simple undirected graph.

    Adjacency is stored as sorted duplicate-free tuples and is validated to be
    symmetric and loop-free on construction.
    """

    __slots__ = ("vertex_count", "_adj", "_nbr", "labels")

    def __init__(self, vertex_count: int, adjacency: Sequence[Iterable[int]],
                 labels: Sequence | None = None):
        if vertex_count < 0:
            raise ValueError("vertex_count must be non-negative")
        rows = [tuple(sorted(row)) for row in adjacency]
        if len(rows) != vertex_count:
            raise ValueError("adjacency length does not match vertex_count")
        nbr = []
        for v, row in enumerate(rows):
            for w in row:
                if not 0 <= w < vertex_count:
                    raise ValueError(f"neighbor {w} of vertex {v} out of range")
                if w == v:
                    raise ValueError(f"self-loop at vertex {v}")
            if any(a == b for a, b in zip(row, row[1:])):
                raise ValueError(f"duplicate neighbor in adjacency of vertex {v}")
            nbr.append(frozenset(row))
        for v, row in enumerate(rows):
            for w in row:
                if v not in nbr[w]:
                    raise ValueError(f"asymmetric adjacency between {v} and {w}")
        if labels is not None and len(labels) != vertex_count:
            raise ValueError("labels length does not match vertex_count")
        self.vertex_count = vertex_count
        self._adj = tuple(rows)
        self._nbr = tuple(nbr)
        self.labels = tuple(labels) if labels is not None else None

    def vertices(self) -> range:
        return range(self.vertex_count)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def neighbor_set(self, v: int) -> frozenset[int]:
        return self._nbr[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def max_degree(self) -> int:
        if self.vertex_count == 0:
            return 0
        return max(len(row) for row in self._adj)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._nbr[u]

    def edge_count(self) -> int:
        return sum(len(row) for row in self._adj) // 2

    def edges(self) -> Iterator[tuple[int, int]]:
        for u in range(self.vertex_count):
            for v in self._adj[u]:
                if u < v:
                    yield (u, v)

    def __repr__(self) -> str:
        return f"DependencyGraph(n={self.vertex_count}, m={self.edge_count()})"


def build_graph(n: int, edges: Iterable[tuple[int, int]],
                labels: Sequence | None = None) -> DependencyGraph:
    """Build a graph from an edge list, deduplicating repeated edges.

    Raises ValueError for out-of-range endpoints or self-loops.
    """
    adj = [set() for _ in range(n)]
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u}, {v}) has an endpoint out of range [0, {n})")
        if u == v:
            raise ValueError(f"self-loop ({u}, {v})")
        adj[u].add(v)
        adj[v].add(u)
    return DependencyGraph(n, adj, labels)


@dataclass(frozen=True)
class Coloring:
    """A proper coloring: class_of[v] is the color index of vertex v."""

    class_of: tuple[int, ...]
    num_colors: int

    def classes(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.num_colors)]
        for v, c in enumerate(self.class_of):
            out[c].append(v)
        return out

    def assert_proper(self, g: DependencyGraph) -> None:
        if len(self.class_of) != g.vertex_count:
            raise ValueError("coloring size does not match graph order")
        for u, v in g.edges():
            if self.class_of[u] == self.class_of[v]:
                raise ValueError(f"improper coloring: edge ({u}, {v}) is monochromatic")


def greedy_coloring(g: DependencyGraph) -> Coloring:
    """Greedy proper coloring in ascending vertex order, smallest available color.

    Uses at most max_degree + 1 colors and is deterministic.
    """
    class_of = [-1] * g.vertex_count
    for v in g.vertices():
        taken = {class_of[w] for w in g.neighbors(v) if class_of[w] >= 0}
        c = 0
        while c in taken:
            c += 1
        class_of[v] = c
    num_colors = max(class_of) + 1 if class_of else 0
    return Coloring(tuple(class_of), num_colors)


def strong_product_with_complete(g: DependencyGraph, t: int) -> DependencyGraph:
    """Strong product of g with the complete graph on t vertices.

    Vertex (v, tau) maps to index v*t + tau.  If g has max degree D and a
    vertex attaining it, the product has max degree t*(D+1) - 1.
    """
    if t < 1:
        raise ValueError("t must be a positive integer")
    n = g.vertex_count
    adj = []
    labels = []
    for v in range(n):
        base_label = g.labels[v] if g.labels is not None else v
        for tau in range(t):
            row = [v * t + s for s in range(t) if s != tau]
            for u in g.neighbors(v):
                row.extend(u * t + s for s in range(t))
            adj.append(row)
            labels.append((base_label, tau))
    return DependencyGraph(n * t, adj, labels)


def enumerate_connected_subgraphs(g: DependencyGraph, m: int) -> Iterator[tuple[int, ...]]:
    """Yield every connected induced subgraph of order 1..m exactly once.

    Subgraphs are identified by their sorted vertex tuple.  Enumeration grows
    rooted sets from each vertex, with vertices below the root forbidden so
    each set is emitted only from its smallest vertex.  The order of emission
    is deterministic (DFS, ascending extensions).
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    for root in g.vertices():
        forbidden = set(range(root))
        yield from _grow(g, {root}, forbidden, m)


def _grow(g: DependencyGraph, subset: set[int], forbidden: set[int],
          m: int) -> Iterator[tuple[int, ...]]:
    yield tuple(sorted(subset))
    if len(subset) == m:
        return
    ext = set()
    for v in subset:
        for w in g.neighbors(v):
            if w not in subset and w not in forbidden:
                ext.add(w)
    banned = set(forbidden)
    for u in sorted(ext):
        subset.add(u)
        yield from _grow(g, subset, banned, m)
        subset.remove(u)
        banned.add(u)


def induced_components(g: DependencyGraph, vertices: Iterable[int]) -> list[tuple[int, ...]]:
    """Connected components of the subgraph induced by the given vertex set,
    ordered by smallest contained vertex."""
    pool = set(vertices)
    for v in pool:
        if not 0 <= v < g.vertex_count:
            raise ValueError(f"vertex {v} out of range")
    out = []
    seen: set[int] = set()
    for v in sorted(pool):
        if v in seen:
            continue
        comp = [v]
        seen.add(v)
        queue = [v]
        while queue:
            u = queue.pop()
            for w in g.neighbors(u):
                if w in pool and w not in seen:
                    seen.add(w)
                    comp.append(w)
                    queue.append(w)
        out.append(tuple(sorted(comp)))
    return out
