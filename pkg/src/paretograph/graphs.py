"""Undirected graphs: connectivity, chordality, clique structure, block graphs.

Node labels are 1-based integers ``1..d`` throughout the public API. Edges are
stored as sorted pairs ``(i, j)`` with ``i < j``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import GraphError, NotBlockGraphError, ValidationError

__all__ = [
    "UGraph",
    "is_connected",
    "is_decomposable",
    "clique_decomposition",
    "is_block_graph",
    "describe_block_graph_violation",
    "check_block_graph",
    "separator_path",
    "read_edge_list",
    "write_edge_list",
]


def _normalize_edge(i, j):
    a, b = int(i), int(j)
    if a == b:
        raise GraphError(f"self-loop at node {a} is not allowed")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class UGraph:
    """Simple undirected graph on nodes ``1..d``.

    Parameters
    ----------
    d : int
        Number of nodes, at least 1.
    edges : iterable of (int, int)
        Edge pairs with 1-based labels; order within a pair does not matter.
    """

    d: int
    edges: frozenset = field(default_factory=frozenset)

    def __init__(self, d: int, edges: Iterable[Sequence[int]] = ()):
        if int(d) != d or d < 1:
            raise GraphError(f"d must be a positive integer, got {d!r}")
        object.__setattr__(self, "d", int(d))
        norm = frozenset(_normalize_edge(i, j) for i, j in edges)
        for i, j in norm:
            if not (1 <= i <= d and 1 <= j <= d):
                raise GraphError(f"edge ({i}, {j}) has a label outside 1..{d}")
        object.__setattr__(self, "edges", norm)

    @property
    def nodes(self):
        return range(1, self.d + 1)

    def neighbors(self, v: int) -> set:
        out = set()
        for i, j in self.edges:
            if i == v:
                out.add(j)
            elif j == v:
                out.add(i)
        return out

    def adjacency(self) -> dict:
        adj = {v: set() for v in self.nodes}
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def has_edge(self, i: int, j: int) -> bool:
        return _normalize_edge(i, j) in self.edges

    def with_edge(self, i: int, j: int) -> "UGraph":
        """New graph with edge (i, j) added."""
        return UGraph(self.d, list(self.edges) + [(i, j)])

    def sorted_edges(self):
        return sorted(self.edges)

    def __repr__(self):
        return f"UGraph(d={self.d}, edges={self.sorted_edges()})"


def is_connected(g: UGraph) -> bool:
    """True when every node is reachable from node 1."""
    if g.d == 1:
        return True
    adj = g.adjacency()
    seen = {1}
    queue = deque([1])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == g.d


def _mcs_order(g: UGraph):
    """Maximum cardinality search: visit order plus earlier-neighbor sets."""
    adj = g.adjacency()
    weight = {v: 0 for v in g.nodes}
    unvisited = set(g.nodes)
    order = []
    earlier = {}
    while unvisited:
        # deterministic tie-break: smallest label among max-weight nodes
        v = min(unvisited, key=lambda u: (-weight[u], u))
        unvisited.remove(v)
        earlier[v] = adj[v] - unvisited
        order.append(v)
        for w in adj[v] & unvisited:
            weight[w] += 1
    return order, earlier


def is_decomposable(g: UGraph):
    """Chordality (equivalently decomposability) test via maximum cardinality search.

    Returns
    -------
    (bool, list or None)
        ``(True, peo)`` with a perfect elimination ordering (a node list;
        eliminate front to back), or ``(False, None)``.
    """
    if not is_connected(g):
        return False, None
    order, earlier = _mcs_order(g)
    adj = g.adjacency()
    pos = {v: i for i, v in enumerate(order)}
    for v in order:
        prev = earlier[v]
        if len(prev) <= 1:
            continue
        p = max(prev, key=lambda u: pos[u])
        if not (prev - {p}) <= adj[p]:
            return False, None
    return True, list(reversed(order))


def clique_decomposition(g: UGraph):
    """Maximal cliques and separators of a decomposable graph, in running order.

    The cliques ``C_1, ..., C_m`` satisfy the running intersection property:
    each ``D_i = C_i ∩ (C_1 ∪ ... ∪ C_{i-1})`` is contained in a single
    earlier clique. Separators are returned for ``i >= 2`` with multiplicity.

    Returns
    -------
    (list of tuple, list of tuple)
        Cliques and separators as sorted node tuples.

    Raises
    ------
    GraphError
        If the graph is not connected and decomposable.
    """
    ok, _ = is_decomposable(g)
    if not ok:
        raise GraphError("graph is not decomposable (connected and chordal)")
    order, earlier = _mcs_order(g)
    pos = {v: i for i, v in enumerate(order)}
    candidates = [frozenset(earlier[v] | {v}) for v in order]
    maximal = []
    for c in candidates:
        if not any(c < other for other in candidates):
            if c not in maximal:
                maximal.append(c)
    # running order: by the largest visit position inside each clique
    maximal.sort(key=lambda c: max(pos[v] for v in c))
    cliques = [tuple(sorted(c)) for c in maximal]
    separators = []
    seen = set()
    for i, c in enumerate(cliques):
        cs = set(c)
        if i > 0:
            d_i = cs & seen
            if not any(d_i <= set(prev) for prev in cliques[:i]):
                raise GraphError("internal error: running intersection property violated")
            separators.append(tuple(sorted(d_i)))
        seen |= cs
    return cliques, separators


def describe_block_graph_violation(g: UGraph, max_clique: int = 3):
    """Reason the graph is not a block graph with clique bound, or None if it is."""
    if not is_connected(g):
        return "graph is not connected"
    ok, _ = is_decomposable(g)
    if not ok:
        return "graph is not decomposable"
    cliques, separators = clique_decomposition(g)
    for d_i in separators:
        if len(d_i) != 1:
            return f"separator {d_i} is not a single node"
    for c in cliques:
        if len(c) > max_clique:
            return f"clique {c} exceeds the maximum size {max_clique}"
    return None


def is_block_graph(g: UGraph, max_clique: int = 3) -> bool:
    """True when g is connected, decomposable, has singleton separators, and
    no clique larger than ``max_clique``."""
    return describe_block_graph_violation(g, max_clique) is None


def check_block_graph(g: UGraph, max_clique: int = 3) -> UGraph:
    """Validate and return g; raises NotBlockGraphError naming the violation."""
    reason = describe_block_graph_violation(g, max_clique)
    if reason is not None:
        raise NotBlockGraphError(reason)
    return g


def separator_path(g: UGraph, i: int, j: int):
    """Cut nodes between i and j in a block graph, in path order.

    Nodes in the same clique get an empty list. The sequence is the interior
    of the unique shortest path, which in a block graph visits exactly the
    cut nodes separating i from j.
    """
    if not (1 <= i <= g.d and 1 <= j <= g.d):
        raise GraphError(f"nodes must lie in 1..{g.d}, got ({i}, {j})")
    if i == j:
        return []
    adj = g.adjacency()
    prev = {i: None}
    queue = deque([i])
    while queue:
        v = queue.popleft()
        if v == j:
            break
        for w in sorted(adj[v]):
            if w not in prev:
                prev[w] = v
                queue.append(w)
    if j not in prev:
        raise GraphError(f"nodes {i} and {j} are not connected")
    path = []
    v = j
    while v is not None:
        path.append(v)
        v = prev[v]
    path.reverse()
    return path[1:-1]


def read_edge_list(path, d: int | None = None) -> UGraph:
    """Read a graph from an edge-list text file, one ``i j`` pair per line.

    Blank lines and lines starting with ``#`` are skipped. ``d`` defaults to
    the largest label seen.
    """
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 2:
                raise ValidationError(f"{path}: line {lineno}: expected 'i j', got {line!r}")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ValidationError(f"{path}: line {lineno}: non-integer label") from exc
            if i < 1 or j < 1:
                raise ValidationError(f"{path}: line {lineno}: labels are 1-based, got {i} {j}")
            edges.append((i, j))
    if not edges and d is None:
        raise ValidationError(f"{path}: no edges found and no dimension given")
    inferred = max(max(e) for e in edges) if edges else 0
    if d is None:
        d = inferred
    elif inferred > d:
        raise ValidationError(f"{path}: edge label {inferred} exceeds d={d}")
    return UGraph(d, edges)


def write_edge_list(g: UGraph, path):
    """Write the edge list, one ``i j`` pair per line, sorted."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, j in g.sorted_edges():
            fh.write(f"{i} {j}\n")
