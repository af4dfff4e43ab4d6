"""Directed graphs on aerial and ground vertices.

Vertices are integers: ``0 .. n-1`` are aerial (upper half-plane points),
``n .. n+m-1`` are ground (real-line points, in increasing order).  A graph
is admissible when it has no loops, no repeated oriented edge and no edge
whose source is a ground vertex.  The edge sequence is ordered; the order
is part of the value because it fixes the sign of every derived quantity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Tuple

Edge = Tuple[int, int]

#: refuse enumeration above this many vertices unless told otherwise
DEFAULT_VERTEX_BOUND = 8

TYPE_I = "I"
TYPE_II = "II"


@dataclass(frozen=True)
class Graph:
    """Admissible directed graph with ``n`` aerial and ``m`` ground vertices."""

    n: int
    m: int
    edges: Tuple[Edge, ...]

    @property
    def num_vertices(self) -> int:
        return self.n + self.m

    def is_ground(self, v: int) -> bool:
        return v >= self.n

    def out_degree(self, v: int) -> int:
        return sum(1 for s, _ in self.edges if s == v)

    def in_degree(self, v: int) -> int:
        return sum(1 for _, t in self.edges if t == v)

    def vertex_name(self, v: int) -> str:
        return f"a{v + 1}" if v < self.n else f"g{v - self.n + 1}"

    def __str__(self) -> str:
        return encode_graph(self)


@dataclass(frozen=True)
class Contraction:
    """Split of a graph along a collapsing vertex subset.

    ``inner`` lives on the collapsed subset, ``outer`` on the remaining
    vertices plus one fresh vertex.  ``outer_ok`` is False when the outer
    edge list is inadmissible (a stratum contributing a zero operator).
    """

    inner: Graph
    outer: Graph
    subset: frozenset
    kind: str  # TYPE_I or TYPE_II
    new_vertex: int  # index of the collapsed vertex inside ``outer``
    vertex_map: Tuple[int, ...]  # original vertex -> outer vertex (new_vertex for members of subset)
    inner_index: Tuple[int, ...] = field(default=())  # original vertex -> inner vertex, -1 outside
    outer_ok: bool = True
    flags: Tuple[str, ...] = ()


def make_graph(n: int, m: int, edges: Sequence[Edge]) -> Graph:
    """Validate and build a graph; raises ValueError on any inadmissibility."""
    if n < 0 or m < 0:
        raise ValueError("vertex counts must be nonnegative")
    nv = n + m
    seen = set()
    for s, t in edges:
        if not (0 <= s < nv and 0 <= t < nv):
            raise ValueError(f"edge ({s},{t}) out of range for {n}+{m} vertices")
        if s == t:
            raise ValueError(f"loop edge at vertex {s}")
        if s >= n:
            raise ValueError(f"edge sourced at ground vertex {s}")
        if (s, t) in seen:
            raise ValueError(f"duplicate oriented edge ({s},{t})")
        seen.add((s, t))
    return Graph(n, m, tuple((int(s), int(t)) for s, t in edges))


def possible_edges(n: int, m: int) -> list[Edge]:
    """All admissible edges in lexicographic order."""
    return [(s, t) for s in range(n) for t in range(n + m) if t != s]


def enumerate_graphs(n: int, m: int, e: int,
                     max_vertices: int = DEFAULT_VERTEX_BOUND) -> Iterator[Graph]:
    """Yield every admissible graph with exactly ``e`` edges, once per edge set.

    Edge sets are emitted in lexicographic order of their sorted edge tuple,
    and each graph stores its edges in that sorted order.
    """
    if n < 0 or m < 0 or e < 0:
        raise ValueError("arguments must be nonnegative")
    if n + m > max_vertices:
        raise ValueError(f"refusing to enumerate graphs on {n + m} > {max_vertices} vertices")
    pool = possible_edges(n, m)
    for combo in itertools.combinations(pool, e):
        yield Graph(n, m, combo)


def _ground_run_ok(g: Graph, grounds: Sequence[int]) -> bool:
    """Ground members must be consecutive in the real-line order."""
    if not grounds:
        return True
    ordered = sorted(grounds)
    return ordered[-1] - ordered[0] == len(ordered) - 1


def contract(g: Graph, subset, kind: str = TYPE_I,
             position: Optional[int] = None) -> Contraction:
    """Collapse ``subset`` to a single vertex.

    Type I collapses a set of >= 2 aerial vertices to a fresh aerial vertex.
    Type II collapses aerial vertices plus a gap-free run of ground vertices
    onto a fresh ground vertex; when the subset has no ground member,
    ``position`` picks the gap (0..m') in the remaining ground order where
    the fresh vertex lands.

    Edges inside the subset go to ``inner`` (original relative order), the
    rest to ``outer`` with endpoints redirected.  Inadmissible outer edge
    lists (ground-sourced or duplicated) are flagged, not rejected.
    """
    B = frozenset(subset)
    if not B or not B <= set(range(g.num_vertices)):
        raise ValueError("subset out of range")
    aer = sorted(v for v in B if v < g.n)
    grd = sorted(v for v in B if v >= g.n)

    if kind == TYPE_I:
        if grd:
            raise ValueError("type I subset must be purely aerial")
        if len(aer) < 2:
            raise ValueError("type I subset needs at least 2 aerial vertices")
    elif kind == TYPE_II:
        if 2 * len(aer) + len(grd) < 2:
            raise ValueError("type II subset too small to bound a stratum")
        if not _ground_run_ok(g, grd):
            raise ValueError("ground members of a type II subset must be consecutive")
        if len(B) == g.num_vertices:
            raise ValueError("cannot collapse the full vertex set")
    else:
        raise ValueError(f"unknown contraction kind {kind!r}")

    # inner graph: relabel members of B, aerial first (in index order) then ground
    inner_order = aer + grd
    inner_index_full = [-1] * g.num_vertices
    for i, v in enumerate(inner_order):
        inner_index_full[v] = i
    inner_n = len(aer)
    inner_m = len(grd) if kind == TYPE_II else 0
    inner_edges = tuple((inner_index_full[s], inner_index_full[t])
                        for s, t in g.edges if s in B and t in B)
    inner = Graph(inner_n, inner_m, inner_edges)

    # outer graph: remaining vertices plus the fresh vertex
    keep_aer = [v for v in range(g.n) if v not in B]
    keep_grd = [v for v in range(g.n, g.num_vertices) if v not in B]
    if kind == TYPE_I:
        outer_n = len(keep_aer) + 1
        outer_m = g.m
        # fresh aerial vertex takes the slot of min(B) among remaining aerials
        slot = sum(1 for v in keep_aer if v < min(aer))
        new_aer = keep_aer[:slot] + [-1] + keep_aer[slot:]
        new_grd = keep_grd
    else:
        outer_n = len(keep_aer)
        outer_m = len(keep_grd) + 1
        if grd:
            slot = sum(1 for v in keep_grd if v < grd[0])
        else:
            if position is None:
                raise ValueError("type II subset without ground members needs a position")
            if not (0 <= position <= len(keep_grd)):
                raise ValueError("position out of range")
            slot = position
        new_aer = keep_aer
        new_grd = keep_grd[:slot] + [-1] + keep_grd[slot:]

    order = new_aer + new_grd
    vmap = [-1] * g.num_vertices
    new_vertex = order.index(-1)
    for i, v in enumerate(order):
        if v >= 0:
            vmap[v] = i
    for v in B:
        vmap[v] = new_vertex

    outer_edges = tuple((vmap[s], vmap[t]) for s, t in g.edges
                        if not (s in B and t in B))
    flags = []
    ground_start = outer_n
    seen = set()
    for s, t in outer_edges:
        if s == t:
            flags.append("loop")
        if s >= ground_start:
            flags.append("ground-sourced")
        if (s, t) in seen:
            flags.append("duplicate")
        seen.add((s, t))
    outer = Graph(outer_n, outer_m, outer_edges)

    return Contraction(inner=inner, outer=outer, subset=B, kind=kind,
                       new_vertex=new_vertex, vertex_map=tuple(vmap),
                       inner_index=tuple(inner_index_full),
                       outer_ok=not flags, flags=tuple(sorted(set(flags))))


def edge_sort_parity(edges: Sequence[Edge]) -> int:
    """Sign of the permutation sorting ``edges`` lexicographically."""
    indexed = sorted(range(len(edges)), key=lambda i: edges[i])
    sign = 1
    visited = [False] * len(edges)
    for start in range(len(edges)):
        if visited[start]:
            continue
        length = 0
        j = start
        while not visited[j]:
            visited[j] = True
            j = indexed[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def canonical_key(g: Graph):
    """Key equal for graphs isomorphic under aerial relabelling, plus parity.

    The key fixes the ground order (ground relabelling is not allowed) and
    minimises the sorted edge tuple over all permutations of the aerial
    labels.  The parity is the sign of the permutation taking the stored
    edge sequence, transported through the minimising relabelling, to the
    canonical sorted order; a graph's weight is the canonical graph's
    weight times this parity.  Ties between relabellings are broken by the
    first permutation in lexicographic order, which pins the parity even
    for graphs with self-isomorphisms.
    """
    best = None
    best_seq = None
    for perm in itertools.permutations(range(g.n)):
        relabel = list(perm) + list(range(g.n, g.num_vertices))
        seq = tuple((relabel[s], relabel[t]) for s, t in g.edges)
        edges = tuple(sorted(seq))
        if best is None or edges < best:
            best = edges
            best_seq = seq
    parity = edge_sort_parity(best_seq) if best_seq is not None else 1
    return (g.n, g.m, best), parity


def canonical_graph(key) -> Graph:
    """Graph realising a canonical key, edges in sorted order."""
    n, m, edges = key
    return make_graph(n, m, list(edges))


def encode_graph(g: Graph) -> str:
    """One-line text encoding ``n m ; s1>t1 s2>t2 ...``."""
    parts = [f"{g.n} {g.m} ;"]
    parts.extend(f"{g.vertex_name(s)}>{g.vertex_name(t)}" for s, t in g.edges)
    return " ".join(parts)


def parse_graph(text: str) -> Graph:
    """Inverse of :func:`encode_graph`; raises ValueError on malformed input."""
    head, sep, tail = text.partition(";")
    if not sep:
        raise ValueError("missing ';' separator")
    try:
        n_str, m_str = head.split()
        n, m = int(n_str), int(m_str)
    except Exception as exc:
        raise ValueError(f"malformed vertex counts in {head!r}") from exc

    def vid(name: str) -> int:
        if len(name) < 2 or name[0] not in "ag":
            raise ValueError(f"bad vertex name {name!r}")
        idx = int(name[1:]) - 1
        if name[0] == "a":
            if not 0 <= idx < n:
                raise ValueError(f"aerial vertex {name!r} out of range")
            return idx
        if not 0 <= idx < m:
            raise ValueError(f"ground vertex {name!r} out of range")
        return n + idx

    edges = []
    for token in tail.split():
        src, sep2, dst = token.partition(">")
        if not sep2:
            raise ValueError(f"bad edge token {token!r}")
        edges.append((vid(src), vid(dst)))
    return make_graph(n, m, edges)
