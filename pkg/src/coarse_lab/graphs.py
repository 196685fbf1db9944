"""Defining graphs and the four-cycle (CFS) machinery.

Right-angled Coxeter groups are specified here by finite simple graphs.  The
module builds the doubled-ladder family, enumerates induced four-cycles by
brute force, wires them into the square graph (cycles adjacent when they share
a defining-graph edge), and decides the CFS property: some connected component
of the square graph must cover every vertex of the defining graph.

Graphs at this scale have at most a few dozen vertices, so the O(V^4)
enumeration is deliberate: correctness and auditability over speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Sequence, Set, Tuple

Edge = Tuple[str, str]


def _norm_edge(u: str, v: str) -> Edge:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class SimpleGraph:
    """A finite simple graph with ordered string vertex labels."""

    vertices: Tuple[str, ...]
    edges: FrozenSet[Edge]

    def __post_init__(self):
        seen = set(self.vertices)
        if len(seen) != len(self.vertices):
            raise ValueError("duplicate vertex labels")
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at {u!r}")
            if u not in seen or v not in seen:
                raise ValueError(f"edge ({u!r}, {v!r}) mentions an unknown vertex")
            if (u, v) != _norm_edge(u, v):
                raise ValueError("edges must be stored with sorted endpoints")

    @classmethod
    def build(cls, vertices: Sequence[str], edges: Iterable[Tuple[str, str]]) -> "SimpleGraph":
        return cls(tuple(vertices), frozenset(_norm_edge(u, v) for u, v in edges))

    def has_edge(self, u: str, v: str) -> bool:
        return _norm_edge(u, v) in self.edges

    def adjacency(self) -> Dict[str, Set[str]]:
        adj: Dict[str, Set[str]] = {v: set() for v in self.vertices}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj


def ladder_graph(n: int) -> SimpleGraph:
    """Doubled ladder on {a_1..a_n, b_1..b_n}: c_i -- c'_j iff |i - j| = 1.

    Note there is no rung a_i -- b_i; the edge rule gives exactly 4(n-1)
    edges.  n=14 is the 28-vertex graph the Coxeter experiments start from.
    """
    if n < 2:
        raise ValueError(f"ladder needs n >= 2, got {n}")
    vertices = [f"a{i}" for i in range(1, n + 1)] + [f"b{i}" for i in range(1, n + 1)]
    edges = []
    for i in range(1, n):
        for c in ("a", "b"):
            for d in ("a", "b"):
                edges.append((f"{c}{i}", f"{d}{i + 1}"))
    return SimpleGraph.build(vertices, edges)


def add_cycle(g: SimpleGraph, vs: Sequence[str]) -> SimpleGraph:
    """Return g with the cycle vs[0]-vs[1]-...-vs[-1]-vs[0] added.

    Already-present edges are kept as they are, so the operation is
    idempotent.  Unknown labels are rejected.
    """
    if len(vs) < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    known = set(g.vertices)
    for v in vs:
        if v not in known:
            raise ValueError(f"unknown vertex {v!r}")
    new_edges = set(g.edges)
    for u, v in zip(vs, list(vs[1:]) + [vs[0]]):
        new_edges.add(_norm_edge(u, v))
    return SimpleGraph(g.vertices, frozenset(new_edges))


Cycle = Tuple[str, str, str, str]


def canonical_cycle(cycle: Sequence[str]) -> Cycle:
    """Lexicographically least among the 8 rotations/reflections of a 4-cycle."""
    c = tuple(cycle)
    best = None
    for seq in (c, c[::-1]):
        for k in range(4):
            rot = seq[k:] + seq[:k]
            if best is None or rot < best:
                best = rot
    return best  # type: ignore[return-value]


@dataclass(frozen=True)
class FourCycleGraph:
    """The square graph of a defining graph.

    Vertices are the induced 4-cycles of the source (canonical
    rotation/reflection representatives); two cycles are adjacent when they
    share a source-graph edge.  Component supports record which source
    vertices each connected component covers.
    """

    source: SimpleGraph
    cycles: Tuple[Cycle, ...]
    adjacency: FrozenSet[Tuple[int, int]]  # index pairs i < j
    components: Tuple[Tuple[int, ...], ...]
    supports: Tuple[FrozenSet[str], ...]

    def component_of(self, idx: int) -> int:
        for c, comp in enumerate(self.components):
            if idx in comp:
                return c
        raise KeyError(idx)


def _cycle_edges(cycle: Cycle) -> Set[Edge]:
    return {_norm_edge(u, v) for u, v in zip(cycle, cycle[1:] + cycle[:1])}


def induced_four_cycles(g: SimpleGraph) -> List[Cycle]:
    """All induced 4-cycles, one canonical representative each.

    A 4-vertex subset spans an induced 4-cycle exactly when its induced
    subgraph has 4 edges all of degree 2; the two missing pairs are then the
    diagonals.  Brute force over vertex subsets.
    """
    cycles = []
    for quad in combinations(g.vertices, 4):
        present = [(u, v) for u, v in combinations(quad, 2) if g.has_edge(u, v)]
        if len(present) != 4:
            continue
        deg = {v: 0 for v in quad}
        for u, v in present:
            deg[u] += 1
            deg[v] += 1
        if any(d != 2 for d in deg.values()):
            continue
        # Walk the cycle order starting anywhere.
        adj = {v: [] for v in quad}
        for u, v in present:
            adj[u].append(v)
            adj[v].append(u)
        start = quad[0]
        nxt = adj[start][0]
        order = [start, nxt]
        while len(order) < 4:
            cand = [w for w in adj[order[-1]] if w != order[-2]]
            order.append(cand[0])
        cycles.append(canonical_cycle(order))
    return sorted(set(cycles))


def four_cycle_graph(g: SimpleGraph) -> FourCycleGraph:
    cycles = tuple(induced_four_cycles(g))
    edge_sets = [_cycle_edges(c) for c in cycles]
    adjacency = set()
    for i, j in combinations(range(len(cycles)), 2):
        if edge_sets[i] & edge_sets[j]:
            adjacency.add((i, j))
    # Connected components by BFS over the cycle-adjacency.
    nbr: Dict[int, Set[int]] = {i: set() for i in range(len(cycles))}
    for i, j in adjacency:
        nbr[i].add(j)
        nbr[j].add(i)
    seen: Set[int] = set()
    components: List[Tuple[int, ...]] = []
    for i in range(len(cycles)):
        if i in seen:
            continue
        comp = []
        stack = [i]
        seen.add(i)
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in nbr[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        components.append(tuple(sorted(comp)))
    supports = tuple(
        frozenset(v for idx in comp for v in cycles[idx]) for comp in components
    )
    return FourCycleGraph(
        source=g,
        cycles=cycles,
        adjacency=frozenset(adjacency),
        components=tuple(components),
        supports=supports,
    )


@dataclass(frozen=True)
class CfsResult:
    verdict: bool
    witness_component: FrozenSet[str]
    n_cycles: int


def is_cfs(g: SimpleGraph) -> CfsResult:
    """Decide the CFS property: a square-graph component with full support.

    The witness is the covering component's support (empty when no component
    covers all vertices, in particular when there are no induced 4-cycles).
    """
    fc = four_cycle_graph(g)
    full = set(g.vertices)
    for support in fc.supports:
        if set(support) == full:
            return CfsResult(True, support, len(fc.cycles))
    return CfsResult(False, frozenset(), len(fc.cycles))


# ---------------------------------------------------------------------------
# Graph file format
# ---------------------------------------------------------------------------
#
# Line 1: `vertices: v1 v2 ... vk`; each following non-empty line one edge
# `u v`; `#` starts a comment line.  UTF-8, LF endings.  The serializer emits
# vertices in declaration order and edges sorted lexicographically, so output
# is byte-stable.

def format_graph(g: SimpleGraph) -> str:
    lines = ["vertices: " + " ".join(g.vertices)]
    lines.extend(f"{u} {v}" for u, v in sorted(g.edges))
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> SimpleGraph:
    vertices: List[str] = []
    edges: List[Tuple[str, str]] = []
    saw_header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not saw_header:
            if not line.startswith("vertices:"):
                raise ValueError(f"line {lineno}: expected 'vertices:' header")
            vertices = line[len("vertices:"):].split()
            saw_header = True
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {line!r}")
        edges.append((parts[0], parts[1]))
    if not saw_header:
        raise ValueError("missing 'vertices:' header")
    return SimpleGraph.build(vertices, edges)


def write_graph(path, g: SimpleGraph) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_graph(g))


def read_graph(path) -> SimpleGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())
