import numpy as np
import pytest

from coarse_lab.graphs import (
    SimpleGraph,
    add_cycle,
    canonical_cycle,
    four_cycle_graph,
    format_graph,
    induced_four_cycles,
    is_cfs,
    ladder_graph,
    parse_graph,
)


def expected_ladder_squares(n):
    """The square families of the n-ladder, built straight from the index rules."""
    a = lambda i: f"a{i}"
    b = lambda i: f"b{i}"
    fams = []
    for i in range(1, n - 1):
        fams.append([a(i), a(i + 1), a(i + 2), b(i + 1)])
        fams.append([b(i), b(i + 1), b(i + 2), a(i + 1)])
        fams.append([a(i), a(i + 1), b(i + 2), b(i + 1)])
        fams.append([b(i), b(i + 1), a(i + 2), a(i + 1)])
    for i in range(1, n):
        fams.append([a(i), a(i + 1), b(i), b(i + 1)])
    return {canonical_cycle(c) for c in fams}


def expected_chord_squares():
    a = lambda i: f"a{i}"
    b = lambda i: f"b{i}"
    fams = set()
    for i in (1, 4, 7, 10):
        fams.add(canonical_cycle([a(i), a(i + 3), a(i + 2), a(i + 1)]))
        fams.add(canonical_cycle([a(i), a(i + 3), b(i + 2), b(i + 1)]))
        fams.add(canonical_cycle([a(i), a(i + 3), b(i + 2), a(i + 1)]))
        fams.add(canonical_cycle([a(i), a(i + 3), a(i + 2), b(i + 1)]))
    return fams


# -- ladder construction -------------------------------------------------------

def test_ladder_counts():
    g = ladder_graph(14)
    assert len(g.vertices) == 28
    g13 = ladder_graph(13)
    assert len(g13.edges) == 4 * 12
    # enumeration cross-check of the edge rule: one edge per (c, d, i)
    expected = {
        tuple(sorted((f"{c}{i}", f"{d}{i+1}")))
        for c in "ab" for d in "ab" for i in range(1, 13)
    }
    assert g13.edges == frozenset(expected)


def test_ladder_smallest():
    g = ladder_graph(2)
    assert len(g.vertices) == 4
    assert g.edges == frozenset(
        {("a1", "a2"), ("a1", "b2"), ("a2", "b1"), ("b1", "b2")}
    )


def test_ladder_rejects_small_n():
    with pytest.raises(ValueError):
        ladder_graph(1)


def test_no_rungs():
    g = ladder_graph(5)
    assert not g.has_edge("a3", "b3")


# -- add_cycle -------------------------------------------------------------------

def test_add_cycle_edge_count():
    g = add_cycle(ladder_graph(13), ["a1", "a4", "a7", "a10", "a13"])
    assert len(g.edges) == 48 + 5  # none of the 5 chords pre-exist (|i-j| >= 3)


def test_add_cycle_idempotent():
    g = ladder_graph(13)
    g1 = add_cycle(g, ["a1", "a4", "a7", "a10", "a13"])
    g2 = add_cycle(g1, ["a1", "a4", "a7", "a10", "a13"])
    assert g1 == g2


def test_add_cycle_triangle_noop():
    tri = SimpleGraph.build(["x", "y", "z"], [("x", "y"), ("y", "z"), ("x", "z")])
    assert add_cycle(tri, ["x", "y", "z"]) == tri


def test_add_cycle_unknown_vertex():
    with pytest.raises(ValueError):
        add_cycle(ladder_graph(3), ["a1", "zz", "b2"])


# -- four-cycle enumeration -------------------------------------------------------

def test_ladder13_square_count_and_set():
    cycles = set(induced_four_cycles(ladder_graph(13)))
    assert len(cycles) == 56
    assert cycles == expected_ladder_squares(13)


def test_chorded_ladder_square_set():
    g = add_cycle(ladder_graph(13), ["a1", "a4", "a7", "a10", "a13"])
    cycles = set(induced_four_cycles(g))
    assert len(cycles) == 72
    assert cycles == expected_ladder_squares(13) | expected_chord_squares()


def test_every_cycle_is_induced():
    g = add_cycle(ladder_graph(13), ["a1", "a4", "a7", "a10", "a13"])
    for cyc in induced_four_cycles(g):
        w, x, y, z = cyc
        # cycle edges present
        for u, v in [(w, x), (x, y), (y, z), (z, w)]:
            assert g.has_edge(u, v)
        # diagonals absent
        assert not g.has_edge(w, y)
        assert not g.has_edge(x, z)


def test_lone_square():
    c4 = SimpleGraph.build(
        ["w", "x", "y", "z"], [("w", "x"), ("x", "y"), ("y", "z"), ("w", "z")]
    )
    fc = four_cycle_graph(c4)
    assert len(fc.cycles) == 1
    assert len(fc.adjacency) == 0


def test_k23_triangle():
    k23 = SimpleGraph.build(
        ["x1", "x2", "y1", "y2", "y3"],
        [(x, y) for x in ("x1", "x2") for y in ("y1", "y2", "y3")],
    )
    fc = four_cycle_graph(k23)
    assert len(fc.cycles) == 3
    assert len(fc.adjacency) == 3  # the three squares pairwise share an edge
    assert len(fc.components) == 1


def test_square_graph_adjacency_symmetric_and_supports_cover():
    fc = four_cycle_graph(ladder_graph(13))
    covered = set()
    for comp, support in zip(fc.components, fc.supports):
        assert support == frozenset(v for i in comp for v in fc.cycles[i])
        covered |= set(support)
    assert covered == {v for c in fc.cycles for v in c}


# -- CFS -------------------------------------------------------------------------

def test_cfs_ladder13():
    r = is_cfs(ladder_graph(13))
    assert r.verdict and r.n_cycles == 56
    assert r.witness_component == frozenset(ladder_graph(13).vertices)


def test_cfs_chorded():
    g = add_cycle(ladder_graph(13), ["a1", "a4", "a7", "a10", "a13"])
    r = is_cfs(g)
    assert r.verdict and r.n_cycles == 72


def test_cfs_edgeless_false():
    r = is_cfs(SimpleGraph.build(["s", "t", "u"], []))
    assert not r.verdict and r.n_cycles == 0
    assert r.witness_component == frozenset()


def test_cfs_relabel_invariant():
    g = ladder_graph(7)
    rng = np.random.default_rng(3)
    perm = list(rng.permutation(len(g.vertices)))
    names = [f"v{k}" for k in range(len(g.vertices))]
    relabel = {old: names[perm[i]] for i, old in enumerate(g.vertices)}
    g2 = SimpleGraph.build(
        [relabel[v] for v in g.vertices],
        [(relabel[u], relabel[v]) for u, v in g.edges],
    )
    assert is_cfs(g).verdict == is_cfs(g2).verdict


# -- file format -----------------------------------------------------------------

def test_round_trip_and_byte_format():
    g = ladder_graph(3)
    text = format_graph(g)
    assert text.splitlines()[0] == "vertices: a1 a2 a3 b1 b2 b3"
    lines = text.splitlines()[1:]
    assert lines == sorted(lines)
    assert parse_graph(text) == g


def test_parse_comments_and_errors():
    text = "# a comment\nvertices: x y\n\nx y\n"
    g = parse_graph(text)
    assert g.has_edge("x", "y")
    with pytest.raises(ValueError):
        parse_graph("x y\n")
    with pytest.raises(ValueError):
        parse_graph("vertices: x y\nx\n")
    with pytest.raises(ValueError):
        parse_graph("vertices: x y\nx z\n")


def test_graph_invariants_rejected():
    with pytest.raises(ValueError):
        SimpleGraph.build(["x"], [("x", "x")])
    with pytest.raises(ValueError):
        SimpleGraph.build(["x", "x"], [])
