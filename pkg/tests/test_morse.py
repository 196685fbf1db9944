import numpy as np
import pytest

from coarse_lab.coxeter import EPSILON, Word
from coarse_lab.morse import (
    ProbeBudgetError,
    exhaustive_gauge_certificate,
    limit_geodesic,
    morse_gauge_probe,
    non_morse_witness,
    recompute_witness,
    reordered_geodesic,
    sample_quasigeodesic,
)
from coarse_lab.rays import (
    CayleySpace,
    geodesic_ray,
    log_detour_ray,
    random_geodesic_word,
    word_ray,
)
from coarse_lab.sublinear import const, log_gauge


def diagonal_ray(grid, length):
    """The periodic diagonal of the two dihedral factors."""
    letters = [(0, 1), (2, 1), (1, 1), (3, 1)] * (length // 4 + 1)
    return word_ray(grid, letters[:length])


def ladder_flat_ray(ladder13_space, length):
    """Diagonal of the rank-2 flat spanned by the square a1-a2-b1-b2."""
    p = ladder13_space.presentation
    idx = {v: i for i, v in enumerate(p.generators)}
    letters = [(idx["a1"], 1), (idx["a2"], 1), (idx["b1"], 1), (idx["b2"], 1)]
    return word_ray(ladder13_space, (letters * (length // 4 + 1))[:length])


# -- quasi-geodesic sampling ------------------------------------------------------

def test_exact_geodesic_cell(tree):
    Z = geodesic_ray(tree, 64, seed=1)
    a, b = Z.points[0], Z.points[48]
    path = sample_quasigeodesic(tree, a, b, 1.0, 0.0, seed=2)
    assert path == tree.geodesic(a, b)
    # geodesics between points of a tree geodesic lie on it
    zset = set(Z.points)
    assert all(x in zset for x in path)


def test_sampled_quasigeodesic_verified(tree):
    Z = geodesic_ray(tree, 96, seed=3)
    a, b = Z.points[2], Z.points[80]
    path = sample_quasigeodesic(tree, a, b, 2.0, 2.0, seed=4)
    # independent all-pairs recheck of the two-sided inequality
    for i in range(0, len(path), 3):
        for j in range(0, len(path), 5):
            d = tree.dist(path[i], path[j])
            assert d <= 2.0 * abs(i - j) + 2.0
            assert d >= abs(i - j) / 2.0 - 2.0
    # endpoints honored
    assert path[0] == a and path[-1] == b


def test_sampling_deterministic(tree):
    Z = geodesic_ray(tree, 64, seed=5)
    a, b = Z.points[0], Z.points[50]
    p1 = sample_quasigeodesic(tree, a, b, 2.0, 2.0, seed=6)
    p2 = sample_quasigeodesic(tree, a, b, 2.0, 2.0, seed=6)
    assert p1 == p2


def test_reordered_geodesic_is_geodesic(grid):
    Z = diagonal_ray(grid, 64)
    a, b = Z.points[0], Z.points[64]
    for priority in ([0, 1, 2, 3], [3, 2, 1, 0], [2, 0, 3, 1]):
        path = reordered_geodesic(grid, a, b, priority)
        assert len(path) - 1 == grid.dist(a, b)
        assert all(grid.dist(x, y) == 1 for x, y in zip(path, path[1:]))
        assert path[-1] == b


# -- the probe ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def tree_probe(tree):
    Z = geodesic_ray(tree, 300, seed=7)
    report = morse_gauge_probe(tree, Z, const(1.0), [1.0, 2.0], [0.0, 2.0],
                               [16, 32], seed=8, samples_per_cell=24)
    return Z, report


def test_probe_monotone_in_constants(tree_probe):
    _, rep = tree_probe
    for r in rep.radii:
        assert rep.cells[(1.0, 0.0, r)] <= rep.cells[(2.0, 2.0, r)]
    assert rep.gauges[(1.0, 0.0)] <= rep.gauges[(2.0, 2.0)]


def test_probe_monotone_in_samples(tree):
    Z = geodesic_ray(tree, 300, seed=7)
    small = morse_gauge_probe(tree, Z, const(1.0), [2.0], [2.0], [16],
                              seed=8, samples_per_cell=8)
    large = morse_gauge_probe(tree, Z, const(1.0), [2.0], [2.0], [16],
                              seed=8, samples_per_cell=24)
    assert small.cells[(2.0, 2.0, 16)] <= large.cells[(2.0, 2.0, 16)]


def test_probe_bounded_on_tree(tree_probe):
    _, rep = tree_probe
    assert not rep.flagged_non_morse
    devs = [rep.cells[(2.0, 2.0, r)] for r in rep.radii]
    assert max(devs) <= 16  # gauge-1 deviations stay near the endpoint offsets


def test_probe_witnesses_recompute(tree, tree_probe):
    Z, rep = tree_probe
    for key, wit in rep.witnesses.items():
        dev, ok = recompute_witness(tree, wit, Z, const(1.0))
        assert ok
        assert dev == pytest.approx(wit.deviation)


def test_probe_flags_grid_diagonal(grid):
    Z = diagonal_ray(grid, 260)
    rep = morse_gauge_probe(grid, Z, const(1.0), [1.0], [0.0], [8, 16, 32],
                            seed=9, samples_per_cell=8)
    assert rep.flagged_non_morse
    for r in (8, 16, 32):
        assert rep.cells[(1.0, 0.0, r)] >= r / 4


def test_exhaustive_certificate_bounds_probe(tree):
    Z = geodesic_ray(tree, 300, seed=7)
    rep = morse_gauge_probe(tree, Z, const(1.0), [2.0], [2.0], [16],
                            seed=8, samples_per_cell=24)
    cert = exhaustive_gauge_certificate(tree, Z, 16, 2.0, 2.0, const(1.0))
    assert rep.cells[(2.0, 2.0, 16)] <= cert


# -- limit geodesics ----------------------------------------------------------------

def test_limit_of_geodesic(tree):
    Z = geodesic_ray(tree, 200, seed=11)
    lim = limit_geodesic(tree, Z)
    assert lim.stabilized
    assert lim.tracking_n == 0.0
    # the stabilized ray is an initial piece of Z itself
    zword = Z.points[-1].letters
    assert lim.prefix_word == zword[: lim.prefix_length]


def test_limit_of_detour_ray(tree):
    ray = log_detour_ray(tree, 512, seed=12)
    lim = limit_geodesic(tree, ray)
    assert lim.stabilized
    core = random_geodesic_word(tree, 512, np.random.default_rng(12))
    assert lim.prefix_word == tuple(core[: lim.prefix_length])
    assert lim.tracking_n <= 4.0  # detours are log-small


def test_limit_unstable_for_bounded_path(tree):
    wobble = [(0.0, EPSILON)]
    a = Word(((0, 1),))
    for t in range(1, 33):
        wobble.append((float(t), a if t % 2 else EPSILON))
    from coarse_lab.rays import SampledRay

    lim = limit_geodesic(tree, SampledRay(tuple(wobble)))
    assert not lim.stabilized


# -- non-Morse witnesses ---------------------------------------------------------------

def test_grid_witness(grid):
    Z = diagonal_ray(grid, 300)
    wit = non_morse_witness(grid, Z, 64, seed=13)
    assert wit is not None
    assert wit.deviation >= 16
    dev, ok = recompute_witness(grid, wit, Z, const(1.0))
    assert ok and dev == pytest.approx(wit.deviation)


def test_tree_has_no_witness(tree):
    Z = geodesic_ray(tree, 300, seed=14)
    assert non_morse_witness(tree, Z, 64, seed=15) is None


def test_ladder_flat_witness(ladder13_space):
    Z = ladder_flat_ray(ladder13_space, 160)
    wit = non_morse_witness(ladder13_space, Z, 32, seed=16)
    assert wit is not None
    assert wit.deviation >= 8
    dev, ok = recompute_witness(ladder13_space, wit, Z, const(1.0))
    assert ok and dev == pytest.approx(wit.deviation)


def test_witness_requires_long_ray(grid):
    Z = diagonal_ray(grid, 16)
    with pytest.raises(ValueError):
        non_morse_witness(grid, Z, 64)
