import math

import numpy as np
import pytest

from coarse_lab.coxeter import EPSILON, Word, distance, normal_form
from coarse_lab.graphs import SimpleGraph
from coarse_lab.rays import (
    CayleySpace,
    GraphSpace,
    PlaneSpace,
    SampledRay,
    closeness_constant,
    completion_scale_bound,
    connect_the_dots,
    counterexample_beta,
    equivalent_rays,
    format_ray,
    geodesic_ray,
    in_neighborhood,
    log_detour_ray,
    make_ray,
    norm_control_threshold,
    parse_ray,
    random_geodesic_word,
    scattered_sample,
    tree_space,
    verify_ray,
    word_ray,
)
from coarse_lab.sublinear import const, log_gauge


# -- spaces ----------------------------------------------------------------------

def test_graph_space_distances():
    g = SimpleGraph.build(["a", "b", "c", "d"],
                          [("a", "b"), ("b", "c"), ("c", "d")])
    sp = GraphSpace(g, "a")
    assert sp.dist("a", "d") == 3
    assert sp.norm("c") == 2
    path = sp.geodesic("a", "d")
    assert path[0] == "a" and path[-1] == "d"
    assert all(sp.dist(x, y) == 1 for x, y in zip(path, path[1:]))


def test_plane_space():
    sp = PlaneSpace()
    assert sp.dist((0.0, 0.0), (3.0, 4.0)) == 5.0
    mid = sp.interpolate((0.0, 0.0), (2.0, 2.0), 0.5)
    assert mid == (1.0, 1.0)
    D = sp.pairwise([(0.0, 0.0), (1.0, 0.0)], [(0.0, 1.0)])
    assert D.shape == (2, 1)


def test_cayley_fast_paths_match_generic(tree, grid, ladder13_space):
    # the free-product and dihedral-factor shortcuts must agree with the
    # stack-rewriting distance, and with BFS layers near the identity
    rng = np.random.default_rng(11)
    for space in (tree, grid):
        pts = [geodesic_ray(space, 20, seed=i).points[-1] for i in range(8)]
        pts.append(EPSILON)
        p = space.presentation
        for x in pts:
            for y in pts:
                fast = space.dist(x, y)
                slow = distance(p, x, y)
                assert fast == slow
    # batched == scalar on the ladder space too (generic route)
    pts = [geodesic_ray(ladder13_space, 8, seed=i).points[-1] for i in range(5)]
    D = ladder13_space.pairwise(pts)
    for i, x in enumerate(pts):
        for j, y in enumerate(pts):
            assert D[i, j] == ladder13_space.dist(x, y)


def test_cayley_distance_matches_bfs(tree):
    from coarse_lab.coxeter import ball

    layers = ball(tree.presentation, 5)
    for w, d in layers.items():
        assert tree.dist(EPSILON, w) == d


def test_geodesic_oracle_consecutive_steps(tree, grid):
    for space in (tree, grid):
        a = geodesic_ray(space, 12, seed=2).points[-1]
        b = geodesic_ray(space, 9, seed=3).points[-1]
        path = space.geodesic(a, b)
        assert space.dist(a, b) == len(path) - 1
        assert all(space.dist(x, y) == 1 for x, y in zip(path, path[1:]))


def test_ball_points_local(tree):
    pts = tree.ball_points(EPSILON, 2)
    assert len(pts) == 10


# -- sampled rays -----------------------------------------------------------------

def test_ray_validation(tree):
    with pytest.raises(ValueError):
        SampledRay(((1.0, EPSILON),))
    with pytest.raises(ValueError):
        SampledRay(((0.0, EPSILON), (0.0, EPSILON)))
    with pytest.raises(ValueError):
        make_ray(tree, ((0.0, geodesic_ray(tree, 3, seed=1).points[-1]),))


def test_word_ray_rejects_non_geodesic(tree):
    with pytest.raises(ValueError):
        word_ray(tree, [(0, 1), (0, 1)])  # involution cancels


def test_ray_at_nearest_sample():
    ray = SampledRay(((0.0, (0.0, 0.0)), (2.0, (2.0, 0.0)), (5.0, (5.0, 0.0))))
    assert ray.at(0.9) == (0.0, 0.0)
    assert ray.at(4.0) == (5.0, 0.0)
    assert ray.at(99) == (5.0, 0.0)


# -- verify_ray --------------------------------------------------------------------

def test_geodesic_verifies(tree):
    ray = geodesic_ray(tree, 128, seed=1)
    chk = verify_ray(tree, ray, 1.0, log_gauge())
    assert chk.ok and chk.fitted_scale == 0.0


def test_small_L_fails(tree):
    ray = geodesic_ray(tree, 128, seed=1)
    chk = verify_ray(tree, ray, 0.5, log_gauge())
    assert not chk.ok
    s, t = chk.worst_pair
    assert abs(s - t) > 1  # the violation is a long pair, not a neighbor


def test_log_detour_ray_fits(tree):
    ray = log_detour_ray(tree, 512, seed=7)
    chk = verify_ray(tree, ray, 1.25, log_gauge())
    assert chk.fitted_scale <= 3.0
    # direct measurement: the fitted scale is the max over pairs of the
    # needed gauge multiple, recomputed here independently
    pts, ts = list(ray.points), list(ray.times)
    worst = 0.0
    for i in range(0, len(ts), 17):
        for j in range(0, len(ts), 29):
            if i == j:
                continue
            d = tree.dist(pts[i], pts[j])
            gap = abs(ts[i] - ts[j])
            g = log_gauge()(max(ts[i], ts[j]))
            worst = max(worst, (d - 1.25 * gap) / g, (gap / 1.25 - d) / g)
    assert worst <= chk.fitted_scale + 1e-9


def test_norm_control(tree):
    ray = log_detour_ray(tree, 512, seed=3)
    T = norm_control_threshold(ray, tree, 1.25)
    assert T < 512  # bounds hold from some sampled time onward
    for t, x in ray.samples:
        if t > T:
            assert t / 2.5 <= tree.norm(x) <= 2.5 * t


# -- connect the dots -------------------------------------------------------------

def test_completion_of_geodesic(tree):
    ray = geodesic_ray(tree, 64, seed=5)
    res = connect_the_dots(tree, ray, log_gauge())
    assert res.n <= 1.0
    by_time = dict(res.completed.samples)
    for t, x in ray.samples[:-1]:
        assert by_time[t] == x  # agrees at integer times


def test_completion_of_detour_ray(tree):
    ray = log_detour_ray(tree, 256, seed=9)
    theta = log_gauge()
    res = connect_the_dots(tree, ray, theta)
    in_chk = verify_ray(tree, ray, 1.25, theta)
    bound = completion_scale_bound(1.25, theta, in_chk.fitted_scale)
    assert res.n <= bound
    out_chk = verify_ray(tree, res.completed, 1.25, theta)
    assert out_chk.fitted_scale <= bound


def test_completion_needs_integer_times(tree):
    ray = SampledRay(((0.0, EPSILON), (1.5, geodesic_ray(tree, 2, seed=1).points[-1])))
    with pytest.raises(ValueError):
        connect_the_dots(tree, ray, log_gauge())


def test_completion_needs_oracle():
    class NoOracle(PlaneSpace):
        def geodesic(self, x, y):
            raise NotImplementedError("no oracle")

    sp = NoOracle()
    ray = SampledRay(((0.0, (0.0, 0.0)), (1.0, (1.0, 0.0))))
    with pytest.raises(NotImplementedError):
        connect_the_dots(sp, ray, log_gauge())


# -- closeness ---------------------------------------------------------------------

def test_fellow_self_zero(tree):
    ray = geodesic_ray(tree, 64, seed=2)
    assert closeness_constant(tree, ray, ray, log_gauge(), "fellow") == 0.0


def test_fellow_bounds_track(tree):
    from coarse_lab.sublinear import estimation_constants

    kappa = log_gauge()
    base = random_geodesic_word(tree, 256, np.random.default_rng(21))
    alpha = word_ray(tree, base)
    beta = log_detour_ray(tree, 256, seed=21)  # same core seed, detoured
    n_fellow = closeness_constant(tree, alpha, beta, kappa, "fellow")
    n_track = closeness_constant(tree, alpha, beta, kappa, "track")
    inflation = estimation_constants(kappa, max(1.0, n_fellow)).D2
    assert n_track <= n_fellow * inflation + 1e-9


def test_track_diverges_for_branching_rays(tree):
    a = geodesic_ray(tree, 256, seed=1)
    b = geodesic_ray(tree, 256, seed=2)
    n = closeness_constant(tree, a, b, log_gauge(), "track")
    assert n > 20  # d(a_r, b_r) ~ 2r overwhelms any log multiple


def test_closeness_errors(tree):
    a = geodesic_ray(tree, 16, seed=1)
    # a ray that never reaches norm 1 has an empty track grid
    stuck = SampledRay(((0.0, EPSILON), (1.0, EPSILON), (2.0, EPSILON)))
    with pytest.raises(ValueError):
        closeness_constant(tree, a, stuck, log_gauge(), "track")
    with pytest.raises(ValueError):
        closeness_constant(tree, a, a, log_gauge(), "frob")


def test_neighborhood_monotone(tree):
    kappa = log_gauge()
    Z = list(geodesic_ray(tree, 64, seed=4).points)
    rng = np.random.default_rng(12)
    pts = scattered_sample(tree, 40, 64, seed=13)
    for x in pts:
        for D1, D2 in [(0.5, 1.0), (1.0, 3.0)]:
            if in_neighborhood(tree, x, Z, D1, kappa):
                assert in_neighborhood(tree, x, Z, D2, kappa)


# -- equivalence -------------------------------------------------------------------

def test_equivalent_to_self(tree):
    ray = geodesic_ray(tree, 256, seed=6)
    rep = equivalent_rays(tree, ray, ray, 256)
    assert rep.dir1_slope == 0.0 and rep.dir2_slope == 0.0 and rep.verdict


def test_counterexample_asymmetry():
    sp = PlaneSpace()
    alpha, beta = counterexample_beta(4096)
    rep = equivalent_rays(sp, alpha, beta, 4096)
    assert rep.dir1_slope <= 0.05
    assert rep.dir2_slope >= 0.5


def test_counterexample_construction():
    sp = PlaneSpace()
    alpha, beta = counterexample_beta(64)
    by_time = dict(beta.samples)
    for n in (1, 2, 4, 8, 16, 32, 64):
        x = by_time[float(n)]
        assert x[1] == float(n)  # the jump sample sits at height 2^n
        assert sp.dist(x, (x[0], 0.0)) == float(n)  # apex to the axis
    # beta violates the ray inequality at a jump pair
    chk = verify_ray(sp, beta, 1.0, log_gauge())
    assert not chk.ok
    s, t = chk.worst_pair
    assert any(abs(s - 2 ** k) <= 1 or abs(t - 2 ** k) <= 1 for k in range(0, 7))


def test_symmetry_surrogate_small(tree):
    # spot version of the acceptance criterion: verdicts agree in both
    # directions for honest ray pairs
    for seed in range(4):
        a = log_detour_ray(tree, 512, seed=100 + seed)
        b = log_detour_ray(tree, 512, seed=200 + seed)
        rep = equivalent_rays(tree, a, b, 512)
        assert (rep.dir1_slope <= 0.05) == (rep.dir2_slope <= 0.05)


def test_equivalence_requires_horizon(tree):
    a = geodesic_ray(tree, 32, seed=1)
    b = geodesic_ray(tree, 512, seed=2)
    with pytest.raises(ValueError):
        equivalent_rays(tree, a, b, 512)


# -- ray files ----------------------------------------------------------------------

def test_ray_csv_round_trip(tree):
    ray = geodesic_ray(tree, 16, seed=8)
    text = format_ray(tree, ray)
    assert text.splitlines()[0] == "t,point"
    back = parse_ray(tree, text)
    assert back.samples == ray.samples


def test_plane_ray_round_trip():
    sp = PlaneSpace()
    alpha, beta = counterexample_beta(16)
    back = parse_ray(sp, format_ray(sp, beta))
    assert back.samples == beta.samples


def test_ray_csv_header_required(tree):
    with pytest.raises(ValueError):
        parse_ray(tree, "time,pt\n0,\n")
