"""Pointed metric spaces and sampled rays.

Three space realizations cover every experiment: finite explicit graphs,
Cayley graphs of right-angled presentations (points are normal-form words),
and the Euclidean plane.  Rays are finite sampled paths from the basepoint;
the verifiers below check the two-sided ray inequality

    |s-t|/L - theta(max(s,t)) <= d(gamma(s), gamma(t)) <= L|s-t| + theta(max(s,t)),

complete integer-sampled rays by geodesic interpolation, measure
fellow-travel/tracking constants against a gauge, and estimate the two
directed closeness slopes whose limits define ray equivalence.

Cayley distances have exact fast paths: free products of Z/2s (trees) and the
4-cycle group (a product of two infinite dihedral factors) reduce to common-
prefix arithmetic, which also vectorizes for the all-pairs checks.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .coxeter import (
    EPSILON,
    Presentation,
    Word,
    _reduce_letters,
    append_letter,
    format_word,
    normal_form,
    parse_word,
)
from .graphs import SimpleGraph
from .sublinear import SublinearFn


# ---------------------------------------------------------------------------
# Spaces
# ---------------------------------------------------------------------------

class PointedSpace:
    """Minimal metric-space interface the ray machinery needs."""

    basepoint = None

    def dist(self, x, y) -> float:
        raise NotImplementedError

    def norm(self, x) -> float:
        return self.dist(self.basepoint, x)

    def geodesic(self, x, y) -> List:
        """A geodesic sample chain from x to y, endpoints included.

        Graph realizations return the vertex path (unit steps); the plane
        returns [x, y] and interpolates continuously.
        """
        raise NotImplementedError(f"{type(self).__name__} has no geodesic oracle")

    def interpolate(self, x, y, frac: float):
        """The point a fraction frac along the geodesic from x to y."""
        path = self.geodesic(x, y)
        return path[round(frac * (len(path) - 1))]

    def pairwise(self, xs: Sequence, ys: Optional[Sequence] = None) -> np.ndarray:
        ys = xs if ys is None else ys
        out = np.empty((len(xs), len(ys)))
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                out[i, j] = self.dist(x, y)
        return out

    def dist_to_set(self, x, zs: Sequence) -> float:
        return float(self.pairwise([x], zs).min())


class GraphSpace(PointedSpace):
    """A finite simple graph with the shortest-path metric."""

    def __init__(self, graph: SimpleGraph, basepoint: str):
        if basepoint not in graph.vertices:
            raise ValueError(f"unknown basepoint {basepoint!r}")
        self.graph = graph
        self.basepoint = basepoint
        self._adj = graph.adjacency()
        self._bfs_cache: Dict[str, Dict[str, int]] = {}
        self._parent_cache: Dict[str, Dict[str, str]] = {}

    def _bfs(self, source: str) -> Dict[str, int]:
        if source not in self._bfs_cache:
            dist = {source: 0}
            parent = {source: source}
            frontier = [source]
            while frontier:
                nxt = []
                for u in frontier:
                    for v in self._adj[u]:
                        if v not in dist:
                            dist[v] = dist[u] + 1
                            parent[v] = u
                            nxt.append(v)
                frontier = nxt
            self._bfs_cache[source] = dist
            self._parent_cache[source] = parent
        return self._bfs_cache[source]

    def dist(self, x, y) -> float:
        d = self._bfs(x).get(y)
        if d is None:
            raise ValueError(f"{x!r} and {y!r} are not connected")
        return float(d)

    def geodesic(self, x, y) -> List[str]:
        self._bfs(x)
        parent = self._parent_cache[x]
        if y not in parent:
            raise ValueError(f"{x!r} and {y!r} are not connected")
        path = [y]
        while path[-1] != x:
            path.append(parent[path[-1]])
        return path[::-1]


class CayleySpace(PointedSpace):
    """The Cayley graph of a right-angled presentation; points are normal forms."""

    basepoint = EPSILON

    def __init__(self, presentation: Presentation):
        self.presentation = presentation
        self._mode = "generic"
        if presentation.edgeless:
            self._mode = "free"
        elif presentation.is_square:
            self._mode = "square"
            (a0, a1), (b0, b1) = presentation.square_factors()
            self._factor_of = {a0: 0, a1: 0, b0: 1, b1: 1}

    # -- distances ----------------------------------------------------------

    def dist(self, x: Word, y: Word) -> float:
        if self._mode == "free":
            return float(_free_dist(x.letters, y.letters))
        if self._mode == "square":
            xa, xb = self._project(x)
            ya, yb = self._project(y)
            return float(_free_dist(xa, ya) + _free_dist(xb, yb))
        p = self.presentation
        return float(len(_reduce_letters(p, x.inverse(p.flavor).letters + y.letters)))

    def _project(self, w: Word) -> Tuple[Tuple, Tuple]:
        fa = tuple(l for l in w.letters if self._factor_of[l[0]] == 0)
        fb = tuple(l for l in w.letters if self._factor_of[l[0]] == 1)
        return fa, fb

    def norm(self, x: Word) -> float:
        return float(len(x.letters))  # points are normal forms, hence geodesic words

    def geodesic(self, x: Word, y: Word) -> List[Word]:
        """Unit-step geodesic chain from x to y (points are reduced words)."""
        p = self.presentation
        comm, cox = p.commuting(), p.flavor == "coxeter"
        w = normal_form(p, x.inverse(p.flavor) * y)
        current = list(normal_form(p, x).letters)
        path = [Word(tuple(current))]
        for g, s in w.letters:
            append_letter(current, g, s, comm, cox)
            path.append(Word(tuple(current)))
        return path

    def ball_points(self, center: Word, radius: int, budget: int = 10 ** 6) -> List[Word]:
        """All points within the given radius of center, in BFS order."""
        p = self.presentation
        comm, cox = p.commuting(), p.flavor == "coxeter"
        gens = [(i, +1) for i in range(len(p.generators))]
        if p.flavor == "artin":
            gens += [(i, -1) for i in range(len(p.generators))]
        c0 = normal_form(p, center)
        seen = {c0}
        order = [c0]
        frontier = [list(c0.letters)]
        for _ in range(radius):
            nxt = []
            for letters in frontier:
                for g, s in gens:
                    cand = list(letters)
                    append_letter(cand, g, s, comm, cox)
                    w = _materialize(p, cand)
                    if w not in seen:
                        seen.add(w)
                        order.append(w)
                        nxt.append(cand)
                        if len(seen) > budget:
                            raise MemoryError("ball_points budget exceeded")
            frontier = nxt
        return order

    # -- batched distances ----------------------------------------------------

    def pairwise(self, xs: Sequence[Word], ys: Optional[Sequence[Word]] = None) -> np.ndarray:
        same = ys is None
        ys_eff = xs if same else ys
        if self._mode == "free":
            ux = [w.letters for w in xs]
            return _batch_free(ux, None if same else [w.letters for w in ys_eff])
        if self._mode == "square":
            xa, xb = zip(*(self._project(w) for w in xs)) if xs else ((), ())
            ya, yb = (xa, xb) if same else (
                zip(*(self._project(w) for w in ys_eff)) if ys_eff else ((), ())
            )
            da = _batch_free(list(xa), None if same else list(ya))
            db = _batch_free(list(xb), None if same else list(yb))
            return da + db
        return super().pairwise(xs, ys)


def _free_dist(u: Tuple, v: Tuple) -> int:
    """Distance in a free product of cyclic groups: cancellation is exactly
    the common prefix of the two reduced words."""
    k = 0
    m = min(len(u), len(v))
    while k < m and u[k] == v[k]:
        k += 1
    return len(u) + len(v) - 2 * k


def _encode(words: List[Tuple], width: int, pad: int) -> np.ndarray:
    out = np.full((len(words), width), pad, dtype=np.int32)
    for i, w in enumerate(words):
        if w:
            out[i, : len(w)] = [g * 2 + (0 if s > 0 else 1) for g, s in w]
    return out


def _batch_free(us: List[Tuple], vs: Optional[List[Tuple]] = None) -> np.ndarray:
    """Pairwise free-product distances via common-prefix lengths.

    All-pairs LCPs within one set come from the sorted-order identity: after
    sorting the words lexicographically, LCP(i, j) is the minimum of the
    adjacent LCPs between them, so one vectorized adjacent comparison plus
    running minima covers every pair.  Small cross queries compare directly.
    """
    if vs is None:
        full = _allpairs_free(us)
        return full
    if not us or not vs:
        return np.zeros((len(us), len(vs)))
    if min(len(us), len(vs)) <= 64:
        return _cross_free(us, vs)
    full = _allpairs_free(list(us) + list(vs))
    return full[: len(us), len(us):]


def _allpairs_free(words: List[Tuple]) -> np.ndarray:
    m = len(words)
    if m == 0:
        return np.zeros((0, 0))
    order = sorted(range(m), key=lambda i: words[i])
    lens = np.array([len(words[i]) for i in order], dtype=np.int64)
    width = max(1, int(lens.max()) if m else 1)
    A = _encode([words[i] for i in order], width, pad=-1)
    if m > 1:
        eq = np.concatenate(
            [A[1:] == A[:-1], np.zeros((m - 1, 1), dtype=bool)], axis=1
        )
        adj = np.minimum(np.argmin(eq, axis=1), np.minimum(lens[1:], lens[:-1]))
    else:
        adj = np.zeros(0, dtype=np.int64)
    lcp = np.empty((m, m), dtype=np.int32)
    for i in range(m):
        lcp[i, i] = lens[i]
        if i + 1 < m:
            lcp[i, i + 1:] = np.minimum.accumulate(adj[i:])
    iu = np.triu_indices(m, k=1)
    lcp[(iu[1], iu[0])] = lcp[iu]
    dist_sorted = lens[:, None] + lens[None, :] - 2 * lcp
    inv = np.empty(m, dtype=np.int64)
    inv[order] = np.arange(m)
    return dist_sorted[np.ix_(inv, inv)].astype(float)


def _cross_free(us: List[Tuple], vs: List[Tuple]) -> np.ndarray:
    if len(us) > len(vs):
        return _cross_free(vs, us).T
    width = max(
        1,
        max((len(w) for w in us), default=0),
        max((len(w) for w in vs), default=0),
    )
    U = _encode(us, width, pad=-1)
    V = _encode(vs, width, pad=-2)
    lu = np.array([len(w) for w in us], dtype=np.int64)
    lv = np.array([len(w) for w in vs], dtype=np.int64)
    out = np.empty((len(us), len(vs)))
    false_col = np.zeros((len(vs), 1), dtype=bool)
    for i in range(len(us)):
        eq = np.concatenate([V == U[i][None, :], false_col], axis=1)
        lcp = np.minimum(np.argmin(eq, axis=1), np.minimum(lu[i], lv))
        out[i] = lu[i] + lv - 2 * lcp
    return out


class PlaneSpace(PointedSpace):
    """The Euclidean plane, basepoint at the origin; points are (x, y) tuples."""

    basepoint = (0.0, 0.0)

    def dist(self, x, y) -> float:
        return math.hypot(x[0] - y[0], x[1] - y[1])

    def geodesic(self, x, y) -> List:
        return [x, y]

    def interpolate(self, x, y, frac: float):
        return (x[0] + frac * (y[0] - x[0]), x[1] + frac * (y[1] - x[1]))

    def pairwise(self, xs, ys=None):
        ys = xs if ys is None else ys
        A = np.asarray(xs, dtype=float)
        B = np.asarray(ys, dtype=float)
        return np.hypot(A[:, None, 0] - B[None, :, 0], A[:, None, 1] - B[None, :, 1])


# Canonical experiment spaces.

def tree_space() -> CayleySpace:
    """Cayley graph of Z/2 * Z/2 * Z/2: the 3-regular tree."""
    g = SimpleGraph.build(["s", "t", "u"], [])
    return CayleySpace(Presentation(g, "coxeter"))


def grid_space() -> CayleySpace:
    """Cayley graph of the 4-cycle group: two commuting infinite dihedral
    factors, i.e. the taxicab grid."""
    g = SimpleGraph.build(
        ["s", "t", "u", "v"], [("s", "t"), ("t", "u"), ("u", "v"), ("v", "s")]
    )
    return CayleySpace(Presentation(g, "coxeter"))


def ladder_space(n: int = 13) -> CayleySpace:
    from .graphs import ladder_graph

    return CayleySpace(Presentation(ladder_graph(n), "coxeter"))


# ---------------------------------------------------------------------------
# Sampled rays
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampledRay:
    """A finite sampled path t -> point with t_0 = 0 at the basepoint."""

    samples: Tuple[Tuple[float, object], ...]
    claimed_L: Optional[float] = None
    claimed_theta: Optional[SublinearFn] = None

    def __post_init__(self):
        if not self.samples:
            raise ValueError("a ray needs at least one sample")
        if self.samples[0][0] != 0:
            raise ValueError("rays start at time 0")
        times = self.times
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("sample times must be strictly increasing")

    @property
    def times(self) -> Tuple[float, ...]:
        return tuple(t for t, _ in self.samples)

    @property
    def points(self) -> Tuple:
        return tuple(x for _, x in self.samples)

    def at(self, t: float):
        """The sample point whose time is nearest to t."""
        times = self.times
        i = bisect_left(times, t)
        if i == 0:
            return self.samples[0][1]
        if i == len(times):
            return self.samples[-1][1]
        before, after = times[i - 1], times[i]
        return self.samples[i][1] if after - t <= t - before else self.samples[i - 1][1]

    def horizon(self) -> float:
        return self.samples[-1][0]


def make_ray(space: PointedSpace, samples: Sequence[Tuple[float, object]],
             claimed_L: Optional[float] = None,
             claimed_theta: Optional[SublinearFn] = None) -> SampledRay:
    ray = SampledRay(tuple(samples), claimed_L, claimed_theta)
    if ray.samples[0][1] != space.basepoint:
        raise ValueError("rays are pointed: sample 0 must be the basepoint")
    return ray


def word_ray(space: CayleySpace, letters: Sequence[Tuple[int, int]],
             stride: int = 1) -> SampledRay:
    """The prefix ray of a geodesic word: sample k is the k-letter prefix.

    stride > 1 materializes only every stride-th prefix (plus the endpoint),
    for long rays whose distance queries have closed forms anyway.
    """
    p = space.presentation
    comm, cox = p.commuting(), p.flavor == "coxeter"
    samples = [(0.0, EPSILON)]
    current: List = []
    last = len(letters)
    for k, (g, s) in enumerate(letters, start=1):
        append_letter(current, g, s, comm, cox)
        if len(current) != k:
            raise ValueError(f"input word is not geodesic at letter {k}")
        if k % stride == 0 or k == last:
            samples.append((float(k), _materialize(p, current)))
    return SampledRay(tuple(samples), claimed_L=1.0)


def _materialize(p: Presentation, reduced: List) -> Word:
    """Normal form of an already-reduced letter list."""
    if p.edgeless:
        return Word(tuple(reduced))
    return normal_form(p, Word(tuple(reduced)))


# -- ray verification ---------------------------------------------------------

@dataclass(frozen=True)
class RayCheck:
    ok: bool
    worst_pair: Tuple[float, float]
    fitted_scale: float


def verify_ray(space: PointedSpace, ray: SampledRay, L: float,
               theta: SublinearFn) -> RayCheck:
    """Fit the least n making the ray an (L, n*theta)-ray on its samples.

    Both sides of the ray inequality are linear in the additive gauge term,
    so the least admissible scale per pair is explicit and the fitted scale
    is the maximum over sampled pairs; ok means scale <= 1.
    """
    if len(ray.samples) < 2 or L <= 0:
        raise ValueError("need >= 2 samples and L > 0")
    ts = np.array(ray.times)
    pts = list(ray.points)
    D = space.pairwise(pts)
    gaps = np.abs(ts[:, None] - ts[None, :])
    theta_vec = np.array([theta(t) for t in ts])
    theta_max = np.maximum(theta_vec[:, None], theta_vec[None, :])
    need_upper = (D - L * gaps) / theta_max
    need_lower = (gaps / L - D) / theta_max
    need = np.maximum(need_upper, need_lower)
    np.fill_diagonal(need, -np.inf)
    i, j = np.unravel_index(int(np.argmax(need)), need.shape)
    fitted = max(0.0, float(need[i, j]))
    return RayCheck(ok=fitted <= 1.0 + 1e-9,
                    worst_pair=(float(ts[i]), float(ts[j])),
                    fitted_scale=fitted)


def norm_control_threshold(ray: SampledRay, space: PointedSpace, L: float) -> float:
    """Least sampled time T beyond which t/(2L) <= |gamma(t)| <= 2Lt holds."""
    worst = 0.0
    for t, x in ray.samples[1:]:
        nx = space.norm(x)
        if not (t / (2 * L) <= nx <= 2 * L * t):
            worst = t
    return worst


# -- connect the dots ---------------------------------------------------------

@dataclass(frozen=True)
class CompletionResult:
    completed: SampledRay
    n: float


def connect_the_dots(space: PointedSpace, ray: SampledRay, theta: SublinearFn,
                     subdivisions: int = 4) -> CompletionResult:
    """Complete an integer-sampled ray along oracle geodesics.

    Between integers t and t+1 the completion runs along a geodesic from
    gamma(t) to gamma(t+1) at proportional speed.  The returned n is the
    least constant with d(gamma(t), completion(t)) <= n*theta(t) over the
    refinement grid, measuring gamma at the nearest integer sample.
    """
    ts = ray.times
    if any(float(t) != float(k) for k, t in enumerate(ts)):
        raise ValueError("ray must be sampled at consecutive integer times")
    samples: List[Tuple[float, object]] = []
    n_measured = 0.0
    for k in range(len(ts) - 1):
        x, y = ray.samples[k][1], ray.samples[k + 1][1]
        path = space.geodesic(x, y)
        for sub in range(subdivisions):
            t = k + sub / subdivisions
            frac = sub / subdivisions
            pt = path[round(frac * (len(path) - 1))] if len(path) > 1 else x
            samples.append((t, pt))
            if sub:
                closeness = min(space.dist(pt, x), space.dist(pt, y))
                n_measured = max(n_measured, closeness / theta(t))
    samples.append((float(len(ts) - 1), ray.samples[-1][1]))
    return CompletionResult(SampledRay(tuple(samples)), n_measured)


def completion_scale_bound(L: float, theta: SublinearFn, input_scale: float = 1.0) -> float:
    """Constructive bound on the completed ray's gauge scale.

    Bridging one integer step costs at most L + theta(t+1), and concavity
    gives theta(t+1) <= (1 + theta(1)) * theta(t); accounting for both
    crossing legs and the interior gap yields the constant below.
    """
    c = max(1.0, input_scale)
    return c * (2 * L + 2 * theta(1.0) + 5.0)


# -- closeness ---------------------------------------------------------------

def closeness_constant(space: PointedSpace, alpha: SampledRay, beta: SampledRay,
                       kappa: SublinearFn, mode: str = "fellow") -> float:
    """Least n with d(alpha, beta) <= n*kappa pointwise.

    mode "fellow" compares samples at shared times; mode "track" compares the
    first samples at norm >= r over a geometric r-grid.  Raises when there is
    nothing comparable.
    """
    if mode == "fellow":
        bt = {t: x for t, x in beta.samples}
        pairs = [(t, x, bt[t]) for t, x in alpha.samples if t in bt]
        if not pairs:
            raise ValueError("no shared time grid")
        return max(space.dist(x, y) / kappa(t) for t, x, y in pairs)
    if mode == "track":
        na = [space.norm(x) for x in alpha.points]
        nb = [space.norm(x) for x in beta.points]
        r_top = min(max(na), max(nb))
        r, worst, seen = 1.0, 0.0, False
        while r <= r_top:
            xa = next(x for x, nx in zip(alpha.points, na) if nx >= r)
            xb = next(x for x, nx in zip(beta.points, nb) if nx >= r)
            worst = max(worst, space.dist(xa, xb) / kappa(r))
            seen = True
            r *= 2
        if not seen:
            raise ValueError("empty comparable norm grid")
        return worst
    raise ValueError(f"unknown mode {mode!r}")


def in_neighborhood(space: PointedSpace, x, zs: Sequence, D: float,
                    kappa: SublinearFn) -> bool:
    """Membership in the gauge neighborhood: d(x, Z) <= D * kappa(|x|)."""
    return space.dist_to_set(x, zs) <= D * kappa(space.norm(x))


# -- equivalence slopes --------------------------------------------------------

@dataclass(frozen=True)
class EquivalenceReport:
    dir1_slope: float
    dir2_slope: float
    verdict: bool


SLOPE_THRESHOLD = 0.05


def equivalent_rays(space: PointedSpace, alpha: SampledRay, beta: SampledRay,
                    horizon: float) -> EquivalenceReport:
    """Estimate the two directed closeness slopes of the ~ relation.

    dir1 is the median over dyadic t in [horizon/8, horizon] of
    d(alpha(t), beta)/t, with distance-to-set through nearest sampled points;
    dir2 is symmetric.  The verdict accepts when either slope is below the
    0.05 threshold, mirroring the either/or shape of the definition.
    """
    if alpha.horizon() < horizon or beta.horizon() < horizon:
        raise ValueError("both rays must be sampled to the horizon")
    dyadic = [horizon / 8, horizon / 4, horizon / 2, horizon]

    def slope(src: SampledRay, dst: SampledRay) -> float:
        vals = []
        dst_pts = list(dst.points)
        for t in dyadic:
            x = src.at(t)
            vals.append(space.dist_to_set(x, dst_pts) / t)
        vals.sort()
        mid = len(vals) // 2
        return 0.5 * (vals[mid - 1] + vals[mid]) if len(vals) % 2 == 0 else vals[mid]

    d1 = slope(alpha, beta)
    d2 = slope(beta, alpha)
    return EquivalenceReport(d1, d2, verdict=min(d1, d2) <= SLOPE_THRESHOLD)


def counterexample_beta(horizon: float) -> Tuple[SampledRay, SampledRay]:
    """The planar pair with asymmetric closeness slopes.

    alpha runs along the horizontal axis at unit speed.  beta progresses
    along the axis at unit speed but its sample at each time 2^n sits at
    height 2^n (the jump); it is back on the axis one step later.  Distance
    from any axis point to beta stays bounded, while beta's dyadic samples
    are a full 2^n away from the axis, so direction (1) holds and
    direction (2) fails.
    """
    if horizon < 4:
        raise ValueError("horizon must be >= 4")
    n = int(horizon)
    jumps = set()
    k = 1
    while k <= n:
        jumps.add(k)
        k *= 2
    alpha = SampledRay(tuple((float(t), (float(t), 0.0)) for t in range(n + 1)))
    beta = SampledRay(
        tuple(
            (float(t), (float(t), float(t) if t in jumps else 0.0))
            for t in range(n + 1)
        )
    )
    return alpha, beta


# -- synthetic rays ------------------------------------------------------------

def random_geodesic_word(space: CayleySpace, length: int, rng: np.random.Generator) -> List:
    """A seeded reduced word whose every prefix is geodesic (a geodesic ray)."""
    p = space.presentation
    comm, coxeter = p.commuting(), p.flavor == "coxeter"
    n_gens = len(p.generators)
    letters: List = []
    while len(letters) < length:
        order = rng.permutation(n_gens)
        for g in order:
            trial = list(letters)
            append_letter(trial, int(g), +1, comm, coxeter)
            if len(trial) == len(letters) + 1:
                letters = trial
                break
        else:
            raise ValueError("no extending generator found")
    return letters


def geodesic_ray(space: CayleySpace, horizon: int, seed: int) -> SampledRay:
    rng = np.random.default_rng(seed)
    return word_ray(space, random_geodesic_word(space, horizon, rng))


def scattered_sample(space: CayleySpace, count: int, max_norm: int,
                     seed: int) -> List[Word]:
    """Seeded point cloud: endpoints of random geodesic words up to max_norm.

    Always contains the basepoint; duplicates are dropped, so the result may
    be slightly smaller than count.
    """
    rng = np.random.default_rng(seed)
    p = space.presentation
    pts = {EPSILON}
    for _ in range(count):
        length = int(rng.integers(1, max_norm + 1))
        letters = random_geodesic_word(space, length, rng)
        pts.add(_materialize(p, letters))
    return sorted(pts, key=lambda w: (len(w.letters), w.letters))


def log_detour_ray(space: CayleySpace, horizon: int, seed: int,
                   first_dyadic: int = 32) -> SampledRay:
    """A unit-speed ray following a seeded geodesic with logarithmic detours.

    At each dyadic time t >= first_dyadic the ray walks ceil(log(2+t)) steps
    off its core geodesic and back before continuing.  The excursions are
    gauge-small, so the result verifies as an (L, n*log)-ray with L = 1.25
    and small n; the detour-free core is the ray's limiting geodesic.
    """
    p = space.presentation
    rng = np.random.default_rng(seed)
    core = random_geodesic_word(space, horizon, rng)
    dyadics = set()
    k = first_dyadic
    while k <= horizon:
        dyadics.add(k)
        k *= 2
    samples: List[Tuple[float, object]] = [(0.0, EPSILON)]
    current: List = []
    core_pos = 0
    t = 0
    while t < horizon and core_pos < len(core):
        if (t + 1) in dyadics:
            depth = math.ceil(math.log(2 + t + 1))
            went_out = 0
            for _ in range(depth):
                if t >= horizon:
                    break
                nxt = _extending_letter(p, current, rng,
                                        avoid=core[core_pos][0])
                current.append(nxt)
                went_out += 1
                t += 1
                samples.append((float(t), _materialize(p, current)))
            for _ in range(went_out):
                if t >= horizon:
                    break
                current.pop()
                t += 1
                samples.append((float(t), _materialize(p, current)))
        else:
            current.append(core[core_pos])
            core_pos += 1
            t += 1
            samples.append((float(t), _materialize(p, current)))
    return SampledRay(tuple(samples), claimed_L=1.25)


def _extending_letter(p: Presentation, current: List, rng: np.random.Generator,
                      avoid=None):
    """A seeded letter that strictly extends the reduced word `current`."""
    comm, coxeter = p.commuting(), p.flavor == "coxeter"
    order = list(rng.permutation(len(p.generators)))
    for g in order:
        if avoid is not None and int(g) == int(avoid):
            continue
        trial = list(current)
        append_letter(trial, int(g), +1, comm, coxeter)
        if len(trial) == len(current) + 1:
            return (int(g), +1)
    raise ValueError("no extending letter available")


# ---------------------------------------------------------------------------
# Ray trace files
# ---------------------------------------------------------------------------
#
# CSV with header `t,point`.  Plane points are `x;y` decimals; graph-space
# points are normal-form words (space-separated generator labels).

def format_ray(space: PointedSpace, ray: SampledRay) -> str:
    lines = ["t,point"]
    for t, x in ray.samples:
        if isinstance(space, PlaneSpace):
            lines.append(f"{t:g},{x[0]:.12g};{x[1]:.12g}")
        elif isinstance(space, CayleySpace):
            lines.append(f"{t:g},{format_word(space.presentation, x)}")
        else:
            lines.append(f"{t:g},{x}")
    return "\n".join(lines) + "\n"


def parse_ray(space: PointedSpace, text: str) -> SampledRay:
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines or lines[0].strip() != "t,point":
        raise ValueError("ray trace must start with the header 't,point'")
    samples: List[Tuple[float, object]] = []
    for line in lines[1:]:
        t_str, _, pt_str = line.partition(",")
        t = float(t_str)
        if isinstance(space, PlaneSpace):
            xs, _, ys = pt_str.partition(";")
            samples.append((t, (float(xs), float(ys))))
        elif isinstance(space, CayleySpace):
            w = parse_word(space.presentation, pt_str)
            samples.append((t, normal_form(space.presentation, w)))
        else:
            samples.append((t, pt_str.strip()))
    return SampledRay(tuple(samples))


def write_ray(path, space: PointedSpace, ray: SampledRay) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_ray(space, ray))


def read_ray(path, space: PointedSpace) -> SampledRay:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_ray(space, fh.read())
