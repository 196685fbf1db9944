"""Empirical Morse-property machinery for Cayley spaces.

A closed set Z is gauge-Morse when quasi-geodesic segments ending near Z stay
inside a gauge-scaled neighborhood with a constant depending only on the
quasi-geodesic constants.  The probe estimates that constant by sampling
seeded (q, Q)-quasi-geodesic segments with endpoints near Z and measuring the
largest gauge-normalized deviation.  Estimates are sampled maxima, hence
lower bounds on the true gauge; the non-Morse flag therefore requires
deviations growing across at least three radii.

Negative certification is constructive: in spaces with commuting directions,
reordering a geodesic word by generator priority produces extremal geodesics
(staircases hug one factor first), and a reordered geodesic wandering r/4
away from Z is a verified witness.  Trees admit no reorderings, so the search
correctly returns nothing there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .coxeter import Word, append_letter, normal_form
from .rays import (
    CayleySpace,
    SampledRay,
    _extending_letter,
    word_ray,
)
from .sublinear import SublinearFn, log_gauge

R_SCHEDULE = (2, 4)  # endpoint anchors sit at R = 2r and 4r
KPRIME = log_gauge()  # endpoint closeness gauge, fixed to the canonical log


class ProbeBudgetError(RuntimeError):
    """Rejection sampling failed to produce a valid quasi-geodesic."""


def _as_points(Z) -> List:
    if isinstance(Z, SampledRay):
        return list(Z.points)
    return list(Z)


def _is_prefix_chain(zs: List[Word]) -> bool:
    return all(
        b.letters[: len(a.letters)] == a.letters and len(b.letters) >= len(a.letters)
        for a, b in zip(zs, zs[1:])
    )


def _make_dist_to_set(space: CayleySpace, zs: List[Word]):
    """Batched distance-to-Z, specialized when Z is a geodesic prefix ray.

    In a free product, the distance from a reduced word to the prefix set of
    a fixed geodesic word is its length minus the (capped) common prefix
    length, one vectorized comparison per query batch.
    """
    if getattr(space, "_mode", None) == "free" and zs and _is_prefix_chain(zs):
        W = zs[-1].letters
        K = len(W)
        wenc = np.array([g * 2 + (0 if s > 0 else 1) for g, s in W], dtype=np.int32)

        def fast(pts: Sequence[Word]) -> np.ndarray:
            lens = np.array([len(w.letters) for w in pts], dtype=np.int64)
            width = max(1, int(lens.max()) if len(lens) else 1, K)
            P = np.full((len(pts), width), -1, dtype=np.int32)
            for i, w in enumerate(pts):
                if w.letters:
                    P[i, : len(w.letters)] = [
                        g * 2 + (0 if s > 0 else 1) for g, s in w.letters
                    ]
            row = np.full(width, -2, dtype=np.int32)
            row[:K] = wenc
            eq = np.concatenate(
                [P == row[None, :], np.zeros((len(pts), 1), dtype=bool)], axis=1
            )
            lcp = np.minimum(np.argmin(eq, axis=1), np.minimum(lens, K))
            return (lens - lcp).astype(float)

        return fast
    return lambda pts: space.pairwise(list(pts), zs).min(axis=1)


# ---------------------------------------------------------------------------
# Quasi-geodesic sampling
# ---------------------------------------------------------------------------

def _excursion_depth(q: float, Q: float) -> int:
    if q <= 1:
        return int(Q // 2)
    return max(0, min(4, int(q * Q / 2)))


def sample_quasigeodesic(space: CayleySpace, x: Word, y: Word, q: float, Q: float,
                         seed: int, tries: int = 100) -> List[Word]:
    """A seeded (q, Q)-quasi-geodesic segment from x to y.

    Perturbs the geodesic with out-and-back excursions of bounded depth and
    verifies the two-sided inequality on all index pairs afterwards,
    resampling on failure.  q=1, Q=0 returns the geodesic itself.
    """
    p = space.presentation
    h_max = _excursion_depth(q, Q)
    if h_max == 0:
        return space.geodesic(x, y)
    core = normal_form(p, x.inverse(p.flavor) * y).letters
    min_gap = math.inf if q <= 1 else math.ceil(4 * h_max / (q - 1))
    for attempt in range(tries):
        rng = np.random.default_rng((seed, attempt))
        path = _perturbed_path(space, x, core, h_max, min_gap, rng)
        if _quasigeodesic_ok(space, path, q, Q):
            return path
    raise ProbeBudgetError(f"no valid ({q},{Q})-sample within {tries} tries")


def _perturbed_path(space: CayleySpace, x: Word, core: Tuple, h_max: float,
                    min_gap: float, rng: np.random.Generator) -> List[Word]:
    p = space.presentation
    comm, cox = p.commuting(), p.flavor == "coxeter"
    current = list(normal_form(p, x).letters)
    path = [Word(tuple(current))]
    since_excursion = math.inf
    budget_one = math.isinf(min_gap)
    used = False
    for pos, (g, s) in enumerate(core):
        if (
            h_max >= 1
            and since_excursion >= min_gap
            and not (budget_one and used)
            and rng.random() < 0.2
        ):
            depth = int(rng.integers(1, h_max + 1))
            placed = []
            for _ in range(depth):
                try:
                    nxt = _extending_letter(p, current, rng, avoid=g)
                except ValueError:
                    break
                current.append(nxt)
                placed.append(nxt)
                path.append(Word(tuple(current)))
            for _ in range(len(placed)):
                current.pop()
                path.append(Word(tuple(current)))
            since_excursion = 0
            used = True
        append_letter(current, g, s, comm, cox)
        path.append(Word(tuple(current)))
        since_excursion += 1
    return path


def _quasigeodesic_ok(space: CayleySpace, path: List[Word], q: float, Q: float) -> bool:
    D = space.pairwise(path)
    idx = np.arange(len(path))
    gaps = np.abs(idx[:, None] - idx[None, :])
    return bool(np.all(D <= q * gaps + Q) and np.all(D >= gaps / q - Q))


def reordered_geodesic(space: CayleySpace, x: Word, y: Word,
                       priority: Sequence[int]) -> List[Word]:
    """The geodesic from x to y linearized by pulling low-priority letters first.

    Commutation exchanges only: in a product of commuting directions this
    walks one factor before the other (a staircase corner); in a tree it is
    the unique geodesic.
    """
    p = space.presentation
    noncomm = p.noncommuting()
    n_gens = len(p.generators)
    remaining = list(normal_form(p, x.inverse(p.flavor) * y).letters)
    current = list(normal_form(p, x).letters)
    comm, cox = p.commuting(), p.flavor == "coxeter"
    path = [Word(tuple(current))]
    while remaining:
        blocked: set = set()
        best_pos, best_key = 0, None
        for pos, (g, s) in enumerate(remaining):
            if g not in blocked:
                key = (priority[g], g, 0 if s > 0 else 1)
                if best_key is None or key < best_key:
                    best_key, best_pos = key, pos
            blocked |= noncomm[g]
            if len(blocked) == n_gens:
                break
        g, s = remaining.pop(best_pos)
        append_letter(current, g, s, comm, cox)
        path.append(Word(tuple(current)))
    return path


# ---------------------------------------------------------------------------
# The gauge probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WitnessSegment:
    path: Tuple[Word, ...]
    deviation: float        # max gauge-normalized distance to Z
    q: float
    Q: float
    radius: int


@dataclass(frozen=True)
class MorseProbeReport:
    kappa: SublinearFn
    radii: Tuple[int, ...]
    r_schedule: Tuple[int, ...]
    cells: Dict[Tuple[float, float, int], float]
    gauges: Dict[Tuple[float, float], float]
    witnesses: Dict[Tuple[float, float, int], WitnessSegment]
    flagged_non_morse: bool


def morse_gauge_probe(space: CayleySpace, Z, kappa: SublinearFn,
                      q_grid: Sequence[float], Q_grid: Sequence[float],
                      radii: Sequence[int], seed: int = 0,
                      samples_per_cell: int = 50) -> MorseProbeReport:
    """Estimate Morse gauges for Z over a (q, Q) grid and radius schedule.

    For each cell and radius r, endpoints are drawn near Z: one within
    kprime(R) of the start of Z and one within kprime(R) of the point of Z at
    norm R, for R in the schedule {2r, 4r}.  Each sampled segment is a
    verified (q, Q)-quasi-geodesic (a few are extremal reordered geodesics);
    its deviation is the least D with the segment inside the D-scaled gauge
    neighborhood of Z.  Cell estimates are sampled maxima; gauges take the
    max over radii.  The non-Morse flag fires when estimates grow at least
    linearly across three or more radii.
    """
    zs = _as_points(Z)
    z_norms = [space.norm(z) for z in zs]
    dist_fn = _make_dist_to_set(space, zs)
    cells: Dict[Tuple[float, float, int], float] = {}
    witnesses: Dict[Tuple[float, float, int], WitnessSegment] = {}
    for q in q_grid:
        for Q in Q_grid:
            for r in radii:
                dev_best = 0.0
                wit = None
                for j, R_fac in enumerate(R_SCHEDULE):
                    R = R_fac * r
                    e_pairs = _endpoint_pairs(
                        space, zs, z_norms, R,
                        seed=(seed, r, j),
                        count=max(1, samples_per_cell // (2 * len(R_SCHEDULE))),
                    )
                    for k, (e1, e2) in enumerate(e_pairs):
                        paths = _cell_paths(space, e1, e2, q, Q,
                                            seed=(seed, r, j, k))
                        for path in paths:
                            dev = _deviation(space, path, zs, kappa, dist_fn)
                            if dev >= dev_best:
                                dev_best = dev
                                wit = WitnessSegment(tuple(path), dev, q, Q, r)
                cells[(q, Q, r)] = dev_best
                if wit is not None:
                    witnesses[(q, Q, r)] = wit
    gauges = {
        (q, Q): max(cells[(q, Q, r)] for r in radii)
        for q in q_grid for Q in Q_grid
    }
    flagged = _linear_growth_flag(cells, q_grid, Q_grid, radii)
    return MorseProbeReport(
        kappa=kappa,
        radii=tuple(radii),
        r_schedule=R_SCHEDULE,
        cells=cells,
        gauges=gauges,
        witnesses=witnesses,
        flagged_non_morse=flagged,
    )


def _endpoint_pairs(space: CayleySpace, zs: List[Word], z_norms: List[float],
                    R: float, seed, count: int) -> List[Tuple[Word, Word]]:
    rng = np.random.default_rng(seed)
    offset = int(KPRIME(R))
    z_far = next((z for z, n in zip(zs, z_norms) if n >= R), zs[-1])
    near_ball = space.ball_points(zs[0], offset)
    far_ball = space.ball_points(z_far, offset)
    # One deterministic extremal pair (deepest points of both balls) so the
    # sampled maximum saturates; the rest are seeded draws.
    pairs = [(near_ball[-1], far_ball[-1])]
    for _ in range(max(0, count - 1)):
        e1 = near_ball[int(rng.integers(len(near_ball)))]
        e2 = far_ball[int(rng.integers(len(far_ball)))]
        pairs.append((e1, e2))
    return pairs


def _cell_paths(space: CayleySpace, e1: Word, e2: Word, q: float, Q: float,
                seed) -> List[List[Word]]:
    """One seeded perturbed sample plus extremal reordered geodesics."""
    paths = []
    try:
        paths.append(sample_quasigeodesic(space, e1, e2, q, Q,
                                          seed=int(np.random.default_rng(seed).integers(2 ** 31))))
    except ProbeBudgetError:
        pass
    n_gens = len(space.presentation.generators)
    orders = [list(range(n_gens)), list(range(n_gens))[::-1]]
    rng = np.random.default_rng((seed, 1))
    orders.append([int(v) for v in rng.permutation(n_gens)])
    for priority in orders:
        paths.append(reordered_geodesic(space, e1, e2, priority))
    return paths


def _deviation(space: CayleySpace, path: Sequence[Word], zs: List[Word],
               kappa: SublinearFn, dist_fn=None) -> float:
    if dist_fn is None:
        dist_fn = _make_dist_to_set(space, zs)
    D = dist_fn(list(path))
    norms = np.array([space.norm(x) for x in path])
    gauge = np.array([kappa(n) for n in norms])
    return float(np.max(D / gauge))


def _linear_growth_flag(cells, q_grid, Q_grid, radii) -> bool:
    if len(radii) < 3:
        return False
    rs = sorted(radii)
    for q in q_grid:
        for Q in Q_grid:
            devs = [cells[(q, Q, r)] for r in rs]
            growing = all(d2 >= d1 for d1, d2 in zip(devs, devs[1:]))
            linear = all(d >= r / 8 for d, r in zip(devs, rs))
            if growing and linear:
                return True
    return False


def recompute_witness(space: CayleySpace, witness: WitnessSegment, Z,
                      kappa: SublinearFn) -> Tuple[float, bool]:
    """Re-derive a stored witness's deviation and (q, Q) inequality from scratch."""
    zs = _as_points(Z)
    dev = _deviation(space, witness.path, zs, kappa)
    ok = _quasigeodesic_ok(space, list(witness.path), witness.q, witness.Q)
    return dev, ok


# ---------------------------------------------------------------------------
# Limit geodesics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitGeodesicResult:
    geodesic: SampledRay
    prefix_word: Tuple            # the full stabilized letter sequence
    tracking_n: float
    stabilized: bool
    prefix_length: int


def limit_geodesic(space: CayleySpace, alpha: SampledRay,
                   horizon: Optional[float] = None) -> LimitGeodesicResult:
    """Extract the geodesic ray a path converges toward, by prefix voting.

    Normal forms of alpha at geometrically spaced times are compared letter
    by letter; at each position the majority letter among still-agreeing
    candidates wins (ties to the least letter).  The winning prefix is a
    geodesic word, returned as a prefix ray together with the least n putting
    it inside the n*log-gauge neighborhood of alpha over its sampled radii.
    stabilized is False when no prefix beyond length 1 survives, the
    signature of a non-Morse input.
    """
    p = space.presentation
    top = alpha.horizon() if horizon is None else min(horizon, alpha.horizon())
    times = []
    t = 1.0
    while t <= top:
        times.append(t)
        t *= 2
    if top not in times:
        times.append(top)
    candidates = [normal_form(p, alpha.at(t)).letters for t in times]
    prefix: List = []
    alive = [c for c in candidates if c]
    while len(alive) >= 2:
        k = len(prefix)
        votes: Dict = {}
        voters = 0
        for c in alive:
            if len(c) > k:
                votes[c[k]] = votes.get(c[k], 0) + 1
                voters += 1
        if voters < 2:
            break
        winner = max(sorted(votes), key=lambda letter: votes[letter])
        prefix.append(winner)
        alive = [c for c in alive if len(c) > k and c[k] == winner]
    stride = max(1, len(prefix) // 512)
    geo = (word_ray(space, prefix, stride=stride) if prefix
           else SampledRay(((0.0, space.basepoint),)))
    kappa = log_gauge()
    alpha_pts = list(alpha.points)
    tracking = 0.0
    if len(geo.samples) > 1:
        D = space.pairwise(list(geo.points), alpha_pts).min(axis=1)
        norms = np.array([space.norm(x) for x in geo.points])
        gauges = np.array([kappa(n) for n in norms])
        tracking = float(np.max(D / gauges))
    return LimitGeodesicResult(
        geodesic=geo,
        prefix_word=tuple(prefix),
        tracking_n=tracking,
        stabilized=len(prefix) > 1,
        prefix_length=len(prefix),
    )


# ---------------------------------------------------------------------------
# Non-Morse witnesses
# ---------------------------------------------------------------------------

def non_morse_witness(space: CayleySpace, Z, radius: int, budget: int = 16,
                      seed: int = 0) -> Optional[WitnessSegment]:
    """Search reordered geodesics between Z-points for an r/4 deviation.

    Routes the geodesic from the start of Z to its point at norm ~2*radius
    through staircase reorderings (generator priorities).  A returned witness
    is re-verified from scratch: exact geodesic pair distances and the stated
    deviation.  Returns None when no reordering deviates, as in trees.
    """
    zs = _as_points(Z)
    z_norms = [space.norm(z) for z in zs]
    z_far = next((z for z, n in zip(zs, z_norms) if n >= 2 * radius), None)
    if z_far is None:
        raise ValueError("Z is not sampled out to norm 2*radius")
    n_gens = len(space.presentation.generators)
    orders = [list(range(n_gens)), list(range(n_gens))[::-1]]
    rng = np.random.default_rng(seed)
    while len(orders) < budget:
        orders.append([int(v) for v in rng.permutation(n_gens)])
    dist_fn = _make_dist_to_set(space, zs)
    for priority in orders:
        path = reordered_geodesic(space, zs[0], z_far, priority)
        deviation = float(dist_fn(path).max())
        if deviation >= radius / 4:
            if _quasigeodesic_ok(space, path, 1.0, 0.0):
                return WitnessSegment(tuple(path), deviation, 1.0, 0.0, radius)
    return None


# ---------------------------------------------------------------------------
# Exhaustive small-scale certificate
# ---------------------------------------------------------------------------

def exhaustive_gauge_certificate(space: CayleySpace, Z, r: int, q: float,
                                 Q: float, kappa: SublinearFn) -> float:
    """Certified gauge bound at radius r over the probe's sample universe.

    Enumerates every endpoint pair the probe can draw at R = 2r (full
    kprime(R)-balls around both anchors), measures each exact geodesic
    deviation, and adds the sampler's maximum excursion depth.  Every segment
    the probe can emit at this radius deviates at most this much.
    """
    zs = _as_points(Z)
    z_norms = [space.norm(z) for z in zs]
    R = 2 * r
    offset = int(KPRIME(R))
    z_far = next((z for z, n in zip(zs, z_norms) if n >= R), zs[-1])
    near_ball = space.ball_points(zs[0], offset)
    far_ball = space.ball_points(z_far, offset)
    dist_fn = _make_dist_to_set(space, zs)
    worst = 0.0
    for e1 in near_ball:
        for e2 in far_ball:
            path = space.geodesic(e1, e2)
            worst = max(worst, _deviation(space, path, zs, kappa, dist_fn))
    # Excursions displace by at most their depth from the perturbed spine.
    return worst + _excursion_depth(q, Q)
