"""Random walks on word-metric groups: drift, tracking, and the walk-to-map
construction.

A sample path is the running product of seeded i.i.d. increments, stored as
the increment sequence plus norms at every step and word snapshots on a
ladder of indices (full words at every step would not fit in memory at the
experiment scales).  Every derived quantity is reproducible from
(presentation, measure, n, seed).

Drift is the tail average of |w_n|/n.  Tracking compares the walk with the
geodesic ray it converges toward (prefix voting over dyadic checkpoints) and
fits the deviation profile against C*log n and C*sqrt n.  The ray verifier
checks the two-sided linear-progress inequality

    A|n-m| - kappa(max(n,m)) <= d(w_n, w_m) <= A|n-m| + kappa(max(n,m))

on a seeded sample of index pairs, and walk_to_sbe packages the walk as a
sampled map from its limit ray, checked by the SBE verifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .coxeter import Presentation, Word, append_letter
from .morse import LimitGeodesicResult, limit_geodesic
from .rays import CayleySpace, SampledRay, _materialize
from .sbe import SbeCheck, SbeMap, verify_sbe
from .sublinear import SublinearFn


@dataclass(frozen=True)
class StepMeasure:
    """A finitely supported step distribution on group elements."""

    support: Tuple[Word, ...]
    probabilities: Tuple[float, ...]
    symmetric: bool = True

    def __post_init__(self):
        if len(self.support) != len(self.probabilities):
            raise ValueError("support and probabilities must align")
        if any(p < 0 for p in self.probabilities):
            raise ValueError("negative probability")
        if abs(sum(self.probabilities) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")

    def check_symmetry(self, p: Presentation) -> bool:
        """Closed under inversion with matched mass."""
        from .coxeter import normal_form

        mass: Dict[Word, float] = {}
        for w, pr in zip(self.support, self.probabilities):
            mass[normal_form(p, w)] = mass.get(normal_form(p, w), 0.0) + pr
        for w, pr in mass.items():
            inv = normal_form(p, w.inverse(p.flavor))
            if abs(mass.get(inv, 0.0) - pr) > 1e-12:
                return False
        return True


def uniform_measure(p: Presentation) -> StepMeasure:
    """Uniform on the standard generators (and inverses for the artin flavor)."""
    words = [Word(((i, +1),)) for i in range(len(p.generators))]
    if p.flavor == "artin":
        words += [Word(((i, -1),)) for i in range(len(p.generators))]
    n = len(words)
    return StepMeasure(tuple(words), tuple(1.0 / n for _ in range(n)), symmetric=True)


@dataclass
class SamplePath:
    """A seeded walk: increments, per-step norms, and word snapshots."""

    presentation: Presentation
    mu: StepMeasure
    seed: int
    n: int
    increments: np.ndarray          # index into mu.support, length n
    norms: np.ndarray               # |w_i| for i = 0..n
    snapshots: Dict[int, Word]      # normal forms on the snapshot ladder

    def element(self, i: int) -> Word:
        """w_i, reconstructed from the nearest snapshot at or below i."""
        return self.replay([i])[i]

    def replay(self, indices: Sequence[int]) -> Dict[int, Word]:
        """Normal forms at the requested indices in one forward pass."""
        wanted = sorted(set(int(i) for i in indices))
        if wanted and (wanted[0] < 0 or wanted[-1] > self.n):
            raise ValueError("index out of range")
        out: Dict[int, Word] = {}
        p = self.presentation
        comm, cox = p.commuting(), p.flavor == "coxeter"
        snap_idx = [i for i in sorted(self.snapshots) if i <= wanted[0]] if wanted else [0]
        start = snap_idx[-1] if snap_idx else 0
        current = list(self.snapshots[start].letters) if start in self.snapshots else []
        if start == 0 and 0 not in self.snapshots:
            current = []
        pos = start
        for i in wanted:
            while pos < i:
                for g, s in self.mu.support[int(self.increments[pos])].letters:
                    append_letter(current, g, s, comm, cox)
                pos += 1
            out[i] = _materialize(p, current)
        return out


def _snapshot_ladder(n: int) -> List[int]:
    ladder = {0, n}
    k = 1
    while k <= n:
        ladder.add(k)
        k *= 2
    stride = max(1, n // 64)
    ladder.update(range(0, n + 1, stride))
    return sorted(ladder)


def simulate(p: Presentation, mu: StepMeasure, n: int, seed: int) -> SamplePath:
    """Run the product walk w_i = g_1 ... g_i for i <= n, deterministically."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    increments = rng.choice(len(mu.support), size=n, p=np.array(mu.probabilities))
    comm, cox = p.commuting(), p.flavor == "coxeter"
    ladder = set(_snapshot_ladder(n))
    norms = np.zeros(n + 1, dtype=np.int64)
    snapshots: Dict[int, Word] = {0: Word(())}
    current: List = []
    for i in range(1, n + 1):
        for g, s in mu.support[int(increments[i - 1])].letters:
            append_letter(current, g, s, comm, cox)
        norms[i] = len(current)
        if i in ladder:
            snapshots[i] = _materialize(p, current)
    return SamplePath(
        presentation=p, mu=mu, seed=seed, n=n,
        increments=increments.astype(np.int16),
        norms=norms, snapshots=snapshots,
    )


# ---------------------------------------------------------------------------
# Drift and tracking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DriftReport:
    A_hat: float
    C_hat: float       # max profile(n)/log n over all checkpoints
    C_track: float     # same, restricted to checkpoints the ray estimate reaches
    profile: Tuple[Tuple[int, float], ...]   # (n, d(w_n, gamma))
    log_fit: float                           # RMSE of profile vs C*log n
    sqrt_fit: float                          # RMSE of profile vs C*sqrt n
    gamma: SampledRay
    gamma_stabilized: bool
    limit: LimitGeodesicResult


def dyadic_checkpoints(n: int) -> List[int]:
    out = []
    k = 2
    while k <= n:
        out.append(k)
        k *= 2
    if n not in out:
        out.append(n)
    return out


def drift_and_tracking(path: SamplePath,
                       checkpoints: Optional[Sequence[int]] = None,
                       limit: Optional[LimitGeodesicResult] = None) -> DriftReport:
    """Drift estimate plus deviation profile against the limit geodesic.

    A_hat averages |w_n|/n over the last half of the checkpoints.  The limit
    geodesic comes from prefix voting over the walk's dyadic snapshots;
    C_hat is the largest profile(n)/log n, and the two fit residuals compare
    the profile shape against logarithmic and diffusive growth.

    Prefix voting stops at the confluence of the last two checkpoints, so
    checkpoints whose norm exceeds the ray estimate read an inflated
    deviation (distance to a too-short ray).  C_hat keeps the literal
    maximum; C_track restricts to checkpoints the ray actually reaches.
    """
    cps = sorted(set(checkpoints)) if checkpoints else dyadic_checkpoints(path.n)
    if cps[-1] > path.n:
        raise ValueError("checkpoint beyond the path length")
    space = CayleySpace(path.presentation)
    if limit is None:
        limit = limit_geodesic(space, walk_ray(path))
    lim = limit
    devs = deviation_profile(path, cps, lim)
    profile = list(zip(cps, devs))
    tail = cps[len(cps) // 2:]
    A_hat = float(np.mean([path.norms[n] / n for n in tail]))
    C_hat = max(d / math.log(n) for n, d in profile if n >= 2)
    reached = [
        (n, d) for n, d in profile
        if n >= 2 and path.norms[n] <= lim.prefix_length
    ]
    C_track = max((d / math.log(n) for n, d in reached), default=0.0)
    ns = np.array([n for n, _ in profile if n >= 2], dtype=float)
    ds = np.array([d for n, d in profile if n >= 2])
    log_fit = _fit_rmse(ds, np.log(ns))
    sqrt_fit = _fit_rmse(ds, np.sqrt(ns))
    return DriftReport(
        A_hat=A_hat, C_hat=C_hat, C_track=C_track, profile=tuple(profile),
        log_fit=log_fit, sqrt_fit=sqrt_fit,
        gamma=lim.geodesic, gamma_stabilized=lim.stabilized,
        limit=lim,
    )


def walk_ray(path: SamplePath) -> SampledRay:
    """The walk's snapshot ladder as a sampled ray (times are step indices)."""
    samples = [(float(i), path.snapshots[i]) for i in sorted(path.snapshots)]
    return SampledRay(tuple(samples))


def _fit_rmse(values: np.ndarray, basis: np.ndarray) -> float:
    denom = float(basis @ basis)
    coeff = float(values @ basis) / denom if denom > 0 else 0.0
    residual = values - coeff * basis
    return float(np.sqrt(np.mean(residual ** 2)))


def deviation_profile(path: SamplePath, indices: Sequence[int],
                      lim: LimitGeodesicResult) -> np.ndarray:
    """d(w_i, gamma) over the given indices, against the stabilized prefix ray.

    For free-product presentations the distance from a word to the set of
    prefixes of a fixed geodesic word is closed-form: |w| minus the common
    prefix length (capped at the ray length).  Other presentations take the
    batched minimum over the sampled ray points.
    """
    words = path.replay(indices)
    space = CayleySpace(path.presentation)
    if path.presentation.edgeless:
        P = lim.prefix_word
        K = len(P)
        out = []
        for i in indices:
            w = words[i].letters
            m = min(len(w), K)
            k = 0
            while k < m and w[k] == P[k]:
                k += 1
            out.append(len(w) - k)
        return np.array(out, dtype=float)
    gamma_pts = list(lim.geodesic.points)
    pts = [words[i] for i in indices]
    return space.pairwise(pts, gamma_pts).min(axis=1)


def window_deviations(path: SamplePath, lo: int, hi: int,
                      lim: LimitGeodesicResult,
                      grid: Optional[int] = None) -> np.ndarray:
    """d(w_n, gamma) for every n in [lo, hi] (or on a grid of that size).

    Free-product presentations stream the exact value at every step: the
    common-prefix pointer against the stabilized ray moves incrementally with
    each append or cancellation.  Other presentations evaluate on a grid via
    the batched distance.
    """
    if lo < 0 or hi > path.n or lo > hi:
        raise ValueError("window out of range")
    if not path.presentation.edgeless:
        g = grid or 512
        ns = sorted(set(np.linspace(max(1, lo), hi, min(g, hi - lo + 1)).astype(int)))
        return deviation_profile(path, ns, lim)
    P = lim.prefix_word
    K = len(P)
    p = path.presentation
    comm, cox = p.commuting(), p.flavor == "coxeter"
    current: List = []
    lcp = 0
    out = np.zeros(hi - lo + 1)
    for i in range(1, hi + 1):
        for g_, s_ in path.mu.support[int(path.increments[i - 1])].letters:
            append_letter(current, g_, s_, comm, cox)
        ln = len(current)
        if lcp > ln:
            lcp = ln
        while lcp < min(ln, K) and current[lcp] == P[lcp]:
            lcp += 1
        if i >= lo:
            out[i - lo] = ln - lcp
    return out


def tracking_statistic(path: SamplePath, N: int, lim: LimitGeodesicResult,
                       percentile: float = 95.0) -> float:
    """Percentile of d(w_n, gamma)/log n over the full window n in [N/2, N]."""
    if N < 4 or N > path.n:
        raise ValueError("N out of range")
    lo = max(2, N // 2)
    devs = window_deviations(path, lo, N, lim)
    ns = np.arange(lo, lo + len(devs)) if path.presentation.edgeless else None
    if ns is None:
        ns = np.array(sorted(set(np.linspace(max(1, lo), N, min(512, N - lo + 1)).astype(int))))
    vals = devs / np.log(ns)
    return float(np.percentile(vals, percentile))


# ---------------------------------------------------------------------------
# The linear-progress verifier and the walk-to-map construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WalkRayCheck:
    pass_fraction: float
    worst_pair: Tuple[int, int]
    worst_margin: float
    n_pairs: int
    fail_max_index: int   # largest max(n, m) among failing pairs; 0 when none


def _index_pool(n: int) -> List[int]:
    pool = set(range(1, min(101, n + 1)))            # the small-index regime
    pool.update(dyadic_checkpoints(n))
    stride = max(1, n // 128)
    pool.update(range(stride, n + 1, stride))
    return sorted(pool)


def verify_walk_ray(path: SamplePath, A: float, kappa: SublinearFn,
                    n_pairs: int = 10 ** 4, seed: int = 0) -> WalkRayCheck:
    """Check the two-sided linear-progress inequality on sampled index pairs.

    Pairs are drawn from a deterministic index pool (all indices up to 100,
    dyadic checkpoints, and a uniform stride grid); the gauge is evaluated at
    max(n, m).  Reports the fraction of pairs satisfying both sides and the
    worst violation.
    """
    if A <= 0:
        raise ValueError("A must be > 0")
    pool = _index_pool(path.n)
    words = path.replay(pool)
    space = CayleySpace(path.presentation)
    rng = np.random.default_rng((path.seed, seed, 77))
    i_idx = rng.integers(0, len(pool), size=n_pairs)
    j_idx = rng.integers(0, len(pool), size=n_pairs)
    keep = i_idx != j_idx
    i_idx, j_idx = i_idx[keep], j_idx[keep]
    pts = [words[i] for i in pool]
    D = space.pairwise(pts)
    pool_arr = np.array(pool)
    n_i, n_j = pool_arr[i_idx], pool_arr[j_idx]
    d = D[i_idx, j_idx]
    gauge = np.array([kappa(m) for m in np.maximum(n_i, n_j)])
    margin = np.maximum(d - (A * np.abs(n_i - n_j) + gauge),
                        (A * np.abs(n_i - n_j) - gauge) - d)
    passed = margin <= 0
    worst = int(np.argmax(margin))
    failing = ~passed
    fail_max = int(np.max(np.maximum(n_i, n_j)[failing])) if failing.any() else 0
    return WalkRayCheck(
        pass_fraction=float(np.mean(passed)),
        worst_pair=(int(n_i[worst]), int(n_j[worst])),
        worst_margin=float(margin[worst]),
        n_pairs=int(len(d)),
        fail_max_index=fail_max,
    )


def walk_to_sbe(path: SamplePath, lim: LimitGeodesicResult, A: float,
                theta: SublinearFn, max_points: int = 160) -> Tuple[SbeMap, SbeCheck]:
    """Package the walk as a sampled map from its limit ray and verify it.

    The point of the ray at arc length round(A*i) is sent to w_i, for i on a
    deterministic index grid capped so that A*i stays inside the ray.  The
    map is then checked by the SBE verifier restricted to the ray's points,
    with multiplicative constant 1 and the supplied gauge.
    """
    if A <= 0:
        raise ValueError("A must be > 0")
    space = CayleySpace(path.presentation)
    p = path.presentation
    P = lim.prefix_word
    usable = [i for i in _index_pool(path.n) if round(A * i) <= len(P)]
    if len(usable) > max_points:
        idx = np.linspace(0, len(usable) - 1, max_points).astype(int)
        usable = [usable[int(k)] for k in idx]
    words = path.replay(usable)
    table: Dict = {}
    for i in usable:
        k = round(A * i)
        src = _materialize(p, list(P[:k]))
        if src not in table:  # distinct ray points only; first index wins
            table[src] = words[i]
    if space.basepoint not in table:
        table[space.basepoint] = path.snapshots[0]
    phi = SbeMap(domain=space, target=space, table=table, L=1.0, theta=theta,
                 seed=path.seed)
    check = verify_sbe(phi, list(table.keys()), list(table.values()))
    return phi, check
