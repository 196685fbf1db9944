"""Sampled sublinear biLipschitz equivalences.

Maps live on finite point samples: a table from domain points to target
points plus claimed constants (L, theta).  The verifier fits the least gauge
scale making the two-sided displacement inequality

    d(x1,x2)/L - theta(max norm) <= d(F x1, F x2) <= L d(x1,x2) + theta(max norm)

hold over all sampled pairs, and measures how densely the image covers the
target sample.  The quasi-inverse sends a target point to a domain point
whose image is a near-nearest neighbor; its quality is the defect constant
bounding both round-trip displacements against the gauge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .coxeter import Word, normal_form
from .rays import CayleySpace, PointedSpace, SampledRay
from .sublinear import SublinearFn


@dataclass(frozen=True)
class SbeMap:
    """A sampled map between pointed spaces with claimed constants."""

    domain: PointedSpace
    target: PointedSpace
    table: Dict
    L: float
    theta: SublinearFn
    seed: Optional[int] = None

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be >= 1")

    def __call__(self, x):
        try:
            return self.table[x]
        except KeyError:
            raise ValueError(f"point outside the sampled domain: {x!r}") from None

    def domain_sample(self) -> List:
        return list(self.table.keys())

    def image_sample(self) -> List:
        return list(self.table.values())


@dataclass(frozen=True)
class SbeCheck:
    ok: bool
    fitted_L: float
    fitted_theta_scale: float
    surjectivity_D: float
    worst_pair: Tuple


def verify_sbe(phi: SbeMap, domain_sample: Sequence, target_sample: Sequence) -> SbeCheck:
    """Check the displacement inequality and image density on samples.

    fitted_theta_scale is the least n making both sides hold with n*theta at
    the claimed L (explicit per pair, maximized); fitted_L is the least
    multiplicative constant that would work at gauge scale 1; surjectivity_D
    is the least D with every target sample within D*theta(|y|) of the image.
    ok means the fitted gauge scale is at most 1.
    """
    xs = list(domain_sample)
    if not xs:
        raise ValueError("empty domain sample")
    if phi.domain.basepoint not in xs:
        raise ValueError("domain sample must contain the basepoint")
    ys = [phi(x) for x in xs]
    DX = phi.domain.pairwise(xs)
    DY = phi.target.pairwise(ys)
    norms = np.array([phi.domain.norm(x) for x in xs])
    theta_vec = np.array([phi.theta(n) for n in norms])
    theta_max = np.maximum(theta_vec[:, None], theta_vec[None, :])
    L = phi.L
    need_scale = np.maximum((DY - L * DX) / theta_max, (DX / L - DY) / theta_max)
    np.fill_diagonal(need_scale, -np.inf)
    i, j = np.unravel_index(int(np.argmax(need_scale)), need_scale.shape)
    fitted_scale = max(0.0, float(need_scale[i, j]))

    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(DX > 0, (DY - theta_max) / DX, 1.0)
        down = np.where(DY + theta_max > 0, DX / (DY + theta_max), 1.0)
    fitted_L = max(1.0, float(np.max(up)), float(np.max(down)))

    ts = list(target_sample)
    surj = 0.0
    if ts:
        D_cover = phi.target.pairwise(ts, ys)
        cover = D_cover.min(axis=1)
        tnorm = np.array([phi.target.norm(y) for y in ts])
        tg = np.array([phi.theta(n) for n in tnorm])
        surj = float(np.max(cover / tg))
    return SbeCheck(
        ok=fitted_scale <= 1.0 + 1e-9,
        fitted_L=fitted_L,
        fitted_theta_scale=fitted_scale,
        surjectivity_D=surj,
        worst_pair=(xs[i], xs[j]),
    )


@dataclass(frozen=True)
class QuasiInverse:
    phi_bar: SbeMap
    defect_n: float


def quasi_inverse(phi: SbeMap, target_sample: Sequence) -> QuasiInverse:
    """Invert by near-nearest projection onto the sampled image.

    Each target point y maps to a domain point whose image is within twice
    the distance from y to the sampled image (the nearest sampled preimage,
    deterministically first on ties).  defect_n is the least n bounding both
    round trips: d(x, inv(phi(x))) <= n*theta(|x|) and
    d(y, phi(inv(y))) <= n*theta(|y|) over the samples.
    """
    ts = list(target_sample)
    if not ts:
        raise ValueError("empty target sample")
    xs = phi.domain_sample()
    ys = phi.image_sample()
    D = phi.target.pairwise(ts, ys)
    choice = np.argmin(D, axis=1)
    table = {y: xs[int(k)] for y, k in zip(ts, choice)}
    phi_bar = SbeMap(
        domain=phi.target,
        target=phi.domain,
        table=table,
        L=phi.L,
        theta=phi.theta,
        seed=phi.seed,
    )
    defect = 0.0
    for x in xs:
        y = phi(x)
        if y in table:
            back = table[y]
            defect = max(
                defect,
                phi.domain.dist(x, back) / phi.theta(phi.domain.norm(x)),
            )
    for y, k in zip(ts, choice):
        round_trip = ys[int(k)]
        defect = max(
            defect,
            phi.target.dist(y, round_trip) / phi.theta(phi.target.norm(y)),
        )
    return QuasiInverse(phi_bar=phi_bar, defect_n=defect)


# ---------------------------------------------------------------------------
# Synthetic maps
# ---------------------------------------------------------------------------

def _graph_automorphism(space: CayleySpace, rng: np.random.Generator,
                        tries: int = 100) -> List[int]:
    """A seeded defining-graph automorphism as a generator permutation."""
    g = space.presentation.graph
    n = len(g.vertices)
    idx = {v: i for i, v in enumerate(g.vertices)}
    edges = {(idx[u], idx[v]) for u, v in g.edges}
    edges |= {(j, i) for i, j in edges}
    for _ in range(tries):
        perm = list(rng.permutation(n))
        if all(((perm[i], perm[j]) in edges) == ((i, j) in edges)
               for i in range(n) for j in range(i + 1, n)):
            return [int(p) for p in perm]
    return list(range(n))


def _relabel(space: CayleySpace, perm: List[int], w: Word) -> Word:
    p = space.presentation
    return normal_form(p, Word(tuple((perm[g], s) for g, s in w.letters)))


def relabeling_map(space: CayleySpace, perm: Sequence[int],
                   sample: Sequence[Word], theta: SublinearFn) -> SbeMap:
    """The isometry induced by a defining-graph automorphism, as a sampled map."""
    g = space.presentation.graph
    idx = {v: i for i, v in enumerate(g.vertices)}
    edges = {(idx[u], idx[v]) for u, v in g.edges} | {
        (idx[v], idx[u]) for u, v in g.edges
    }
    n = len(g.vertices)
    if sorted(perm) != list(range(n)) or not all(
        ((perm[i], perm[j]) in edges) == ((i, j) in edges)
        for i in range(n) for j in range(i + 1, n)
    ):
        raise ValueError("perm is not a defining-graph automorphism")
    table = {w: _relabel(space, list(perm), w) for w in sample}
    return SbeMap(domain=space, target=space, table=table, L=1.0, theta=theta)


def synthetic_sbe(space: CayleySpace, L: float, theta: SublinearFn, seed: int,
                  sample: Sequence[Word]) -> SbeMap:
    """A seeded gauge-bounded perturbation of a Cayley-graph isometry.

    Composes a generator relabeling along a defining-graph automorphism with
    a displacement moving each sampled point to a uniformly chosen point of
    its theta(|x|)-ball (the basepoint stays put).  The triangle inequality
    makes the result an SBE with the base isometry's multiplicative constant
    and a gauge scale of at most 2 on the sampled pairs.
    """
    if theta(1.0) < 1.0 - 1e-9:
        raise ValueError("displacement gauge below 1 rejected")
    rng = np.random.default_rng(seed)
    perm = _graph_automorphism(space, rng)
    pts = sorted(set(sample), key=lambda w: (len(w.letters), w.letters))
    if space.basepoint not in pts:
        raise ValueError("sample must contain the basepoint")
    table: Dict[Word, Word] = {}
    for w in pts:
        base = _relabel(space, perm, w)
        if w == space.basepoint:
            table[w] = base
            continue
        radius = int(theta(space.norm(w)))
        if radius == 0:
            table[w] = base
            continue
        ball = space.ball_points(base, radius)
        table[w] = ball[int(rng.integers(len(ball)))]
    return SbeMap(domain=space, target=space, table=table,
                  L=max(1.0, L), theta=theta, seed=seed)


def push_ray(phi: SbeMap, ray: SampledRay) -> SampledRay:
    """Image of a ray under the sampled map, times preserved.

    The image sequence is re-based at the target basepoint: the time-0 sample
    becomes the target basepoint regardless of where the map sends the source
    basepoint (the discrepancy is gauge-bounded by construction).
    """
    samples = [(0.0, phi.target.basepoint)]
    for t, x in ray.samples[1:]:
        samples.append((t, phi(x)))
    return SampledRay(tuple(samples))
