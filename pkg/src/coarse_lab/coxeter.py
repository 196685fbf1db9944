"""Word metrics on right-angled Coxeter (and path Artin) groups.

Generators are the vertices of a defining graph; adjacent generators commute,
and the Coxeter flavor makes every generator an involution.  Reduction is the
stack-style rewriting that realizes Tits' solution of the word problem for
these groups: a letter cancels against an earlier copy (inverse copy for the
Artin flavor) whenever everything in between commutes with it.  The canonical
normal form is the lexicographically least geodesic representative, obtained
by greedily pulling the least available letter to the front
(Cartier-Foata style).

A breadth-first ball enumerator doubles as the independent distance oracle:
BFS layers are computed by generator multiplication alone, so they check the
rewriting engine rather than reuse it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

Letter = Tuple[int, int]  # (generator index, sign); sign is +1 always for coxeter

from .graphs import SimpleGraph


class BallBudgetError(RuntimeError):
    """Ball enumeration would exceed the element budget."""


@dataclass(frozen=True)
class Presentation:
    """A right-angled presentation: one generator per defining-graph vertex.

    flavor "coxeter" adds s^2 = 1 for every generator; flavor "artin" keeps
    free inverses.  Commutation is exactly graph adjacency either way.
    """

    graph: SimpleGraph
    flavor: str = "coxeter"

    def __post_init__(self):
        if self.flavor not in ("coxeter", "artin"):
            raise ValueError(f"unknown flavor {self.flavor!r}")

    @property
    def generators(self) -> Tuple[str, ...]:
        return self.graph.vertices

    def index(self, label: str) -> int:
        return self._index_map()[label]

    def _index_map(self) -> Dict[str, int]:
        cached = getattr(self, "_idx_cache", None)
        if cached is None:
            cached = {v: i for i, v in enumerate(self.graph.vertices)}
            object.__setattr__(self, "_idx_cache", cached)
        return cached

    def commuting(self) -> Tuple[frozenset, ...]:
        """commuting()[i] = indices of generators commuting with generator i."""
        cached = getattr(self, "_comm_cache", None)
        if cached is None:
            idx = self._index_map()
            sets = [set() for _ in self.graph.vertices]
            for u, v in self.graph.edges:
                sets[idx[u]].add(idx[v])
                sets[idx[v]].add(idx[u])
            cached = tuple(frozenset(s) for s in sets)
            object.__setattr__(self, "_comm_cache", cached)
        return cached

    def noncommuting(self) -> Tuple[frozenset, ...]:
        """noncommuting()[i] = generators i cannot be exchanged past (incl. i)."""
        cached = getattr(self, "_noncomm_cache", None)
        if cached is None:
            comm = self.commuting()
            everyone = set(range(len(self.graph.vertices)))
            cached = tuple(frozenset(everyone - c) for c in comm)
            object.__setattr__(self, "_noncomm_cache", cached)
        return cached

    @property
    def edgeless(self) -> bool:
        return len(self.graph.edges) == 0

    @property
    def is_square(self) -> bool:
        """True when the defining graph is a single induced 4-cycle."""
        if len(self.graph.vertices) != 4 or len(self.graph.edges) != 4:
            return False
        return all(len(c) == 2 for c in self.commuting())

    def square_factors(self) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        """The two non-adjacent generator pairs of a 4-cycle presentation."""
        if not self.is_square:
            raise ValueError("not a 4-cycle presentation")
        comm = self.commuting()
        first = 0
        partner = next(j for j in range(1, 4) if j not in comm[first])
        other = tuple(sorted(set(range(4)) - {first, partner}))
        return (first, partner), (other[0], other[1])


@dataclass(frozen=True)
class Word:
    """A word over the generators, as (index, sign) letters."""

    letters: Tuple[Letter, ...]

    def __len__(self):
        return len(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def inverse(self, flavor: str = "coxeter") -> "Word":
        if flavor == "coxeter":
            return Word(self.letters[::-1])
        return Word(tuple((g, -s) for g, s in self.letters[::-1]))


EPSILON = Word(())


def word(p: Presentation, labels: Sequence[str]) -> Word:
    """Build a word from generator labels; `x^-1` marks an inverse (artin)."""
    letters = []
    for lab in labels:
        if lab.endswith("^-1"):
            if p.flavor == "coxeter":
                raise ValueError("inverse markers are redundant in the coxeter flavor")
            letters.append((p.index(lab[:-3]), -1))
        else:
            letters.append((p.index(lab), +1))
    return Word(tuple(letters))


def parse_word(p: Presentation, text: str) -> Word:
    """Parse a whitespace-separated word, e.g. 'a1 b2 a1' or 'x y^-1'."""
    return word(p, text.split())


def format_word(p: Presentation, w: Word) -> str:
    gens = p.generators
    parts = []
    for g, s in w.letters:
        parts.append(gens[g] if s > 0 else gens[g] + "^-1")
    return " ".join(parts)


# ---------------------------------------------------------------------------
# Reduction and normal form
# ---------------------------------------------------------------------------

def _reduce_letters(p: Presentation, letters: Iterable[Letter]) -> List[Letter]:
    comm = p.commuting()
    coxeter = p.flavor == "coxeter"
    out: List[Letter] = []
    for g, s in letters:
        j = len(out) - 1
        cancelled = False
        while j >= 0:
            gj, sj = out[j]
            if gj == g and (coxeter or sj == -s):
                del out[j]
                cancelled = True
                break
            if g not in comm[gj]:
                break
            j -= 1
        if not cancelled:
            out.append((g, s))
    return out


def reduce_word(p: Presentation, w: Word) -> Word:
    """A geodesic word for the same group element.

    One left-to-right pass with commuting lookback reaches the rewriting
    fixpoint: each letter either cancels the matching earlier letter it can
    be shuffled next to, or is appended.  The output length is the word
    metric length.
    """
    return Word(tuple(_reduce_letters(p, w.letters)))


def normal_form(p: Presentation, w: Word) -> Word:
    """The canonical geodesic: least letter pulled first, repeatedly.

    At each step the available letters are those that commute with every
    earlier letter of the remaining word; the least (generator index, sign)
    among them is emitted.  Equal group elements share this normal form, and
    every prefix of the output is itself geodesic.
    """
    remaining = _reduce_letters(p, w.letters)
    if p.edgeless:
        return Word(tuple(remaining))  # no exchanges exist
    noncomm = p.noncommuting()
    n_gens = len(p.generators)
    out: List[Letter] = []
    while remaining:
        # A letter is available iff it commutes with everything before it;
        # scan left to right keeping the set of generators already blocked.
        blocked: set = set()
        best_pos = 0
        best_key = None
        for pos, (g, s) in enumerate(remaining):
            if g not in blocked:
                key = (g, 0 if s > 0 else 1)
                if best_key is None or key < best_key:
                    best_key = key
                    best_pos = pos
            blocked |= noncomm[g]
            if len(blocked) == n_gens:
                break
        out.append(remaining.pop(best_pos))
    return Word(tuple(out))


def distance(p: Presentation, u: Word, v: Word) -> int:
    """Word-metric distance: the reduced length of u^{-1} v."""
    return len(_reduce_letters(p, u.inverse(p.flavor).letters + v.letters))


def norm(p: Presentation, w: Word) -> int:
    return len(_reduce_letters(p, w.letters))


def multiply(p: Presentation, u: Word, v: Word) -> Word:
    """Normal form of the product uv."""
    return normal_form(p, u * v)


def append_letter(letters: List[Letter], g: int, s: int, comm, coxeter: bool) -> None:
    """In-place reduced append of one letter (the walk/simulation hot path)."""
    j = len(letters) - 1
    while j >= 0:
        gj, sj = letters[j]
        if gj == g and (coxeter or sj == -s):
            del letters[j]
            return
        if g not in comm[gj]:
            break
        j -= 1
    letters.append((g, s))


# ---------------------------------------------------------------------------
# BFS oracle
# ---------------------------------------------------------------------------

def ball(p: Presentation, radius: int, budget: int = 10 ** 7) -> Dict[Word, int]:
    """Exact metric ball around the identity, mapping normal forms to layers.

    Layers come from breadth-first search over generator multiplication; the
    rewriting engine only supplies canonical dictionary keys.  All defining
    relators have even length, so the Cayley graph is bipartite and every
    multiplication moves exactly one layer up or down; BFS layers are
    therefore exact distances.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    gens: List[Letter] = []
    for i in range(len(p.generators)):
        gens.append((i, +1))
        if p.flavor == "artin":
            gens.append((i, -1))
    out: Dict[Word, int] = {EPSILON: 0}
    frontier = [EPSILON]
    for layer in range(1, radius + 1):
        nxt = []
        for w in frontier:
            for g, s in gens:
                nw = normal_form(p, Word(w.letters + ((g, s),)))
                if nw not in out:
                    out[nw] = layer
                    nxt.append(nw)
                    if len(out) > budget:
                        raise BallBudgetError(
                            f"ball would exceed {budget} elements at radius {layer}"
                        )
        frontier = nxt
    return out


def pair_distance_bfs(p: Presentation, u: Word, v: Word, max_radius: int = 64,
                      budget: int = 10 ** 7) -> int:
    """Distance between two elements by bidirectional BFS.

    Expands spheres around u and v alternately via generator multiplication
    until they meet; independent of the rewriting distance except for normal
    forms as dictionary keys.
    """
    nu, nv = normal_form(p, u), normal_form(p, v)
    if nu == nv:
        return 0
    gens: List[Letter] = []
    for i in range(len(p.generators)):
        gens.append((i, +1))
        if p.flavor == "artin":
            gens.append((i, -1))
    sides = [{nu: 0}, {nv: 0}]
    frontiers = [[nu], [nv]]
    depths = [0, 0]
    while depths[0] + depths[1] < max_radius:
        # Expand whichever frontier is smaller, one full layer.
        k = 0 if len(frontiers[0]) <= len(frontiers[1]) else 1
        seen, other = sides[k], sides[1 - k]
        depths[k] += 1
        depth = depths[k]
        nxt = []
        best = None
        for w in frontiers[k]:
            for g, s in gens:
                nw = normal_form(p, Word(w.letters + ((g, s),)))
                if nw in seen:
                    continue
                seen[nw] = depth
                nxt.append(nw)
                if len(seen) + len(other) > budget:
                    raise BallBudgetError("bidirectional BFS exceeded budget")
                if nw in other:
                    cand = depth + other[nw]
                    if best is None or cand < best:
                        best = cand
        if best is not None:
            return best
        if not nxt:
            raise ValueError("graph exhausted without the searches meeting")
        frontiers[k] = nxt
    raise ValueError(f"no path within max_radius={max_radius}")


# ---------------------------------------------------------------------------
# Ladder embedding checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmbeddingReport:
    """Relation evidence for the diagonal elements c_i = a_i b_i of a ladder group."""

    n: int
    consecutive_trivial: Tuple[bool, ...]   # [c_i, c_{i+1}] reduces to identity
    distant_nontrivial: Tuple[Tuple[int, int, bool], ...]  # (i, j, commutator != 1)
    power_lengths: Tuple[Tuple[int, int], ...]  # (k, |c_1^k|)

    @property
    def ok(self) -> bool:
        return (
            all(self.consecutive_trivial)
            and all(flag for _, _, flag in self.distant_nontrivial)
            and all(length == 2 * k for k, length in self.power_lengths)
        )


def check_embedding(n: int, k_max: int = 10) -> EmbeddingReport:
    """Verify the path-Artin relation pattern among the c_i = a_i b_i.

    In the Coxeter ladder group on 2n generators: consecutive c_i commute
    (all four cross pairs are edges), non-consecutive ones do not, and c_1
    has linearly growing powers, |c_1^k| = 2k.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    from .graphs import ladder_graph

    p = Presentation(ladder_graph(n), "coxeter")
    c = [word(p, [f"a{i}", f"b{i}"]) for i in range(1, n + 1)]

    def commutator(x: Word, y: Word) -> Word:
        return reduce_word(p, x * y * x.inverse() * y.inverse())

    consecutive = tuple(
        len(commutator(c[i], c[i + 1])) == 0 for i in range(n - 1)
    )
    distant = []
    for i in range(n):
        for j in range(i + 2, n):
            distant.append((i + 1, j + 1, len(commutator(c[i], c[j])) > 0))
    powers = []
    for k in range(1, k_max + 1):
        pw = Word(c[0].letters * k)
        powers.append((k, norm(p, pw)))
    return EmbeddingReport(
        n=n,
        consecutive_trivial=consecutive,
        distant_nontrivial=tuple(distant),
        power_lengths=tuple(powers),
    )
