"""Sublinear gauge functions and their small calculus.

A gauge here is a concave nondecreasing function kappa with kappa >= 1 and
kappa(r)/r -> 0.  The family is closed: constants, a*log(2+r)+b, a*r^s with
0 < s < 1, and max/sum combinations of two members.  Closing the family buys
exact domination rules; every gauge the experiments need (1, log, powers,
2*kappa+theta, ...) lives inside it.

All certification happens on a fixed geometric grid of radii.  Extremal
estimates derived from the grid carry a 5% outward safety margin so that the
resulting constants stay valid between grid points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

# Certification grid: r = 2^k, k = 0..40.  Exact predicates use TOL,
# extremal estimates get the outward MARGIN.
GRID = tuple(2.0 ** k for k in range(41))
TOL = 1e-9
MARGIN = 0.05

Params = Tuple[Union[float, "SublinearFn"], ...]


class GaugeError(ValueError):
    """Raised when a parameterization violates the gauge invariants."""


@dataclass(frozen=True)
class SublinearFn:
    """A member of the closed gauge family.

    form is one of "const", "log", "pow", "max", "sum".  For the leaf forms
    params holds real coefficients; for max/sum it holds the two component
    functions.  Instances are immutable and validated at construction on the
    grid: value >= 1, nondecreasing, midpoint-concave, and r -> f(r)/r
    eventually decreasing.
    """

    form: str
    params: Params

    def __post_init__(self):
        if self.form not in ("const", "log", "pow", "max", "sum"):
            raise GaugeError(f"unknown form {self.form!r}")
        self._validate_params()
        self._validate_grid()

    def _validate_params(self):
        if self.form == "const":
            (c,) = self.params
            if c < 1.0 - TOL:
                raise GaugeError(f"constant gauge must be >= 1, got {c}")
        elif self.form == "log":
            a, _ = self.params
            if a < 0:
                raise GaugeError("log gauge needs a >= 0")
        elif self.form == "pow":
            a, s = self.params
            if not (0.0 < s < 1.0):
                raise GaugeError(f"power gauge needs 0 < s < 1, got s={s}")
            if a <= 0:
                raise GaugeError("power gauge needs a > 0")
        else:
            f, g = self.params
            if not (isinstance(f, SublinearFn) and isinstance(g, SublinearFn)):
                raise GaugeError(f"{self.form} gauge needs two SublinearFn components")

    def _validate_grid(self):
        vals = [self._raw(r) for r in GRID]
        for r, v in zip(GRID, vals):
            if v < 1.0 - TOL:
                raise GaugeError(f"gauge dips below 1 at r={r}: {v}")
        for v1, v2 in zip(vals, vals[1:]):
            if v2 < v1 - TOL:
                raise GaugeError("gauge is not nondecreasing on the grid")
        # Midpoint concavity over all grid pairs.
        n = len(GRID)
        for i in range(n):
            for j in range(i + 1, n):
                mid = 0.5 * (GRID[i] + GRID[j])
                if self._raw(mid) < 0.5 * (vals[i] + vals[j]) - TOL:
                    raise GaugeError(
                        f"gauge fails midpoint concavity between r={GRID[i]} and r={GRID[j]}"
                    )
        # Sublinearity witnessed: f(r)/r decreasing over the grid tail.
        ratios = [v / r for r, v in zip(GRID, vals)]
        for k in range(10, len(GRID) - 1):
            if ratios[k + 1] > ratios[k] + TOL:
                raise GaugeError("gauge is not eventually sublinear on the grid")

    def _raw(self, r: float) -> float:
        if self.form == "const":
            return self.params[0]
        if self.form == "log":
            a, b = self.params
            return a * math.log(2.0 + r) + b
        if self.form == "pow":
            a, s = self.params
            return a * r ** s
        f, g = self.params
        if self.form == "max":
            return max(f(r), g(r))
        return f(r) + g(r)

    def __call__(self, r: float) -> float:
        if r < 0:
            raise ValueError(f"gauge argument must be >= 0, got {r}")
        return self._raw(r)

    # -- asymptotic class ---------------------------------------------------
    #
    # Growth is classified by (power exponent, log degree), compared
    # lexicographically.  Within the family, f dominates g exactly when
    # class(f) >= class(g): the multiplicative constant in the domination
    # inequality is free, so coefficients never matter.

    def growth_class(self) -> Tuple[float, int]:
        if self.form == "const":
            return (0.0, 0)
        if self.form == "log":
            a, _ = self.params
            return (0.0, 1) if a > 0 else (0.0, 0)
        if self.form == "pow":
            return (self.params[1], 0)
        f, g = self.params
        return max(f.growth_class(), g.growth_class())

    def spec(self) -> str:
        """Render in the textual gauge-spec format (inverse of parse_gauge)."""
        if self.form == "const":
            return f"const:{self.params[0]:g}"
        if self.form == "log":
            return f"log:{self.params[0]:g},{self.params[1]:g}"
        if self.form == "pow":
            return f"pow:{self.params[0]:g},{self.params[1]:g}"
        f, g = self.params
        return f"{self.form}:({f.spec()}|{g.spec()})"

    def __repr__(self):
        return f"SublinearFn({self.spec()!r})"


def const(c: float = 1.0) -> SublinearFn:
    return SublinearFn("const", (float(c),))


def log_gauge(a: float = 1.0, b: float = 0.0) -> SublinearFn:
    """a*log(2+r) + b, the workhorse gauge of the random-walk experiments."""
    return SublinearFn("log", (float(a), float(b)))


def power(a: float, s: float) -> SublinearFn:
    return SublinearFn("pow", (float(a), float(s)))


def maximum(f: SublinearFn, g: SublinearFn) -> SublinearFn:
    return SublinearFn("max", (f, g))


def add(f: SublinearFn, g: SublinearFn) -> SublinearFn:
    return SublinearFn("sum", (f, g))


def scale(c: float, f: SublinearFn) -> SublinearFn:
    """c*f, assembled inside the family (c-fold sum; c must be a positive integer)."""
    n = int(c)
    if n != c or n < 1:
        raise GaugeError("scale factor must be a positive integer")
    out = f
    for _ in range(n - 1):
        out = add(out, f)
    return out


def parse_gauge(text: str) -> SublinearFn:
    """Parse `const:c`, `log:a,b`, `pow:a,s`, `max:(f|g)`, `sum:(f|g)`.

    Combination payloads nest, e.g. `sum:(log:1,0|max:(const:2|pow:1,0.5))`.
    """
    text = text.strip()
    head, sep, payload = text.partition(":")
    if not sep:
        raise GaugeError(f"malformed gauge spec {text!r}")
    head = head.strip()
    if head == "const":
        return const(_parse_floats(payload, 1)[0])
    if head == "log":
        return log_gauge(*_parse_floats(payload, 2))
    if head == "pow":
        return power(*_parse_floats(payload, 2))
    if head in ("max", "sum"):
        payload = payload.strip()
        if not (payload.startswith("(") and payload.endswith(")")):
            raise GaugeError(f"{head} payload must be parenthesized: {text!r}")
        left, right = _split_pair(payload[1:-1])
        f, g = parse_gauge(left), parse_gauge(right)
        return maximum(f, g) if head == "max" else add(f, g)
    raise GaugeError(f"unknown gauge form {head!r}")


def _parse_floats(payload: str, n: int):
    parts = [p.strip() for p in payload.split(",")]
    if len(parts) != n:
        raise GaugeError(f"expected {n} coefficients, got {payload!r}")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise GaugeError(f"bad coefficient in {payload!r}") from exc


def _split_pair(inner: str) -> Tuple[str, str]:
    depth = 0
    for i, ch in enumerate(inner):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "|" and depth == 0:
            return inner[:i], inner[i + 1:]
    raise GaugeError(f"missing top-level '|' in {inner!r}")


# ---------------------------------------------------------------------------
# Predicates and constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DominationResult:
    verdict: bool
    C1: float
    C2: float
    t0: float


def dominates(kappa: SublinearFn, theta: SublinearFn) -> DominationResult:
    """Decide whether kappa(t) >= C1*theta(t) + C2 holds beyond some t0.

    The verdict compares asymptotic classes exactly; the family is closed, so
    every pair is decidable this way (grid certification of the witness
    constants below takes the place of a fallback).  A false verdict is an
    answer, not an error.
    """
    if not kappa.growth_class() >= theta.growth_class():
        return DominationResult(False, 0.0, 0.0, 0.0)
    if kappa == theta:
        return DominationResult(True, 1.0, 0.0, 0.0)
    ratio = min(kappa(t) / theta(t) for t in GRID)
    # Nudge below the grid minimum so the certified inequality is strict
    # against rounding; both functions are >= 1 so ratio > 0.
    return DominationResult(True, ratio * (1.0 - 1e-12), 0.0, 0.0)


def grid_certifies(kappa: SublinearFn, theta: SublinearFn, C1: float, C2: float, t0: float) -> bool:
    """Check kappa(t) >= C1*theta(t) + C2 at every grid point t > t0."""
    return all(kappa(t) >= C1 * theta(t) + C2 for t in GRID if t > t0)


def small_rel(D: float, r: float, kappa: SublinearFn) -> bool:
    """Whether the offset D is small with respect to the radius r: D <= r/(2*kappa(r))."""
    if D < 0:
        raise ValueError(f"offset must be >= 0, got {D}")
    if r <= 0:
        raise ValueError(f"radius must be > 0, got {r}")
    return D <= r / (2.0 * kappa(r))


@dataclass(frozen=True)
class EstimationConstants:
    """Constants (D1, D2, R) such that d(x, y) <= D0*kappa(|x|) forces
    D1*kappa(|x|) <= kappa(|y|) <= D2*kappa(|x|)."""

    D1: float
    D2: float
    R: float


def estimation_constants(kappa: SublinearFn, D0: float, r_max: float = 1e6) -> EstimationConstants:
    """Compute comparison constants for points at gauge-bounded distance.

    R is the least grid radius beyond which kappa(r) <= r/(2*D0) holds on the
    sampled grid.  Then

        D2 = sup_{r >= R} kappa(3r/2)/kappa(r) + kappa(3R/2)
        D1 = min( inf_{r >= R} kappa(r/2)/kappa(r), 1/kappa(R) )

    with sup/inf taken over the geometric grid and widened outward by 5%.
    Raises GaugeError when no admissible R exists below r_max.
    """
    if D0 <= 0:
        raise ValueError(f"D0 must be > 0, got {D0}")
    grid = [r for r in GRID if r <= r_max]
    if not grid:
        raise ValueError("r_max below the first grid point")
    ok = [kappa(r) <= r / (2.0 * D0) for r in grid]
    R = None
    for i, r in enumerate(grid):
        if all(ok[i:]):
            R = r
            break
    if R is None:
        raise GaugeError(f"no radius below {r_max} with kappa(r) <= r/(2*D0)")
    tail = [r for r in grid if r >= R]
    sup_up = max(kappa(1.5 * r) / kappa(r) for r in tail)
    inf_down = min(kappa(0.5 * r) / kappa(r) for r in tail)
    D2 = (sup_up + kappa(1.5 * R)) * (1.0 + MARGIN)
    D1 = min(inf_down, 1.0 / kappa(R)) * (1.0 - MARGIN)
    return EstimationConstants(D1=D1, D2=D2, R=R)
