"""Realized finitely generated groups with word metrics.

Four built-in kinds: cyclic(n), finite permutation groups, free abelian
groups, and the discrete Heisenberg group in x^a y^b z^c normal form
(z = [x,y] central, yx = xyz^{-1}).  Every group carries a fixed symmetric
generating set; all word lengths, balls and truncated conjugacy classes are
relative to it.  Elements are plain hashable canonical forms (an int for
cyclic groups, tuples otherwise), so `g == h` iff the canonical forms agree.

Infinite groups are only ever touched through radius-R truncations; every
ball or class enumeration takes an explicit radius and a capacity cap.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, InputError

Element = int | tuple  # canonical forms; see module docstring

DEFAULT_BALL_CAP = 2_000_000


class Group:
    """Base class: a group with a fixed symmetric generating set."""

    kind: str = "abstract"

    def __init__(self):
        self._length_cache: dict = {}
        self._ball_cache_radius: int = -1

    # -- kind-specific primitives -------------------------------------
    def identity(self):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    @property
    def generators(self) -> tuple:
        raise NotImplementedError

    def check_element(self, g) -> None:
        """Raise InputError unless g is a valid canonical form."""
        raise NotImplementedError

    def is_finite(self) -> bool:
        return False

    def params(self) -> tuple:
        return ()

    # -- identity/hash by declared data --------------------------------
    def __eq__(self, other):
        return type(self) is type(other) and self.params() == other.params()

    def __hash__(self):
        return hash((type(self).__name__, self.params()))

    def __repr__(self):
        return f"{type(self).__name__}{self.params()}"

    def cache_key(self) -> tuple:
        return (self.kind, self.params())

    # -- word metric ----------------------------------------------------
    def sort_key(self, g):
        """Canonical deterministic ordering for output sets."""
        t = g if isinstance(g, tuple) else (g,)
        return (self.word_length(g), t)

    def word_length(self, g) -> int:
        """Word-metric distance from the identity (BFS over the Cayley graph
        unless a closed form is forced by the relations)."""
        self.check_element(g)
        if g == self.identity():
            return 0
        cached = self._length_cache.get(g)
        if cached is not None:
            return cached
        radius = max(4, 2 * self._ball_cache_radius)
        while True:
            self._grow_ball(radius)
            if g in self._length_cache:
                return self._length_cache[g]
            if self.is_finite() and self._ball_is_whole_group():
                raise InputError(f"element {g!r} not generated by the declared set")
            radius *= 2
            if radius > 4096:
                raise CapacityError(f"word_length search exceeded radius cap for {g!r}")

    def _ball_is_whole_group(self) -> bool:
        return False

    def _grow_ball(self, radius: int, cap: int = DEFAULT_BALL_CAP) -> None:
        """Extend the cached BFS ball out to `radius`."""
        if radius <= self._ball_cache_radius:
            return
        if not self._length_cache:
            self._length_cache[self.identity()] = 0
            self._ball_cache_radius = 0
        frontier = [g for g, d in self._length_cache.items()
                    if d == self._ball_cache_radius]
        for r in range(self._ball_cache_radius + 1, radius + 1):
            nxt = []
            for g in frontier:
                for s in self.generators:
                    h = self.mul(g, s)
                    if h not in self._length_cache:
                        self._length_cache[h] = r
                        nxt.append(h)
            if len(self._length_cache) > cap:
                raise CapacityError(
                    f"ball size exceeded cap {cap} at radius {r} for {self!r}")
            frontier = nxt
            self._ball_cache_radius = r
            if not frontier:
                break
        self._ball_cache_radius = max(self._ball_cache_radius, radius)


class CyclicGroup(Group):
    """Z/n with generators {+1, -1} (mod n); |r| = min(r, n-r)."""

    kind = "cyclic"

    def __init__(self, n: int):
        if n < 1:
            raise InputError("cyclic order must be >= 1")
        super().__init__()
        self.n = n

    def params(self):
        return (self.n,)

    def identity(self):
        return 0

    def mul(self, a, b):
        return (a + b) % self.n

    def inv(self, a):
        return (-a) % self.n

    @property
    def generators(self):
        if self.n == 1:
            return ()
        return (1,) if self.n == 2 else (1, self.n - 1)

    def check_element(self, g):
        if not isinstance(g, int) or not (0 <= g < self.n):
            raise InputError(f"{g!r} is not a residue mod {self.n}")

    def is_finite(self):
        return True

    def elements(self):
        return tuple(range(self.n))

    def word_length(self, g):
        self.check_element(g)
        return min(g, self.n - g)


class FreeAbelianGroup(Group):
    """Z^rank with generators ±e_i; the word metric is l^1 (forced by
    commuting generators)."""

    kind = "free-abelian"

    def __init__(self, rank: int):
        if rank < 1:
            raise InputError("rank must be >= 1")
        super().__init__()
        self.rank = rank

    def params(self):
        return (self.rank,)

    def identity(self):
        return (0,) * self.rank

    def mul(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def inv(self, a):
        return tuple(-x for x in a)

    @property
    def generators(self):
        gens = []
        for i in range(self.rank):
            e = [0] * self.rank
            e[i] = 1
            gens.append(tuple(e))
            e[i] = -1
            gens.append(tuple(e))
        return tuple(gens)

    def check_element(self, g):
        if not (isinstance(g, tuple) and len(g) == self.rank
                and all(isinstance(x, int) for x in g)):
            raise InputError(f"{g!r} is not an integer vector of rank {self.rank}")

    def word_length(self, g):
        self.check_element(g)
        return sum(abs(x) for x in g)


class HeisenbergGroup(Group):
    """Discrete Heisenberg group, normal form x^a y^b z^c with z = [x,y]
    central.  Multiplication law (a,b,c)(a',b',c') = (a+a', b+b', c+c'-a'b)
    follows from yx = xyz^{-1}; generators are x^{±1}, y^{±1}."""

    kind = "heisenberg"

    def params(self):
        return ()

    def identity(self):
        return (0, 0, 0)

    def mul(self, g, h):
        a, b, c = g
        a2, b2, c2 = h
        return (a + a2, b + b2, c + c2 - a2 * b)

    def inv(self, g):
        a, b, c = g
        return (-a, -b, -c - a * b)

    @property
    def generators(self):
        return ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0))

    def check_element(self, g):
        if not (isinstance(g, tuple) and len(g) == 3
                and all(isinstance(x, int) for x in g)):
            raise InputError(f"{g!r} is not a Heisenberg triple")


class PermutationGroup(Group):
    """Subgroup of S_degree generated by the given permutations (image
    tuples, 0-indexed).  The generating set is symmetrized and the identity
    is dropped automatically."""

    kind = "finite-permutation"

    def __init__(self, degree: int, generators: Sequence[Sequence[int]]):
        super().__init__()
        self.degree = degree
        gens = set()
        ident = tuple(range(degree))
        for p in generators:
            p = tuple(p)
            if sorted(p) != list(range(degree)):
                raise InputError(f"{p!r} is not a permutation of 0..{degree - 1}")
            if p == ident:
                continue
            gens.add(p)
            gens.add(self.inv(p))
        if not gens:
            raise InputError("permutation group needs at least one non-identity generator")
        self._gens = tuple(sorted(gens))
        self._elements: "tuple | None" = None

    def params(self):
        return (self.degree, self._gens)

    def identity(self):
        return tuple(range(self.degree))

    def mul(self, p, q):
        # composition as functions: (p*q)(i) = p[q[i]]
        return tuple(p[q[i]] for i in range(self.degree))

    def inv(self, p):
        out = [0] * self.degree
        for i, pi in enumerate(p):
            out[pi] = i
        return tuple(out)

    @property
    def generators(self):
        return self._gens

    def check_element(self, g):
        if not (isinstance(g, tuple) and sorted(g) == list(range(self.degree))):
            raise InputError(f"{g!r} is not a permutation of degree {self.degree}")

    def is_finite(self):
        return True

    def elements(self):
        if self._elements is None:
            self._grow_ball(4)
            while not self._ball_is_whole_group():
                self._grow_ball(2 * self._ball_cache_radius)
            self._elements = tuple(sorted(self._length_cache))
        return self._elements

    def _ball_is_whole_group(self):
        # the ball stopped growing once the frontier emptied
        r = self._ball_cache_radius
        return r > 0 and all(d < r for d in self._length_cache.values())


def cyclic(n: int) -> CyclicGroup:
    return CyclicGroup(n)


def free_abelian(rank: int) -> FreeAbelianGroup:
    return FreeAbelianGroup(rank)


def heisenberg() -> HeisenbergGroup:
    return HeisenbergGroup()


def finite_permutation(degree: int, generators: Sequence[Sequence[int]]) -> PermutationGroup:
    return PermutationGroup(degree, generators)


def symmetric_group(n: int) -> PermutationGroup:
    """S_n with the adjacent transposition (0 1) and the n-cycle."""
    transposition = tuple([1, 0] + list(range(2, n)))
    cycle = tuple(list(range(1, n)) + [0])
    return PermutationGroup(n, [transposition, cycle])


# ---------------------------------------------------------------------------
# balls and truncated conjugacy classes


def ball(group: Group, R: int, cap: int = DEFAULT_BALL_CAP) -> tuple:
    """All elements with word length <= R, canonically ordered.  Contains the
    identity and is closed under inversion (the generating set is symmetric)."""
    if R < 0:
        raise InputError("radius must be >= 0")
    group._grow_ball(R, cap=cap)
    out = [g for g, d in group._length_cache.items() if d <= R]
    out.sort(key=group.sort_key)
    return tuple(out)


def ball_lengths(group: Group, R: int, cap: int = DEFAULT_BALL_CAP) -> dict:
    """Word lengths of the radius-R ball as a dict g -> |g|."""
    group._grow_ball(R, cap=cap)
    return {g: d for g, d in group._length_cache.items() if d <= R}


def conjugacy_class_ball(group: Group, h, R: int, slack: int = 4,
                         cap: int = DEFAULT_BALL_CAP) -> tuple:
    """{g in <h> : |g| <= R}: closure of {h} under conjugation by generators,
    truncated to the radius-R ball.

    For infinite groups the closure search is guarded at |g| <= R + slack
    before filtering; exact for the built-in kinds (see tests).
    """
    group.check_element(h)
    if R < 0:
        raise InputError("radius must be >= 0")
    guard = None if group.is_finite() else R + slack
    if guard is not None:
        group._grow_ball(guard, cap=cap)
    seen = {h}
    queue = deque([h])
    while queue:
        g = queue.popleft()
        for s in group.generators:
            c = group.mul(group.mul(s, g), group.inv(s))
            if c in seen:
                continue
            if guard is not None and group.word_length(c) > guard:
                continue
            seen.add(c)
            queue.append(c)
            if len(seen) > cap:
                raise CapacityError(f"conjugacy class closure exceeded cap {cap}")
    out = [g for g in seen if group.word_length(g) <= R]
    out.sort(key=group.sort_key)
    return tuple(out)


def conjugacy_classes(group: Group) -> tuple:
    """All conjugacy classes of a finite group, each a sorted tuple; ordered
    by their minimal element.  Identity class first."""
    if not group.is_finite():
        raise InputError("conjugacy_classes needs a finite group")
    remaining = set(group.elements())
    diameter = max(group.word_length(g) for g in remaining)
    classes = []
    while remaining:
        h = min(remaining, key=group.sort_key)
        cls = conjugacy_class_ball(group, h, diameter)
        classes.append(cls)
        remaining -= set(cls)
    classes.sort(key=lambda c: group.sort_key(c[0]))
    return tuple(classes)


def min_class_length(group: Group, h, R: int, slack: int = 4) -> "int | None":
    """min{|g| : g in <h>, |g| <= R}, or None when the truncated class is
    empty within R."""
    cls = conjugacy_class_ball(group, h, R, slack=slack)
    if not cls:
        return None
    return min(group.word_length(g) for g in cls)


def class_growth_counts(group: Group, h, R: int, slack: int = 4) -> list:
    """N(r) = #{g in <h> : |g| <= r} for r = 1..R."""
    cls = conjugacy_class_ball(group, h, R, slack=slack)
    lengths = sorted(group.word_length(g) for g in cls)
    counts = []
    i = 0
    for r in range(1, R + 1):
        while i < len(lengths) and lengths[i] <= r:
            i += 1
        counts.append(i)
    return counts


# ---------------------------------------------------------------------------
# growth classification

POLY_RESIDUAL_THRESHOLD = 0.15  # rms log-residual accepted as polynomial
WINDOW_SLOP = 1.25              # windows within this factor of best count as stable


@dataclass(frozen=True)
class GrowthReport:
    """Least-squares growth classification of class-ball counts.

    verdict "polynomial" certifies N(r) <= constant * r^degree on every
    sampled r >= 1 (the constant is chosen as max N(r)/r^degree, so the bound
    is tight at the worst radius).  Any finite-radius verdict is a heuristic;
    the fit window and residuals are always reported alongside.
    """

    counts: tuple
    radii: tuple
    degree: float
    constant: float
    verdict: str                 # "polynomial" | "exponential" | "inconclusive"
    window: tuple                # (first radius, last radius) used for the fit
    loglog_rms: float
    loglin_rms: float

    def is_polynomial(self) -> bool:
        return self.verdict == "polynomial"


def growth_fit(counts: Sequence[int], radii: "Sequence[int] | None" = None) -> GrowthReport:
    """Classify count data N(r) as polynomial or exponential growth.

    Fits log N against log r over the largest stable suffix window and
    against r on the same window; polynomial wins when its rms residual is
    below POLY_RESIDUAL_THRESHOLD and not worse than the log-linear fit.
    """
    counts = list(counts)
    if len(counts) < 4:
        raise InputError("need at least 4 counts")
    if any(c < 0 for c in counts):
        raise InputError("counts must be non-negative")
    if any(b < a for a, b in zip(counts, counts[1:])):
        raise InputError("counts must be non-decreasing")
    if all(c == 0 for c in counts):
        raise InputError("all counts are zero")
    if radii is None:
        radii = list(range(1, len(counts) + 1))
    else:
        radii = list(radii)
        if len(radii) != len(counts):
            raise InputError("radii and counts must have equal length")

    first_pos = next(i for i, c in enumerate(counts) if c > 0)
    usable = len(counts) - first_pos
    if usable < 4:
        # too few positive samples for a fit window; classify constant data only
        tail = counts[first_pos:]
        if all(c == tail[0] for c in tail):
            w = (radii[first_pos], radii[-1])
            return GrowthReport(tuple(counts), tuple(radii), 0.0, float(tail[0]),
                                "polynomial", w, 0.0, 0.0)
        return GrowthReport(tuple(counts), tuple(radii), float("nan"), float("nan"),
                            "inconclusive", (radii[first_pos], radii[-1]),
                            float("inf"), float("inf"))

    r = np.array(radii[first_pos:], dtype=float)
    n = np.array(counts[first_pos:], dtype=float)
    logn = np.log(n)
    logr = np.log(r)

    def rms_fit(x, y):
        slope, intercept = np.polyfit(x, y, 1)
        res = y - (slope * x + intercept)
        return float(np.sqrt(np.mean(res ** 2))), float(slope)

    candidates = []  # (start offset, rms, slope)
    for s in range(0, usable - 3):
        rms, slope = rms_fit(logr[s:], logn[s:])
        candidates.append((s, rms, slope))
    best_rms = min(c[1] for c in candidates)
    stable = [c for c in candidates if c[1] <= best_rms * WINDOW_SLOP + 1e-12]
    s, loglog_rms, slope = min(stable)  # smallest offset = largest stable window

    loglin_rms, _ = rms_fit(r[s:], logn[s:])
    degree = max(slope, 0.0)
    window = (int(r[s]), int(r[-1]))

    if loglog_rms < POLY_RESIDUAL_THRESHOLD and loglog_rms <= loglin_rms:
        verdict = "polynomial"
    elif loglin_rms < POLY_RESIDUAL_THRESHOLD and loglin_rms < loglog_rms:
        verdict = "exponential"
    else:
        verdict = "inconclusive"

    positives = [(rr, nn) for rr, nn in zip(radii, counts) if rr >= 1 and nn > 0]
    constant = max(nn / rr ** degree for rr, nn in positives) if verdict == "polynomial" \
        else float("nan")
    return GrowthReport(tuple(counts), tuple(radii), degree, constant, verdict,
                        window, loglog_rms, loglin_rms)


def self_check(group: Group, samples: int = 50, seed: int = 0) -> None:
    """Spot-check associativity and inverse laws on sampled triples."""
    rng = np.random.default_rng(seed)
    pool = list(ball(group, 3))
    for _ in range(samples):
        a, b, c = (pool[rng.integers(len(pool))] for _ in range(3))
        if group.mul(group.mul(a, b), c) != group.mul(a, group.mul(b, c)):
            raise AssertionError(f"associativity fails on {(a, b, c)}")
        if group.mul(a, group.inv(a)) != group.identity():
            raise AssertionError(f"inverse fails on {a}")
