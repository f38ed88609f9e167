"""Finitely generated groups: Z^d (d <= 3) and the discrete Heisenberg group H3.

Elements are immutable, hashable :class:`GroupElement` values carrying a group
tag. Heisenberg elements ``(a, b, c)`` stand for the lower-triangular matrix

    [[1, 0, 0],
     [a, 1, 0],
     [c, b, 1]]

so that ``(a, b, c) * (a', b', c') = (a + a', b + b', c + c' + b * a')``.

Finite subsets are plain ``frozenset`` objects; :func:`canonical` returns the
sorted tuple used wherever a deterministic order matters.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

INT32_MIN = -(2**31)
INT32_MAX = 2**31 - 1

GROUP_TAGS = ("Z1", "Z2", "Z3", "H3")

#: returned by :func:`word_distance` when the distance exceeds the cap
INFINITY = float("inf")


class GroupError(ValueError):
    pass


class SizeLimitError(GroupError):
    pass


def _dim(tag: str) -> int:
    if tag == "H3":
        return 3
    if tag in ("Z1", "Z2", "Z3"):
        return int(tag[1])
    raise GroupError(f"unknown group tag {tag!r}")


@dataclass(frozen=True, order=True)
class GroupElement:
    tag: str
    coords: tuple[int, ...]

    def __post_init__(self):
        if len(self.coords) != _dim(self.tag):
            raise GroupError(f"{self.tag} needs {_dim(self.tag)} coordinates, got {self.coords}")
        for c in self.coords:
            if not INT32_MIN <= c <= INT32_MAX:
                raise OverflowError(f"coordinate {c} outside 32-bit range")

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return multiply(self, other)

    def __repr__(self):
        return f"{self.tag}{self.coords}"

    @property
    def key(self) -> str:
        """Canonical key, e.g. ``'H3:1:0:-2'``."""
        return ":".join((self.tag, *map(str, self.coords)))

    @classmethod
    def from_key(cls, key: str) -> "GroupElement":
        tag, *rest = key.split(":")
        return cls(tag, tuple(int(x) for x in rest))


def element(tag: str, *coords: int) -> GroupElement:
    return GroupElement(tag, tuple(int(c) for c in coords))


def identity(tag: str) -> GroupElement:
    return GroupElement(tag, (0,) * _dim(tag))


def is_identity(g: GroupElement) -> bool:
    return not any(g.coords)


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    if g.tag != h.tag:
        raise GroupError(f"cannot multiply {g.tag} by {h.tag}")
    if g.tag == "H3":
        a, b, c = g.coords
        a2, b2, c2 = h.coords
        return GroupElement("H3", (a + a2, b + b2, c + c2 + b * a2))
    return GroupElement(g.tag, tuple(x + y for x, y in zip(g.coords, h.coords)))


def inverse(g: GroupElement) -> GroupElement:
    if g.tag == "H3":
        a, b, c = g.coords
        # c' = -c - b * a' with a' = -a
        return GroupElement("H3", (-a, -b, -c + b * a))
    return GroupElement(g.tag, tuple(-x for x in g.coords))


def canonical(Q: Iterable[GroupElement]) -> tuple[GroupElement, ...]:
    return tuple(sorted(set(Q)))


@dataclass(frozen=True)
class GeneratorSet:
    """Ordered, not necessarily symmetric generating set.

    The order indexes edge labels of the Cayley graph; the identity and
    mutually inverse pairs are allowed.
    """

    generators: tuple[GroupElement, ...]
    symmetric_closure: tuple[GroupElement, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise GroupError("generator set is empty")
        tags = {g.tag for g in gens}
        if len(tags) != 1:
            raise GroupError(f"mixed group tags in generator set: {sorted(tags)}")
        object.__setattr__(self, "generators", gens)
        closure: list[GroupElement] = []
        seen = set()
        for s in gens + tuple(inverse(s) for s in gens):
            if s not in seen:
                seen.add(s)
                closure.append(s)
        object.__setattr__(self, "symmetric_closure", tuple(closure))

    @property
    def tag(self) -> str:
        return self.generators[0].tag

    def __len__(self):
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def __getitem__(self, i):
        return self.generators[i]

    @classmethod
    def of(cls, tag: str, *coord_tuples: Sequence[int]) -> "GeneratorSet":
        return cls(tuple(element(tag, *c) for c in coord_tuples))


def standard_generators(tag: str) -> GeneratorSet:
    """Unit vectors for Z^d, ``{(1,0,0), (0,1,0)}`` for H3."""
    if tag == "H3":
        return GeneratorSet.of("H3", (1, 0, 0), (0, 1, 0))
    d = _dim(tag)
    return GeneratorSet.of(tag, *[tuple(int(i == j) for j in range(d)) for i in range(d)])


# the two generating systems of Z^2 from the standard example
S1 = GeneratorSet.of("Z2", (1, 0), (0, 1))
S2 = GeneratorSet.of("Z2", (0, 0), (1, 1), (1, 0), (-1, 0))


# ---------------------------------------------------------------------------
# word metric
# ---------------------------------------------------------------------------

def word_distance(g: GroupElement, h: GroupElement, S: GeneratorSet, cap: int) -> int | float:
    """Smallest k with s_1...s_k h = g, s_i in S u S^-1; INFINITY if k > cap.

    Bidirectional breadth-first search; the closure is inverse-closed, so the
    backward search from g also uses left multiplication.
    """
    if cap < 0:
        raise GroupError("cap must be non-negative")
    if g == h:
        return 0
    gens = S.symmetric_closure
    dist_h = {h: 0}
    dist_g = {g: 0}
    front_h, front_g = [h], [g]
    radius_h = radius_g = 0
    while front_h and front_g and radius_h + radius_g < cap:
        # expand the smaller frontier
        if len(front_h) <= len(front_g):
            front, dist, other, radius_h = front_h, dist_h, dist_g, radius_h + 1
            r = radius_h
        else:
            front, dist, other, radius_g = front_g, dist_g, dist_h, radius_g + 1
            r = radius_g
        nxt = []
        best = INFINITY
        for x in front:
            for s in gens:
                y = multiply(s, x)
                if y in dist:
                    continue
                dist[y] = r
                if y in other:
                    best = min(best, r + other[y])
                nxt.append(y)
        if best <= cap:
            return int(best)
        if front is front_h:
            front_h = nxt
        else:
            front_g = nxt
    return INFINITY


def ball(centers: Iterable[GroupElement], radius: int, S: GeneratorSet) -> dict[GroupElement, int]:
    """Multi-source BFS; maps every element within ``radius`` to its distance."""
    dist = {}
    front = []
    for c in centers:
        if c not in dist:
            dist[c] = 0
            front.append(c)
    gens = S.symmetric_closure
    for r in range(1, radius + 1):
        nxt = []
        for x in front:
            for s in gens:
                y = multiply(s, x)
                if y not in dist:
                    dist[y] = r
                    nxt.append(y)
        front = nxt
    return dist


def boundary_R(Q: Iterable[GroupElement], R: int, S: GeneratorSet) -> frozenset[GroupElement]:
    """Two-sided R-boundary: points of Q within R of the complement, plus
    points outside Q within R of Q."""
    if R < 1:
        raise GroupError("R must be >= 1")
    Q = frozenset(Q)
    exterior = [g for g in ball(Q, R, S) if g not in Q]
    interior = [g for g in ball(exterior, R, S) if g in Q]
    return frozenset(exterior) | frozenset(interior)


# ---------------------------------------------------------------------------
# Folner boxes and tilings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FolnerBox:
    n: int
    tag: str
    elements: frozenset[GroupElement]
    grid: str

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(canonical(self.elements))

    def __contains__(self, g):
        return g in self.elements


def folner_box(tag: str, n: int) -> FolnerBox:
    """{0..n-1}^d for Z^d; {0 <= a,b < n, 0 <= c < n^2} for H3."""
    if n < 1:
        raise GroupError("box index must be >= 1")
    if tag == "H3":
        elems = frozenset(
            GroupElement("H3", (a, b, c)) for a in range(n) for b in range(n) for c in range(n * n)
        )
        grid = f"a,b in {n}Z, c in {n * n}Z"
    else:
        d = _dim(tag)
        elems = frozenset(GroupElement(tag, p) for p in product(range(n), repeat=d))
        grid = f"{n}Z^{d}"
    return FolnerBox(n, tag, elems, grid)


def folner_ratio(Q: Iterable[GroupElement], S: GeneratorSet) -> Fraction:
    """|SQ \\ Q| / |Q| as an exact rational."""
    Q = frozenset(Q)
    SQ = {multiply(s, q) for s in S for q in Q}
    return Fraction(len(SQ - Q), len(Q))


def boundary_ratio(Q: Iterable[GroupElement], R: int, S: GeneratorSet) -> Fraction:
    Q = frozenset(Q)
    return Fraction(len(boundary_R(Q, R, S)), len(Q))


def tile_decompose(x: GroupElement, n: int) -> tuple[GroupElement, GroupElement]:
    """Unique (q, g) with q in Q_n, g in the grid T_n and x = q * g."""
    if x.tag == "H3":
        A, B, C = x.coords
        a2, a = divmod(A, n)
        b2, b = divmod(B, n)
        c2, c = divmod(C - n * b * a2, n * n)
        return GroupElement("H3", (a, b, c)), GroupElement("H3", (n * a2, n * b2, n * n * c2))
    q, g = [], []
    for X in x.coords:
        k, r = divmod(X, n)
        q.append(r)
        g.append(n * k)
    return GroupElement(x.tag, tuple(q)), GroupElement(x.tag, tuple(g))


def tiling_grid(tag: str, n: int, radius: int, S: GeneratorSet | None = None) -> list[GroupElement]:
    """Grid elements g with Q_n g meeting the word ball B(id, radius),
    closed up under inversion."""
    if n < 1:
        raise GroupError("box index must be >= 1")
    S = S or standard_generators(tag)
    patch = {tile_decompose(x, n)[1] for x in ball([identity(tag)], radius, S)}
    patch |= {inverse(g) for g in patch}
    return sorted(patch)


def translate_right(Q: Iterable[GroupElement], g: GroupElement) -> frozenset[GroupElement]:
    return frozenset(multiply(q, g) for q in Q)


def tempered_ratio(boxes: Sequence[FolnerBox], n: int, limit: int = 5_000_000) -> Fraction:
    """|U_{k<n} Q_k^-1 Q_n| / |Q_n| by enumeration; ``boxes[k-1]`` is Q_k."""
    if n < 2 or n > len(boxes):
        raise GroupError(f"n must lie in 2..{len(boxes)}")
    Qn = boxes[n - 1].elements
    work = sum(len(boxes[k].elements) for k in range(n - 1)) * len(Qn)
    if work > limit:
        raise SizeLimitError(f"enumeration of {work} products exceeds limit {limit}")
    union = set()
    for k in range(n - 1):
        inv = [inverse(q) for q in boxes[k].elements]
        union.update(multiply(a, b) for a in inv for b in Qn)
    return Fraction(len(union), len(Qn))
