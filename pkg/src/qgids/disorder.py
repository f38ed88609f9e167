"""Equivariant random potentials and vertex conditions, colourings and patterns.

A realization is a pure function of a 64-bit seed and canonical element keys,
so any finite window can be evaluated consistently. Labels are drawn i.i.d.:
edge potentials from per-generator weights over the profile set, vertex
conditions from one weight vector over the condition set.

Mixing function (bit-exact, all arithmetic mod 2**64)::

    fnv1a64(bytes):  h = 0xCBF29CE484222325; for b in bytes: h = (h ^ b) * 0x100000001B3
    splitmix64(x):   x += 0x9E3779B97F4A7C15
                     x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9
                     x = (x ^ (x >> 27)) * 0x94D049BB133111EB
                     return x ^ (x >> 31)
    mix(seed, key):  splitmix64(splitmix64(seed) ^ fnv1a64(key.encode('ascii')))

Edge keys are ``'E|' + <vertex key> + '#' + <generator index>`` and vertex keys
``'V|' + <vertex key>``. The top 53 bits of ``mix`` give u in [0, 1), and the
label is the first index whose cumulative weight exceeds u.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import accumulate
from typing import Iterable, Mapping, Sequence

from .cayley import EdgeKey, edge_action
from .groups import GeneratorSet, GroupElement, canonical, identity, inverse, multiply
from .quantum_graph import Profile, VertexCondition

MASK64 = (1 << 64) - 1

Colour = tuple[tuple[int, ...], int]


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


@lru_cache(maxsize=1 << 20)
def _key_hash(key: str) -> int:
    return fnv1a64(key.encode("ascii"))


def mix(seed: int, key: str) -> int:
    return splitmix64(splitmix64(seed & MASK64) ^ _key_hash(key))


def uniform(seed: int, key: str) -> float:
    return (mix(seed, key) >> 11) * (1.0 / (1 << 53))


def _as_fraction(w) -> Fraction:
    if isinstance(w, Fraction):
        return w
    if isinstance(w, float):
        return Fraction(repr(w))
    return Fraction(w)


def _pick(u: float, cumulative: Sequence[float]) -> int:
    for i, c in enumerate(cumulative):
        if u < c:
            return i
    # round-off in the cumulative sum; take the last label with positive weight
    return len(cumulative) - 1


@dataclass(frozen=True)
class Model:
    """Finite alphabets plus i.i.d. weights.

    ``potential_weights`` holds one weight vector per generator index (a single
    vector is broadcast to every generator).
    """

    S: GeneratorSet
    profiles: tuple[Profile, ...]
    conditions: tuple[VertexCondition, ...]
    potential_weights: tuple[tuple[float, ...], ...]
    condition_weights: tuple[float, ...]
    _cum_pot: tuple = field(init=False, repr=False, compare=False)
    _cum_cond: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pw = tuple(tuple(w) for w in self.potential_weights)
        if len(pw) == 1 and len(self.S) > 1:
            pw = pw * len(self.S)
        if len(pw) != len(self.S):
            raise ValueError("need one potential weight vector per generator")
        for w in pw:
            if len(w) != len(self.profiles):
                raise ValueError("potential weight vector length differs from profile count")
        if len(self.condition_weights) != len(self.conditions):
            raise ValueError("condition weight vector length differs from condition count")
        object.__setattr__(self, "profiles", tuple(self.profiles))
        object.__setattr__(self, "conditions", tuple(self.conditions))
        object.__setattr__(self, "potential_weights", pw)
        object.__setattr__(self, "condition_weights", tuple(self.condition_weights))
        object.__setattr__(self, "_cum_pot", tuple(_cumulative(w) for w in pw))
        object.__setattr__(self, "_cum_cond", _cumulative(self.condition_weights))

    @property
    def vmax(self) -> float:
        return max(p.vmax for p in self.profiles)

    @property
    def alpha_min(self) -> float:
        return min((c.alpha for c in self.conditions if c.kind == "delta"), default=0.0)

    @property
    def alphabet_size(self) -> int:
        return len(self.profiles) ** len(self.S) * len(self.conditions)


def _cumulative(w: Sequence[float]) -> tuple[float, ...]:
    total = float(sum(w))
    return tuple(c / total for c in accumulate(float(x) for x in w))


@dataclass(frozen=True)
class DisorderField:
    """Realization omega; lookups at vertex v read the raw field at v * offset.

    ``shift(g)`` realizes the group action alpha_g, so that
    V(shift(g))_{e o g} = V_e and U(shift(g))_v = U_{v g}.
    """

    model: Model
    seed: int
    offset: GroupElement | None = None

    def _at(self, v: GroupElement) -> GroupElement:
        return v if self.offset is None else multiply(v, self.offset)

    def shift(self, g: GroupElement) -> "DisorderField":
        new = g if self.offset is None else multiply(g, self.offset)
        return DisorderField(self.model, self.seed, new)

    def potential_label(self, e: EdgeKey) -> int:
        base = self._at(e.base)
        u = uniform(self.seed, f"E|{base.key}#{e.gen_index}")
        return _pick(u, self.model._cum_pot[e.gen_index])

    def condition_label(self, v: GroupElement) -> int:
        u = uniform(self.seed, f"V|{self._at(v).key}")
        return _pick(u, self.model._cum_cond)

    def potential_of(self, e: EdgeKey) -> Profile:
        return self.model.profiles[self.potential_label(e)]

    def condition_of(self, v: GroupElement) -> VertexCondition:
        return self.model.conditions[self.condition_label(v)]

    def colour(self, v: GroupElement) -> Colour:
        pots = tuple(self.potential_label(EdgeKey(v, i)) for i in range(len(self.model.S)))
        return pots, self.condition_label(v)


@dataclass(frozen=True)
class FixedField:
    """Deterministic configuration given by a colouring (e.g. a pattern).

    Vertices outside the colouring fall back to ``default`` when given.
    """

    model: Model
    colouring: Mapping[GroupElement, Colour]
    default: Colour | None = None

    def colour(self, v: GroupElement) -> Colour:
        c = self.colouring.get(v, self.default)
        if c is None:
            raise KeyError(f"no colour assigned to {v}")
        return c

    def potential_label(self, e: EdgeKey) -> int:
        return self.colour(e.base)[0][e.gen_index]

    def condition_label(self, v: GroupElement) -> int:
        return self.colour(v)[1]

    def potential_of(self, e: EdgeKey) -> Profile:
        return self.model.profiles[self.potential_label(e)]

    def condition_of(self, v: GroupElement) -> VertexCondition:
        return self.model.conditions[self.condition_label(v)]


def uniform_field(model: Model, potential: int = 0, condition: int = 0) -> FixedField:
    return FixedField(model, {}, ((potential,) * len(model.S), condition))


def equivariance_check(
    omega: DisorderField,
    g: GroupElement,
    sample_edges: Iterable[EdgeKey],
    sample_vertices: Iterable[GroupElement],
) -> bool:
    shifted = omega.shift(g)
    for e in sample_edges:
        if shifted.potential_label(edge_action(e, g)) != omega.potential_label(e):
            return False
    for v in sample_vertices:
        if shifted.condition_label(v) != omega.condition_label(multiply(v, g)):
            return False
    return True


# ---------------------------------------------------------------------------
# patterns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pattern:
    """A colouring of a finite domain, stored in canonical domain order."""

    items: tuple[tuple[GroupElement, Colour], ...]

    def __post_init__(self):
        if not self.items:
            raise ValueError("pattern domain must be nonempty")
        object.__setattr__(self, "items", tuple(sorted(self.items)))

    @classmethod
    def from_mapping(cls, m: Mapping[GroupElement, Colour]) -> "Pattern":
        return cls(tuple(m.items()))

    @property
    def domain(self) -> tuple[GroupElement, ...]:
        return tuple(g for g, _ in self.items)

    def as_dict(self) -> dict[GroupElement, Colour]:
        return dict(self.items)

    def translate(self, x: GroupElement) -> "Pattern":
        """(P x)(g) = P(g x^-1), defined on D(P) x."""
        return Pattern(tuple((multiply(g, x), c) for g, c in self.items))


def colouring(field, Q: Iterable[GroupElement]) -> dict[GroupElement, Colour]:
    return {v: field.colour(v) for v in canonical(Q)}


def pattern_count(P: Pattern, C: Mapping[GroupElement, Colour]) -> int:
    """Number of translates P x with D(P) x inside dom(C) agreeing with C."""
    d0, c0 = P.items[0]
    d0_inv = inverse(d0)
    count = 0
    for q, cq in C.items():
        if cq != c0:
            continue
        x = multiply(d0_inv, q)
        if all(C.get(multiply(d, x)) == c for d, c in P.items[1:]):
            count += 1
    return count


def pattern_frequency(P: Pattern, omega, boxes: Sequence) -> list[Fraction]:
    out = []
    for box in boxes:
        Q = box.elements if hasattr(box, "elements") else frozenset(box)
        out.append(Fraction(pattern_count(P, colouring(omega, Q)), len(Q)))
    return out


def observed_patterns(
    C: Mapping[GroupElement, Colour], domain: Iterable[GroupElement]
) -> Counter:
    """Counts of the colour tuples seen on translates D x inside dom(C).

    Keys are tuples of colours listed in canonical order of ``domain``.
    """
    domain = canonical(domain)
    d0_inv = inverse(domain[0])
    counts: Counter = Counter()
    for q in C:
        x = multiply(d0_inv, q)
        cols = []
        for d in domain:
            c = C.get(multiply(d, x))
            if c is None:
                break
            cols.append(c)
        else:
            counts[tuple(cols)] += 1
    return counts


def exact_frequency_iid(P: Pattern, model: Model) -> Fraction:
    """Product over D(P) of the i.i.d. probability of each site's colour."""
    pw = [[_as_fraction(w) for w in ws] for ws in model.potential_weights]
    cw = [_as_fraction(w) for w in model.condition_weights]
    pw = [[w / sum(ws) for w in ws] for ws in pw]
    cw = [w / sum(cw) for w in cw]
    prob = Fraction(1)
    for _, (pots, cond) in P.items:
        for i, p in enumerate(pots):
            prob *= pw[i][p]
        prob *= cw[cond]
    return prob


@dataclass(frozen=True)
class OverriddenField:
    """``base`` with the vertex conditions at selected vertices replaced."""

    base: object
    conditions: Mapping[GroupElement, VertexCondition]

    def potential_of(self, e: EdgeKey) -> Profile:
        return self.base.potential_of(e)

    def condition_of(self, v: GroupElement) -> VertexCondition:
        c = self.conditions.get(v)
        return self.base.condition_of(v) if c is None else c
