"""Directed metric Cayley graph, finite subgraphs and the group action on edges.

An edge is the pair (base vertex v, generator index i) and runs from v to
s_i v; every edge is a copy of [0, 1] oriented from its start to its end.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable

from .groups import GeneratorSet, GroupElement, canonical, inverse, multiply


@dataclass(frozen=True, order=True)
class EdgeKey:
    base: GroupElement
    gen_index: int

    def endpoints(self, S: GeneratorSet) -> tuple[GroupElement, GroupElement]:
        return self.base, multiply(S[self.gen_index], self.base)

    @property
    def key(self) -> str:
        return f"{self.base.key}#{self.gen_index}"


def edge_action(e: EdgeKey, g: GroupElement) -> EdgeKey:
    """e o g: the edge joining gamma_0(e) g^-1 and gamma_1(e) g^-1.

    Composition reads (e o g) o h = e o (h g).
    """
    return EdgeKey(multiply(e.base, inverse(g)), e.gen_index)


def outgoing(v: GroupElement, S: GeneratorSet) -> list[EdgeKey]:
    return [EdgeKey(v, i) for i in range(len(S))]


def incoming(v: GroupElement, S: GeneratorSet) -> list[EdgeKey]:
    return [EdgeKey(multiply(inverse(s), v), i) for i, s in enumerate(S)]


@dataclass(frozen=True)
class VertexStar:
    vertex: GroupElement
    entries: tuple[tuple[EdgeKey, int], ...]

    def __len__(self):
        return len(self.entries)


def vertex_star(v: GroupElement, S: GeneratorSet) -> VertexStar:
    """(E_{v,0} x {0}) u (E_{v,1} x {1}); a loop shows up once with each j."""
    entries = [(e, 0) for e in outgoing(v, S)] + [(e, 1) for e in incoming(v, S)]
    return VertexStar(v, tuple(entries))


@dataclass(frozen=True)
class Subgraph:
    Q: frozenset[GroupElement]
    S: GeneratorSet
    edges: tuple[EdgeKey, ...]
    vertices: tuple[GroupElement, ...]
    inner_vertices: frozenset[GroupElement]
    boundary_vertices: frozenset[GroupElement]
    inner_edges: frozenset[EdgeKey]
    boundary_edges: frozenset[EdgeKey]

    def endpoints(self, e: EdgeKey) -> tuple[GroupElement, GroupElement]:
        return e.endpoints(self.S)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["edge_key", "v0_key", "v1_key", "inner_flag"])
        for e in self.edges:
            v0, v1 = self.endpoints(e)
            w.writerow([e.key, v0.key, v1.key, int(e in self.inner_edges)])
        return buf.getvalue()


def subgraph(Q: Iterable[GroupElement], S: GeneratorSet) -> Subgraph:
    Q = frozenset(Q)
    if not Q:
        raise ValueError("Q must be nonempty")
    order = canonical(Q)
    edges = tuple(EdgeKey(v, i) for v in order for i in range(len(S)))
    vertices = canonical(list(Q) + [multiply(s, q) for s in S for q in Q])
    inv = [inverse(s) for s in S]
    # E_{v,0} in E_Q iff v in Q; E_{v,1} in E_Q iff s^-1 v in Q for every s
    inner = frozenset(v for v in vertices if v in Q and all(multiply(t, v) in Q for t in inv))
    boundary = frozenset(vertices) - inner
    inner_edges = frozenset(e for e in edges if all(x in inner for x in e.endpoints(S)))
    return Subgraph(
        Q=Q,
        S=S,
        edges=edges,
        vertices=vertices,
        inner_vertices=inner,
        boundary_vertices=boundary,
        inner_edges=inner_edges,
        boundary_edges=frozenset(edges) - inner_edges,
    )
