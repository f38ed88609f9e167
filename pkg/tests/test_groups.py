from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgids.groups import (
    INFINITY,
    S1,
    S2,
    GeneratorSet,
    GroupElement,
    GroupError,
    SizeLimitError,
    ball,
    boundary_R,
    boundary_ratio,
    element,
    folner_box,
    folner_ratio,
    identity,
    inverse,
    multiply,
    standard_generators,
    tempered_ratio,
    tile_decompose,
    tiling_grid,
    translate_right,
    word_distance,
)

small = st.integers(-50, 50)


def elements(tag):
    d = 3 if tag == "H3" else int(tag[1])
    return st.tuples(*[small] * d).map(lambda c: GroupElement(tag, c))


def z2(*c):
    return element("Z2", *c)


def h3(*c):
    return element("H3", *c)


# -- multiplication ------------------------------------------------------------

def test_multiply_examples():
    assert z2(1, 2) * z2(3, -1) == z2(4, 1)
    assert h3(0, 1, 0) * h3(1, 0, 0) == h3(1, 1, 1)
    assert h3(1, 0, 0) * h3(0, 1, 0) == h3(1, 1, 0)


def test_heisenberg_matches_matrix_product():
    def mat(g):
        a, b, c = g.coords
        return ((1, 0, 0), (a, 1, 0), (c, b, 1))

    def matmul(x, y):
        return tuple(tuple(sum(x[i][k] * y[k][j] for k in range(3)) for j in range(3)) for i in range(3))

    for g, h in [(h3(1, 2, 3), h3(-4, 5, 7)), (h3(0, 1, 0), h3(1, 0, 0)), (h3(3, -2, 1), h3(2, 2, -9))]:
        assert mat(g * h) == matmul(mat(g), mat(h))


def test_mixed_tags_rejected():
    with pytest.raises(GroupError):
        multiply(z2(0, 0), h3(0, 0, 0))


def test_overflow_checked():
    with pytest.raises(OverflowError):
        element("Z1", 2**31)
    with pytest.raises(OverflowError):
        element("Z1", 2**31 - 1) * element("Z1", 1)


def test_inverse_examples():
    assert inverse(z2(2, 3)) == z2(-2, -3)
    assert inverse(h3(1, 1, 0)) == h3(-1, -1, 1)
    assert h3(1, 1, 0) * h3(-1, -1, 1) == identity("H3")
    assert inverse(identity("H3")) == identity("H3")


def test_canonical_key_roundtrip():
    g = h3(1, 0, -2)
    assert g.key == "H3:1:0:-2"
    assert GroupElement.from_key(g.key) == g


@pytest.mark.parametrize("tag", ["Z1", "Z2", "Z3", "H3"])
@settings(max_examples=1000, deadline=None)
@given(data=st.data())
def test_group_axioms(tag, data):
    g, h, k = (data.draw(elements(tag)) for _ in range(3))
    e = identity(tag)
    assert (g * h) * k == g * (h * k)
    assert g * e == g == e * g
    assert g * inverse(g) == e == inverse(g) * g


# -- word metric -----------------------------------------------------------------

def test_word_distance_examples():
    assert word_distance(z2(0, 0), z2(2, 3), S1, 10) == 5
    assert word_distance(z2(2, 2), z2(2, 2), S1, 0) == 0
    assert word_distance(z2(0, 0), z2(2, 2), S2, 10) == 2
    assert word_distance(z2(0, 0), z2(9, 9), S1, 5) == INFINITY


def _bfs(g, h, S, cap):
    frontier, seen = {h}, {h}
    for d in range(cap + 1):
        if g in frontier:
            return d
        frontier = {s * x for x in frontier for s in S.symmetric_closure} - seen
        seen |= frontier
    return INFINITY


@settings(max_examples=200, deadline=None)
@given(data=st.data(), tag=st.sampled_from(["Z2", "H3"]))
def test_word_distance_right_invariant(data, tag):
    S = standard_generators(tag)
    box = st.integers(-2, 2)
    coords = st.tuples(*[box] * (3 if tag == "H3" else 2))
    g, h, x = (GroupElement(tag, data.draw(coords)) for _ in range(3))
    d = word_distance(g, h, S, 8)
    assert d == word_distance(g * x, h * x, S, 8)
    assert d == _bfs(g, h, S, 8)


# -- boundaries and boxes ----------------------------------------------------------

def test_boundary_examples():
    S = GeneratorSet.of("Z1", (1,))
    Q = {element("Z1", i) for i in range(10)}
    assert boundary_R(Q, 1, S) == {element("Z1", i) for i in (-1, 0, 9, 10)}
    box = folner_box("Z2", 3).elements
    assert len(boundary_R(box, 1, S1)) == 20
    g = z2(4, -1)
    expected = {g} | {s * g for s in S1} | {inverse(s) * g for s in S1}
    assert boundary_R({g}, 1, S1) == expected


def test_boundary_matches_brute_force():
    Q = folner_box("Z2", 3).elements
    grid = {z2(a, b) for a, b in product(range(-3, 6), repeat=2)}

    def dist_to(x, target):
        return min(word_distance(x, t, S1, 4) for t in target)

    outside = grid - Q
    brute = {x for x in Q if dist_to(x, outside) <= 1} | {x for x in outside if dist_to(x, Q) <= 1}
    assert boundary_R(Q, 1, S1) == brute


def test_folner_examples():
    box = folner_box("Z2", 10)
    assert len(box) == 100
    assert folner_ratio(box.elements, S1) == Fraction(20, 100)
    assert len(folner_box("H3", 2)) == 16


def test_heisenberg_folner_ratio_decreases():
    S = standard_generators("H3")
    r = [folner_ratio(folner_box("H3", n).elements, S) for n in range(2, 9)]
    assert all(a >= b for a, b in zip(r, r[1:]))
    assert r[-1] < r[0] / 2


@pytest.mark.parametrize("R", [1, 2])
def test_boundary_ratio_halves(R):
    z = [boundary_ratio(folner_box("Z2", n).elements, R, S1) for n in (2, 8)]
    assert z[1] < z[0] / 2
    H = standard_generators("H3")
    h = [boundary_ratio(folner_box("H3", n).elements, R, H) for n in (2, 6)]
    assert h[1] < h[0] / 2


# -- tilings -----------------------------------------------------------------------

def test_tiling_grid_examples():
    patch = tiling_grid("Z1", 3, 4)
    assert patch == [element("Z1", k) for k in (-6, -3, 0, 3, 6)]
    grid = set(tiling_grid("H3", 2, 6))
    assert {h3(2, 0, 0), h3(-2, 0, 0), h3(0, 0, 4)} <= grid


@pytest.mark.parametrize("n", [2, 3])
def test_heisenberg_symmetric_tiling(n):
    S = standard_generators("H3")
    grid = tiling_grid("H3", n, 6)
    assert {inverse(g) for g in grid} == set(grid)
    Q = folner_box("H3", n).elements
    target = set(ball([identity("H3")], 6, S))
    hits = {}
    for g in grid:
        for x in translate_right(Q, g):
            hits[x] = hits.get(x, 0) + 1
    assert all(hits.get(x) == 1 for x in target)


@settings(max_examples=300, deadline=None)
@given(x=elements("H3"), n=st.integers(1, 5))
def test_tile_decompose(x, n):
    q, g = tile_decompose(x, n)
    assert q in folner_box("H3", n)
    a, b, c = g.coords
    assert a % n == 0 and b % n == 0 and c % (n * n) == 0
    assert q * g == x


def test_tempered_ratio_examples():
    z1 = [folner_box("Z1", k) for k in range(1, 4)]
    assert tempered_ratio(z1, 2) == 1
    # Z^2: the union is the difference box [-(n-2), n-1]^2
    z2b = [folner_box("Z2", k) for k in range(1, 6)]
    r = [tempered_ratio(z2b, n) for n in range(2, 6)]
    assert r == [Fraction((2 * n - 2) ** 2, n * n) for n in range(2, 6)]
    assert r == [1, Fraction(16, 9), Fraction(9, 4), Fraction(64, 25)]
    assert all(x <= 4 for x in r)
    hb = [folner_box("H3", k) for k in range(1, 5)]
    r = [tempered_ratio(hb, n) for n in range(2, 5)]
    assert r == [_tempered_by_matrices(n) for n in range(2, 5)]
    assert r == [1, Fraction(200, 81), Fraction(459, 128)]
    assert all(x <= 8 for x in r)


def _tempered_by_matrices(n):
    """Same ratio from explicit integer matrices, independent of the group code."""

    def mat(a, b, c):
        return ((1, 0, 0), (a, 1, 0), (c, b, 1))

    def matmul(x, y):
        return tuple(tuple(sum(x[i][k] * y[k][j] for k in range(3)) for j in range(3)) for i in range(3))

    def inv(m):
        a, b, c = m[1][0], m[2][1], m[2][0]
        return mat(-a, -b, a * b - c)

    def box(k):
        return [mat(a, b, c) for a in range(k) for b in range(k) for c in range(k * k)]

    Qn = box(n)
    union = {matmul(inv(x), y) for k in range(1, n) for x in box(k) for y in Qn}
    return Fraction(len(union), len(Qn))


def test_tempered_ratio_size_limit():
    boxes = [folner_box("Z2", k) for k in range(1, 6)]
    with pytest.raises(SizeLimitError):
        tempered_ratio(boxes, 5, limit=100)


def test_generator_set_closure():
    # the identity and the pair (1,0), (-1,0) contribute no new inverses
    assert len(S2.symmetric_closure) == 5
    with pytest.raises(GroupError):
        GeneratorSet(())
