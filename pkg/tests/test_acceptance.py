"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the summary lines appear in
the terminal report) or directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest
import scipy.linalg as la

from qgids.cayley import subgraph
from qgids.cli import tiling_report
from qgids.disorder import (
    DisorderField,
    Model,
    OverriddenField,
    Pattern,
    colouring,
    exact_frequency_iid,
    observed_patterns,
    pattern_count,
)
from qgids.groups import (
    S1,
    GeneratorSet,
    boundary_ratio,
    canonical,
    element,
    folner_box,
    folner_ratio,
    standard_generators,
)
from qgids.quantum_graph import (
    DIRICHLET,
    KIRCHHOFF,
    NEUMANN,
    ZERO,
    DiscreteHamiltonian,
    Profile,
    VertexCondition,
    assemble,
    single_edge_hamiltonian,
)
from qgids.spectral.counting import (
    count_leq,
    counting_function,
    dirichlet_counting_function,
    discrete_dirichlet_eigenvalues,
    pencil_eigenvalues,
    spectral_shift,
    sup_distance,
)
from qgids.spectral.ergodic import ergodic_reconstruction
from qgids.spectral.ids import discretization_error, ids_approx, jump_detect, pastur_shubin

RESULTS: dict[int, tuple[bool, str]] = {}

# the two-potential Kirchhoff model on Z^2 shared by criteria 7 and 8
TWO_POTENTIAL = Model(S1, (ZERO, Profile.constant(5.0)), (KIRCHHOFF,), ((0.5, 0.5),), (1.0,))
SEED = 0
PS_LAMBDAS = (5.0, 15.0, 40.0)


def _record(k: int, ok: bool, detail: str, elapsed: float, limit: float) -> bool:
    ok_time = elapsed < limit
    ok_all = bool(ok and ok_time)
    line = f"criterion {k:2d}: {'PASS' if ok_all else 'FAIL'}  {detail}  [{elapsed:.2f}s < {limit:g}s: {ok_time}]"
    RESULTS[k] = (ok_all, line)
    print(line)
    return ok_all


def _slope(Ms, errs) -> float:
    h = 1.0 / (np.asarray(Ms) + 1.0)
    return float(np.polyfit(np.log(h), np.log(errs), 1)[0])


# ---------------------------------------------------------------------------


def criterion_1() -> bool:
    t0 = time.perf_counter()
    Ms = (25, 50, 100, 200)
    exact = (np.arange(1, 6) * math.pi) ** 2
    errs = []
    for M in Ms:
        H = single_edge_hamiltonian(DIRICHLET, DIRICHLET, ZERO, M)
        w = pencil_eigenvalues(H, 1.1 * exact[-1])[:5]
        errs.append(np.abs(w - exact) / exact)
    errs = np.array(errs)
    slopes = [_slope(Ms, errs[:, k]) for k in range(5)]
    rel200 = float(errs[-1].max())
    ok = min(slopes) >= 1.9 and rel200 < 5e-3
    detail = f"min slope {min(slopes):.4f} (>= 1.9), max rel err at M=200 {rel200:.2e} (< 5e-3)"
    return _record(1, ok, detail, time.perf_counter() - t0, 1.0)


def _random_set(rng, tag: str, size: int):
    """Connected-ish random finite set grown from the identity."""
    S = standard_generators(tag)
    d = 3 if tag == "H3" else int(tag[1])
    Q = {element(tag, *([0] * d))}
    gens = list(S.symmetric_closure)
    while len(Q) < size:
        q = list(canonical(Q))[rng.integers(len(Q))]
        Q.add(gens[rng.integers(len(gens))] * q)
    return frozenset(Q), S


def criterion_2() -> bool:
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    M, lam_max = 20, 120.0
    bad = 0
    for tag in ("Z2", "H3"):
        S = standard_generators(tag)
        model = Model(S, (ZERO,), (DIRICHLET,), ((1.0,),), (1.0,))
        for _ in range(20):
            Q, _ = _random_set(rng, tag, int(rng.integers(1, 9)))
            sub = subgraph(Q, S)
            H = assemble(sub, DisorderField(model, int(rng.integers(1 << 30))), M)
            n_q = counting_function(H, lam_max)
            ref = dirichlet_counting_function(M, lam_max, len(Q) * len(S))
            lam = rng.uniform(0, lam_max, 10)
            same_levels = np.array_equal(n_q.levels, ref.levels)
            same_bps = np.allclose(n_q.breakpoints, ref.breakpoints, rtol=1e-9, atol=0)
            inertia = all(count_leq(H, l) == ref(l) for l in lam)
            if not (same_levels and same_bps and inertia and sup_distance(n_q, ref) == 0.0):
                bad += 1
    return _record(2, bad == 0, f"{bad} mismatches over 40 random sets", time.perf_counter() - t0, 10.0)


def criterion_3() -> bool:
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    conds = (KIRCHHOFF, DIRICHLET, NEUMANN, VertexCondition("delta", 2.0), VertexCondition("delta", -1.5))
    model = Model(S1, (ZERO, Profile.constant(5.0), Profile((0.0, 8.0))), conds, ((0.4, 0.3, 0.3),), (0.2,) * 5)
    M, lam_max = 50, 60.0
    violations, worst = 0, 0.0
    for _ in range(100):
        n = int(rng.integers(2, 6))
        sub = subgraph(folner_box("Z2", n).elements, S1)
        omega = DisorderField(model, int(rng.integers(1 << 62)))
        inner = canonical(sub.inner_vertices) or canonical(sub.Q)
        k = int(rng.integers(1, min(4, len(inner)) + 1))
        picks = [inner[i] for i in rng.choice(len(inner), size=k, replace=False)]
        override = {}
        for v in picks:
            choices = [c for c in conds if c != omega.condition_of(v)]
            override[v] = choices[rng.integers(len(choices))]
        changed = sum(1 for v in override if v in sub.inner_vertices)
        H1 = assemble(sub, omega, M)
        H2 = assemble(sub, OverriddenField(omega, override), M)
        xi = spectral_shift(H1, H2, lam_max)
        bound = 4 * changed * len(S1)
        worst = max(worst, xi.sup_norm() / max(bound, 1))
        violations += xi.sup_norm() > bound
    detail = f"{violations} violations in 100 pairs, max ||xi||/bound {worst:.3f}"
    return _record(3, violations == 0, detail, time.perf_counter() - t0, 120.0)


def _random_instance(rng) -> DiscreteHamiltonian:
    kind = rng.integers(3)
    if kind == 0:
        n = int(rng.integers(20, 401))
        B = rng.standard_normal((n, n)) * (rng.random((n, n)) < 0.05)
        A = B + B.T + np.diag(rng.uniform(-5, 5, n))
        return DiscreteHamiltonian.from_pencil(A, rng.uniform(0.1, 2.0, n))
    tag = ("Z1", "Z2", "H3")[rng.integers(3)]
    S = standard_generators(tag) if kind == 1 else GeneratorSet.of("Z2", (0, 0), (1, 1), (1, 0), (-1, 0))
    if kind == 2:
        tag = "Z2"
    conds = (KIRCHHOFF, DIRICHLET, NEUMANN, VertexCondition("delta", float(rng.uniform(-3, 3))))
    model = Model(S, (ZERO, Profile((float(rng.uniform(-4, 4)), 3.0))), conds, ((0.5, 0.5),), (0.25,) * 4)
    M = int(rng.integers(3, 9))
    size = max(1, min(int(rng.integers(1, 12)), 400 // ((M + 2) * len(S))))
    Q, _ = _random_set(rng, tag, size)
    return assemble(subgraph(Q, S), DisorderField(model, int(rng.integers(1 << 62))), M)


def criterion_4() -> bool:
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    mismatches, dims = 0, []
    for _ in range(100):
        H = _random_instance(rng)
        dims.append(H.dim)
        w = la.eigh(H.A.toarray(), np.diag(H.D), eigvals_only=True)
        lam = rng.uniform(w[0] - 1.0, w[-1] + 1.0, 10)
        for l in lam:
            mismatches += count_leq(H, float(l)) != int(np.sum(w <= l))
    detail = f"{mismatches} mismatches over 1000 shifts, dims {min(dims)}..{max(dims)}"
    return _record(4, mismatches == 0 and max(dims) <= 400, detail, time.perf_counter() - t0, 60.0)


def _check_ratio_sequence(r) -> bool:
    r = np.asarray(r, dtype=float)
    return bool(np.all(r > 0) and np.all(np.diff(r[1:]) < 0) and r[-1] < r[0] / 2)


def criterion_5() -> bool:
    t0 = time.perf_counter()
    H = standard_generators("H3")
    seqs = {
        "Z2 folner": [folner_ratio(folner_box("Z2", n).elements, S1) for n in range(2, 13)],
        "Z2 d1": [boundary_ratio(folner_box("Z2", n).elements, 1, S1) for n in range(2, 13)],
        "H3 folner": [folner_ratio(folner_box("H3", n).elements, H) for n in range(2, 7)],
        "H3 d1": [boundary_ratio(folner_box("H3", n).elements, 1, H) for n in range(2, 7)],
    }
    oks = {k: _check_ratio_sequence(v) for k, v in seqs.items()}
    detail = ", ".join(f"{k} {float(v[0]):.3f}->{float(v[-1]):.3f} {oks[k]}" for k, v in seqs.items())
    return _record(5, all(oks.values()), detail, time.perf_counter() - t0, 30.0)


def criterion_6() -> bool:
    t0 = time.perf_counter()
    reports = [tiling_report("H3", n, 6) for n in (2, 3)]
    ok = all(r[0] for r in reports)
    detail = " | ".join(r[1].strip().splitlines()[-1] for r in reports)
    return _record(6, ok, f"H3 radius 6, n=2,3: {detail}", time.perf_counter() - t0, 30.0)


_IDS_CACHE: dict = {}


def _ids(seed: int):
    if seed not in _IDS_CACHE:
        boxes = [folner_box("Z2", n) for n in range(2, 6)]
        _IDS_CACHE[seed] = ids_approx(DisorderField(TWO_POTENTIAL, seed), boxes, S1, 50, 50.0)
    return _IDS_CACHE[seed]


def criterion_7() -> bool:
    t0 = time.perf_counter()
    est = _ids(SEED)
    other = _ids(SEED + 1)
    d, env = est.sup_distances, est.envelopes
    within = all(x <= e for x, e in zip(d, env))
    decreasing = all(a > b for a, b in zip(d, d[1:]))
    seeds = sup_distance(est.final, other.final, upto=est.lam_max)
    seeds_ok = seeds <= env[-1]
    detail = (
        f"d_l={[round(x, 4) for x in d]} envelope={[round(e, 2) for e in env]} "
        f"within={within} decreasing={decreasing}; two-seed sup {seeds:.4f} <= {env[-1]:.2f}: {seeds_ok}"
    )
    return _record(7, within and decreasing and seeds_ok, detail, time.perf_counter() - t0, 600.0)


def criterion_8() -> bool:
    t0 = time.perf_counter()
    lam = np.array(PS_LAMBDAS)
    final = _ids(SEED).final(lam)
    v0 = element("Z2", 0, 0)
    g = element("Z2", 7, 3)
    ps = pastur_shubin([v0], 3, 50, lam, TWO_POTENTIAL, 50, seed=SEED)
    ps_g = pastur_shubin([g], 3, 50, lam, TWO_POTENTIAL, 50, seed=SEED)
    eps = discretization_error(50, lam.max(), lam)
    boundary = 4 * ps.window_boundary_ratio
    tol = boundary + 3 * ps.stderr + eps
    agree = bool(np.all(np.abs(ps.mean - final) <= tol))
    inv_tol = 3 * np.sqrt(ps.stderr**2 + ps_g.stderr**2)
    invariant = bool(np.all(np.abs(ps.mean - ps_g.mean) <= inv_tol))
    detail = (
        f"PS={np.round(ps.mean, 4).tolist()} N_final={np.round(final, 4).tolist()} tol={np.round(tol, 3).tolist()} "
        f"agree={agree}; translate diff={np.round(np.abs(ps.mean - ps_g.mean), 4).tolist()} "
        f"<= {np.round(inv_tol, 4).tolist()}: {invariant}"
    )
    return _record(8, agree and invariant, detail, time.perf_counter() - t0, 600.0)


def criterion_9() -> bool:
    t0 = time.perf_counter()
    model = Model(S1, (ZERO, Profile.constant(5.0)), (KIRCHHOFF,), ((0.5, 0.5), (0.3, 0.7)), (1.0,))
    omega = DisorderField(model, SEED)
    C = colouring(omega, folner_box("Z2", 100).elements)
    N = len(C)
    domains = {
        "singleton": (element("Z2", 0, 0),),
        "horizontal pair": (element("Z2", 0, 0), element("Z2", 1, 0)),
        "vertical pair": (element("Z2", 0, 0), element("Z2", 0, 1)),
    }
    worst, checked, fails = 0.0, 0, 0
    alphabet = [((a, b), 0) for a in (0, 1) for b in (0, 1)]
    for dom in domains.values():
        observed = observed_patterns(C, dom)
        for cols in _words(alphabet, len(dom)):
            P = Pattern(tuple(zip(dom, cols)))
            p = float(exact_frequency_iid(P, model))
            nu = observed.get(tuple(cols), 0) / N
            z = abs(nu - p) / math.sqrt(p * (1 - p) / N)
            worst = max(worst, z)
            checked += 1
            fails += z > 3
    # the counting routine and the scanner agree on the singleton patterns
    scan_ok = all(
        pattern_count(Pattern(((domains["singleton"][0], a),)), C) == sum(c == a for c in C.values())
        for a in alphabet
    )
    detail = f"{fails}/{checked} patterns beyond 3 SE (max z {worst:.2f}) at |Q|={N}; scanner agrees {scan_ok}"
    return _record(9, fails == 0 and scan_ok, detail, time.perf_counter() - t0, 60.0)


def _words(alphabet, k):
    if k == 0:
        yield ()
        return
    for w in _words(alphabet, k - 1):
        for a in alphabet:
            yield w + (a,)


ERGODIC_MODEL = Model(
    GeneratorSet.of("Z1", (1,)), (ZERO, Profile.constant(5.0)), (KIRCHHOFF,), ((0.5, 0.5),), (1.0,)
)


def criterion_10() -> bool:
    t0 = time.perf_counter()
    lam = (5.0, 15.0, 40.0)
    small = ergodic_reconstruction(ERGODIC_MODEL, 2, 1000, lam, 50, seed=SEED)
    large = ergodic_reconstruction(ERGODIC_MODEL, 2, 4000, lam, 50, seed=SEED)
    shrinks = large.discrepancy < small.discrepancy
    detail = (
        f"|A|={ERGODIC_MODEL.alphabet_size} n=2 window 1000: discrepancy {small.discrepancy:.4f} <= "
        f"{small.envelope:.2f} + {small.sampling_error:.4f}: {small.within_envelope}; "
        f"window 4000: {large.discrepancy:.4f}, shrinks={shrinks}"
    )
    return _record(10, small.within_envelope and shrinks, detail, time.perf_counter() - t0, 300.0)


def criterion_11() -> bool:
    t0 = time.perf_counter()
    M, lam_max = 50, 100.0
    model = Model(S1, (ZERO,), (DIRICHLET,), ((1.0,),), (1.0,))
    sub = subgraph(folner_box("Z2", 4).elements, S1)
    H = assemble(sub, DisorderField(model, SEED), M)
    N = counting_function(H, lam_max, norm=len(sub.edges))
    jumps = jump_detect(N, 0.5)
    disc = discrete_dirichlet_eigenvalues(M)
    expected = disc[disc <= lam_max]
    ok = len(jumps) == len(expected) and all(
        abs(l - e) <= 1e-9 * e and abs(s - 1.0) <= 1e-12 for (l, s), e in zip(jumps, expected)
    )
    ok = ok and all(abs(math.sqrt(l) / math.pi - k) < 0.01 for k, (l, _) in enumerate(jumps, 1))
    detail = f"jumps {[(round(l, 4), s) for l, s in jumps]} vs discrete {np.round(expected, 4).tolist()}"
    return _record(11, ok, detail, time.perf_counter() - t0, 60.0)


CRITERIA = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
    criterion_11,
]


@pytest.mark.parametrize("k", range(1, 12))
def test_criterion(k):
    assert CRITERIA[k - 1](), RESULTS[k][1]


if __name__ == "__main__":
    for crit in CRITERIA:
        crit()
    print(f"{sum(ok for ok, _ in RESULTS.values())}/{len(RESULTS)} criteria pass")
