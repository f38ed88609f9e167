"""Three-point discretization of -f'' + V f on a finite Cayley subgraph.

Each edge carries M interior nodes x_k = k h, h = 1/(M+1). The discrete
quadratic form is

    sum_edges [ sum_{k=0..M} (u_{k+1} - u_k)^2 / h + trapezoid(V u^2) ]
        + sum_{delta vertices} alpha |u(v)|^2

with mass matrix D given by the same trapezoidal weights (h at interior
nodes, h/2 per edge endpoint). Vertex handling:

* Dirichlet (and every boundary vertex of the subgraph): u = 0, no unknown;
* Delta(alpha): one unknown shared by all endpoints in the star (a loop
  attaches both of its ends), Delta(0) is Kirchhoff;
* Neumann (decoupled): an independent unknown per endpoint, which is the
  natural boundary condition of the form.

Rows are ordered edge-major for the interior nodes (``n_chains`` blocks of
length M) followed by the vertex / endpoint unknowns; the spectral module
exploits this to eliminate the tridiagonal chains first.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cayley import EdgeKey, Subgraph
from .groups import GeneratorSet, element

MIN_MESH = 3


@dataclass(frozen=True)
class Profile:
    """Piecewise-constant potential on a uniform partition of [0, 1]."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals or not all(math.isfinite(v) for v in vals):
            raise ValueError("profile values must be finite and nonempty")
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, c: float) -> "Profile":
        return cls((c,))

    @property
    def vmax(self) -> float:
        return max(abs(v) for v in self.values)

    def sample(self, x: np.ndarray) -> np.ndarray:
        P = len(self.values)
        idx = np.minimum((np.asarray(x) * P).astype(int), P - 1)
        return np.asarray(self.values)[idx]


ZERO = Profile((0.0,))


@dataclass(frozen=True)
class VertexCondition:
    kind: str
    alpha: float = 0.0

    KINDS = ("dirichlet", "neumann", "delta")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown condition kind {self.kind!r}")
        if not math.isfinite(self.alpha):
            raise ValueError("coupling must be finite")

    @classmethod
    def parse(cls, text: str) -> "VertexCondition":
        t = text.strip().lower()
        if t in ("dirichlet", "d"):
            return DIRICHLET
        if t in ("neumann", "n"):
            return NEUMANN
        if t in ("kirchhoff", "k"):
            return KIRCHHOFF
        if t.startswith("delta"):
            _, _, a = t.partition(":")
            return cls("delta", float(a) if a else 0.0)
        raise ValueError(f"cannot parse vertex condition {text!r}")

    def __str__(self):
        return f"delta:{self.alpha:g}" if self.kind == "delta" else self.kind


DIRICHLET = VertexCondition("dirichlet")
NEUMANN = VertexCondition("neumann")
KIRCHHOFF = VertexCondition("delta", 0.0)


@dataclass
class DiscreteHamiltonian:
    """Symmetric pencil (A, diag(D)); eigenpairs solve A u = lam D u."""

    A: sp.csr_matrix
    D: np.ndarray
    n_chains: int = 0
    chain_len: int = 0
    labels: list = field(default_factory=list)
    edges: tuple = ()
    # (row, edge index) for every edge endpoint attached to a vertex/endpoint unknown
    attachments: list = field(default_factory=list)
    vmax: float = 0.0
    alpha_min: float = 0.0
    max_degree: int = 0

    @classmethod
    def from_pencil(cls, A, D) -> "DiscreteHamiltonian":
        A = sp.csr_matrix(A, dtype=float)
        D = np.asarray(D, dtype=float)
        if D.ndim == 2:
            D = np.diag(D).copy()
        return cls(A=A, D=D)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def h(self) -> float:
        return 1.0 / (self.chain_len + 1) if self.chain_len else float("nan")

    def scaled(self) -> sp.csr_matrix:
        """D^{-1/2} A D^{-1/2}, same spectrum as the pencil."""
        s = 1.0 / np.sqrt(self.D)
        return sp.csr_matrix(sp.diags(s) @ self.A @ sp.diags(s))

    def lower_bound(self) -> float:
        """Gershgorin bound for the smallest pencil eigenvalue."""
        B = self.scaled().tocsr()
        diag = B.diagonal()
        off = np.asarray(abs(B).sum(axis=1)).ravel() - np.abs(diag)
        return float(np.min(diag - off)) if B.shape[0] else 0.0

    def edge_masses(self, vectors: np.ndarray) -> np.ndarray:
        """D-mass of each column of ``vectors`` carried by each edge.

        Shared vertex unknowns contribute h/2 per attached endpoint, so the
        masses over all edges add up to the full D-norm.
        """
        vecs = np.asarray(vectors).reshape(self.dim, -1)
        nE, M, h = self.n_chains, self.chain_len, self.h
        sq = vecs**2
        masses = h * sq[: nE * M].reshape(nE, M, -1).sum(axis=1)
        for row, ei in self.attachments:
            masses[ei] += 0.5 * h * sq[row]
        return masses

    def export(self) -> tuple[str, str]:
        """Coordinate-format body (row col value) of A and D plus a JSON header."""
        A = self.A.tocoo()
        lines = [f"A {r} {c} {v:.17g}" for r, c, v in zip(A.row, A.col, A.data)]
        lines += [f"D {i} {i} {v:.17g}" for i, v in enumerate(self.D)]
        kinds = {}
        for lab in self.labels:
            kinds[lab[0]] = kinds.get(lab[0], 0) + 1
        header = {
            "dimension": self.dim,
            "nnz_A": int(A.nnz),
            "n_chains": self.n_chains,
            "chain_len": self.chain_len,
            "unknowns_by_kind": kinds,
        }
        return json.dumps(header, sort_keys=True), "\n".join(lines) + "\n"


def assemble(sub: Subgraph, omega, M: int) -> DiscreteHamiltonian:
    """Pencil for the restriction of H_omega to the subgraph, Dirichlet on its
    boundary vertices. ``omega`` needs ``potential_of(edge)`` and
    ``condition_of(vertex)``."""
    if M < MIN_MESH:
        raise ValueError(f"mesh M={M} below minimum {MIN_MESH}")
    h = 1.0 / (M + 1)
    x = np.arange(1, M + 1) * h
    edges = sub.edges
    nE = len(edges)
    nC = nE * M

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    chain_diag = np.empty(nC)
    vmax = 0.0
    profiles = []
    for i, e in enumerate(edges):
        prof = omega.potential_of(e)
        profiles.append(prof)
        vmax = max(vmax, prof.vmax)
        chain_diag[i * M : (i + 1) * M] = 2.0 / h + h * prof.sample(x)
    idx = np.arange(nC)
    rows.append(idx)
    cols.append(idx)
    vals.append(chain_diag)
    # within-chain couplings
    lo = (np.arange(nE)[:, None] * M + np.arange(M - 1)[None, :]).ravel()
    off = np.full(lo.size, -1.0 / h)
    rows += [lo, lo + 1]
    cols += [lo + 1, lo]
    vals += [off, off]

    labels: list = [("edge", e.key, k) for e in edges for k in range(1, M + 1)]
    diag_extra: dict[int, float] = {}
    mass_extra: dict[int, float] = {}
    couple_r: list[int] = []
    couple_c: list[int] = []
    attachments: list[tuple[int, int]] = []
    vertex_row: dict = {}
    alpha_min = 0.0
    degree: dict = {}
    next_row = nC

    def cond_at(v):
        if v in sub.boundary_vertices:
            return None
        return omega.condition_of(v)

    conds = {v: cond_at(v) for v in sub.vertices}

    for i, e in enumerate(edges):
        ends = sub.endpoints(e)
        prof = profiles[i]
        for j, v in enumerate(ends):
            c = conds[v]
            if c is None or c.kind == "dirichlet":
                continue
            v_end = prof.values[0] if j == 0 else prof.values[-1]
            if c.kind == "delta":
                if v not in vertex_row:
                    vertex_row[v] = next_row
                    labels.append(("vertex", v.key))
                    diag_extra[next_row] = c.alpha
                    mass_extra[next_row] = 0.0
                    alpha_min = min(alpha_min, c.alpha)
                    next_row += 1
                r = vertex_row[v]
                degree[v] = degree.get(v, 0) + 1
            else:
                r = next_row
                labels.append(("endpoint", e.key, j))
                diag_extra[r] = 0.0
                mass_extra[r] = 0.0
                next_row += 1
            diag_extra[r] += 1.0 / h + 0.5 * h * v_end
            mass_extra[r] += 0.5 * h
            node = i * M + (0 if j == 0 else M - 1)
            couple_r.append(r)
            couple_c.append(node)
            attachments.append((r, i))

    n = next_row
    bidx = np.fromiter(diag_extra.keys(), dtype=int, count=len(diag_extra))
    rows.append(bidx)
    cols.append(bidx)
    vals.append(np.fromiter(diag_extra.values(), dtype=float, count=len(diag_extra)))
    cr = np.asarray(couple_r, dtype=int)
    cc = np.asarray(couple_c, dtype=int)
    cv = np.full(cr.size, -1.0 / h)
    rows += [cr, cc]
    cols += [cc, cr]
    vals += [cv, cv]

    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    A.sum_duplicates()
    D = np.empty(n)
    D[:nC] = h
    for r, m in mass_extra.items():
        D[r] = m
    return DiscreteHamiltonian(
        A=A,
        D=D,
        n_chains=nE,
        chain_len=M,
        labels=labels,
        edges=edges,
        attachments=attachments,
        vmax=vmax,
        alpha_min=alpha_min,
        max_degree=max(degree.values(), default=0),
    )


def single_edge_spectrum(
    left: VertexCondition, right: VertexCondition, c: float, n_max: int
) -> list[float]:
    """Exact first ``n_max`` eigenvalues of -f'' + c on [0, 1]."""
    kinds = {left.kind, right.kind}
    if "delta" in kinds:
        raise ValueError("delta coupling at an isolated endpoint is not defined here")
    pi2 = math.pi**2
    if left.kind == right.kind == "dirichlet":
        return [n * n * pi2 + c for n in range(1, n_max + 1)]
    if left.kind == right.kind == "neumann":
        return [(n - 1) ** 2 * pi2 + c for n in range(1, n_max + 1)]
    return [(n - 0.5) ** 2 * pi2 + c for n in range(1, n_max + 1)]


def single_edge_hamiltonian(
    left: VertexCondition, right: VertexCondition, profile: Profile, M: int
) -> DiscreteHamiltonian:
    """One free edge [0,1] with the given endpoint conditions (no Cayley graph)."""
    S = GeneratorSet((element("Z1", 1),))
    a, b = element("Z1", 0), element("Z1", 1)
    e = EdgeKey(a, 0)
    sub = Subgraph(
        Q=frozenset([a]),
        S=S,
        edges=(e,),
        vertices=(a, b),
        inner_vertices=frozenset([a, b]),
        boundary_vertices=frozenset(),
        inner_edges=frozenset([e]),
        boundary_edges=frozenset(),
    )

    class _Field:
        def potential_of(self, e):
            return profile

        def condition_of(self, v):
            return left if v == a else right

    return assemble(sub, _Field(), M)

