"""Eigenvalue counting for the discretized pencils.

``count_leq`` uses Sylvester's law of inertia: the number of pencil
eigenvalues below lam equals the number of negative eigenvalues of A - lam D,
read off a symmetric factorization. The interior nodes of each edge form a
tridiagonal block that is eliminated first (its LDL^T pivots are a Sturm
sequence); by Haynsworth additivity the remaining count is the inertia of the
small Schur complement on vertex/endpoint unknowns, factorized with
Bunch-Kaufman pivoting.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

from ..quantum_graph import DiscreteHamiltonian

log = logging.getLogger(__name__)

#: eigenvalues closer than this (relative) are merged into one breakpoint
TAU_EIG = 1e-9
#: relative pivot size treated as a singular shift
PIVOT_EPS = 1e-12
DENSE_SCHUR_MAX = 2000


class NearSingularShift(ArithmeticError):
    pass


class NumericalFailure(RuntimeError):
    pass


def tau_nudge(lam: float) -> float:
    return 1e-10 * (1.0 + abs(lam))


# ---------------------------------------------------------------------------
# inertia counting
# ---------------------------------------------------------------------------

def _chain_blocks(K: sp.csr_matrix, nE: int, M: int):
    nC = nE * M
    diag = K.diagonal()[:nC].reshape(nE, M)
    sup = np.zeros(nC)
    sup[: nC - 1] = K[:nC, :nC].diagonal(1)
    off = sup.reshape(nE, M)[:, : M - 1]
    return diag, off


def _chain_pivots(diag: np.ndarray, off: np.ndarray):
    """Forward and backward LDL^T pivots of a batch of tridiagonal blocks."""
    nE, M = diag.shape
    fwd = np.empty_like(diag)
    bwd = np.empty_like(diag)
    fwd[:, 0] = diag[:, 0]
    for k in range(1, M):
        fwd[:, k] = diag[:, k] - off[:, k - 1] ** 2 / fwd[:, k - 1]
    bwd[:, M - 1] = diag[:, M - 1]
    for k in range(M - 2, -1, -1):
        bwd[:, k] = diag[:, k] - off[:, k] ** 2 / bwd[:, k + 1]
    return fwd, bwd


def _block_inertia_negatives(d: np.ndarray, scale: float) -> int:
    """Negative eigenvalues of the block-diagonal factor from ``scipy.linalg.ldl``."""
    n = d.shape[0]
    neg = 0
    i = 0
    tol = PIVOT_EPS * max(scale, 1.0)
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0.0:
            ev = np.linalg.eigvalsh(d[i : i + 2, i : i + 2])
            if np.min(np.abs(ev)) < tol:
                raise NearSingularShift
            neg += int((ev < 0).sum())
            i += 2
        else:
            if abs(d[i, i]) < tol:
                raise NearSingularShift
            neg += int(d[i, i] < 0)
            i += 1
    return neg


def _banded_negatives(S: sp.spmatrix, scale: float) -> int:
    ev = _banded_eigvalsh(sp.csr_matrix(S), hi=0.0)
    if ev.size and np.min(np.abs(ev)) < PIVOT_EPS * max(scale, 1.0):
        raise NearSingularShift
    return int((ev < 0).sum())


def _negatives(H: DiscreteHamiltonian, lam: float) -> int:
    K = sp.csr_matrix(H.A - lam * sp.diags(H.D))
    nE, M = H.n_chains, H.chain_len
    nC = nE * M
    n = K.shape[0]
    scale = float(abs(K).max()) if K.nnz else 1.0
    neg = 0
    if nC:
        diag, off = _chain_blocks(K, nE, M)
        fwd, bwd = _chain_pivots(diag, off)
        ref = np.abs(diag) + np.abs(np.pad(off, ((0, 0), (0, 1)))) + np.abs(np.pad(off, ((0, 0), (1, 0))))
        if np.any(np.abs(fwd) < PIVOT_EPS * ref) or np.any(np.abs(bwd) < PIVOT_EPS * ref):
            raise NearSingularShift
        neg += int((fwd < 0).sum())
    nb = n - nC
    if nb == 0:
        return neg
    Kbb = K[nC:, nC:]
    if nC:
        g11 = 1.0 / bwd[:, 0]
        gmm = 1.0 / fwd[:, M - 1]
        # (T^-1)_{1M} = (-1)^(M+1) prod(b_k) / det T
        ratios = off / fwd[:, : M - 1]
        g1m = (-1.0) ** (M + 1) * np.prod(ratios, axis=1) * gmm
        C = K[nC:, :nC].tocoo()
        chain = C.col // M
        pos = C.col % M
        if not np.all((pos == 0) | (pos == M - 1)):
            raise NumericalFailure("interior chain node coupled outside its chain")
        start_row = np.full(nE, -1)
        end_row = np.full(nE, -1)
        start_val = np.zeros(nE)
        end_val = np.zeros(nE)
        s_mask = pos == 0
        if np.bincount(chain[s_mask], minlength=nE).max(initial=0) > 1 or np.bincount(
            chain[~s_mask], minlength=nE
        ).max(initial=0) > 1:
            raise NumericalFailure("chain end coupled to several unknowns")
        start_row[chain[s_mask]] = C.row[s_mask]
        start_val[chain[s_mask]] = C.data[s_mask]
        end_row[chain[~s_mask]] = C.row[~s_mask]
        end_val[chain[~s_mask]] = C.data[~s_mask]
        hs = start_row >= 0
        he = end_row >= 0
        both = hs & he
        r = np.concatenate([start_row[hs], end_row[he], start_row[both], end_row[both]])
        c = np.concatenate([start_row[hs], end_row[he], end_row[both], start_row[both]])
        v = np.concatenate(
            [
                start_val[hs] ** 2 * g11[hs],
                end_val[he] ** 2 * gmm[he],
                start_val[both] * end_val[both] * g1m[both],
                start_val[both] * end_val[both] * g1m[both],
            ]
        )
        corr = sp.csr_matrix((v, (r, c)), shape=(nb, nb))
        S = Kbb - corr
    else:
        S = Kbb
    if nb <= DENSE_SCHUR_MAX:
        Sd = S.toarray()
        _, d, _ = la.ldl(Sd, lower=True)
        return neg + _block_inertia_negatives(d, float(np.max(np.abs(Sd))))
    return neg + _banded_negatives(S, scale)


def count_leq(H: DiscreteHamiltonian, lam: float, retries: int = 3) -> int:
    """Number of pencil eigenvalues <= lam (right-continuous convention).

    A (near-)singular shift is retried at lam + k * tau_nudge(lam).
    """
    shift = lam
    for k in range(retries + 1):
        try:
            return _negatives(H, shift)
        except NearSingularShift:
            shift = lam + (k + 1) * tau_nudge(lam)
            log.info("near-singular shift at lam=%.17g, retrying at %.17g", lam, shift)
    raise NumericalFailure(f"factorization breakdown at lam={lam!r}")


# ---------------------------------------------------------------------------
# eigenvalues
# ---------------------------------------------------------------------------

def _to_band(B: sp.csr_matrix):
    perm = reverse_cuthill_mckee(B, symmetric_mode=True)
    Bp = B[perm][:, perm].tocoo()
    low = Bp.row >= Bp.col
    r, c, v = Bp.row[low], Bp.col[low], Bp.data[low]
    u = int((r - c).max(initial=0))
    band = np.zeros((u + 1, B.shape[0]))
    band[r - c, c] = v
    return band, perm


def _banded_eigvalsh(B: sp.csr_matrix, hi: float, lo: float | None = None, vectors: bool = False):
    n = B.shape[0]
    if lo is None:
        diag = B.diagonal()
        off = np.asarray(abs(B).sum(axis=1)).ravel() - np.abs(diag)
        lo = float(np.min(diag - off)) - 1.0
    if hi <= lo:
        return (np.empty(0), np.empty((n, 0))) if vectors else np.empty(0)
    if n <= 64:
        w, V = la.eigh(B.toarray())
        keep = (w > lo) & (w <= hi)
        return (w[keep], V[:, keep]) if vectors else w[keep]
    band, perm = _to_band(B)
    w = np.sort(la.eig_banded(band, lower=True, eigvals_only=True, select="v", select_range=(lo, hi)))
    if not vectors:
        return w
    Vp = _inverse_iteration(band, w)
    if Vp is None:
        log.info("inverse iteration rejected, falling back to full banded solve")
        w, Vp = la.eig_banded(band, lower=True, select="v", select_range=(lo, hi))
    V = np.empty_like(Vp)
    V[perm] = Vp
    return w, V


def _band_matvec(band: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Symmetric banded (lower storage) matrix times X."""
    n = band.shape[1]
    Y = band[0][:, None] * X
    for k in range(1, band.shape[0]):
        d = band[k, : n - k][:, None]
        Y[k:] += d * X[: n - k]
        Y[: n - k] += d * X[k:]
    return Y


def _inverse_iteration(band: np.ndarray, w: np.ndarray, sweeps: int = 3, extra: int = 2):
    """Eigenvectors for the known eigenvalues ``w`` of a banded matrix.

    Near-degenerate eigenvalues are grouped; each group gets block inverse
    iteration at a shift just below it, and a final Rayleigh-Ritz step on the
    union of all blocks separates the vectors. Returns None when the
    residuals are not at round-off level.
    """
    n, u = band.shape[1], band.shape[0] - 1
    if w.size == 0:
        return np.empty((n, 0))
    scale = float(np.max(np.abs(band)))
    full = np.zeros((2 * u + 1, n))
    full[u] = band[0]
    for k in range(1, u + 1):
        full[u + k, : n - k] = band[k, : n - k]
        full[u - k, k:] = band[k, : n - k]
    gap = np.diff(w) > 1e-6 * np.maximum(1.0, np.abs(w[1:]))
    starts = np.concatenate([[0], np.nonzero(gap)[0] + 1, [w.size]])
    rng = np.random.default_rng(0)
    blocks = []
    for a, b in zip(starts[:-1], starts[1:]):
        center = 0.5 * (w[a] + w[b - 1])
        sigma = w[a] - 1e-7 * (1.0 + abs(center))
        shifted = full.copy()
        shifted[u] -= sigma
        X = rng.standard_normal((n, b - a + extra))
        for _ in range(sweeps):
            X = la.solve_banded((u, u), shifted, X, check_finite=False)
            X, _ = np.linalg.qr(X)
        blocks.append(X)
    Z, _ = np.linalg.qr(np.hstack(blocks))
    theta, Y = np.linalg.eigh(Z.T @ _band_matvec(band, Z))
    # every target eigenvalue must be matched by a distinct Ritz value
    order = np.argsort(theta)
    k = np.searchsorted(theta[order], w[0] - 1e-8 * scale)
    idx = order[k : k + w.size]
    if idx.size != w.size or np.max(np.abs(theta[idx] - w)) > 1e-8 * scale:
        return None
    V = Z @ Y[:, idx]
    R = _band_matvec(band, V) - V * theta[idx]
    if np.max(np.linalg.norm(R, axis=0)) > 1e-7 * scale:
        return None
    return V


def _cache_path(H: DiscreteHamiltonian, lam_max: float) -> Path | None:
    root = os.environ.get("IDS_QG_CACHE")
    if not root:
        return None
    A = H.A.tocsr()
    digest = hashlib.sha256()
    for arr in (A.indptr, A.indices, A.data, H.D, np.array([lam_max])):
        digest.update(np.ascontiguousarray(arr).tobytes())
    return Path(root) / f"eig-{digest.hexdigest()[:32]}.npy"


def pencil_eigenvalues(H: DiscreteHamiltonian, lam_max: float) -> np.ndarray:
    """All pencil eigenvalues <= lam_max, ascending, with multiplicity."""
    path = _cache_path(H, lam_max)
    if path is not None and path.exists():
        return np.load(path)
    w = _banded_eigvalsh(H.scaled(), hi=lam_max)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.save(path, w)
    return w


def pencil_eigenpairs(H: DiscreteHamiltonian, lam_max: float):
    """Eigenpairs with lam <= lam_max; vectors are D-orthonormal columns."""
    w, V = _banded_eigvalsh(H.scaled(), hi=lam_max, vectors=True)
    return w, V / np.sqrt(H.D)[:, None]


# ---------------------------------------------------------------------------
# step functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function, 0 left of the first breakpoint.

    ``levels[i]`` is the (integer) value on [breakpoints[i], breakpoints[i+1]);
    the represented value is ``levels / norm``.
    """

    breakpoints: np.ndarray
    levels: np.ndarray
    norm: float = 1.0

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        i = np.searchsorted(self.breakpoints, lam, side="right") - 1
        padded = np.concatenate([[0], self.levels])
        return padded[i + 1] / self.norm

    def normalized(self, norm: float) -> "StepFunction":
        return type(self)(self.breakpoints, self.levels, norm)

    @property
    def jumps(self) -> np.ndarray:
        return np.diff(np.concatenate([[0], self.levels])) / self.norm

    def sup_norm(self, upto: float = math.inf) -> float:
        keep = self.breakpoints <= upto
        return float(np.max(np.abs(self.levels[keep]), initial=0)) / self.norm


@dataclass(frozen=True)
class CountingFunction(StepFunction):
    def __post_init__(self):
        if np.any(np.diff(self.breakpoints) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(np.diff(np.concatenate([[0], self.levels])) < 0):
            raise ValueError("counting function must be non-decreasing")

    @classmethod
    def from_eigenvalues(cls, eigs, norm: float = 1.0, tol: float = TAU_EIG) -> "CountingFunction":
        w = np.sort(np.asarray(eigs, dtype=float))
        if w.size == 0:
            return cls(np.empty(0), np.empty(0, dtype=np.int64), norm)
        gap = np.diff(w) > tol * np.maximum(1.0, np.abs(w[1:]))
        starts = np.concatenate([[True], gap])
        bps = w[starts]
        # cluster ends are where the next cluster starts
        ends = np.concatenate([np.nonzero(starts)[0][1:], [w.size]])
        return cls(bps, ends.astype(np.int64), norm)


ShiftFunction = StepFunction


def merged_breakpoints(*fs: StepFunction, upto: float = math.inf, tol: float = TAU_EIG) -> np.ndarray:
    """Union of breakpoints, points closer than ``tol`` (relative) collapsed
    to the right end of their cluster.

    Evaluating right-continuous functions there counts every jump of the
    cluster, so two computations of the same eigenvalue that differ in the
    last bits do not leave a spurious sliver between them.
    """
    bps = np.unique(np.concatenate([f.breakpoints for f in fs]))
    if bps.size > 1:
        gap = np.diff(bps) > tol * np.maximum(1.0, np.abs(bps[1:]))
        bps = bps[np.concatenate([gap, [True]])]
    return bps[bps <= upto]


def sup_distance(f: StepFunction, g: StepFunction, upto: float = math.inf) -> float:
    """Exact sup over (-inf, upto] of |f - g|, evaluated on merged breakpoints."""
    bps = merged_breakpoints(f, g, upto=upto)
    if bps.size == 0:
        return 0.0
    return float(np.max(np.abs(f(bps) - g(bps))))


def difference(f: StepFunction, g: StepFunction, upto: float = math.inf) -> StepFunction:
    """f - g as a step function in units of f.norm (both must share a norm)."""
    bps = merged_breakpoints(f, g, upto=upto)
    lev = np.rint(f(bps) * f.norm - g(bps) * g.norm).astype(np.int64)
    return StepFunction(bps, lev, f.norm)


def counting_function(H: DiscreteHamiltonian, lam_max: float, norm: float = 1.0) -> CountingFunction:
    return CountingFunction.from_eigenvalues(pencil_eigenvalues(H, lam_max), norm)


# ---------------------------------------------------------------------------
# Dirichlet reference counts
# ---------------------------------------------------------------------------

def dirichlet_count(lam: float) -> int:
    """|{n >= 1 : n^2 pi^2 <= lam}| for the Dirichlet Laplacian on [0, 1]."""
    if lam < math.pi**2:
        return 0
    n = int(math.isqrt(int(lam)) / math.pi) if lam < 1e30 else int(math.sqrt(lam) / math.pi)
    while (n + 1) ** 2 * math.pi**2 <= lam:
        n += 1
    while n > 0 and n * n * math.pi**2 > lam:
        n -= 1
    return n


def dirichlet_count_Q(Q, S, lam: float) -> int:
    return len(Q) * len(S) * dirichlet_count(lam)


def discrete_dirichlet_eigenvalues(M: int, c: float = 0.0) -> np.ndarray:
    """Pencil spectrum of one edge with Dirichlet ends: (4/h^2) sin^2(k pi h / 2) + c."""
    h = 1.0 / (M + 1)
    k = np.arange(1, M + 1)
    return 4.0 / h**2 * np.sin(k * math.pi * h / 2) ** 2 + c


def dirichlet_count_discrete(lam, M: int):
    return np.searchsorted(discrete_dirichlet_eigenvalues(M), lam, side="right")


def spectral_shift(H1: DiscreteHamiltonian, H2: DiscreteHamiltonian, lam_max: float) -> StepFunction:
    """xi(lam) = n_{H2}(lam) - n_{H1}(lam) for lam <= lam_max."""
    return difference(counting_function(H2, lam_max), counting_function(H1, lam_max), upto=lam_max)


def shift_bound_check(n_changed: int, S, xi: StepFunction) -> bool:
    """||xi||_inf <= 4 |Q_changed| |S|."""
    return xi.sup_norm() * xi.norm <= 4 * n_changed * len(S)


def dirichlet_counting_function(M: int, lam_max: float, copies: int = 1) -> CountingFunction:
    """``copies`` times the discrete single-edge Dirichlet count, up to lam_max."""
    w = discrete_dirichlet_eigenvalues(M)
    w = w[w <= lam_max]
    return CountingFunction(w, copies * np.arange(1, w.size + 1, dtype=np.int64))
