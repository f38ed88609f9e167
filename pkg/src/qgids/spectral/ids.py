"""Normalized counting functions along Folner boxes and the localized-trace
(Pastur-Shubin) estimate of the integrated density of states."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..cayley import subgraph
from ..disorder import DisorderField, Model, mix
from ..groups import GeneratorSet, ball, boundary_R
from ..quantum_graph import assemble
from .counting import (
    CountingFunction,
    StepFunction,
    discrete_dirichlet_eigenvalues,
    counting_function,
    pencil_eigenpairs,
    sup_distance,
)


class BudgetExceeded(RuntimeError):
    pass


def discretization_error(M: int, lam_max: float, lam_grid: Sequence[float] | None = None) -> float:
    """Counting error of the mesh on the single-edge Dirichlet oracle.

    Without a grid this is the sup over (-inf, lam_max] of |n_D^h - n_D|,
    which is 1 as soon as one eigenvalue lies below lam_max (a shifted jump
    costs its full height in the sup norm). With a grid only the listed
    energies are compared.
    """
    disc = discrete_dirichlet_eigenvalues(M)
    n_exact = int(math.isqrt(int(max(lam_max, 0) / math.pi**2)) + 2)
    exact = (np.arange(1, n_exact + 1) * math.pi) ** 2
    if lam_grid is None:
        grid = np.concatenate([disc[disc <= lam_max], exact[exact <= lam_max]])
    else:
        grid = np.asarray(lam_grid, dtype=float)
    if grid.size == 0:
        return 0.0
    a = np.searchsorted(disc, grid, side="right")
    b = np.searchsorted(exact, grid, side="right")
    return float(np.max(np.abs(a - b)))


@dataclass
class IDSEstimate:
    sizes: list[int]
    volumes: list[int]
    functions: list[CountingFunction]
    sup_distances: list[float]
    boundary_ratios: list[float]
    lam_max: float
    eps_disc: float
    complete: bool = True
    notes: list[str] = field(default_factory=list)

    @property
    def final(self) -> CountingFunction:
        return self.functions[-1]

    @property
    def envelopes(self) -> list[float]:
        """4(|d Q_l|/|Q_l| + |d Q_l+1|/|Q_l+1|) + 2 eps_disc per consecutive pair."""
        r = self.boundary_ratios
        return [4 * (r[i] + r[i + 1]) + 2 * self.eps_disc for i in range(len(r) - 1)]

    def table(self, grid: Sequence[float]) -> list[list[float]]:
        grid = np.asarray(grid, dtype=float)
        cols = [f(grid) for f in self.functions]
        return [[float(l)] + [float(c[i]) for c in cols] for i, l in enumerate(grid)]


def ids_approx(
    omega,
    boxes: Sequence,
    S: GeneratorSet,
    M: int,
    lam_max: float,
    dim_cap: int = 200_000,
    threads: int = 1,
) -> IDSEstimate:
    """N_omega^{Q_l} for every box and the exact sup distances between neighbours."""
    sets = [frozenset(b.elements if hasattr(b, "elements") else b) for b in boxes]
    subs = []
    notes = []
    for Q in sets:
        sub = subgraph(Q, S)
        dim_est = len(sub.edges) * M + len(sub.vertices) + 2 * len(sub.edges)
        if dim_est > dim_cap:
            notes.append(f"box of size {len(Q)} skipped: dimension ~{dim_est} > cap {dim_cap}")
            break
        subs.append(sub)
    if not subs:
        raise BudgetExceeded(notes[0] if notes else "no boxes")

    def job(sub):
        H = assemble(sub, omega, M)
        return counting_function(H, lam_max, norm=len(sub.edges))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        functions = list(ex.map(job, subs))
    dists = [sup_distance(functions[i], functions[i + 1], upto=lam_max) for i in range(len(functions) - 1)]
    ratios = [len(boundary_R(sub.Q, 1, S)) / len(sub.Q) for sub in subs]
    return IDSEstimate(
        sizes=[getattr(b, "n", len(b)) for b in boxes[: len(subs)]],
        volumes=[len(s.Q) for s in subs],
        functions=functions,
        sup_distances=dists,
        boundary_ratios=ratios,
        lam_max=lam_max,
        eps_disc=discretization_error(M, lam_max),
        complete=len(subs) == len(sets),
        notes=notes,
    )


def sample_seed(seed: int, index: int) -> int:
    return mix(seed, f"sample|{index}")


@dataclass
class PasturShubinEstimate:
    lam: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    samples: np.ndarray
    window_size: int
    window_boundary_ratio: float


def localized_trace(H, edge_rows: np.ndarray, lam_list, n_edges: int) -> np.ndarray:
    """sum_{lam_i <= lam} ||1_{E_Q} psi_i||_D^2 / |E_Q| for each lam in lam_list."""
    lam_list = np.asarray(lam_list, dtype=float)
    w, V = pencil_eigenpairs(H, float(lam_list.max()))
    mass = H.edge_masses(V)[edge_rows].sum(axis=0)
    order = np.argsort(w)
    cum = np.concatenate([[0.0], np.cumsum(mass[order])])
    idx = np.searchsorted(w[order], lam_list, side="right")
    return cum[idx] / n_edges


def pastur_shubin(
    Q: Iterable,
    buffer: int,
    samples: int,
    lam_list: Sequence[float],
    model: Model,
    M: int,
    seed: int = 0,
    shift=None,
    dim_cap: int = 200_000,
    threads: int = 1,
) -> PasturShubinEstimate:
    """Monte-Carlo average of the localized trace over ``samples`` realizations.

    The operator lives on the buffered window {x : d(x, Q) <= buffer} with
    Dirichlet closure. ``shift`` applies the group action to every
    realization before use.
    """
    if buffer < 1:
        raise ValueError("buffer must be >= 1")
    S = model.S
    Q = frozenset(Q)
    window = frozenset(ball(Q, buffer, S))
    sub = subgraph(window, S)
    if len(sub.edges) * (M + 2) > dim_cap:
        raise BudgetExceeded(f"window of {len(window)} vertices exceeds dimension cap {dim_cap}")
    rows = np.array([i for i, e in enumerate(sub.edges) if e.base in Q])
    lam = np.asarray(lam_list, dtype=float)

    def job(k):
        omega = DisorderField(model, sample_seed(seed, k))
        if shift is not None:
            omega = omega.shift(shift)
        H = assemble(sub, omega, M)
        return localized_trace(H, rows, lam, len(rows))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        vals = np.array(list(ex.map(job, range(samples))))
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / math.sqrt(samples) if samples > 1 else np.full_like(mean, np.inf)
    return PasturShubinEstimate(
        lam=lam,
        mean=mean,
        stderr=se,
        samples=vals,
        window_size=len(window),
        window_boundary_ratio=len(boundary_R(window, 1, S)) / len(window),
    )


def jump_detect(N: StepFunction, threshold: float) -> list[tuple[float, float]]:
    """Breakpoints whose normalized jump exceeds ``threshold``."""
    j = N.jumps
    keep = j > threshold
    return [(float(l), float(s)) for l, s in zip(N.breakpoints[keep], j[keep])]
