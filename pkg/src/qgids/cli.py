"""Command-line experiment runner.

    qgids <mode> --config PATH [--seed N] [--out DIR] [--threads N]

Modes: ids, shift, pastur-shubin, frequencies, ergodic-check, tiling-check,
validate. Every run writes CSV tables and a ``manifest.json`` into the output
directory; failures write ``error.json`` and exit with 2 (validation),
3 (budget exceeded) or 4 (numerical failure).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cayley import subgraph
from .config import MODES, ConfigError, ExperimentConfig, validate
from .disorder import (
    DisorderField,
    OverriddenField,
    Pattern,
    colouring,
    exact_frequency_iid,
    observed_patterns,
)
from .groups import (
    ball,
    canonical,
    element,
    folner_box,
    identity,
    inverse,
    standard_generators,
    tiling_grid,
    translate_right,
)
from .quantum_graph import VertexCondition, assemble
from .spectral.counting import (
    NearSingularShift,
    NumericalFailure,
    counting_function,
    difference,
    dirichlet_counting_function,
)
from .spectral.ergodic import PatternExplosion, ergodic_reconstruction
from .spectral.ids import BudgetExceeded, ids_approx, jump_detect, pastur_shubin

EXIT_OK, EXIT_VALIDATION, EXIT_BUDGET, EXIT_NUMERICAL = 0, 2, 3, 4


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([c if isinstance(c, str) else _fmt(c) for c in r])
    return buf.getvalue()


class Run:
    """Collects output files; nothing touches disk until ``flush``."""

    def __init__(self, cfg: ExperimentConfig, out: Path, threads: int):
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.files: dict[str, str] = {}
        self.summary: dict = {}
        self.timings: dict[str, float] = {}

    def put(self, name: str, text: str):
        self.files[name] = text

    def flush(self):
        self.out.mkdir(parents=True, exist_ok=True)
        for name, text in sorted(self.files.items()):
            (self.out / name).write_text(text, encoding="utf-8")
        manifest = {
            "version": __version__,
            "mode": self.cfg.mode,
            "seed": self.cfg.seed,
            "config_hash": self.cfg.digest(),
            "config": self.cfg.as_dict(),
            "threads": self.threads,
            "outputs": sorted(self.files),
            "summary": self.summary,
            "timings_s": self.timings,
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# modes
# ---------------------------------------------------------------------------

def run_ids(run: Run):
    cfg = run.cfg
    S = cfg.generator_set()
    omega = DisorderField(cfg.model(), cfg.seed)
    boxes = [folner_box(cfg.tag, n) for n in cfg.boxes]
    est = ids_approx(omega, boxes, S, cfg.mesh, cfg.lambda_max, cfg.dim_cap, run.threads)
    for n, f in zip(est.sizes, est.functions):
        run.put(f"ids_Q{n}.csv", _csv(["lambda", "N"], zip(f.breakpoints, f.levels / f.norm)))
    if cfg.lambda_grid:
        header = ["lambda"] + [f"N_Q{n}" for n in est.sizes]
        run.put("ids_grid.csv", _csv(header, est.table(cfg.lambda_grid)))
    rows = [
        (est.sizes[i], est.sizes[i + 1], d, env)
        for i, (d, env) in enumerate(zip(est.sup_distances, est.envelopes))
    ]
    run.put("ids_distances.csv", _csv(["n", "n_next", "sup_distance", "envelope"], rows))
    jumps = jump_detect(est.final, cfg.jump_threshold)
    run.put("jumps.csv", _csv(["lambda", "jump"], jumps))
    run.summary.update(
        complete=est.complete,
        notes=est.notes,
        eps_disc=est.eps_disc,
        sup_distances=est.sup_distances,
        envelopes=est.envelopes,
    )
    if not est.complete:
        raise BudgetExceeded("; ".join(est.notes))


def run_shift(run: Run):
    cfg = run.cfg
    S = cfg.generator_set()
    omega = DisorderField(cfg.model(), cfg.seed)
    alt = VertexCondition.parse(cfg.alt_condition)
    rows, pair_rows, checks = [], [], []
    for n in cfg.boxes:
        sub = subgraph(folner_box(cfg.tag, n).elements, S)
        H = assemble(sub, omega, cfg.mesh)
        n_om = counting_function(H, cfg.lambda_max)
        ref = dirichlet_counting_function(cfg.mesh, cfg.lambda_max, len(sub.edges))
        xi = difference(n_om, ref, upto=cfg.lambda_max)
        rows += [(n, l, int(v)) for l, v in zip(xi.breakpoints, xi.levels)]
        changed = canonical(sub.inner_vertices)[: cfg.changed]
        H2 = assemble(sub, OverriddenField(omega, {v: alt for v in changed}), cfg.mesh)
        pair = difference(counting_function(H2, cfg.lambda_max), n_om, upto=cfg.lambda_max)
        pair_rows += [(n, l, int(v)) for l, v in zip(pair.breakpoints, pair.levels)]
        checks.append(
            {
                "n": n,
                "xi_sup": float(xi.sup_norm()),
                "xi_bound": 4 * len(sub.Q) * len(S),
                "pair_changed": len(changed),
                "pair_sup": float(pair.sup_norm()),
                "pair_bound": 4 * len(changed) * len(S),
            }
        )
    run.put("shift.csv", _csv(["n", "lambda", "xi"], rows))
    run.put("shift_pair.csv", _csv(["n", "lambda", "xi"], pair_rows))
    run.summary["bounds"] = checks


def run_pastur_shubin(run: Run):
    cfg = run.cfg
    grid = cfg.lambda_grid or [cfg.lambda_max]
    est = pastur_shubin(
        [cfg.center_element()],
        cfg.buffer,
        cfg.samples,
        grid,
        cfg.model(),
        cfg.mesh,
        seed=cfg.seed,
        dim_cap=cfg.dim_cap,
        threads=run.threads,
    )
    run.put("pastur_shubin.csv", _csv(["lambda", "N", "stderr"], zip(est.lam, est.mean, est.stderr)))
    run.summary.update(window_size=est.window_size, window_boundary_ratio=est.window_boundary_ratio)


def run_frequencies(run: Run):
    cfg = run.cfg
    model = cfg.model()
    omega = DisorderField(model, cfg.seed)
    domain = canonical(element(cfg.tag, *map(int, d.split(":"))) for d in cfg.domain)
    C = colouring(omega, folner_box(cfg.tag, cfg.window).elements)
    counts = observed_patterns(C, domain)
    rows = []
    for cols in sorted(counts):
        p = float(exact_frequency_iid(Pattern(tuple(zip(domain, cols))), model))
        freq = counts[cols] / len(C)
        se = (p * (1 - p) / len(C)) ** 0.5
        rows.append((json.dumps(cols, separators=(",", ":")), counts[cols], freq, p, se))
    run.put("frequencies.csv", _csv(["pattern", "count", "frequency", "exact", "binomial_se"], rows))
    run.summary.update(window=len(C), n_patterns=len(rows))


def run_ergodic(run: Run):
    cfg = run.cfg
    grid = cfg.lambda_grid or [cfg.lambda_max]
    rep = ergodic_reconstruction(
        cfg.model(), cfg.pattern_n, cfg.j_max, grid, cfg.mesh, seed=cfg.seed, pattern_cap=cfg.pattern_cap
    )
    rows = zip(rep.lam, rep.direct, rep.reconstructed, rep.reconstructed_exact)
    run.put("ergodic.csv", _csv(["lambda", "direct", "reconstructed", "reconstructed_exact"], rows))
    run.summary.update(
        discrepancy=rep.discrepancy,
        envelope=rep.envelope,
        sampling_error=rep.sampling_error,
        n_patterns=rep.n_patterns,
        within_envelope=rep.within_envelope,
    )


def tiling_report(tag: str, n: int, radius: int, S=None) -> tuple[bool, str]:
    """Check that the translates Q_n g over the grid patch partition the word ball."""
    S = S or standard_generators(tag)
    grid = tiling_grid(tag, n, radius, S)
    patch = set(grid)
    symmetric = all(inverse(g) in patch for g in grid)
    Q = folner_box(tag, n).elements
    target = set(ball([identity(tag)], radius, S))
    hits: dict = {}
    for g in grid:
        for x in translate_right(Q, g) & target:
            hits[x] = hits.get(x, 0) + 1
    overlaps = sum(c - 1 for c in hits.values())
    missing = len(target) - len(hits)
    ok = symmetric and overlaps == 0 and missing == 0
    lines = [
        f"group={tag} n={n} radius={radius} ball={len(target)} grid_patch={len(grid)}",
        f"inverse_closed={symmetric} overlaps={overlaps} uncovered={missing}",
        "OK: disjoint cover" if ok else "FAIL: not a disjoint cover",
    ]
    return ok, "\n".join(lines) + "\n"


def run_tiling(run: Run):
    cfg = run.cfg
    ok, text = tiling_report(cfg.tag, cfg.tile_n, cfg.radius, cfg.generator_set())
    run.put("tiling_report.txt", text)
    run.summary["ok"] = ok
    if not ok:
        raise NumericalFailure("tiling check failed")


RUNNERS = {
    "ids": run_ids,
    "shift": run_shift,
    "pastur-shubin": run_pastur_shubin,
    "frequencies": run_frequencies,
    "ergodic-check": run_ergodic,
    "tiling-check": run_tiling,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _error(out: Path, code: int, kind: str, detail) -> int:
    record = {"exit_code": code, "error": kind, "detail": detail}
    text = json.dumps(record, indent=2, sort_keys=True) + "\n"
    out.mkdir(parents=True, exist_ok=True)
    (out / "error.json").write_text(text)
    sys.stderr.write(text)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qgids", description="IDS experiments on metric Cayley graphs")
    p.add_argument("mode", choices=MODES + ("validate",))
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--seed", type=int, default=None, help="override the configured seed")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--threads", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out: Path = args.out
    try:
        cfg = ExperimentConfig.load(args.config)
    except OSError as exc:
        return _error(out, EXIT_VALIDATION, "validation", [f"cannot read config: {exc}"])
    except ConfigError as exc:
        return _error(out, EXIT_VALIDATION, "validation", exc.diagnostics)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.mode != "validate":
        cfg.mode = args.mode
    diags = validate(cfg)
    if args.mode == "validate":
        sys.stdout.write("\n".join(diags) + "\n" if diags else "OK\n")
        return EXIT_VALIDATION if diags else EXIT_OK
    if diags:
        return _error(out, EXIT_VALIDATION, "validation", diags)

    run = Run(cfg, out, max(1, args.threads))
    t0 = time.perf_counter()
    try:
        RUNNERS[cfg.mode](run)
    except (BudgetExceeded, PatternExplosion) as exc:
        run.timings["total"] = time.perf_counter() - t0
        run.flush()
        return _error(out, EXIT_BUDGET, "budget", str(exc))
    except (NumericalFailure, NearSingularShift, np.linalg.LinAlgError) as exc:
        run.timings["total"] = time.perf_counter() - t0
        run.flush()
        return _error(out, EXIT_NUMERICAL, "numerical", str(exc))
    run.timings["total"] = time.perf_counter() - t0
    run.flush()
    if cfg.mode == "tiling-check":
        sys.stdout.write(run.files["tiling_report.txt"])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
