"""Experiment configuration: INI-style ``key = value`` sections, comma lists.

Example::

    [group]
    tag = Z2
    generators = S1            ; or "1:0, 0:1", or "standard"

    [model]
    profiles = 0, 5            ; one profile per entry, pieces joined by ':'
    potential_weights = 0.5, 0.5   ; per generator, vectors separated by ';'
    conditions = kirchhoff     ; dirichlet | neumann | kirchhoff | delta:<alpha>
    condition_weights = 1

    [run]
    mesh = 50
    lambda_max = 50
    lambda_grid = 5, 15, 40
    boxes = 2, 3, 4, 5
    seed = 0
    dim_cap = 200000
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

from .disorder import Model
from .groups import GROUP_TAGS, S1, S2, GeneratorSet, GroupError, element, standard_generators
from .quantum_graph import MIN_MESH, Profile, VertexCondition

MODES = ("ids", "shift", "pastur-shubin", "frequencies", "ergodic-check", "tiling-check")
WEIGHT_TOL = 1e-12


class ConfigError(ValueError):
    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _coords(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.strip().split(":"))


@dataclass
class ExperimentConfig:
    tag: str = "Z2"
    generators: str = "S1"
    profiles: list[list[float]] = field(default_factory=lambda: [[0.0]])
    potential_weights: list[list[float]] = field(default_factory=lambda: [[1.0]])
    conditions: list[str] = field(default_factory=lambda: ["kirchhoff"])
    condition_weights: list[float] = field(default_factory=lambda: [1.0])
    mesh: int = 100
    lambda_max: float = 50.0
    lambda_grid: list[float] = field(default_factory=list)
    boxes: list[int] = field(default_factory=lambda: [2, 3, 4])
    seed: int = 0
    mode: str = "ids"
    dim_cap: int = 200_000
    jump_threshold: float = 0.5
    # pastur-shubin
    buffer: int = 3
    samples: int = 50
    center: str = ""
    # ergodic-check
    pattern_n: int = 2
    j_max: int = 1000
    pattern_cap: int = 4096
    # frequencies
    window: int = 100
    domain: list[str] = field(default_factory=lambda: ["0:0"])
    # tiling-check
    tile_n: int = 2
    radius: int = 6
    # shift
    changed: int = 1
    alt_condition: str = "dirichlet"

    # -- parsing ------------------------------------------------------------

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError([f"unreadable config: {exc}"]) from exc
        cfg = cls()
        diags: list[str] = []
        readers = {
            "tag": str.strip,
            "generators": str.strip,
            "profiles": lambda t: [_floats(p.replace(":", ",")) for p in t.split(",") if p.strip()],
            "potential_weights": lambda t: [_floats(v) for v in t.split(";")],
            "conditions": lambda t: [c.strip() for c in t.split(",") if c.strip()],
            "condition_weights": _floats,
            "mesh": int,
            "lambda_max": float,
            "lambda_grid": _floats,
            "boxes": _ints,
            "seed": int,
            "mode": str.strip,
            "dim_cap": int,
            "jump_threshold": float,
            "buffer": int,
            "samples": int,
            "center": str.strip,
            "pattern_n": int,
            "j_max": int,
            "pattern_cap": int,
            "window": int,
            "domain": lambda t: [d.strip() for d in t.split(",") if d.strip()],
            "tile_n": int,
            "radius": int,
            "changed": int,
            "alt_condition": str.strip,
        }
        for section in cp.sections():
            for key, raw in cp.items(section):
                name = key.replace("-", "_")
                if name not in readers:
                    diags.append(f"unknown key [{section}] {key}")
                    continue
                try:
                    setattr(cfg, name, readers[name](raw))
                except ValueError as exc:
                    diags.append(f"bad value for {key}: {raw!r} ({exc})")
        if diags:
            raise ConfigError(diags)
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def as_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.as_dict(), sort_keys=True).encode()).hexdigest()

    # -- derived objects ----------------------------------------------------

    def generator_set(self) -> GeneratorSet:
        g = self.generators.strip()
        if g.upper() == "S1":
            return S1
        if g.upper() == "S2":
            return S2
        if g.lower() == "standard":
            return standard_generators(self.tag)
        return GeneratorSet(tuple(element(self.tag, *_coords(t)) for t in g.split(",")))

    def model(self) -> Model:
        return Model(
            S=self.generator_set(),
            profiles=tuple(Profile(tuple(p)) for p in self.profiles),
            conditions=tuple(VertexCondition.parse(c) for c in self.conditions),
            potential_weights=tuple(tuple(w) for w in self.potential_weights),
            condition_weights=tuple(self.condition_weights),
        )

    def center_element(self):
        if not self.center:
            return element(self.tag, *([0] * (3 if self.tag == "H3" else int(self.tag[1]))))
        return element(self.tag, *_coords(self.center))


def validate(cfg: ExperimentConfig) -> list[str]:
    """Every violation found, in a fixed order; empty when the config is usable."""
    out: list[str] = []
    if cfg.tag not in GROUP_TAGS:
        out.append(f"unknown group tag {cfg.tag!r}")
    else:
        try:
            S = cfg.generator_set()
            if S.tag != cfg.tag:
                out.append("generator set belongs to a different group")
        except (GroupError, ValueError, OverflowError) as exc:
            out.append(f"bad generators: {exc}")
    if cfg.mode not in MODES:
        out.append(f"unknown mode {cfg.mode!r}")
    if not cfg.profiles:
        out.append("empty potential set B")
    for p in cfg.profiles:
        if not p or not all(math.isfinite(v) for v in p):
            out.append("profile values must be finite and nonempty")
    if not cfg.conditions:
        out.append("empty condition set U")
    for c in cfg.conditions:
        try:
            VertexCondition.parse(c)
        except ValueError as exc:
            out.append(str(exc))
    for w in cfg.potential_weights:
        if len(w) != len(cfg.profiles):
            out.append("potential weight vector length differs from profile count")
        if any(x < 0 for x in w):
            out.append("negative potential weight")
        if abs(sum(w) - 1.0) > WEIGHT_TOL:
            out.append(f"potential weights sum != 1 (sum {sum(w):.15g})")
    if len(cfg.condition_weights) != len(cfg.conditions):
        out.append("condition weight vector length differs from condition count")
    if any(x < 0 for x in cfg.condition_weights):
        out.append("negative condition weight")
    if abs(sum(cfg.condition_weights) - 1.0) > WEIGHT_TOL:
        out.append(f"condition weights sum != 1 (sum {sum(cfg.condition_weights):.15g})")
    if cfg.mesh < MIN_MESH:
        out.append(f"mesh below minimum (M={cfg.mesh} < {MIN_MESH})")
    if not math.isfinite(cfg.lambda_max):
        out.append("lambda_max must be finite")
    if cfg.dim_cap <= 0:
        out.append("dim_cap must be positive")
    if not cfg.boxes or any(b < 1 for b in cfg.boxes):
        out.append("boxes must be positive integers")
    elif any(b2 <= b1 for b1, b2 in zip(cfg.boxes, cfg.boxes[1:])):
        out.append("boxes must be increasing")
    if cfg.buffer < 1:
        out.append("buffer must be >= 1")
    if cfg.samples < 2:
        out.append("samples must be >= 2")
    if cfg.pattern_n < 1 or cfg.j_max < cfg.pattern_n:
        out.append("need 1 <= pattern_n <= j_max")
    if cfg.window < 1 or cfg.tile_n < 1 or cfg.radius < 0:
        out.append("window, tile_n must be positive and radius non-negative")
    if cfg.changed < 0:
        out.append("changed must be non-negative")
    try:
        VertexCondition.parse(cfg.alt_condition)
    except ValueError as exc:
        out.append(f"alt_condition: {exc}")
    return out
