"""Experiment configuration: flat ``key = value`` files with range checks.

Every tunable constant of the simulator, the data-collection grids, the
controller and the shapes lives in :class:`ExperimentConfig`.  A config file
holds one ``key = value`` per line; ``#`` starts a comment; list values are
comma separated.  Unknown keys are rejected.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .errors import ConfigError

TRAIN_ORIENTATIONS = tuple(float(a) for a in range(-160, 181, 20))
TRAIN_LATERALS = (9.9, 6.0, 4.0, 2.0, 0.0, -2.0, -4.0, -6.0)
TRAIN_DEPTHS = (2.0, 4.0)
SLIDE_DIRECTIONS = tuple(float(a) for a in range(0, 360, 45))


@dataclass
class ExperimentConfig:
    seed: int = 0

    # synthetic sensor
    alpha: float = 2.0          # contact spread gain, px per mm of footprint radius
    beta: float = 2.4           # shear drag gain, px per mm of drag
    w: float = 12.0             # coverage softness, mm
    lam: float = 0.7            # drag retention per step
    s_max: float = 6.0          # drag norm cap, mm
    eta: float = 0.5            # pixel noise std, px
    pin_pitch: float = 3.0      # mm
    px_per_mm: float = 5.0
    contact_radius: float = 12.0  # dome curvature radius for the contact footprint, mm
    spread_mix: float = 0.1     # spread center: 0 = geometric median, 1 = weighted centroid

    # data-collection grids
    orientations: tuple[float, ...] = TRAIN_ORIENTATIONS
    laterals: tuple[float, ...] = TRAIN_LATERALS
    depths: tuple[float, ...] = TRAIN_DEPTHS
    directions: tuple[float, ...] = SLIDE_DIRECTIONS
    multidir_depth: float = 3.0

    # controller / task
    e: float = 3.0
    K: float = 0.35
    l_d: float = 0.0
    task_depth: float = 3.0
    traversal: str = "ccw"
    rho_floor: float = 20.0     # contact frames sit far above, no-contact frames far below
    max_steps: int = 400

    # regression
    gp_restarts: int = 5

    # shapes (mm)
    rect_width: float = 60.0
    rect_height: float = 40.0
    circle_radius: float = 30.0
    flower_r0: float = 30.0
    flower_amp: float = 6.0
    spiral_a: float = 20.0
    spiral_b: float = 4.0
    spiral_turns: float = 2.5
    spiral_width: float = 6.0

    out: str = "out"

    def __post_init__(self):
        self.validate()

    # -- validation -------------------------------------------------------
    def validate(self) -> None:
        def check(key, ok):
            if not ok:
                raise ConfigError(f"{key}: value {getattr(self, key)!r} out of range")

        check("alpha", 0 < self.alpha <= 50)
        check("beta", 0 <= self.beta <= 50)
        check("w", 0 < self.w <= 50)
        check("lam", 0 <= self.lam < 1)
        check("s_max", 0 < self.s_max <= 50)
        check("eta", 0 <= self.eta <= 10)
        check("pin_pitch", 0 < self.pin_pitch <= 10)
        check("px_per_mm", 0 < self.px_per_mm <= 100)
        check("contact_radius", 0 < self.contact_radius <= 200)
        check("spread_mix", 0 <= self.spread_mix <= 1)
        check("multidir_depth", 0 <= self.multidir_depth <= 10)
        check("e", 0 < self.e <= 20)
        check("K", 0 <= self.K <= 5)
        check("task_depth", 0 < self.task_depth <= 10)
        check("traversal", self.traversal in ("ccw", "cw"))
        check("rho_floor", self.rho_floor >= 0)
        check("max_steps", self.max_steps >= 1)
        check("gp_restarts", self.gp_restarts >= 0)
        check("seed", self.seed >= 0)
        for key in ("rect_width", "rect_height", "circle_radius", "flower_r0",
                    "spiral_a", "spiral_b", "spiral_turns", "spiral_width"):
            check(key, getattr(self, key) > 0)
        check("flower_amp", 0 <= self.flower_amp < self.flower_r0)

        for key in ("orientations", "laterals", "depths", "directions"):
            grid = getattr(self, key)
            if len(grid) == 0:
                raise ConfigError(f"{key}: grid is empty")
            if len(set(grid)) != len(grid):
                raise ConfigError(f"{key}: grid has duplicate values")
            if not all(math.isfinite(v) for v in grid):
                raise ConfigError(f"{key}: grid has non-finite values")
        check("orientations", all(-180 < v <= 180 for v in self.orientations))
        check("depths", all(0 <= v <= 10 for v in self.depths))
        check("directions", all(0 <= v < 360 for v in self.directions))
        lo, hi = min(self.laterals), max(self.laterals)
        check("l_d", lo <= self.l_d <= hi)

    # -- helpers ----------------------------------------------------------
    @property
    def lateral_range(self) -> tuple[float, float]:
        return min(self.laterals), max(self.laterals)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_items(self) -> list[tuple[str, str]]:
        items = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                text = ",".join(_fmt(v) for v in value)
            else:
                text = _fmt(value)
            items.append((f.name, text))
        return items

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_items())

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


# "lambda" is a Python keyword; accept it in files as an alias.
ALIASES = {"lambda": "lam"}


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(key: str, text: str, default: Any) -> Any:
    try:
        if isinstance(default, tuple):
            return tuple(float(t) for t in text.split(",") if t.strip())
        if isinstance(default, bool):
            return text.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r}") from None


def parse_overrides(pairs: dict[str, str], base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply string-valued overrides to ``base`` (defaults if omitted)."""
    base = base or ExperimentConfig()
    defaults = {f.name: getattr(base, f.name) for f in fields(base)}
    changes = {}
    for raw_key, text in pairs.items():
        key = ALIASES.get(raw_key, raw_key)
        if key not in defaults:
            raise ConfigError(f"{raw_key}: unknown config key")
        changes[key] = _coerce(key, text.strip(), defaults[key])
    return dataclasses.replace(base, **changes)


def load_config(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    pairs = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value
    return parse_overrides(pairs, base)
