"""Planar test objects and their signed distance functions.

Signed distance is negative inside the material.  Rectangles and circles are
exact; the flower, spiral and polyline shapes are sampled densely into
polylines and measured with shapely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import shapely
from shapely.geometry import Polygon

from .config import ExperimentConfig
from .errors import ConfigError, InputError

KINDS = ("rectangle", "circle", "flower", "spiral", "polyline")
_SAMPLES = 4096
_GRAD_STEP = 1e-4


def _as_points(point) -> tuple[np.ndarray, bool]:
    pts = np.asarray(point, dtype=float)
    single = pts.ndim == 1
    return np.atleast_2d(pts), single


@dataclass
class Shape2D:
    kind: str
    params: dict
    _geom: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown shape kind {self.kind!r}")
        if self.kind == "flower":
            a = np.linspace(0, 2 * np.pi, _SAMPLES, endpoint=False)
            r = self.params["r0"] + self.params["amp"] * np.sin(5 * a)
            self._geom = Polygon(np.c_[r * np.cos(a), r * np.sin(a)])
        elif self.kind == "spiral":
            # a strip of material whose outer wall is the Archimedean curve
            a = np.linspace(0, self.params["turns"] * 2 * np.pi, _SAMPLES)
            r = self.params["a"] + self.params["b"] * a
            inner = r - self.params["width"]
            if inner.min() <= 0 or self.params["width"] >= 2 * np.pi * self.params["b"]:
                raise ConfigError("spiral width must be below the start radius and the arm spacing")
            outline = np.r_[np.c_[r * np.cos(a), r * np.sin(a)],
                            np.c_[inner * np.cos(a), inner * np.sin(a)][::-1]]
            self._geom = Polygon(outline)
        elif self.kind == "polyline":
            verts = np.asarray(self.params["vertices"], dtype=float)
            if len(verts) < 3:
                raise ConfigError("polyline needs at least 3 vertices")
            poly = Polygon(verts)
            if not poly.is_valid or poly.area <= 0:
                raise ConfigError("polyline does not describe a simple closed outline")
            self._geom = poly

    # -- constructors -----------------------------------------------------
    @classmethod
    def rectangle(cls, width=60.0, height=40.0):
        return cls("rectangle", {"width": float(width), "height": float(height)})

    @classmethod
    def circle(cls, radius=30.0):
        return cls("circle", {"radius": float(radius)})

    @classmethod
    def flower(cls, r0=30.0, amp=6.0):
        return cls("flower", {"r0": float(r0), "amp": float(amp)})

    @classmethod
    def spiral(cls, a=20.0, b=4.0, turns=2.5, width=6.0):
        return cls("spiral", {"a": float(a), "b": float(b), "turns": float(turns),
                              "width": float(width)})

    @classmethod
    def polyline(cls, vertices=None):
        if vertices is None:
            vertices = default_outline()
        return cls("polyline", {"vertices": [tuple(map(float, v)) for v in vertices]})

    @classmethod
    def from_config(cls, kind: str, config: ExperimentConfig, vertices=None):
        if kind in ("rect", "rectangle"):
            return cls.rectangle(config.rect_width, config.rect_height)
        if kind == "circle":
            return cls.circle(config.circle_radius)
        if kind == "flower":
            return cls.flower(config.flower_r0, config.flower_amp)
        if kind == "spiral":
            return cls.spiral(config.spiral_a, config.spiral_b, config.spiral_turns, config.spiral_width)
        if kind == "polyline":
            return cls.polyline(vertices)
        raise ConfigError(f"unknown shape kind {kind!r}")

    # -- geometry ---------------------------------------------------------
    @property
    def closed(self) -> bool:
        return self.kind != "spiral"

    @property
    def center(self) -> np.ndarray:
        if self.kind == "polyline":
            c = self._geom.centroid
            return np.array([c.x, c.y])
        return np.zeros(2)

    def signed_distance(self, point):
        pts, single = _as_points(point)
        x, y = pts[:, 0], pts[:, 1]
        if self.kind == "circle":
            out = np.hypot(x, y) - self.params["radius"]
        elif self.kind == "rectangle":
            hw, hh = self.params["width"] / 2, self.params["height"] / 2
            qx, qy = np.abs(x) - hw, np.abs(y) - hh
            outside = np.hypot(np.maximum(qx, 0), np.maximum(qy, 0))
            out = outside + np.minimum(np.maximum(qx, qy), 0)
        else:
            dist = shapely.distance(self._geom.exterior, shapely.points(pts))
            inside = shapely.contains_xy(self._geom, x, y)
            out = np.where(inside, -dist, dist)
        return float(out[0]) if single else out

    def gradient(self, point) -> np.ndarray:
        """Unit outward normal field (normalised central-difference gradient)."""
        p = np.asarray(point, dtype=float)
        h = _GRAD_STEP
        probes = np.array([p + [h, 0], p - [h, 0], p + [0, h], p - [0, h]])
        v = self.signed_distance(probes)
        g = np.array([v[0] - v[1], v[2] - v[3]]) / (2 * h)
        norm = np.linalg.norm(g)
        if norm == 0:
            raise InputError(f"signed distance gradient vanishes at {p}")
        return g / norm

    def edge_orientation(self, point) -> float:
        """Edge orientation (deg) seen by a world-aligned sensor at ``point``."""
        n = self.gradient(point)
        return math.degrees(math.atan2(-n[0], n[1]))

    def boundary(self, n: int = 720) -> np.ndarray:
        if self.kind == "circle":
            a = np.linspace(0, 2 * np.pi, n, endpoint=False)
            r = self.params["radius"]
            return np.c_[r * np.cos(a), r * np.sin(a)]
        if self.kind == "rectangle":
            hw, hh = self.params["width"] / 2, self.params["height"] / 2
            return np.array([[-hw, -hh], [hw, -hh], [hw, hh], [-hw, hh]])
        return shapely.get_coordinates(self._geom.exterior)[:-1]

    def start_point(self) -> np.ndarray:
        """A boundary point used as the known starting contact."""
        p = self.params
        if self.kind == "rectangle":
            return np.array([0.0, -p["height"] / 2])
        if self.kind == "circle":
            return np.array([0.0, -p["radius"]])
        if self.kind == "flower":
            a = math.pi / 10
            r = p["r0"] + p["amp"]
            return np.array([r * math.cos(a), r * math.sin(a)])
        if self.kind == "spiral":
            a = math.pi / 2
            r = p["a"] + p["b"] * a
            return np.array([r * math.cos(a), r * math.sin(a)])
        verts = np.asarray(p["vertices"])
        return (verts[0] + verts[1]) / 2


def default_outline() -> np.ndarray:
    """Round body with one square corner, standing in for a natural object."""
    a = np.linspace(0, 1.5 * np.pi, 60)
    arc = np.c_[28 * np.cos(a), 28 * np.sin(a)]
    return np.vstack([arc, [[28.0, -28.0]]])


def load_polyline(path: str | Path) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.replace(",", " ").split()
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except (ValueError, IndexError):
            raise InputError(f"{path}:{lineno}: expected 'x, y', got {line!r}") from None
    return np.array(rows)
