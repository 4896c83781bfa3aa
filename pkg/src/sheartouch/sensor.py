"""Synthetic compliant pin-field sensor.

The sensor is a disc of 127 pins on a hexagonal grid.  A reading is the
flattened vector of pin pixel positions, ``[x0, y0, x1, y1, ...]``.  Contact
with a straight edge deforms the pin field through two terms:

* contact spread -- pins move radially away from a spread center,
  proportional to the contact footprint radius of the dome at the current
  depth and to soft coverage.  The center blends the
  coverage-weighted geometric median (no net translation, so tangential drag
  leaves the orientation feature untouched) with the weighted centroid (which
  leaks some drag into it);
* shear drag -- covered pins move along the accumulated tangential drag.

Additive Gaussian pixel noise is drawn from a caller-supplied seed.

Edge geometry in the sensor frame: a pose with orientation ``theta`` puts the
edge tangent along ``(cos theta, sin theta)`` and the outward normal of the
material along ``(-sin theta, cos theta)``.  ``lateral_mm`` is the signed
distance of the sensor midpoint from the edge, positive off the object.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circular import wrap_deg
from .config import ExperimentConfig
from .errors import DimensionError, InputError

N_PINS = 127
N_DIMS = 2 * N_PINS


@dataclass(frozen=True)
class PinLayout:
    """Rest positions of the pins in mm (sensor frame) plus the pixel scale."""

    rest_mm: np.ndarray
    px_per_mm: float = 5.0

    @classmethod
    def hexagonal(cls, pitch_mm: float = 3.0, px_per_mm: float = 5.0, rings: int = 6):
        pts = []
        for q in range(-rings, rings + 1):
            for r in range(-rings, rings + 1):
                if max(abs(q), abs(r), abs(q + r)) <= rings:
                    pts.append((pitch_mm * (q + r / 2.0), pitch_mm * r * math.sqrt(3) / 2.0))
        pts = np.array(pts)
        order = np.lexsort((np.round(pts[:, 0], 9), np.round(pts[:, 1], 9)))
        return cls(rest_mm=pts[order], px_per_mm=px_per_mm)

    @classmethod
    def from_config(cls, config: ExperimentConfig):
        return cls.hexagonal(config.pin_pitch, config.px_per_mm)

    @property
    def n_pins(self) -> int:
        return len(self.rest_mm)

    def rest_frame(self) -> np.ndarray:
        """Pixel positions of the undeformed sensor as a flat 254-vector."""
        return (self.rest_mm * self.px_per_mm).ravel()


@dataclass(frozen=True)
class SensorPose:
    orientation_deg: float
    lateral_mm: float
    depth_mm: float

    def __post_init__(self):
        if not 0.0 <= self.depth_mm <= 10.0:
            raise InputError(f"depth_mm={self.depth_mm} outside [0, 10]")
        object.__setattr__(self, "orientation_deg", wrap_deg(self.orientation_deg))


@dataclass(frozen=True)
class ShearState:
    drag_mm: tuple[float, float] = (0.0, 0.0)
    in_contact: bool = False

    @property
    def drag(self) -> np.ndarray:
        return np.asarray(self.drag_mm, dtype=float)


@dataclass(frozen=True)
class SensorModel:
    """Constants of the synthetic deformation model."""

    alpha: float = 2.0
    beta: float = 2.4
    w: float = 12.0
    lam: float = 0.7
    s_max: float = 6.0
    eta: float = 0.5
    contact_radius: float = 12.0
    spread_mix: float = 0.1

    @classmethod
    def from_config(cls, config: ExperimentConfig):
        return cls(config.alpha, config.beta, config.w, config.lam,
                   config.s_max, config.eta, config.contact_radius, config.spread_mix)

    def footprint_radius(self, depth_mm: float) -> float:
        """Radius of the contact patch of a spherical cap pressed ``depth_mm`` deep."""
        d = min(depth_mm, self.contact_radius)
        return math.sqrt(max(2.0 * self.contact_radius * d - d * d, 0.0))

    def touches(self, lateral_mm: float, depth_mm: float) -> bool:
        return depth_mm > 0 and lateral_mm < self.footprint_radius(depth_mm)


def edge_normal(orientation_deg: float) -> np.ndarray:
    """Outward material normal in the sensor frame for an edge orientation."""
    th = math.radians(orientation_deg)
    return np.array([-math.sin(th), math.cos(th)])


def edge_tangent(orientation_deg: float) -> np.ndarray:
    th = math.radians(orientation_deg)
    return np.array([math.cos(th), math.sin(th)])


def coverage(layout: PinLayout, pose: SensorPose, model: SensorModel) -> np.ndarray:
    """Soft coverage per pin, ``1 / (1 + exp(sdf / w))``, zero without contact."""
    if not model.touches(pose.lateral_mm, pose.depth_mm):
        return np.zeros(layout.n_pins)
    sdf = pose.lateral_mm + layout.rest_mm @ edge_normal(pose.orientation_deg)
    return 1.0 / (1.0 + np.exp(sdf / model.w))


def clamp_norm(vec: np.ndarray, cap: float) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm > cap:
        return vec * (cap / norm)
    return vec


def weighted_median(points: np.ndarray, weights: np.ndarray, iters: int = 200,
                    tol: float = 1e-10) -> np.ndarray:
    """Weighted geometric median (Weiszfeld iterations from the weighted mean).

    The weighted unit vectors from this point sum to zero.
    """
    m = (weights[:, None] * points).sum(axis=0) / weights.sum()
    for _ in range(iters):
        d = np.maximum(np.linalg.norm(points - m, axis=1), 1e-12)
        k = weights / d
        m_new = (k[:, None] * points).sum(axis=0) / k.sum()
        if np.linalg.norm(m_new - m) < tol:
            return m_new
        m = m_new
    return m


def spread_center(points: np.ndarray, weights: np.ndarray, mix: float = 0.1) -> np.ndarray:
    """``(1 - mix) * weighted median + mix * weighted centroid``."""
    centroid = (weights[:, None] * points).sum(axis=0) / weights.sum()
    if mix >= 1.0:
        return centroid
    return (1.0 - mix) * weighted_median(points, weights) + mix * centroid


def displacement_px(layout: PinLayout, pose: SensorPose, shear: ShearState,
                    model: SensorModel) -> np.ndarray:
    """Noise-free pin displacement field, shape (n_pins, 2), in px."""
    c = coverage(layout, pose, model)
    disp = np.zeros_like(layout.rest_mm)
    total = c.sum()
    if total <= 0.0:
        return disp
    rel = layout.rest_mm - spread_center(layout.rest_mm, c, model.spread_mix)
    dist = np.linalg.norm(rel, axis=1)
    unit = np.zeros_like(rel)
    nz = dist > 1e-12
    unit[nz] = rel[nz] / dist[nz, None]
    disp += model.alpha * model.footprint_radius(pose.depth_mm) * c[:, None] * unit
    drag = clamp_norm(shear.drag, model.s_max)
    disp += model.beta * c[:, None] * drag[None, :]
    return disp


def simulate_frame(layout: PinLayout, pose: SensorPose, shear: ShearState = ShearState(),
                   noise_seed=None, model: SensorModel = SensorModel()) -> np.ndarray:
    """One sensor reading (flat 254-vector of pin pixel positions).

    ``noise_seed`` may be an int, a ``SeedSequence`` or ``None``; ``None`` or
    ``model.eta == 0`` gives a noise-free frame.
    """
    frame = layout.rest_frame() + displacement_px(layout, pose, shear, model).ravel()
    if noise_seed is not None and model.eta > 0:
        rng = np.random.default_rng(noise_seed)
        frame = frame + rng.normal(0.0, model.eta, size=frame.shape)
    return frame


def step_shear(shear: ShearState, tangential_step_mm, in_contact: bool,
               lam: float = 0.7, s_max: float = 6.0) -> ShearState:
    """Advance the drag recurrence ``drag' = lam * drag + step`` (norm-capped)."""
    if not in_contact:
        return ShearState((0.0, 0.0), False)
    drag = lam * shear.drag + np.asarray(tangential_step_mm, dtype=float)
    drag = clamp_norm(drag, s_max)
    return ShearState((float(drag[0]), float(drag[1])), True)


def check_frame(frame, n_dims: int = N_DIMS) -> np.ndarray:
    arr = np.asarray(frame, dtype=float)
    if arr.shape != (n_dims,):
        raise DimensionError(f"expected a frame of length {n_dims}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("frame contains non-finite values")
    return arr
