"""Closed-loop contour following with a world-fixed sensor orientation.

Each step simulates a reading at the current midpoint, perceives the local
edge pose, and moves by an exploratory step along the perceived edge plus a
proportional correction of the perceived lateral offset.  The boundary under
the sensor is treated as the straight edge through the midpoint with the
local signed distance and normal.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circular import circular_rms, wrap_deg
from .config import ExperimentConfig
from .errors import InputError, TaskFailure
from .perception import perceive
from .sensor import PinLayout, SensorModel, SensorPose, ShearState, simulate_frame, step_shear

TASK_STREAM = 2
LOSS_STEPS = 5


@dataclass(frozen=True)
class ControlCommand:
    delta_u: np.ndarray


def rotation(theta_deg: float) -> np.ndarray:
    th = math.radians(theta_deg)
    c, s = math.cos(th), math.sin(th)
    return np.array([[c, -s], [s, c]])


def control_step(theta_hat_deg: float, lateral_hat_mm: float, l_d: float = 0.0,
                 e: float = 3.0, K: float = 0.35,
                 lateral_range: tuple[float, float] | None = (-6.0, 9.9)) -> ControlCommand:
    """``R(theta) @ (e, K * (l_d - l_hat))`` with ``l_hat`` clamped to the trained range.

    A negative ``e`` walks against the edge tangent.
    """
    if lateral_range is not None:
        lateral_hat_mm = float(np.clip(lateral_hat_mm, *lateral_range))
    local = np.array([e, K * (l_d - lateral_hat_mm)])
    return ControlCommand(rotation(theta_hat_deg) @ local)


@dataclass
class TrajectoryLog:
    shape_kind: str
    start: np.ndarray
    step: list = field(default_factory=list)
    x_mm: list = field(default_factory=list)
    y_mm: list = field(default_factory=list)
    theta_hat_deg: list = field(default_factory=list)
    lateral_hat_mm: list = field(default_factory=list)
    rho: list = field(default_factory=list)
    true_sdf_mm: list = field(default_factory=list)
    true_theta_deg: list = field(default_factory=list)
    completed: bool = False
    stop_reason: str = ""

    def __len__(self):
        return len(self.step)

    @property
    def positions(self) -> np.ndarray:
        return np.c_[self.x_mm, self.y_mm] if self.step else np.zeros((0, 2))

    def append(self, k, pos, theta_hat, lat_hat, rho, sdf, theta_true):
        self.step.append(int(k))
        self.x_mm.append(float(pos[0]))
        self.y_mm.append(float(pos[1]))
        self.theta_hat_deg.append(float(theta_hat))
        self.lateral_hat_mm.append(float(lat_hat))
        self.rho.append(float(rho))
        self.true_sdf_mm.append(float(sdf))
        self.true_theta_deg.append(float(theta_true))


def model_perceiver(model):
    """Perceiver backed by a fitted pose model: ``(frame, pose) -> (theta, lateral, rho)``."""
    def run(frame, pose):
        p = perceive(model, frame)
        return p.theta_hat_deg, p.lateral_hat_mm, p.rho
    return run


def oracle_perceiver(frame, pose):
    """True edge pose; rho is NaN so contact-loss checks are skipped."""
    return pose.orientation_deg, pose.lateral_mm, math.nan


def _winding_step(prev_angle, pos, center):
    ang = math.atan2(pos[1] - center[1], pos[0] - center[0])
    if prev_angle is None:
        return ang, 0.0
    return ang, (ang - prev_angle + math.pi) % (2 * math.pi) - math.pi


def follow_contour(model, shape, start=None, n_steps: int | None = None,
                   config: ExperimentConfig = ExperimentConfig(), perceiver=None,
                   noise: bool = True) -> TrajectoryLog:
    """Run the perceive-move loop; closed shapes stop after one winding.

    Raises ``TaskFailure`` (with the partial log) when rho stays below
    ``config.rho_floor`` for five consecutive steps.
    """
    start = shape.start_point() if start is None else np.asarray(start, dtype=float)
    if abs(shape.signed_distance(start)) > 2.0:
        raise InputError("start point must lie within 2 mm of the boundary")
    n_steps = config.max_steps if n_steps is None else int(n_steps)
    perceiver = model_perceiver(model) if perceiver is None else perceiver
    layout = PinLayout.from_config(config)
    sensor = SensorModel.from_config(config)
    e = config.e if config.traversal == "cw" else -config.e
    lat_range = config.lateral_range

    log = TrajectoryLog(shape.kind, start.copy())
    pos = start.copy()
    shear = ShearState()
    low_rho = 0
    wind_angle, winding = None, 0.0
    for k in range(n_steps):
        sdf = shape.signed_distance(pos)
        theta_true = shape.edge_orientation(pos)
        pose = SensorPose(theta_true, sdf, config.task_depth)
        seed = np.random.SeedSequence([config.seed, TASK_STREAM, k]) if noise else None
        frame = simulate_frame(layout, pose, shear, seed, sensor)
        theta_hat, lat_hat, rho = perceiver(frame, pose)
        log.append(k, pos, theta_hat, lat_hat, rho, sdf, theta_true)

        low_rho = low_rho + 1 if rho < config.rho_floor else 0
        if low_rho >= LOSS_STEPS:
            log.stop_reason = "contact lost"
            raise TaskFailure(f"contact lost at step {k} ({shape.kind})", log)

        if shape.closed:
            wind_angle, dw = _winding_step(wind_angle, pos, shape.center)
            winding += dw
            if k > 0 and abs(winding) >= 2 * math.pi:
                log.completed, log.stop_reason = True, "loop closed"
                return log

        du = control_step(theta_hat, lat_hat, config.l_d, e, config.K, lat_range).delta_u
        tangent = np.array([math.cos(math.radians(theta_true)), math.sin(math.radians(theta_true))])
        shear = step_shear(shear, float(du @ tangent) * tangent,
                           sensor.touches(sdf, config.task_depth), sensor.lam, sensor.s_max)
        pos = pos + du

    log.completed = not shape.closed
    log.stop_reason = "step budget"
    return log


@dataclass(frozen=True)
class TrajectoryMetrics:
    orientation_rms_deg: float
    max_deviation_mm: float
    rms_deviation_mm: float
    loop_closure_mm: float
    n_steps: int
    completed: bool


def trajectory_metrics(log: TrajectoryLog, shape) -> TrajectoryMetrics:
    """Orientation RMS against the true tangent plus boundary deviation statistics."""
    if len(log) == 0:
        raise InputError("empty trajectory")
    sdf = np.asarray(log.true_sdf_mm)
    closure = float(np.linalg.norm(log.positions[-1] - log.start)) if shape.closed else math.nan
    return TrajectoryMetrics(
        circular_rms(log.theta_hat_deg, log.true_theta_deg),
        float(np.max(np.abs(sdf))),
        float(np.sqrt(np.mean(sdf ** 2))),
        closure, len(log), log.completed,
    )


def write_trajectory_csv(log: TrajectoryLog, path: str | Path) -> None:
    cols = ["step", "x_mm", "y_mm", "theta_hat_deg", "lateral_hat_mm", "rho", "true_sdf_mm"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for i in range(len(log)):
            writer.writerow([log.step[i]] + [repr(getattr(log, c)[i]) for c in cols[1:]])


def perceived_normals(log: TrajectoryLog) -> np.ndarray:
    """Unit outward normals implied by the perceived orientations, one per step."""
    th = np.radians(wrap_deg(np.asarray(log.theta_hat_deg)))
    return np.c_[-np.sin(th), np.cos(th)]
