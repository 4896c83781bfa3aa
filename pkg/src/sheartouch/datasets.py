"""Labelled frame collections: tap training sets and sliding test sets.

Both procedures act on a straight edge.  A tap descends onto the object with
no tangential motion, so the shear state is zero.  A slide visits the lateral
grid in order while the drag state accumulates one drag step per
recorded frame; the drag step is the part of the motion that runs along the
edge tangent.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigError, InputError
from .sensor import (N_DIMS, PinLayout, SensorModel, SensorPose, ShearState,
                     edge_normal, edge_tangent, simulate_frame, step_shear)

TRAIN_STREAM = 0
MULTIDIR_STREAM = 1


@dataclass
class LabeledDataset:
    frames: np.ndarray               # (N, 254)
    orientation: np.ndarray          # (N,) deg
    lateral: np.ndarray              # (N,) mm
    depth: np.ndarray                # (N,) mm
    slide_dir: np.ndarray            # (N,) deg, NaN for taps
    in_contact: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=float)
        n = len(self.frames)
        if self.frames.ndim != 2:
            raise InputError("frames must be a 2-D array")
        for name in ("orientation", "lateral", "depth", "slide_dir"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise InputError(f"{name} has {arr.shape} labels for {n} frames")
            setattr(self, name, arr)
        if self.in_contact is not None:
            self.in_contact = np.asarray(self.in_contact, dtype=bool)

    def __len__(self):
        return len(self.frames)

    @property
    def n_dims(self) -> int:
        return self.frames.shape[1]

    def pose(self, i: int) -> SensorPose:
        return SensorPose(self.orientation[i], self.lateral[i], self.depth[i])

    def subset(self, mask) -> "LabeledDataset":
        idx = np.flatnonzero(mask) if np.asarray(mask).dtype == bool else np.asarray(mask)
        return LabeledDataset(
            self.frames[idx], self.orientation[idx], self.lateral[idx], self.depth[idx],
            self.slide_dir[idx],
            None if self.in_contact is None else self.in_contact[idx],
            dict(self.meta),
        )

    def find(self, orientation, lateral, depth=None, slide_dir=None) -> int:
        """Index of the first frame matching the given labels."""
        mask = np.isclose(self.orientation, orientation) & np.isclose(self.lateral, lateral)
        if depth is not None:
            mask &= np.isclose(self.depth, depth)
        if slide_dir is not None:
            mask &= np.isclose(self.slide_dir, slide_dir)
        hits = np.flatnonzero(mask)
        if len(hits) == 0:
            raise KeyError((orientation, lateral, depth, slide_dir))
        return int(hits[0])


def _frame_seed(seed: int, stream: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, stream, index])


def _check_straight_edge(config: ExperimentConfig):
    if not config.orientations or not config.laterals:
        raise ConfigError("straight-edge collection needs orientation and lateral grids")


def collect_training_set(config: ExperimentConfig = ExperimentConfig(),
                         noise: bool = True) -> LabeledDataset:
    """Taps over orientation x lateral x depth, one frame per pose."""
    _check_straight_edge(config)
    layout = PinLayout.from_config(config)
    model = SensorModel.from_config(config)
    frames, labels = [], []
    for theta in config.orientations:
        for lateral in config.laterals:
            for depth in config.depths:
                pose = SensorPose(theta, lateral, depth)
                seed = _frame_seed(config.seed, TRAIN_STREAM, len(frames)) if noise else None
                frames.append(simulate_frame(layout, pose, ShearState(), seed, model))
                labels.append((pose.orientation_deg, lateral, depth))
    expected = len(config.orientations) * len(config.laterals) * len(config.depths)
    if len(frames) != expected:
        raise ConfigError(f"training grid produced {len(frames)} frames, expected {expected}")
    labels = np.array(labels)
    return LabeledDataset(
        np.array(frames), labels[:, 0], labels[:, 1], labels[:, 2],
        np.full(len(frames), np.nan), np.zeros(len(frames), dtype=bool),
        meta={"kind": "train", "seed": config.seed,
              "orientations": list(config.orientations),
              "laterals": list(config.laterals), "depths": list(config.depths)},
    )


def slide_vector(orientation_deg: float, direction_deg: float) -> np.ndarray:
    """Unit motion in the sensor frame for a sliding direction relative to the edge.

    0 deg moves straight onto the material, 180 deg straight off it; 90 and 270
    run along the edge.
    """
    psi = math.radians(direction_deg)
    n = edge_normal(orientation_deg)
    t = edge_tangent(orientation_deg)
    vec = -math.cos(psi) * n - math.sin(psi) * t
    vec[np.abs(vec) < 1e-15] = 0.0
    return vec


def slide_lateral_sequence(laterals, direction_deg: float) -> list[float]:
    """Lateral visiting order: start on the material for directions 90-270."""
    order = sorted(laterals, reverse=True)
    if 90.0 <= direction_deg <= 270.0:
        order = order[::-1]
    return order


def slide_run(layout: PinLayout, model: SensorModel, orientation: float, direction: float,
              laterals, depth: float, seeds=None):
    """Frames, drag states and contact flags for one sliding pass."""
    tangent = edge_tangent(orientation)
    # only the motion along the edge drags the skin; slide_vector's along-edge part is -sin(psi)
    along_mag = -math.sin(math.radians(direction))
    along = (0.0 if abs(along_mag) < 1e-12 else along_mag) * tangent
    along_edge = abs(math.cos(math.radians(direction))) < 1e-9
    shear = ShearState()
    prev = None
    out = []
    for k, lateral in enumerate(slide_lateral_sequence(laterals, direction)):
        contact = along_edge or model.touches(lateral, depth)
        if prev is None:
            shear = ShearState((0.0, 0.0), contact)
        else:
            step = abs(lateral - prev) * along
            shear = step_shear(shear, step, contact, model.lam, model.s_max)
        prev = lateral
        pose = SensorPose(orientation, lateral, depth)
        seed = None if seeds is None else seeds[k]
        out.append((pose, shear, simulate_frame(layout, pose, shear, seed, model)))
    return out


def collect_multidirectional_set(config: ExperimentConfig = ExperimentConfig(),
                                 noise: bool = True) -> LabeledDataset:
    """Slides over orientation x direction, each passing all lateral positions."""
    _check_straight_edge(config)
    layout = PinLayout.from_config(config)
    model = SensorModel.from_config(config)
    n_lat = len(config.laterals)
    frames, labels, contact = [], [], []
    for theta in config.orientations:
        for direction in config.directions:
            base = len(frames)
            seeds = ([_frame_seed(config.seed, MULTIDIR_STREAM, base + k) for k in range(n_lat)]
                     if noise else None)
            for pose, shear, frame in slide_run(layout, model, theta, direction,
                                                config.laterals, config.multidir_depth, seeds):
                frames.append(frame)
                labels.append((pose.orientation_deg, pose.lateral_mm, pose.depth_mm, direction))
                contact.append(shear.in_contact)
    expected = len(config.orientations) * len(config.directions) * n_lat
    if len(frames) != expected:
        raise ConfigError(f"multi-directional grid produced {len(frames)} frames, expected {expected}")
    labels = np.array(labels)
    return LabeledDataset(
        np.array(frames), labels[:, 0], labels[:, 1], labels[:, 2], labels[:, 3],
        np.array(contact),
        meta={"kind": "multidir", "seed": config.seed,
              "orientations": list(config.orientations),
              "laterals": list(config.laterals), "depths": [config.multidir_depth],
              "directions": list(config.directions)},
    )


# -- CSV ----------------------------------------------------------------------

def _num(v: float) -> str:
    return repr(float(v))


def write_dataset_csv(dataset: LabeledDataset, path: str | Path) -> None:
    header = ["frame_id", "orientation_deg", "lateral_mm", "depth_mm", "slide_dir_deg"]
    header += [f"s_{k}" for k in range(dataset.n_dims)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(len(dataset)):
            sd = dataset.slide_dir[i]
            row = [str(i), _num(dataset.orientation[i]), _num(dataset.lateral[i]),
                   _num(dataset.depth[i]), "" if math.isnan(sd) else _num(sd)]
            row += [_num(v) for v in dataset.frames[i]]
            writer.writerow(row)


def read_dataset_csv(path: str | Path) -> LabeledDataset:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        if header[:5] != ["frame_id", "orientation_deg", "lateral_mm", "depth_mm", "slide_dir_deg"]:
            raise InputError(f"{path}:1: unexpected header {header[:5]}")
        n_dims = len(header) - 5
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                values = [float(v) if v != "" else math.nan for v in row[1:]]
            except ValueError:
                raise InputError(f"{path}:{lineno}: non-numeric field") from None
            rows.append(values)
    if not rows:
        raise InputError(f"{path}: no data rows")
    arr = np.array(rows)
    slide = arr[:, 3]
    meta = {
        "kind": "train" if np.all(np.isnan(slide)) else "multidir",
        "orientations": sorted(set(arr[:, 0].tolist())),
        "laterals": sorted(set(arr[:, 1].tolist()), reverse=True),
        "depths": sorted(set(arr[:, 2].tolist())),
    }
    if meta["kind"] == "multidir":
        meta["directions"] = sorted(set(slide.tolist()))
    if n_dims != N_DIMS:
        meta["n_dims"] = n_dims
    return LabeledDataset(arr[:, 4:], arr[:, 0], arr[:, 1], arr[:, 2], slide, meta=meta)
