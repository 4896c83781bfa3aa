"""End-to-end pose perception: PCA features -> pruned training -> three GPs."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import features as F
from .circular import circular_error
from .errors import DimensionError, FitError
from .regression import (PoseGPs, Standardizer, fit_baseline, fit_pose_gps,
                         spherical_inputs)


@dataclass(frozen=True)
class PosePrediction:
    theta_hat_deg: float
    lateral_hat_mm: float
    theta_component_means: tuple[float, float]
    variances: tuple[float, float, float]
    rho: float = float("nan")


@dataclass(frozen=True)
class PerceptionModel:
    basis: F.ProjectionBasis
    origin: F.OriginModel
    scaler: Standardizer
    gps: PoseGPs
    meta: dict = field(default_factory=dict, compare=False)

    def features(self, frames):
        """Projected points and spherical features for rows of frames."""
        P = F.project(self.basis, frames)
        return P, F.to_spherical(P, self.origin)

    def predict_many(self, frames):
        Z = np.atleast_2d(np.asarray(frames, dtype=float))
        _, sph = self.features(Z)
        X = spherical_inputs(sph, self.scaler)
        theta, lat, comps, var = self.gps.predict(X)
        return theta, lat, sph[:, 0], comps, var


@dataclass(frozen=True)
class BaselineModel:
    gps: PoseGPs
    meta: dict = field(default_factory=dict, compare=False)

    def predict_many(self, frames):
        Z = np.atleast_2d(np.asarray(frames, dtype=float))
        if Z.shape[1] != self.gps.gp_sin.n_dims:
            raise DimensionError(f"frame length {Z.shape[1]} != {self.gps.gp_sin.n_dims}")
        theta, lat, comps, var = self.gps.predict(Z)
        return theta, lat, np.full(len(Z), np.nan), comps, var


@dataclass
class TrainingSelection:
    """Which training points survived pruning, kept for inspection."""

    orientation_keep: np.ndarray
    lateral_keep: np.ndarray
    S_orientation: np.ndarray
    S_lateral: np.ndarray


def select_training(P, dataset, min_keep: float = 0.9) -> TrainingSelection:
    S_o = F.compute_sensitivities(P, dataset.orientation, np.c_[dataset.lateral, dataset.depth])
    S_l = F.compute_sensitivities(P, dataset.lateral, np.c_[dataset.orientation, dataset.depth])
    return TrainingSelection(F.prune_mask(S_o, "orientation"),
                             F.prune_mask(S_l, "lateral", min_keep), S_o, S_l)


def fit_perception(train, restarts: int = 5, seed: int = 0,
                   no_contact_lateral: float = 9.9, return_selection: bool = False):
    """Fit PCA, the origin model, pruning and the three pose GPs."""
    touching = ~np.isclose(train.lateral, no_contact_lateral)
    if len(np.unique(train.lateral[touching])) < 2 or len(np.unique(train.orientation)) < 2:
        raise FitError("training set needs contact frames at 2+ lateral positions and orientations")
    basis = F.fit_pca(train, 3)
    origin = F.fit_origin_model(basis, train, no_contact_lateral)
    P = F.project(basis, train.frames)
    sph = F.to_spherical(P, origin)
    sel = select_training(P, train)
    scaler = Standardizer.fit(sph)
    X = spherical_inputs(sph, scaler)
    ko, kl = sel.orientation_keep, sel.lateral_keep
    gps = fit_pose_gps(X[ko], train.orientation[ko], X[kl], train.lateral[kl],
                       restarts=restarts, seed=seed)
    model = PerceptionModel(basis, origin, scaler, gps,
                            meta={"n_train": len(train), "n_orientation": int(ko.sum()),
                                  "n_lateral": int(kl.sum()), "seed": seed})
    return (model, sel) if return_selection else model


def fit_baseline_model(train, restarts: int = 5, seed: int = 0) -> BaselineModel:
    gps = fit_baseline(train.frames, train.orientation, train.lateral, restarts, seed)
    return BaselineModel(gps, meta={"n_train": len(train), "seed": seed})


def perceive(model, frame) -> PosePrediction:
    frame = np.asarray(frame, dtype=float)
    if frame.ndim != 1:
        raise DimensionError("perceive takes a single frame")
    theta, lat, rho, (fs, fc), (vs, vc, vl) = model.predict_many(frame[None, :])
    return PosePrediction(float(theta[0]), float(lat[0]), (float(fs[0]), float(fc[0])),
                          (float(vs[0]), float(vc[0]), float(vl[0])), float(rho[0]))


# -- offline evaluation ----------------------------------------------------------

@dataclass
class EvaluationReport:
    model_name: str
    cells: dict                 # (direction, group) -> (count, rms_deg)
    lateral_rms_mm: float
    n_frames: int
    n_excluded: int
    include_no_contact: bool
    directions: list

    def rms(self, direction, group="On"):
        cell = self.cells.get((float(direction), group))
        return None if cell is None else cell[1]

    def mean_rms(self, group: str) -> float:
        vals = [rms for (d, g), (n, rms) in self.cells.items() if g == group]
        return float(np.mean(vals)) if vals else float("nan")


def along_edge(direction: float) -> bool:
    return abs(math.cos(math.radians(direction))) < 1e-9


def evaluate_predictions(name, theta_hat, lateral_hat, dataset, include_no_contact: bool = False,
                         no_contact_lateral: float = 9.9) -> EvaluationReport:
    """Circular RMS per (direction, On/Off) cell; On means lateral <= 0."""
    err = circular_error(theta_hat, dataset.orientation)
    use = np.ones(len(dataset), dtype=bool)
    if not include_no_contact:
        use &= ~np.isclose(dataset.lateral, no_contact_lateral)
    directions = sorted(set(dataset.slide_dir[~np.isnan(dataset.slide_dir)].tolist()))
    cells = {}
    for d in directions:
        in_dir = use & np.isclose(dataset.slide_dir, d)
        groups = {"On": in_dir} if along_edge(d) else {
            "On": in_dir & (dataset.lateral <= 0), "Off": in_dir & (dataset.lateral > 0)}
        for g, mask in groups.items():
            if mask.any():
                cells[(float(d), g)] = (int(mask.sum()), float(np.sqrt(np.mean(err[mask] ** 2))))
    lat_err = np.asarray(lateral_hat)[use] - dataset.lateral[use]
    return EvaluationReport(name, cells, float(np.sqrt(np.mean(lat_err ** 2))), len(dataset),
                            int((~use).sum()), include_no_contact, directions)


def evaluate_offline(model, baseline, multi, include_no_contact: bool = False,
                     no_contact_lateral: float = 9.9):
    """Reports for the PCA pipeline and the raw-pin baseline (``None`` to skip)."""
    reports = []
    for name, m in (("PCA + GP", model), ("GP baseline", baseline)):
        if m is None:
            reports.append(None)
            continue
        theta, lat, *_ = m.predict_many(multi.frames)
        reports.append(evaluate_predictions(name, theta, lat, multi, include_no_contact,
                                            no_contact_lateral))
    return tuple(reports)


def table_columns(directions):
    cols = []
    for d in directions:
        groups = ("On",) if along_edge(d) else ("On", "Off")
        cols += [(float(d), g) for g in groups]
    return cols


def write_table_csv(reports, path: str | Path) -> None:
    """Wide layout: one row per model, one column per direction/group cell."""
    reports = [r for r in reports if r is not None]
    cols = table_columns(reports[0].directions)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model"] + [f"dir{d:g}_{g}" for d, g in cols] + ["lateral_rms_mm"])
        for r in reports:
            row = [r.model_name]
            for c in cols:
                cell = r.cells.get(c)
                row.append("" if cell is None else repr(cell[1]))
            writer.writerow(row + [repr(r.lateral_rms_mm)])


def write_long_csv(reports, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "direction_deg", "group", "count", "rms_deg",
                         "include_no_contact"])
        for r in reports:
            if r is None:
                continue
            for (d, g), (n, rms) in sorted(r.cells.items()):
                writer.writerow([r.model_name, f"{d:g}", g, n, repr(rms), int(r.include_no_contact)])
