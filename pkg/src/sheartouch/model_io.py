"""Plain-text export and import of fitted models.

The format is line oriented::

    sheartouch-model 1
    text kind perception
    scalar gp_sin.sf2 0.21
    array gp_sin.X 252 4
    <252 rows of 4 floats>

Floats are written with ``repr`` so a reload reproduces every bit.  GP models
are stored as hyperparameters plus training data and refactorised on load.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from . import features as F
from .errors import InputError
from .perception import BaselineModel, PerceptionModel
from .regression import GPModel, KernelParams, PoseGPs, Standardizer, condition

MAGIC = "sheartouch-model 1"


class _Writer:
    def __init__(self):
        self.lines = [MAGIC]

    def text(self, name, value):
        self.lines.append(f"text {name} {value}")

    def scalar(self, name, value):
        self.lines.append(f"scalar {name} {float(value)!r}")

    def array(self, name, arr):
        a = np.asarray(arr, dtype=float)
        a2 = a.reshape(1, -1) if a.ndim <= 1 else a
        kind = "vector" if a.ndim <= 1 else "array"
        self.lines.append(f"{kind} {name} {a2.shape[0]} {a2.shape[1]}")
        self.lines.extend(" ".join(repr(float(v)) for v in row) for row in a2)


def _read(path):
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise InputError(f"{path}:1: not a model file (expected {MAGIC!r})")
    out = {}
    i = 1
    while i < len(lines):
        lineno = i + 1
        parts = lines[i].split()
        i += 1
        if not parts:
            continue
        try:
            kind, name = parts[0], parts[1]
            if kind == "text":
                out[name] = " ".join(parts[2:])
            elif kind == "scalar":
                out[name] = float(parts[2])
            elif kind in ("array", "vector"):
                rows, cols = int(parts[2]), int(parts[3])
                block = [lines[i + r].split() for r in range(rows)]
                for r, row in enumerate(block):
                    if len(row) != cols:
                        raise ValueError(f"row {r} of {name} has {len(row)} values, expected {cols}")
                arr = np.array(block, dtype=float).reshape(rows, cols)
                out[name] = arr[0] if kind == "vector" else arr
                i += rows
            else:
                raise ValueError(f"unknown entry kind {kind!r}")
        except (IndexError, ValueError) as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from None
    return out


def _need(d, name, path):
    if name not in d:
        raise InputError(f"{path}: missing entry {name!r}")
    return d[name]


def _put_gp(w: _Writer, prefix: str, gp: GPModel):
    w.scalar(f"{prefix}.sf2", gp.params.signal_variance)
    w.array(f"{prefix}.lengthscales", gp.params.lengthscales)
    w.scalar(f"{prefix}.sn2", gp.params.noise_variance)
    w.scalar(f"{prefix}.mean", gp.mean_constant)
    w.array(f"{prefix}.X", gp.train_inputs)
    w.array(f"{prefix}.y", gp.train_targets)


def _get_gp(d, prefix, path) -> GPModel:
    params = KernelParams(_need(d, f"{prefix}.sf2", path),
                          _need(d, f"{prefix}.lengthscales", path),
                          _need(d, f"{prefix}.sn2", path))
    return condition(_need(d, f"{prefix}.X", path), _need(d, f"{prefix}.y", path),
                     params, _need(d, f"{prefix}.mean", path))


def _put_pose_gps(w, gps: PoseGPs):
    for name in ("gp_sin", "gp_cos", "gp_lat"):
        _put_gp(w, name, getattr(gps, name))


def _get_pose_gps(d, path) -> PoseGPs:
    return PoseGPs(*(_get_gp(d, name, path) for name in ("gp_sin", "gp_cos", "gp_lat")))


def save_gp(gp: GPModel, path) -> None:
    w = _Writer()
    w.text("kind", "gp")
    _put_gp(w, "gp", gp)
    Path(path).write_text("\n".join(w.lines) + "\n")


def load_gp(path) -> GPModel:
    d = _read(path)
    if d.get("kind") != "gp":
        raise InputError(f"{path}: model kind {d.get('kind')!r} is not 'gp'")
    return _get_gp(d, "gp", path)


def save_model(model, path) -> None:
    """Write a ``PerceptionModel`` or ``BaselineModel``."""
    w = _Writer()
    for key, value in sorted(model.meta.items()):
        w.text(f"meta.{key}", value)
    if isinstance(model, PerceptionModel):
        w.text("kind", "perception")
        w.array("basis.mean", model.basis.mean)
        w.array("basis.eigenvectors", model.basis.eigenvectors)
        w.array("basis.variance_ratio", model.basis.explained_variance_ratio)
        o = model.origin
        w.array("origin.base", o.base_origin)
        w.array("origin.centers", o.sector_centers)
        w.array("origin.labels", o.sector_labels)
        w.array("origin.shifts", o.depth_shifts.reshape(-1, 2) if len(o.depth_shifts) else np.zeros((0, 2)))
        s = model.scaler
        w.array("scaler", [s.rho_mean, s.rho_std, s.phi_mean, s.phi_std])
    elif isinstance(model, BaselineModel):
        w.text("kind", "baseline")
    else:
        raise InputError(f"cannot export {type(model).__name__}")
    _put_pose_gps(w, model.gps)
    Path(path).write_text("\n".join(w.lines) + "\n")


def _meta(d):
    return {k[5:]: v for k, v in d.items() if k.startswith("meta.")}


def load_model(path):
    d = _read(path)
    kind = d.get("kind")
    gps = _get_pose_gps(d, path)
    if kind == "baseline":
        return BaselineModel(gps, meta=_meta(d))
    if kind != "perception":
        raise InputError(f"{path}: unknown model kind {kind!r}")
    basis = F.ProjectionBasis(_need(d, "basis.mean", path), _need(d, "basis.eigenvectors", path),
                              _need(d, "basis.variance_ratio", path))
    shifts = d.get("origin.shifts", np.zeros((0, 2)))
    origin = F.OriginModel(_need(d, "origin.base", path), np.atleast_1d(d.get("origin.centers", np.zeros(0))),
                           np.atleast_1d(d.get("origin.labels", np.zeros(0))),
                           np.asarray(shifts).reshape(-1, 2))
    scaler = Standardizer(*map(float, _need(d, "scaler", path)))
    return PerceptionModel(basis, origin, scaler, gps, meta=_meta(d))
