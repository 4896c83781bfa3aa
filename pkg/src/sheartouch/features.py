"""PCA projection, modified spherical coordinates and sensitivity pruning."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, FitError, InputError


@dataclass(frozen=True)
class ProjectionBasis:
    mean: np.ndarray                      # (D,)
    eigenvectors: np.ndarray              # (D, k), orthonormal columns
    explained_variance_ratio: np.ndarray  # (k,)

    @property
    def n_components(self) -> int:
        return self.eigenvectors.shape[1]

    @property
    def n_dims(self) -> int:
        return len(self.mean)


def fit_pca(frames, n_components: int = 3) -> ProjectionBasis:
    """Top principal directions of a frame matrix (or a ``LabeledDataset``).

    Each eigenvector is signed so that its largest-magnitude entry is positive.
    """
    X = np.asarray(getattr(frames, "frames", frames), dtype=float)
    if X.ndim != 2 or len(X) < 4:
        raise FitError(f"PCA needs at least 4 frames, got {len(X)}")
    mean = X.mean(axis=0)
    cov = np.cov(X, rowvar=False, ddof=1)
    evals, evecs = np.linalg.eigh(cov)
    evals = np.clip(evals[::-1], 0.0, None)
    evecs = evecs[:, ::-1]
    total = evals.sum()
    if not total > 1e-12 * max(1.0, float(np.abs(X).max()) ** 2):
        raise FitError("data has zero total variance")
    E = evecs[:, :n_components].copy()
    for j in range(E.shape[1]):
        if E[np.argmax(np.abs(E[:, j])), j] < 0:
            E[:, j] = -E[:, j]
    return ProjectionBasis(mean, E, evals[:n_components] / total)


def project(basis: ProjectionBasis, frames) -> np.ndarray:
    """``E^T (z - mean)`` for one frame (returns k-vector) or many (rows)."""
    Z = np.asarray(frames, dtype=float)
    if Z.shape[-1] != basis.n_dims:
        raise DimensionError(f"frame length {Z.shape[-1]} != basis dimension {basis.n_dims}")
    return (Z - basis.mean) @ basis.eigenvectors


# -- modified spherical coordinates --------------------------------------------

@dataclass(frozen=True)
class OriginModel:
    base_origin: np.ndarray        # (3,) PC-space origin
    sector_centers: np.ndarray     # (S,) theta_PC23 of each sector, deg
    sector_labels: np.ndarray      # (S,) training orientation of each sector, deg
    depth_shifts: np.ndarray       # (S, 2) PC2-PC3 offsets

    @classmethod
    def at(cls, origin=(0.0, 0.0, 0.0)):
        """Origin without depth shifts."""
        return cls(np.asarray(origin, dtype=float), np.zeros(0), np.zeros(0), np.zeros((0, 2)))

    def sector_of(self, theta_pc23_deg) -> np.ndarray:
        if len(self.sector_centers) == 0:
            return np.full(np.shape(theta_pc23_deg), -1, dtype=int)
        diff = np.asarray(theta_pc23_deg)[..., None] - self.sector_centers
        dist = np.abs(np.mod(diff + 180.0, 360.0) - 180.0)
        return np.argmin(dist, axis=-1)

    def shift_for(self, points) -> np.ndarray:
        """PC2-PC3 shift applied to each point, shape (..., 2).

        Shifts are interpolated linearly in angle between the two neighbouring
        sector centers, so the origin moves continuously with theta_PC23.
        """
        pts = np.asarray(points, dtype=float)
        n = len(self.sector_centers)
        if n == 0:
            return np.zeros(pts.shape[:-1] + (2,))
        if n == 1:
            return np.broadcast_to(self.depth_shifts[0], pts.shape[:-1] + (2,)).copy()
        rel = pts - self.base_origin
        theta = np.degrees(np.arctan2(rel[..., 2], rel[..., 1]))
        order = np.argsort(self.sector_centers)
        centers = self.sector_centers[order]
        shifts = self.depth_shifts[order]
        # gap from each center to the next one going counterclockwise
        gaps = np.mod(np.roll(centers, -1) - centers, 360.0)
        gaps[gaps == 0] = 360.0
        offset = np.mod(theta[..., None] - centers, 360.0)
        lower = np.argmin(np.where(offset < gaps, offset, np.inf), axis=-1)
        frac = np.take_along_axis(offset, lower[..., None], -1)[..., 0] / gaps[lower]
        upper = (lower + 1) % n
        return (1.0 - frac)[..., None] * shifts[lower] + frac[..., None] * shifts[upper]


def _cartesian_to_spherical(q: np.ndarray) -> np.ndarray:
    pc1, pc2, pc3 = q[..., 0], q[..., 1], q[..., 2]
    rho = np.sqrt(pc1 ** 2 + pc2 ** 2 + pc3 ** 2)
    theta = np.degrees(np.arctan2(pc3, pc2))
    theta = np.where(theta == -180.0, 180.0, theta)
    phi = np.degrees(np.arctan2(np.hypot(pc2, pc3), pc1))
    return np.stack([rho, theta, phi], axis=-1)


def to_spherical(points, origin: OriginModel | None = None) -> np.ndarray:
    """(rho, theta_PC23 in deg, phi in deg) per projected point.

    The origin is subtracted first; the sector depth shift moves it further
    within the PC2-PC3 plane.  A point at the origin maps to (0, 0, 0).
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != 3:
        raise DimensionError(f"projected points must have 3 components, got {pts.shape[-1]}")
    origin = origin or OriginModel.at()
    q = pts - origin.base_origin
    shift = origin.shift_for(pts)
    q = q.copy()
    q[..., 1:3] -= shift
    return _cartesian_to_spherical(q)


def from_spherical(sph) -> np.ndarray:
    """Inverse of :func:`to_spherical` for an origin at zero."""
    s = np.asarray(sph, dtype=float)
    rho, th, ph = s[..., 0], np.radians(s[..., 1]), np.radians(s[..., 2])
    return np.stack([rho * np.cos(ph), rho * np.sin(ph) * np.cos(th),
                     rho * np.sin(ph) * np.sin(th)], axis=-1)


def _align_shift(v_shallow, a_shallow, v_deep, a_deep, u):
    """Scalar s so that moving the PC2-PC3 origin by s*u equalises phi."""
    if a_shallow * a_deep <= 0:
        return 0.0
    A, B = a_shallow ** 2, a_deep ** 2
    # B*|v_shallow - s u|^2 = A*|v_deep - s u|^2
    c2 = B - A
    c1 = -2.0 * (B * (u @ v_shallow) - A * (u @ v_deep))
    c0 = B * (v_shallow @ v_shallow) - A * (v_deep @ v_deep)
    if abs(c2) < 1e-15 * max(A, B):
        return -c0 / c1 if c1 != 0 else 0.0
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        return -c1 / (2 * c2)
    roots = [(-c1 + math.sqrt(disc)) / (2 * c2), (-c1 - math.sqrt(disc)) / (2 * c2)]
    return min(roots, key=abs)


def fit_origin_model(basis: ProjectionBasis, dataset, no_contact_lateral: float = 9.9,
                     mid_lateral: float = 0.0) -> OriginModel:
    """Origin at the first no-contact frame, plus per-sector depth alignment."""
    hits = np.flatnonzero(np.isclose(dataset.lateral, no_contact_lateral))
    if len(hits) == 0:
        raise FitError(f"dataset has no no-contact frame (lateral {no_contact_lateral} mm)")
    base = project(basis, dataset.frames[hits[0]])
    depths = np.unique(dataset.depth)
    if len(depths) < 2:
        return OriginModel.at(base)

    shallow, deep = depths.min(), depths.max()
    P = project(basis, dataset.frames) - base
    centers, labels, shifts = [], [], []
    for theta in np.unique(dataset.orientation):
        sel = np.isclose(dataset.orientation, theta) & np.isclose(dataset.lateral, mid_lateral)
        s_rows = P[sel & np.isclose(dataset.depth, shallow)]
        d_rows = P[sel & np.isclose(dataset.depth, deep)]
        if len(s_rows) == 0 or len(d_rows) == 0:
            continue
        ps, pd = s_rows.mean(axis=0), d_rows.mean(axis=0)
        v_s, v_d = ps[1:3], pd[1:3]
        direction = v_s / max(np.linalg.norm(v_s), 1e-300) + v_d / max(np.linalg.norm(v_d), 1e-300)
        norm = np.linalg.norm(direction)
        u = direction / norm if norm > 0 else np.array([1.0, 0.0])
        s = _align_shift(v_s, ps[0], v_d, pd[0], u)
        angles = np.arctan2(np.r_[s_rows[:, 2], d_rows[:, 2]], np.r_[s_rows[:, 1], d_rows[:, 1]])
        centers.append(math.degrees(math.atan2(np.sin(angles).mean(), np.cos(angles).mean())))
        labels.append(theta)
        shifts.append(s * u)
    if not centers:
        return OriginModel.at(base)
    return OriginModel(base, np.array(centers), np.array(labels), np.array(shifts))


# -- sensitivity and pruning ---------------------------------------------------

def slice_sensitivity(points, labels) -> np.ndarray:
    """Feature change per unit label change along one label-sorted slice.

    Interior points average their two one-sided quotients; endpoints take the
    single adjacent quotient.
    """
    P = np.asarray(points, dtype=float)
    w = np.asarray(labels, dtype=float)
    if len(P) < 2:
        raise InputError("a sensitivity slice needs at least 2 points")
    dw = np.abs(np.diff(w))
    if np.any(dw == 0):
        raise InputError("consecutive points share a label value (|dw| = 0)")
    dp = np.linalg.norm(np.diff(P, axis=0), axis=1)
    q = dp / dw
    S = np.empty(len(P))
    S[0], S[-1] = q[0], q[-1]
    S[1:-1] = 0.5 * (q[:-1] + q[1:])
    return S


def compute_sensitivities(points, labels, groups=None) -> np.ndarray:
    """Sensitivity S per point; ``groups`` keys the fixed-other-label slices.

    Within each slice points are ordered by label before differencing.  The
    result is aligned with the input order.
    """
    P = np.asarray(points, dtype=float)
    w = np.asarray(labels, dtype=float)
    if groups is None:
        groups = np.zeros(len(w))
    groups = np.asarray(groups)
    if groups.ndim == 1:
        groups = groups[:, None]
    S = np.empty(len(w))
    _, inverse = np.unique(groups, axis=0, return_inverse=True)
    for g in np.unique(inverse):
        idx = np.flatnonzero(inverse.ravel() == g)
        idx = idx[np.argsort(w[idx], kind="stable")]
        S[idx] = slice_sensitivity(P[idx], w[idx])
    return S


def tukey_fence(values) -> float:
    """Upper boxplot fence Q3 + 1.5 IQR (linear-interpolated quartiles)."""
    v = np.asarray(values, dtype=float)
    with np.errstate(invalid="ignore"):
        q1, q3 = np.percentile(v, [25, 75])
        fence = q3 + 1.5 * (q3 - q1)
    return float(fence) if not math.isnan(fence) else math.inf


def inverse_sensitivity(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(S > 0, 1.0 / np.where(S > 0, S, 1.0), np.inf)


def prune_mask(S, label_kind: str = "orientation", min_keep: float = 0.9) -> np.ndarray:
    """Boolean keep-mask removing points whose 1/S exceeds the Tukey fence.

    Zero sensitivity counts as an infinite 1/S and is always removed.  For
    ``label_kind == "lateral"`` removals are capped so that ``min_keep`` of
    the points survive, dropping the largest 1/S first.
    """
    S = np.asarray(S, dtype=float)
    if len(S) == 0:
        raise InputError("cannot prune an empty dataset")
    if label_kind not in ("orientation", "lateral"):
        raise InputError(f"unknown label kind {label_kind!r}")
    inv = inverse_sensitivity(S)
    fence = tukey_fence(inv)
    drop = (inv > fence) | np.isinf(inv)
    if label_kind == "lateral":
        max_drop = len(S) - math.ceil(min_keep * len(S) - 1e-9)
        if drop.sum() > max_drop:
            order = np.argsort(-inv, kind="stable")
            drop = np.zeros(len(S), dtype=bool)
            drop[order[:max_drop]] = True
    return ~drop


def prune(dataset, S, label_kind: str = "orientation", min_keep: float = 0.9):
    if len(dataset) == 0:
        raise InputError("cannot prune an empty dataset")
    return dataset.subset(prune_mask(S, label_kind, min_keep))


# -- exports -----------------------------------------------------------------

def write_basis_csv(basis: ProjectionBasis, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row"] + [f"s_{k}" for k in range(basis.n_dims)])
        writer.writerow(["mean"] + [repr(float(v)) for v in basis.mean])
        for j in range(basis.n_components):
            writer.writerow([f"e{j + 1}"] + [repr(float(v)) for v in basis.eigenvectors[:, j]])
        writer.writerow(["variance_ratio"] + [repr(float(v)) for v in basis.explained_variance_ratio])


def write_features_csv(frame_ids, points, spherical, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["frame_id", "pc1", "pc2", "pc3", "rho", "theta_pc23_deg", "phi_deg"])
        for fid, p, s in zip(frame_ids, points, spherical):
            writer.writerow([fid] + [repr(float(v)) for v in (*p[:3], *s)])
