"""Angle helpers in degrees."""
from __future__ import annotations

import numpy as np
from scipy import stats


def wrap_deg(angle):
    """Wrap degrees into (-180, 180]."""
    wrapped = np.mod(np.asarray(angle, dtype=float) + 180.0, 360.0) - 180.0
    wrapped = np.where(wrapped == -180.0, 180.0, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def circular_error(pred_deg, true_deg):
    return wrap_deg(np.asarray(pred_deg, dtype=float) - np.asarray(true_deg, dtype=float))


def circular_rms(pred_deg, true_deg) -> float:
    err = np.atleast_1d(circular_error(pred_deg, true_deg))
    if err.size == 0:
        return float("nan")
    return float(np.sqrt(np.mean(err ** 2)))


def circular_std(angles_deg) -> float:
    """Circular standard deviation, sqrt(-2 ln R), in degrees."""
    return float(np.degrees(stats.circstd(np.radians(angles_deg))))
