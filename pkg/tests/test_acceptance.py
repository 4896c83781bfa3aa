"""Acceptance criteria on the synthetic sensor, one pass/fail line per criterion.

Run alone with ``pytest tests/test_acceptance.py -v -s``; the lines are also
printed (uncaptured) during a normal ``pytest -v`` run.
"""
import math
import time

import numpy as np
import pytest

from sheartouch import features as F
from sheartouch import perception as P
from sheartouch import regression as R
from sheartouch.circular import circular_std
from sheartouch.cli import main
from sheartouch.config import ExperimentConfig
from sheartouch.control import follow_contour, oracle_perceiver, trajectory_metrics
from sheartouch.datasets import collect_multidirectional_set, collect_training_set
from sheartouch.errors import TaskFailure
from sheartouch.shapes import Shape2D

CONFIG = ExperimentConfig()


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} | {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def offline():
    """Full fit of both models and the offline evaluation, timed together."""
    t0 = time.perf_counter()
    train = collect_training_set(CONFIG)
    multi = collect_multidirectional_set(CONFIG)
    model = P.fit_perception(train, restarts=CONFIG.gp_restarts, seed=CONFIG.seed)
    baseline = P.fit_baseline_model(train, restarts=CONFIG.gp_restarts, seed=CONFIG.seed)
    pca, base = P.evaluate_offline(model, baseline, multi)
    return {"model": model, "pca": pca, "base": base, "seconds": time.perf_counter() - t0}


def test_criterion_1_dataset_geometry(tmp_path, capsys):
    t0 = time.perf_counter()
    codes = [main(["gen", kind, "--out", str(tmp_path)]) for kind in ("train", "multidir")]
    elapsed = time.perf_counter() - t0
    n_train = len((tmp_path / "train.csv").read_text().splitlines()) - 1
    n_multi = len((tmp_path / "multidir.csv").read_text().splitlines()) - 1
    ok = codes == [0, 0] and n_train == 288 and n_multi == 1152 and elapsed < 10
    report(capsys, 1, ok, f"train {n_train} frames, multidir {n_multi} frames, {elapsed:.1f} s")


def test_criterion_2_pca_variance(capsys):
    t0 = time.perf_counter()
    basis = F.fit_pca(collect_training_set(CONFIG), 3)
    elapsed = time.perf_counter() - t0
    total = float(basis.explained_variance_ratio.sum())
    report(capsys, 2, total >= 0.75 and elapsed < 5,
           f"first-3 explained variance {total:.3f} (need >= 0.75), {elapsed:.1f} s")


def test_criterion_3_shear_invariant_feature(capsys):
    t0 = time.perf_counter()
    train = collect_training_set(CONFIG)
    multi = collect_multidirectional_set(CONFIG)
    basis = F.fit_pca(train, 3)
    origin = F.fit_origin_model(basis, train)
    theta = F.to_spherical(F.project(basis, multi.frames), origin)[:, 1]
    sensor_touch = [l for l in CONFIG.laterals if l < 9.9]
    worst = 0.0
    for lat in sensor_touch:
        at_lat = multi.lateral == lat
        across_orient = np.mean([circular_std(theta[at_lat & (multi.slide_dir == d)])
                                 for d in CONFIG.directions])
        across_dirs = max(circular_std(theta[at_lat & (multi.orientation == o)])
                          for o in CONFIG.orientations)
        worst = max(worst, across_dirs / across_orient)
    elapsed = time.perf_counter() - t0
    report(capsys, 3, worst <= 1 / 3 and elapsed < 10,
           f"worst direction/orientation spread ratio {worst:.4f} (need <= 0.333), {elapsed:.1f} s")


def test_criterion_4_pipeline_vs_baseline(offline, capsys):
    pca, base = offline["pca"], offline["base"]
    parts, ok = [], offline["seconds"] < 300
    for d in (90.0, 270.0):
        a, b = pca.rms(d), base.rms(d)
        ok &= a <= 0.5 * b and a <= 15
        parts.append(f"{d:g} deg: pipeline {a:.2f} vs baseline {b:.2f}")
    report(capsys, 4, ok, "; ".join(parts) + f"; fit+eval {offline['seconds']:.0f} s")


def test_criterion_5_off_not_worse_than_on(offline, capsys):
    on, off = offline["pca"].mean_rms("On"), offline["pca"].mean_rms("Off")
    report(capsys, 5, off <= on, f"mean Off RMS {off:.3f} deg, mean On RMS {on:.3f} deg")


def test_criterion_6_lateral_accuracy(offline, capsys):
    lat = offline["pca"].lateral_rms_mm
    report(capsys, 6, lat <= 3.0, f"lateral RMS {lat:.2f} mm (need <= 3)")


@pytest.mark.parametrize("name,shape", [
    ("rectangle 60x40", Shape2D.rectangle(60, 40)),
    ("circle r30", Shape2D.circle(30)),
    ("circle r15", Shape2D.circle(15)),
    ("flower 30/6", Shape2D.flower(30, 6)),
    ("spiral", Shape2D.spiral()),
])
def test_criterion_7_contour_following(offline, name, shape, capsys):
    t0 = time.perf_counter()
    try:
        log = follow_contour(offline["model"], shape, config=CONFIG)
        failure = ""
    except TaskFailure as exc:
        log, failure = exc.log, str(exc)
    elapsed = time.perf_counter() - t0
    m = trajectory_metrics(log, shape)
    ok = not failure and m.completed and elapsed < 120 and m.orientation_rms_deg <= 20
    if shape.closed:
        ok &= m.max_deviation_mm <= 5 and m.loop_closure_mm <= 6
        detail = (f"max deviation {m.max_deviation_mm:.2f} mm, closure {m.loop_closure_mm:.2f} mm, ")
    else:
        ok &= m.n_steps == CONFIG.max_steps
        detail = f"{m.n_steps}/{CONFIG.max_steps} steps, "
    detail += f"orientation RMS {m.orientation_rms_deg:.2f} deg, {elapsed:.1f} s {failure}"
    report(capsys, f"7 [{name}]", ok, detail.strip())


def test_criterion_8_oracle_controller(capsys):
    t0 = time.perf_counter()
    shape = Shape2D.circle(30)
    log = follow_contour(None, shape, config=CONFIG, perceiver=oracle_perceiver)
    elapsed = time.perf_counter() - t0
    m = trajectory_metrics(log, shape)
    report(capsys, 8, log.completed and m.loop_closure_mm <= 3 and elapsed < 10,
           f"oracle circle closure {m.loop_closure_mm:.2f} mm after {m.n_steps} steps, {elapsed:.1f} s")


def _brute_fence_mask(S):
    inv = [math.inf if s == 0 else 1 / s for s in S]
    finite = sorted(v for v in inv)
    n = len(finite)

    def quantile(q):
        pos = q * (n - 1)
        lo = math.floor(pos)
        hi = min(lo + 1, n - 1)
        if finite[hi] == math.inf or finite[lo] == math.inf:
            return math.inf if pos - lo > 0 or finite[lo] == math.inf else finite[lo]
        return finite[lo] + (pos - lo) * (finite[hi] - finite[lo])

    q1, q3 = quantile(0.25), quantile(0.75)
    fence = q3 + 1.5 * (q3 - q1) if math.isfinite(q3) else math.inf
    return [v != math.inf and v <= fence + 1e-9 * abs(fence) for v in inv]


def test_criterion_9_numerical_properties(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    failures = []

    min_eig = math.inf
    for _ in range(50):
        n, d = rng.integers(2, 31), rng.integers(1, 6)
        X = rng.normal(0, 3, (n, d))
        p = R.KernelParams(rng.uniform(0.1, 10), rng.uniform(0.1, 5, d), 1e-8)
        min_eig = min(min_eig, np.linalg.eigvalsh(R.kernel_matrix(X, X, p) + 1e-8 * np.eye(n)).min())
    if min_eig < -1e-8:
        failures.append(f"kernel min eigenvalue {min_eig:.2e}")

    worst_grad = 0.0
    for _ in range(10):
        X = rng.normal(size=(12, 3))
        y = np.sin(X[:, 0]) + 0.1 * rng.normal(size=12)
        p = R.KernelParams(rng.uniform(0.5, 2), rng.uniform(0.5, 2, 3), rng.uniform(0.01, 0.1))
        mean = rng.normal()
        theta = R._pack(p, mean)
        obj = R._Objective(X, y, False)
        analytic = R.lml_gradient(X, y, p, mean)
        numeric = np.array([(obj.lml(theta + 1e-6 * e) - obj.lml(theta - 1e-6 * e)) / 2e-6
                            for e in np.eye(len(theta))])
        worst_grad = max(worst_grad, float(np.max(np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1.0))))
    if worst_grad > 1e-4:
        failures.append(f"LML gradient relative error {worst_grad:.2e}")

    angles = rng.uniform(-180, 180, 1000)
    back = R.decode_angle(*R.encode_angle(angles))
    round_trip = float(np.max(np.abs((back - angles + 180) % 360 - 180)))
    if round_trip >= 1e-9:
        failures.append(f"angle round trip {round_trip:.2e}")

    mismatches = 0
    min_kept = 1.0
    for _ in range(100):
        n = int(rng.integers(1, 60))
        S = rng.lognormal(0, 1.5, n)
        S[rng.random(n) < 0.1] = 0.0
        mismatches += list(F.prune_mask(S)) != _brute_fence_mask(list(S))
        min_kept = min(min_kept, F.prune_mask(S, "lateral").mean())
    if mismatches:
        failures.append(f"{mismatches} Tukey mismatches")
    if min_kept < 0.9:
        failures.append(f"lateral pruning kept {min_kept:.2f}")

    elapsed = time.perf_counter() - t0
    if elapsed >= 60:
        failures.append(f"took {elapsed:.0f} s")
    report(capsys, 9, not failures,
           "; ".join(failures) or f"PSD min eig {min_eig:.1e}, grad err {worst_grad:.1e}, "
           f"angle err {round_trip:.1e}, Tukey 100/100, lateral keep >= {min_kept:.2f}, {elapsed:.1f} s")
