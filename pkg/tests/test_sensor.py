import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sheartouch.datasets import slide_run
from sheartouch.errors import DimensionError, InputError
from sheartouch.sensor import (PinLayout, SensorModel, SensorPose, ShearState, check_frame,
                               displacement_px, simulate_frame, spread_center, step_shear,
                               weighted_median)

LAYOUT = PinLayout.hexagonal()
QUIET = SensorModel(eta=0.0)


def test_layout_has_127_point_symmetric_distinct_pins():
    pts = LAYOUT.rest_mm
    assert len(pts) == 127
    mirrored = np.sort(np.round(-pts, 9).view("f8,f8"), axis=0)
    assert np.array_equal(np.sort(np.round(pts, 9).view("f8,f8"), axis=0), mirrored)
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    assert d[~np.eye(len(pts), dtype=bool)].min() > 0
    assert LAYOUT.rest_frame().shape == (254,)


def test_zero_depth_frame_equals_rest_exactly():
    shear = ShearState((0.0, 0.0), False)
    frame = simulate_frame(LAYOUT, SensorPose(30, 0, 0), shear, None, QUIET)
    assert np.array_equal(frame, LAYOUT.rest_frame())


def test_pose_validation_and_wrapping():
    assert SensorPose(-180, 0, 2).orientation_deg == 180
    assert SensorPose(370, 0, 2).orientation_deg == pytest.approx(10)
    with pytest.raises(InputError):
        SensorPose(0, 0, 11)
    with pytest.raises(InputError):
        SensorPose(0, 0, -0.1)


@pytest.mark.parametrize("lateral", [2.0, -2.0])
def test_field_is_mirror_symmetric_about_the_edge_normal(lateral):
    # theta = 0: tangent along x, so reflecting x -> -x maps the pose onto itself
    disp = displacement_px(LAYOUT, SensorPose(0, lateral, 3), ShearState(), QUIET)
    pts = LAYOUT.rest_mm
    for i, q in enumerate(pts):
        j = np.argmin(np.linalg.norm(pts - [-q[0], q[1]], axis=1))
        assert disp[j] == pytest.approx([-disp[i, 0], disp[i, 1]], abs=1e-9)


def test_golden_pin_displacements_at_depth_4():
    # independent oracle: scipy Nelder-Mead geometric median on a separately built grid
    golden = {
        (0.0, 0.0): (0.0, 8.944271909999156),
        (9.0, 0.0): (8.240934897937382, 3.4766351560032565),
        (-4.5, -7.794228634059947): (-8.785378126528535, -7.804078317129461),
    }
    disp = displacement_px(LAYOUT, SensorPose(0, 0, 4), ShearState(), SensorModel())
    for q, expected in golden.items():
        k = np.argmin(np.linalg.norm(LAYOUT.rest_mm - q, axis=1))
        assert disp[k] == pytest.approx(expected, abs=1e-6)


def test_weighted_median_balances_unit_vectors():
    rng = np.random.default_rng(3)
    pts, w = rng.normal(size=(40, 2)), rng.uniform(0.1, 1, 40)
    m = weighted_median(pts, w)
    rel = pts - m
    assert np.linalg.norm((w[:, None] * rel / np.linalg.norm(rel, axis=1)[:, None]).sum(0)) < 1e-6
    assert np.allclose(spread_center(pts, w, 1.0), (w[:, None] * pts).sum(0) / w.sum())


def test_step_shear_arithmetic_and_reset():
    s = step_shear(ShearState((1.0, 0.0), True), (1.0, 0.0), True, lam=0.7, s_max=6)
    assert s.drag == pytest.approx([1.7, 0.0])
    s = step_shear(ShearState((3.0, -2.0), True), (1.0, 1.0), False)
    assert np.array_equal(s.drag, [0.0, 0.0]) and not s.in_contact


def test_drag_converges_to_fixed_point():
    s = ShearState()
    for _ in range(50):
        s = step_shear(s, (1.0, 0.0), True, lam=0.7, s_max=10)
    assert s.drag == pytest.approx([10 / 3, 0.0], abs=1e-6)


@given(st.lists(st.tuples(st.floats(-20, 20), st.floats(-20, 20), st.booleans()), max_size=30),
       st.floats(0.1, 10))
def test_drag_never_exceeds_cap(steps, cap):
    s = ShearState()
    for dx, dy, contact in steps:
        s = step_shear(s, (dx, dy), contact, 0.7, cap)
        assert np.linalg.norm(s.drag) <= cap + 1e-9


def test_noise_is_deterministic_given_seed():
    pose = SensorPose(20, 0, 2)
    a = simulate_frame(LAYOUT, pose, ShearState(), 7)
    b = simulate_frame(LAYOUT, pose, ShearState(), 7)
    c = simulate_frame(LAYOUT, pose, ShearState(), 8)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_sliding_history_changes_the_frame():
    laterals = (9.9, 6, 4, 2, 0, -2, -4, -6)
    model = SensorModel()

    def at_zero(direction):
        run = slide_run(LAYOUT, model, 0.0, direction, laterals, 2.0)
        return next(f for p, s, f in run if p.lateral_mm == 0)

    gap = np.linalg.norm(at_zero(90) - at_zero(270))
    noise_floor = model.eta * math.sqrt(254)
    assert gap > 5 * noise_floor


@pytest.mark.parametrize("direction", [0.0, 180.0])
def test_slide_across_edge_without_drag_matches_taps(direction):
    laterals = (9.9, 6, 4, 2, 0, -2, -4, -6)
    for pose, shear, frame in slide_run(LAYOUT, QUIET, 40.0, direction, laterals, 2.0):
        assert np.array_equal(shear.drag, [0.0, 0.0])
        assert np.array_equal(frame, simulate_frame(LAYOUT, pose, ShearState(), None, QUIET))


def test_check_frame_rejects_bad_frames():
    with pytest.raises(DimensionError):
        check_frame(np.zeros(253))
    with pytest.raises(InputError):
        check_frame(np.full(254, np.nan))
