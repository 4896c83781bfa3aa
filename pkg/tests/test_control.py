import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sheartouch.config import ExperimentConfig
from sheartouch.control import (control_step, follow_contour, oracle_perceiver, perceived_normals,
                                rotation, trajectory_metrics, write_trajectory_csv)
from sheartouch.errors import InputError, TaskFailure
from sheartouch.shapes import Shape2D, default_outline


def test_control_step_examples():
    assert control_step(0, 0).delta_u == pytest.approx([3, 0])
    assert control_step(90, 0).delta_u == pytest.approx([0, 3])
    assert control_step(0, -2).delta_u == pytest.approx([3, 0.7])
    assert control_step(0, 0, e=-3).delta_u == pytest.approx([-3, 0])


def test_lateral_estimate_is_clamped():
    assert control_step(0, 40).delta_u == pytest.approx(control_step(0, 9.9).delta_u)
    assert control_step(0, -40).delta_u == pytest.approx(control_step(0, -6).delta_u)


@given(st.floats(-180, 180), st.floats(-1e3, 1e3))
def test_rotation_is_proper_and_steps_are_bounded(theta, lat):
    R = rotation(theta)
    assert np.allclose(R @ R.T, np.eye(2), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0)
    bound = math.hypot(3, 0.35 * max(abs(0 - -6), abs(0 - 9.9)))
    assert np.linalg.norm(control_step(theta, lat).delta_u) <= bound + 1e-12


def test_oracle_controller_closes_the_circle():
    shape = Shape2D.circle(30)
    log = follow_contour(None, shape, perceiver=oracle_perceiver)
    m = trajectory_metrics(log, shape)
    assert log.completed and m.loop_closure_mm <= 3.0
    assert m.orientation_rms_deg == pytest.approx(0.0, abs=1e-9)
    assert m.loop_closure_mm == pytest.approx(np.linalg.norm(log.positions[-1] - log.start))


def _rotated_runs(shape0, shape1, R, n):
    cfg = ExperimentConfig()
    st = shape0.start_point()
    a = follow_contour(None, shape0, st, n, cfg, perceiver=oracle_perceiver)
    b = follow_contour(None, shape1, R @ st, n, cfg, perceiver=oracle_perceiver)
    assert len(a) == len(b)
    return np.abs(a.positions @ R.T - b.positions).max()


@pytest.mark.parametrize("gamma", [37.0, 123.0, -80.0])
def test_oracle_runs_are_rotation_equivariant(gamma):
    R = rotation(gamma)
    circle = Shape2D.circle(30)
    assert _rotated_runs(circle, circle, R, 40) <= 1e-9
    # polyline normals come from finite differences, so agreement is looser
    assert _rotated_runs(Shape2D.polyline(), Shape2D.polyline(default_outline() @ R.T), R, 60) <= 1e-7


def test_model_follows_circle_within_bounds(model):
    shape = Shape2D.circle(30)
    log = follow_contour(model, shape, n_steps=100)
    sdf = np.asarray(log.true_sdf_mm)
    offset = np.median(sdf[:10])
    assert np.all(np.abs(sdf - offset) <= 5)
    assert trajectory_metrics(log, shape).orientation_rms_deg <= 20


def test_rectangle_corners_turn_smoothly(model):
    shape = Shape2D.rectangle()
    log = follow_contour(model, shape)
    assert log.completed
    # unwrap the perceived orientation: a ccw traversal turns through +360 deg overall
    turn = np.degrees(np.unwrap(np.radians(log.theta_hat_deg)))
    total = turn[-1] - turn[0]
    assert 270 <= abs(total) <= 370
    steps = np.diff(turn)
    assert np.all(np.sign(steps[np.abs(steps) > 5]) == np.sign(total))


def test_contact_loss_raises_with_partial_log():
    def blind(frame, pose):
        return pose.orientation_deg, pose.lateral_mm, 0.0

    with pytest.raises(TaskFailure) as info:
        follow_contour(None, Shape2D.circle(30), perceiver=blind)
    assert len(info.value.log) == 5 and info.value.log.stop_reason == "contact lost"


def test_start_must_be_near_boundary():
    with pytest.raises(InputError):
        follow_contour(None, Shape2D.circle(30), start=[0.0, 0.0], perceiver=oracle_perceiver)


def test_spiral_runs_to_step_budget():
    log = follow_contour(None, Shape2D.spiral(), n_steps=50, perceiver=oracle_perceiver)
    assert len(log) == 50 and log.completed and log.stop_reason == "step budget"


def test_trajectory_csv_and_normals(tmp_path):
    log = follow_contour(None, Shape2D.circle(15), n_steps=10, perceiver=oracle_perceiver)
    write_trajectory_csv(log, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "step,x_mm,y_mm,theta_hat_deg,lateral_hat_mm,rho,true_sdf_mm"
    assert len(lines) == 1 + len(log)
    n = perceived_normals(log)
    assert np.allclose(np.linalg.norm(n, axis=1), 1)
    # on a circle centered at the origin the outward normal points away from the center
    radial = log.positions / np.linalg.norm(log.positions, axis=1)[:, None]
    assert np.all(np.sum(n * radial, axis=1) > 0.99)
