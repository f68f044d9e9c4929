import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from radarsense.errors import ParseError, ValidationError
from radarsense.scenario import (
    Frame,
    Pose2D,
    Scenario,
    generate_figure_eight,
    lemniscate_length,
    lemniscate_point,
    load_trajectory,
    save_trajectory,
    wrap_angle,
)


def test_wrap_angle_half_open_interval():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    assert Pose2D(0, 0, 2 * math.pi + 0.1).yaw == pytest.approx(0.1)


@pytest.mark.parametrize("u, expected", [(0.0, (20.0, 0.0)), (math.pi / 2, (30.0, 0.0))])
def test_lemniscate_points(u, expected):
    x, y, _, _ = lemniscate_point(u, 10.0)
    assert (20.0 + float(x), float(y)) == pytest.approx(expected, abs=1e-12)


def test_first_frame_at_offset_center():
    sc = generate_figure_eight(10.0, Pose2D(20.0, 0.0, 0.0), 5.0, 0.1)
    assert (sc.frames[0].target.x, sc.frames[0].target.y) == pytest.approx((20.0, 0.0), abs=1e-12)
    # quarter period lands on the far lobe tip
    q = len(sc) // 4
    assert (sc.frames[q].target.x, sc.frames[q].target.y) == pytest.approx((30.0, 0.0), abs=1e-9)


def _arc_length_oracle(a):
    # independent: adaptive quadrature of |r'(u)| over a full period, no symmetry shortcut
    return quad(lambda u: math.hypot(a * math.cos(u), a * math.cos(2 * u)), 0, 2 * math.pi, limit=400)[0]


def test_length_matches_quadrature():
    assert lemniscate_length(10.0) == pytest.approx(_arc_length_oracle(10.0), rel=1e-10)


def test_constant_step_spacing():
    sc = generate_figure_eight(10.0, Pose2D(20.0, 0.0, 0.0), speed=5.0, dt=0.1)
    xy = np.array([[f.target.x, f.target.y] for f in sc.frames])
    closed = np.vstack([xy, xy[:1]])
    steps = np.hypot(*np.diff(closed, axis=0).T)
    assert np.all(np.abs(steps - 0.5) <= 0.05 * 0.5)
    # full period: number of steps times nominal step ~ curve length
    assert len(sc) * 0.5 == pytest.approx(_arc_length_oracle(10.0), rel=0.05)


def test_ego_fixed_and_times_uniform():
    sc = generate_figure_eight(10.0, Pose2D(20.0, 0.0, 0.0), 5.0, 0.1)
    assert all(f.ego == Pose2D(0, 0, 0) for f in sc.frames)
    assert np.allclose(np.diff(sc.times), 0.1)
    assert sc.dt == 0.1


def test_mirror_and_point_symmetry():
    sc = generate_figure_eight(12.0, Pose2D(30.0, 0.0, 0.0), 4.0, 0.1)
    n = len(sc)
    assert n % 4 == 0
    xy = np.array([[f.target.x - 30.0, f.target.y] for f in sc.frames])
    for k in range(n):
        # u -> -u : point reflection about the center
        j = (-k) % n
        assert xy[j] == pytest.approx(-xy[k], abs=1e-9)
        # u -> pi - u : mirror (x, y) -> (x, -y)
        m = (n // 2 - k) % n
        assert xy[m] == pytest.approx([xy[k, 0], -xy[k, 1]], abs=1e-9)


def test_yaw_follows_tangent_and_is_continuous():
    a = 10.0
    sc = generate_figure_eight(a, Pose2D(20.0, 0.0, 0.0), speed=5.0, dt=0.1)  # speed*dt < a/4
    yaw = np.array([f.target.yaw for f in sc.frames])
    jumps = np.abs(wrap_angle(np.diff(np.append(yaw, yaw[0]))))
    assert jumps.max() < math.pi / 2
    # heading at the center crossing points along (1, 1)
    assert yaw[0] == pytest.approx(math.pi / 4, abs=1e-12)


def test_offset_rotation():
    sc = generate_figure_eight(10.0, Pose2D(0.0, 30.0, math.pi / 2), 5.0, 0.1)
    q = len(sc) // 4
    assert (sc.frames[q].target.x, sc.frames[q].target.y) == pytest.approx((0.0, 40.0), abs=1e-9)


@pytest.mark.parametrize("kwargs", [dict(half_length=0), dict(speed=-1.0), dict(dt=0.0)])
def test_generate_rejects_non_positive(kwargs):
    with pytest.raises(ValidationError):
        generate_figure_eight(**kwargs)


def test_round_trip(tmp_path):
    sc = generate_figure_eight(10.0, Pose2D(20.0, 1.0, 0.3), 5.0, 0.1)
    path = tmp_path / "traj.csv"
    save_trajectory(sc, path)
    back = load_trajectory(path, target_shape=sc.target_shape)
    assert len(back) == len(sc)
    for f, g in zip(sc.frames, back.frames):
        for attr in ("x", "y", "yaw"):
            assert getattr(g.target, attr) == pytest.approx(getattr(f.target, attr), abs=1e-9)
            assert getattr(g.ego, attr) == pytest.approx(getattr(f.ego, attr), abs=1e-9)
        assert g.t == pytest.approx(f.t, abs=1e-9)
    assert back.dt == pytest.approx(sc.dt, abs=1e-9)


HEADER = "t,ego_x,ego_y,ego_yaw,target_x,target_y,target_yaw\n"


def test_load_three_rows(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text(HEADER + "0,0,0,0,10,0,3.5\n0.1,0,0,0,10.5,0,3.5\n0.2,0,0,0,11,0,3.5\n")
    sc = load_trajectory(p)
    assert len(sc) == 3
    assert sc.frames[0].target.yaw == pytest.approx(3.5 - 2 * math.pi)


def test_load_decreasing_time_names_row(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text(HEADER + "0.1,0,0,0,10,0,0\n0.0,0,0,0,10,0,0\n0.2,0,0,0,10,0,0\n")
    with pytest.raises(ParseError, match="row 2"):
        load_trajectory(p)


@pytest.mark.parametrize(
    "body, match",
    [
        ("t,ego_x,ego_y,target_x,target_y,target_yaw\n0,0,0,1,1,0\n0.1,0,0,1,1,0\n", "missing columns"),
        (HEADER + "0,0,0,0,10,0,0\n", "at least 2"),
        (HEADER + "0,0,0,0,10,0,0\n0.1,0,0,0,abc,0,0\n", "row 2"),
    ],
)
def test_load_errors(tmp_path, body, match):
    p = tmp_path / "t.csv"
    p.write_text(body)
    with pytest.raises(ParseError, match=match):
        load_trajectory(p)


def test_load_rejects_non_uniform_dt(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text(HEADER + "0,0,0,0,10,0,0\n0.1,0,0,0,10,0,0\n0.3,0,0,0,10,0,0\n")
    with pytest.raises(ParseError, match="constant"):
        load_trajectory(p)


def test_scenario_invariants():
    f = lambda t: Frame(t, Pose2D(), Pose2D(10, 0, 0))  # noqa: E731
    with pytest.raises(ValidationError):
        Scenario(frames=(f(0.0),))
    with pytest.raises(ValidationError):
        Scenario(frames=(f(0.0), f(0.0)))
    with pytest.raises(ValidationError):
        Frame(-1.0, Pose2D(), Pose2D())


@settings(max_examples=25, deadline=None)
@given(
    a=st.floats(2.0, 40.0),
    speed=st.floats(1.0, 15.0),
    dt=st.floats(0.02, 0.2),
)
def test_generated_poses_stay_on_curve(a, speed, dt):
    sc = generate_figure_eight(a, Pose2D(50.0, -3.0, 0.0), speed, dt)
    x = np.array([f.target.x for f in sc.frames]) - 50.0
    y = np.array([f.target.y for f in sc.frames]) + 3.0
    # implicit Gerono form: a^2 y^2 = x^2 (a^2 - x^2)
    assert np.allclose(a**2 * y**2, x**2 * (a**2 - x**2), atol=1e-8 * a**4)
    assert np.all(np.diff(sc.times) > 0)
