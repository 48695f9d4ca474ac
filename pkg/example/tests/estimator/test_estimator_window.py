import numpy as np
import pytest

from coplanar.conf import AppSettings
from coplanar.core.pipeline import Pipeline
from coplanar.estimator.window import Keyframe, SlidingWindow
from coplanar.factors.base import line_key, plane_key, point_key, state_key
from coplanar.geometry.lines import PluckerLine, plucker_to_orthonormal
from coplanar.geometry.planes import PlaneParam
from coplanar.geometry.points import InverseDepthPoint
from coplanar.geometry.pose import ImuState, Pose
from coplanar.structure.detection import HORIZONTAL, VERTICAL
from tests.dummy import toy_window

OBS = np.array([0.0, 0.0, 1.0])


def _window(pipeline=Pipeline.PLP, frames=2, **settings):
    window = SlidingWindow(Pose.identity(), pipeline, AppSettings(settings))
    for frame_id in range(frames):
        state = ImuState(pose=Pose([0.1 * frame_id, 0.0, 0.0]))
        window.add_frame(Keyframe(frame_id, 0.1 * frame_id, state))
    return window


def test_frames():
    window = _window(frames=3, window_size=2)
    assert len(window) == 3
    assert window.is_full
    assert window.frame_ids == [0, 1, 2]
    assert window.latest.frame_id == 2
    np.testing.assert_allclose(window.state(1).p, [0.1, 0.0, 0.0])
    with pytest.raises(KeyError):
        window.frame(5)
    np.testing.assert_allclose(window.gravity, [0.0, 0.0, -9.81])


def test_point_tracks():
    window = _window(min_depth=0.5)
    window.add_point_observation(1, 0, [0.1, 0.2, 1.0])
    track = window.points[1]
    assert track.anchor_frame == 0
    assert not track.initialized
    assert list(window.optimizable_points()) == []

    window.add_point_observation(1, 1, OBS)
    track.estimate = InverseDepthPoint(0, track.observations[0], 0.5)
    assert track.initialized
    assert list(window.optimizable_points()) == [track]
    np.testing.assert_allclose(window.point_position(track), [0.2, 0.4, 2.0])

    # depth below MIN_DEPTH
    track.estimate = InverseDepthPoint(0, track.observations[0], 4.0)
    assert list(window.optimizable_points()) == []

    track.retired = True
    window.add_point_observation(1, 2, OBS)
    assert 2 not in track.observations
    assert list(window.active_points()) == []


def test_lines_follow_pipeline():
    window = _window(Pipeline.PP)
    window.add_line_observation(0, 0, (OBS, [0.1, 0.0, 1.0]))
    assert 0 in window.lines
    assert list(window.active_lines()) == []
    window.pipeline = Pipeline.PL
    assert [ln.line_id for ln in window.active_lines()] == [0]


def test_line_endpoints():
    window = _window()
    a, b = np.array([-1.0, 0.5, 3.0]), np.array([1.0, 0.5, 4.0])
    for frame_id in range(2):
        T_cw = window.state(frame_id).pose.inverse()
        s, e = T_cw.transform(a), T_cw.transform(b)
        window.add_line_observation(7, frame_id, (s / s[2], e / e[2]))
    track = window.lines[7]
    assert window.line_endpoints(track) is None

    track.estimate = plucker_to_orthonormal(PluckerLine.from_points(a, b))
    ps, pe = window.line_endpoints(track)
    np.testing.assert_allclose(ps, a, atol=1e-9)
    np.testing.assert_allclose(pe, b, atol=1e-9)

    window.refresh_landmarks()
    np.testing.assert_allclose(track.endpoints[1], b, atol=1e-9)


def test_planes():
    window = _window()
    floor = window.add_plane(PlaneParam.from_normal([0, 0, 1], 0.0), HORIZONTAL)
    wall = window.add_plane(PlaneParam.from_normal([1, 0, 0], 4.0), VERTICAL, 30.0)
    assert (floor, wall) == (0, 1)
    assert window.planes[wall].score == 30.0

    window.add_point_observation(0, 0, OBS)
    window.add_point_observation(1, 0, OBS)
    window.add_line_observation(0, 0, (OBS, OBS))
    window.points[0].plane_id = floor
    window.points[1].plane_id = wall
    window.lines[0].plane_id = floor
    points, lines = window.associated(floor)
    assert [p.point_id for p in points] == [0]
    assert [ln.line_id for ln in lines] == [0]

    window.remove_plane(floor)
    assert floor not in window.planes
    assert window.points[0].plane_id is None
    assert window.lines[0].plane_id is None
    assert window.points[1].plane_id == wall
    # ids are never reused
    assert window.add_plane(PlaneParam.from_normal([0, 0, 1], 0.0), HORIZONTAL) == 2


def test_values_round_trip():
    window, _, _ = toy_window(Pipeline.PLP)
    values = window.values()
    kinds = {k[0] for k in values}
    assert kinds == {"x", "f", "l", "pi"}
    assert state_key(0) in values
    assert plane_key(0) in values

    point_id = next(iter(window.optimizable_points())).point_id
    line_id = next(iter(window.optimizable_lines())).line_id
    moved = {
        state_key(1): values[state_key(1)].retract(np.r_[0.1, np.zeros(14)]),
        point_key(point_id): values[point_key(point_id)].retract([0.01]),
        line_key(line_id): values[line_key(line_id)].retract(np.full(4, 0.01)),
        plane_key(0): values[plane_key(0)].retract([0.0, 0.0, 0.2]),
    }
    window.set_values(moved)
    assert window.state(1) is moved[state_key(1)]
    assert window.points[point_id].estimate is moved[point_key(point_id)]
    assert window.lines[line_id].estimate is moved[line_key(line_id)]
    assert window.planes[0].param.d == pytest.approx(values[plane_key(0)].d + 0.2)


@pytest.mark.parametrize("inv_depth", [4.0, 1e-4, -0.5, np.inf])
def test_invalid_depth_has_no_position(inv_depth):
    window = _window(min_depth=0.5)
    window.add_point_observation(1, 0, [0.1, 0.2, 1.0])
    window.add_point_observation(1, 1, OBS)
    track = window.points[1]
    track.position = np.array([0.2, 0.4, 2.0])
    track.estimate = InverseDepthPoint(0, track.observations[0], inv_depth)
    assert window.point_position(track) is None
    window.refresh_landmarks()
    assert track.position is None


def test_line_endpoints_out_of_range_are_kept():
    window = _window(max_depth=3.5)
    a, b = np.array([-1.0, 0.5, 3.0]), np.array([1.0, 0.5, 4.0])
    for frame_id in range(2):
        T_cw = window.state(frame_id).pose.inverse()
        s, e = T_cw.transform(a), T_cw.transform(b)
        window.add_line_observation(7, frame_id, (s / s[2], e / e[2]))
    track = window.lines[7]
    track.estimate = plucker_to_orthonormal(PluckerLine.from_points(a, b))
    assert window.line_endpoints(track) is None
    cached = (np.zeros(3), np.ones(3))
    track.endpoints = cached
    assert window.line_endpoints(track) is cached
