from pathlib import Path

import numpy as np
import pytest

from coplanar.conf import AppSettings, load_config
from coplanar.core.pipeline import Pipeline
from coplanar.estimator.estimator import STAGES, Estimator
from coplanar.sim.camera import default_extrinsics
from tests.dummy import NOISE_FREE, run_estimator, toy_log

ROOM_CONFIG = Path(__file__).parents[2] / "configs" / "room.cfg"


def _conf(**kwargs):
    return AppSettings({**NOISE_FREE, **kwargs})


def test_first_frame_needs_state():
    estimator = Estimator(default_extrinsics(), Pipeline.P, _conf())
    with pytest.raises(ValueError):
        estimator.process_frame(0, 0.0, np.zeros((1, 7)), {}, {})


def test_stream_noise_free_log():
    conf = _conf(window_size=4)
    log, _ = toy_log(frames=8, conf=conf)
    estimator, results = run_estimator(log, Pipeline.P, conf)

    assert [r.frame_id for r in results] == list(range(8))
    assert results[0].is_keyframe
    assert results[0].stats is None
    assert all(r.stats is not None for r in results[1:])
    assert not any(r.diverged for r in results)
    assert len(estimator.window) <= 5

    stamps, poses = estimator.estimated_trajectory()
    assert len(poses) == 8
    assert stamps == sorted(stamps)
    for frame_id, pose in enumerate(poses):
        error = np.linalg.norm(pose.p - log.gt_states[frame_id].p)
        assert error < 0.01

    points, _ = estimator.estimated_map()
    assert points
    summary = estimator.timing_summary()
    assert set(summary) <= set(STAGES)
    assert "plane_detection" not in summary
    assert {"prediction", "optimization", "marginalization"} <= set(summary)


def test_non_keyframes_are_dropped():
    conf = _conf(window_size=2, keyframe_min_tracked=1, keyframe_parallax_px=1e6)
    log, _ = toy_log(frames=4, conf=conf)
    estimator, results = run_estimator(log, Pipeline.P, conf)

    assert [r.is_keyframe for r in results] == [True, False, False, False]
    dropped = [r.marginalization for r in results if r.marginalization is not None]
    assert dropped
    assert all(m.dropped for m in dropped)
    # the oldest keyframe is never marginalized
    assert estimator.window.frame_ids[0] == 0
    assert len(estimator.window) == 2
    # prediction through the dropped frames keeps the pose on track
    latest = estimator.window.latest
    assert np.linalg.norm(latest.state.p - log.gt_states[latest.frame_id].p) < 0.01


def test_histogram_dump(tmp_path):
    conf = _conf(window_size=4)
    log, _ = toy_log(frames=3, conf=conf)
    estimator, _ = run_estimator(log, Pipeline.PLP, conf, histogram_dir=tmp_path)
    assert (tmp_path / "height_000000.csv").exists()
    assert (tmp_path / "azimuth_000002.csv").exists()
    assert "plane_detection" in estimator.timing_summary()


def test_room_keyframe_policy():
    # at 20 Hz one frame moves features by less than the parallax threshold
    # and two frames by more, so keyframes alternate with dropped frames
    room = load_config(ROOM_CONFIG)
    conf = _conf(
        window_size=4,
        keyframe_min_tracked=room["keyframe_min_tracked"],
        keyframe_parallax_px=room["keyframe_parallax_px"],
    )
    log, _ = toy_log(frames=21, conf=conf, camera_rate=20.0)
    _, results = run_estimator(log, Pipeline.P, conf)
    keyframes = [r.is_keyframe for r in results[1:]]
    assert any(keyframes) and not all(keyframes)
    steps = [r.marginalization for r in results if r.marginalization is not None]
    assert any(m.dropped for m in steps)
    assert any(not m.dropped for m in steps)
    assert not any(r.diverged for r in results)


def test_estimated_map_skips_unusable_points():
    conf = _conf(window_size=4)
    log, _ = toy_log(frames=4, conf=conf)
    estimator, _ = run_estimator(log, Pipeline.P, conf)
    tracks = [p for p in estimator.window.points.values() if p.position is not None]
    assert len(tracks) >= 2
    tracks[0].position = np.array([np.nan, 0.0, 1.0])
    tracks[1].position = None
    points, _ = estimator.estimated_map()
    assert tracks[0].point_id not in points
    assert tracks[1].point_id not in points
    assert all(np.all(np.isfinite(x)) for x in points.values())
