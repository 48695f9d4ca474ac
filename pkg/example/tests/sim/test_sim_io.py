import numpy as np
import pytest

from coplanar.core.exceptions import LogFormatError
from coplanar.geometry.pose import Pose
from coplanar.sim.io import (
    read_cloud,
    read_log,
    read_map,
    read_tum,
    write_cloud,
    write_log,
    write_map,
    write_tum,
)
from tests.dummy import random_pose, toy_log


def test_log_directory(tmp_path):
    log, _ = toy_log(frames=3)
    out = write_log(log, tmp_path / "log")
    assert sorted(p.name for p in out.iterdir()) == [
        "frames.csv",
        "gt_map.csv",
        "gt_states.csv",
        "gt_traj.txt",
        "imu.csv",
        "lines.csv",
        "points.csv",
    ]

    loaded = read_log(out)
    np.testing.assert_array_equal(loaded.imu, log.imu)
    assert loaded.frames == log.frames
    for frame_id, observed in log.points.items():
        assert sorted(loaded.points[frame_id]) == sorted(observed)
        for k, obs in observed.items():
            np.testing.assert_array_equal(loaded.points[frame_id][k], obs)
    for frame_id, observed in log.lines.items():
        assert sorted(loaded.lines[frame_id]) == sorted(observed)
    for frame_id, state in log.gt_states.items():
        np.testing.assert_allclose(loaded.gt_states[frame_id].p, state.p)
        np.testing.assert_allclose(loaded.gt_states[frame_id].R, state.R, atol=1e-12)
    assert sorted(loaded.gt_lines) == sorted(log.gt_lines)

    stamps, poses = read_tum(out / "gt_traj.txt")
    np.testing.assert_allclose(stamps, [t for t, _ in log.frames])
    np.testing.assert_allclose(poses[2].p, log.gt_states[2].p, rtol=1e-8)


def test_tum(tmp_path, rng):
    poses = [random_pose(rng) for _ in range(4)]
    path = tmp_path / "traj.txt"
    write_tum(path, [0.0, 0.05, 0.1, 0.15], poses)
    first = path.read_text().splitlines()[0].split()
    assert len(first) == 8
    # quaternion stored x, y, z, w
    assert float(first[7]) == pytest.approx(poses[0].q[0], rel=1e-8, abs=1e-9)

    stamps, loaded = read_tum(path)
    np.testing.assert_allclose(stamps, [0.0, 0.05, 0.1, 0.15])
    for a, b in zip(poses, loaded):
        np.testing.assert_allclose(a.p, b.p, rtol=1e-8, atol=1e-9)
        np.testing.assert_allclose(a.R, b.R, atol=1e-8)


def test_tum_comments(tmp_path):
    path = tmp_path / "traj.txt"
    path.write_text("# timestamp tx ty tz qx qy qz qw\n\n1.0 1 2 3 0 0 0 1\n")
    stamps, poses = read_tum(path)
    assert list(stamps) == [1.0]
    np.testing.assert_allclose(poses[0].p, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(poses[0].q, Pose.identity().q)


@pytest.mark.parametrize("line", ["1.0 1 2 3 0 0 0\n", "1.0 1 2 x 0 0 0 1\n"])
def test_tum_malformed(tmp_path, line):
    path = tmp_path / "traj.txt"
    path.write_text(line)
    with pytest.raises(LogFormatError):
        read_tum(path)
    with pytest.raises(LogFormatError):
        read_tum(tmp_path / "missing.txt")


def test_map(tmp_path):
    points = {3: np.array([1.0, 2.0, 3.0])}
    lines = {7: (np.zeros(3), np.array([0.0, 0.0, 1.5]))}
    path = tmp_path / "map.csv"
    write_map(points, lines, path)
    assert path.read_text().splitlines()[0] == "kind,landmark_id,x,y,z"
    loaded_points, loaded_lines = read_map(path)
    np.testing.assert_array_equal(loaded_points[3], points[3])
    np.testing.assert_array_equal(loaded_lines[7][1], [0.0, 0.0, 1.5])

    path.write_text("kind,landmark_id,x,y,z\nplane,0,1,2,3\n")
    with pytest.raises(LogFormatError, match="plane"):
        read_map(path)


def test_cloud(tmp_path):
    cloud = np.array([[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]])
    write_cloud(cloud, tmp_path / "cloud.csv")
    np.testing.assert_allclose(read_cloud(tmp_path / "cloud.csv"), cloud)


def _corrupt(directory, name, text):
    (directory / name).write_text(text)
    with pytest.raises(LogFormatError):
        read_log(directory)


def test_read_log_errors(tmp_path):
    with pytest.raises(LogFormatError):
        read_log(tmp_path / "nowhere")

    log, _ = toy_log(frames=2)
    out = write_log(log, tmp_path / "log")
    good = (out / "imu.csv").read_text()
    _corrupt(out, "imu.csv", "time,wx,wy,wz,ax,ay,az\n")
    _corrupt(out, "imu.csv", "t,wx,wy,wz,ax,ay,az\n0,0,0,0,0,0\n")
    _corrupt(out, "imu.csv", "t,wx,wy,wz,ax,ay,az\n0.1,0,0,0,0,0,0\n0.1,0,0,0,0,0,0\n")
    _corrupt(out, "imu.csv", "t,wx,wy,wz,ax,ay,az\n0,0,0,zero,0,0,0\n")
    (out / "imu.csv").write_text(good)
    _corrupt(out, "points.csv", "frame_id,landmark_id,u,v\n99,0,0.1,0.2\n")
    (out / "points.csv").unlink()
    with pytest.raises(LogFormatError, match="points.csv"):
        read_log(out)
