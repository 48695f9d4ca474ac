import numpy as np
import pytest

from coplanar.core.exceptions import (
    EmptyMesh,
    EmptyOverlap,
    NoMatches,
    NonMonotonicTimestamps,
)
from coplanar.core.utils import so3_exp
from coplanar.evaluation.metrics import (
    Trajectory,
    align_trajectories,
    ape_errors,
    ape_rmse,
    associate,
    map_error,
    map_errors,
    mesh_error,
    rpe,
    sample_triangles,
    umeyama,
    write_rpe_csv,
)
from coplanar.geometry.pose import Pose

STAMPS = np.arange(100) * 0.1


def _helix(stamps=STAMPS):
    poses = [
        Pose.from_matrix(
            so3_exp([0.0, 0.1 * np.sin(t), 0.3 * t]),
            [2.0 * np.cos(0.3 * t), 2.0 * np.sin(0.3 * t), 0.2 * t],
        )
        for t in stamps
    ]
    return Trajectory(np.asarray(stamps), poses)


def _straight(speed, stamps=STAMPS):
    return Trajectory(np.asarray(stamps), [Pose([speed * t, 0.0, 0.0]) for t in stamps])


def test_trajectory():
    gt = _helix()
    assert len(gt) == 100
    assert gt.positions.shape == (100, 3)
    assert Trajectory(np.zeros(0), []).positions.shape == (0, 3)
    with pytest.raises(ValueError):
        Trajectory(np.zeros(2), [Pose()])
    with pytest.raises(NonMonotonicTimestamps):
        Trajectory(np.array([0.0, 0.2, 0.1]), [Pose()] * 3).check_monotonic()


def test_associate():
    gt = _helix()
    shifted = Trajectory(STAMPS + 0.003, gt.poses)
    assert associate(shifted, gt, 0.005) == [(i, i) for i in range(100)]
    with pytest.raises(EmptyOverlap):
        associate(shifted, gt, 0.001)

    # the closer estimate takes the ground truth pose
    est = Trajectory(np.array([0.0, 0.004]), [Pose(), Pose()])
    single = Trajectory(np.array([0.003]), [Pose()])
    assert associate(est, single, 0.005) == [(1, 0)]

    unsorted = Trajectory(np.array([0.0, 0.2, 0.1]), [Pose()] * 3)
    with pytest.raises(NonMonotonicTimestamps):
        associate(unsorted, gt, 0.005)


def test_umeyama(rng):
    source = rng.normal(size=(20, 3))
    R = so3_exp([0.3, -0.2, 1.1])
    t = np.array([1.0, -2.0, 0.5])
    R_est, t_est, scale = umeyama(source, source @ R.T + t)
    np.testing.assert_allclose(R_est, R, atol=1e-10)
    np.testing.assert_allclose(t_est, t, atol=1e-10)
    assert scale == 1.0
    _, _, scale = umeyama(source, 2.5 * source @ R.T + t, with_scale=True)
    assert scale == pytest.approx(2.5)


def test_ape_identity():
    gt = _helix()
    trans, rot = ape_rmse(gt, gt, 0.005)
    assert trans == pytest.approx(0.0, abs=1e-8)
    assert rot == pytest.approx(0.0, abs=1e-5)


def test_ape_rigid_invariance():
    gt = _helix()
    T = Pose.from_matrix(so3_exp([0.1, -0.2, 0.5]), [1.0, 2.0, 3.0])
    est = Trajectory(STAMPS, [T.compose(p) for p in gt.poses])
    alignment, _ = align_trajectories(est, gt, 0.005)
    np.testing.assert_allclose(alignment.R, T.inverse().R, atol=1e-9)
    trans, rot = ape_rmse(est, gt, 0.005)
    assert trans == pytest.approx(0.0, abs=1e-6)
    assert rot == pytest.approx(0.0, abs=1e-5)


def test_ape_single_outlier():
    gt = _helix()
    poses = list(gt.poses)
    poses[50] = Pose(poses[50].p + [0.03, 0.0, 0.0], poses[50].q)
    trans, _ = ape_rmse(Trajectory(STAMPS, poses), gt, 0.005)
    # 3 cm on one pose out of 100, slightly absorbed by the alignment
    assert trans == pytest.approx(0.3, abs=0.005)
    errors, _ = ape_errors(Trajectory(STAMPS, poses), gt, 0.005, alignment=Pose())
    assert errors[50] == pytest.approx(0.03)
    assert np.count_nonzero(errors > 1e-12) == 1


def test_align_few_poses():
    gt = _straight(1.0, [0.0, 0.1])
    est = Trajectory(gt.stamps, [Pose(p.p + [1.0, 0.0, 0.0]) for p in gt.poses])
    alignment, matches = align_trajectories(est, gt, 0.005)
    assert matches == [(0, 0), (1, 1)]
    np.testing.assert_allclose(alignment.p, [-1.0, 0.0, 0.0])
    np.testing.assert_allclose(alignment.R, np.eye(3))


def test_rpe_drift():
    series = rpe(_straight(1.1), _straight(1.0), delta=1.0, tolerance=0.005)
    assert series.shape == (90, 3)
    np.testing.assert_allclose(series[:, 1], 0.1, rtol=1e-9)
    np.testing.assert_allclose(series[:, 2], 0.0, atol=1e-9)
    np.testing.assert_allclose(series[:3, 0], [0.0, 0.1, 0.2])
    with pytest.raises(EmptyOverlap):
        rpe(_straight(1.1), _straight(1.0), delta=100.0, tolerance=0.005)


def test_write_rpe_csv(tmp_path):
    series = rpe(_straight(1.1), _straight(1.0), delta=1.0, tolerance=0.005)
    write_rpe_csv(series, tmp_path / "rpe.csv")
    lines = (tmp_path / "rpe.csv").read_text().splitlines()
    assert lines[0] == "t,translation_m,rotation_deg"
    assert len(lines) == 91


def test_map_error():
    gt_points = {0: np.zeros(3), 1: np.array([1.0, 0.0, 0.0]), 2: np.ones(3)}
    est_points = {0: np.array([0.0, 0.0, 0.03]), 1: np.array([1.0, 0.0, 0.0])}
    assert map_error(est_points, gt_points) == pytest.approx(100 * np.sqrt(0.0009 / 2))

    gt_lines = {4: (np.zeros(3), np.array([1.0, 0.0, 0.0]))}
    est_lines = {4: (np.array([0.5, 0.02, 0.0]), np.array([2.0, 0.0, 0.0]))}
    errors = map_errors({}, gt_points, est_lines, gt_lines)
    # the far endpoint is measured to the end of the segment
    np.testing.assert_allclose(errors, [0.02, 1.0])

    shifted = map_errors(est_points, gt_points, alignment=Pose([0.0, 0.0, -0.03]))
    np.testing.assert_allclose(shifted, [0.0, 0.03], atol=1e-12)

    with pytest.raises(NoMatches):
        map_error({7: np.zeros(3)}, gt_points)


def test_sample_triangles(rng):
    triangle = np.array([[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]])
    samples = sample_triangles(triangle, 100.0, rng)
    assert samples.shape == (50, 3)
    assert np.all(samples[:, :2] >= 0.0)
    assert np.all(samples[:, :2].sum(axis=1) <= 1.0 + 1e-12)
    np.testing.assert_array_equal(samples[:, 2], 0.0)
    with pytest.raises(EmptyMesh):
        sample_triangles(np.zeros((1, 3, 3)), 100.0, rng)


def _floor(z):
    return np.array(
        [
            [[0.0, 0.0, z], [1.0, 0.0, z], [1.0, 1.0, z]],
            [[0.0, 0.0, z], [1.0, 1.0, z], [0.0, 1.0, z]],
        ]
    )


def test_mesh_error():
    grid = np.arange(0.0, 1.0 + 1e-9, 0.005)
    X, Y = np.meshgrid(grid, grid)
    cloud = np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])
    error = mesh_error(_floor(0.01), cloud, density=2000.0)
    # 1 cm above the floor, plus the in-plane gap to the nearest cloud point
    assert 1.0 <= error < 1.07
    aligned = mesh_error(
        _floor(0.01), cloud, alignment=Pose([0.0, 0.0, -0.01]), density=2000.0
    )
    assert aligned < 0.36
    with pytest.raises(EmptyMesh):
        mesh_error(np.zeros((0, 3, 3)), cloud)
