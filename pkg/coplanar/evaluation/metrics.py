"""
Trajectory, map and mesh accuracy metrics.

Trajectories are compared after a rigid (no scale) alignment of the
associated positions; map and mesh errors are measured in the aligned
frame so the same alignment can be passed in.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from coplanar.conf import AppSettings, app_settings
from coplanar.core.exceptions import (
    EmptyMesh,
    EmptyOverlap,
    NoMatches,
    NonMonotonicTimestamps,
)
from coplanar.core.typing import Matrix, Segment, Vector
from coplanar.core.utils import so3_log
from coplanar.geometry.pose import Pose

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Trajectory:
    """
    Timestamped body poses, as stored in TUM files.
    """

    stamps: Vector
    poses: Sequence[Pose]

    def __post_init__(self) -> None:
        if len(self.stamps) != len(self.poses):
            raise ValueError("Trajectory needs one stamp per pose.")

    def __len__(self) -> int:
        return len(self.poses)

    @classmethod
    def from_tum(cls, path: str | Path) -> Trajectory:
        from coplanar.sim.io import read_tum

        stamps, poses = read_tum(path)
        return cls(stamps, poses)

    @property
    def positions(self) -> Matrix:
        if not self.poses:
            return np.zeros((0, 3))
        return np.array([pose.p for pose in self.poses])

    def check_monotonic(self) -> None:
        """
        Raises:
            NonMonotonicTimestamps: If stamps are not strictly increasing
        """
        steps = np.diff(np.asarray(self.stamps, dtype=float))
        if np.any(steps <= 0.0):
            index = int(np.argmax(steps <= 0.0)) + 1
            raise NonMonotonicTimestamps(
                f"Timestamp #{index} ({self.stamps[index]:.9g}) does not increase."
            )


def associate(
    est: Trajectory, gt: Trajectory, tolerance: float
) -> list[tuple[int, int]]:
    """
    Pair every estimated pose with the closest ground truth stamp within
    ``tolerance`` seconds. Each ground truth pose is used at most once,
    closer pairs win.

    Returns:
        list: ``(est_index, gt_index)`` pairs ordered by estimate stamp

    Raises:
        NonMonotonicTimestamps: If either trajectory is not sorted
        EmptyOverlap: If no pair is found
    """
    est.check_monotonic()
    gt.check_monotonic()
    a = np.asarray(est.stamps, dtype=float)
    b = np.asarray(gt.stamps, dtype=float)
    candidates: list[tuple[float, int, int]] = []
    if len(a) and len(b):
        right = np.clip(np.searchsorted(b, a), 0, len(b) - 1)
        left = np.clip(right - 1, 0, len(b) - 1)
        for i, (lo, hi) in enumerate(zip(left, right)):
            for j in {int(lo), int(hi)}:
                diff = abs(a[i] - b[j])
                if diff <= tolerance:
                    candidates.append((diff, i, j))
    candidates.sort()
    used_est: set[int] = set()
    used_gt: set[int] = set()
    matches = []
    for _, i, j in candidates:
        if i in used_est or j in used_gt:
            continue
        used_est.add(i)
        used_gt.add(j)
        matches.append((i, j))
    if not matches:
        raise EmptyOverlap(
            f"No timestamps within {tolerance * 1e3:.1f} ms between "
            f"{len(a)} estimated and {len(b)} ground truth poses."
        )
    matches.sort()
    return matches


def umeyama(
    source: Matrix, target: Matrix, with_scale: bool = False
) -> tuple[Matrix, Vector, float]:
    """
    Least squares similarity ``target ≈ s * R @ source + t`` between two
    ``(N, 3)`` arrays of corresponding points.

    Returns:
        tuple: Rotation, translation and scale (1 unless ``with_scale``)
    """
    source = np.asarray(source, dtype=float)
    target = np.asarray(target, dtype=float)
    mu_s = source.mean(axis=0)
    mu_t = target.mean(axis=0)
    xs = source - mu_s
    xt = target - mu_t
    cov = xt.T @ xs / len(source)
    U, D, Vt = np.linalg.svd(cov)
    S = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0.0:
        S[2, 2] = -1.0
    R = U @ S @ Vt
    scale = 1.0
    if with_scale:
        var = float(np.mean(np.sum(xs**2, axis=1)))
        scale = float(np.trace(np.diag(D) @ S)) / var if var > 0.0 else 1.0
    t = mu_t - scale * R @ mu_s
    return R, t, scale


def align_trajectories(
    est: Trajectory, gt: Trajectory, tolerance: Optional[float] = None
) -> tuple[Pose, list[tuple[int, int]]]:
    """
    Rigid transform taking the estimate into the ground truth frame.
    """
    if tolerance is None:
        tolerance = app_settings.ASSOCIATION_TOLERANCE
    matches = associate(est, gt, tolerance)
    src = np.array([est.poses[i].p for i, _ in matches])
    dst = np.array([gt.poses[j].p for _, j in matches])
    if len(matches) < 3:
        # Translation only, rotation is unobservable from fewer points.
        return Pose(np.mean(dst - src, axis=0)), matches
    R, t, _ = umeyama(src, dst)
    return Pose.from_matrix(R, t), matches


def ape_errors(
    est: Trajectory,
    gt: Trajectory,
    tolerance: Optional[float] = None,
    alignment: Optional[Pose] = None,
) -> tuple[Vector, Vector]:
    """
    Per-pose translation (m) and geodesic rotation (rad) errors after
    alignment.
    """
    aligned, matches = align_trajectories(est, gt, tolerance)
    if alignment is None:
        alignment = aligned
    trans = np.empty(len(matches))
    rot = np.empty(len(matches))
    for k, (i, j) in enumerate(matches):
        pose = alignment.compose(est.poses[i])
        trans[k] = np.linalg.norm(pose.p - gt.poses[j].p)
        rot[k] = np.linalg.norm(so3_log(gt.poses[j].R.T @ pose.R))
    return trans, rot


def ape_rmse(
    est: Trajectory, gt: Trajectory, tolerance: Optional[float] = None
) -> tuple[float, float]:
    """
    Root mean square absolute pose error.

    Returns:
        tuple: Translation error in centimeters, rotation error in degrees
    """
    trans, rot = ape_errors(est, gt, tolerance)
    trans_cm = 100.0 * math.sqrt(float(np.mean(trans**2)))
    rot_deg = math.degrees(math.sqrt(float(np.mean(rot**2))))
    logger.debug("APE over %d poses: %.3f cm, %.3f deg", len(trans), trans_cm, rot_deg)
    return trans_cm, rot_deg


def rpe(
    est: Trajectory,
    gt: Trajectory,
    delta: Optional[float] = None,
    tolerance: Optional[float] = None,
) -> Matrix:
    """
    Relative pose errors over intervals of ``delta`` seconds.

    For every associated pose ``i`` the partner ``j`` is the first pose at
    least ``delta`` later; the error is ``(Q_i^-1 Q_j)^-1 (P_i^-1 P_j)``.

    Returns:
        Matrix: Rows of ``(t, translation m, rotation deg)``

    Raises:
        EmptyOverlap: If no pose pairs or no complete interval exist
    """
    if delta is None:
        delta = app_settings.RPE_DELTA
    if tolerance is None:
        tolerance = app_settings.ASSOCIATION_TOLERANCE
    matches = associate(est, gt, tolerance)
    stamps = np.array([gt.stamps[j] for _, j in matches])
    rows = []
    for k, (i, j) in enumerate(matches):
        m = int(np.searchsorted(stamps, stamps[k] + delta - 1e-9))
        if m >= len(matches):
            break
        i2, j2 = matches[m]
        rel_est = est.poses[i].inverse().compose(est.poses[i2])
        rel_gt = gt.poses[j].inverse().compose(gt.poses[j2])
        error = rel_gt.inverse().compose(rel_est)
        rows.append(
            (
                stamps[k],
                float(np.linalg.norm(error.p)),
                math.degrees(float(np.linalg.norm(so3_log(error.R)))),
            )
        )
    if not rows:
        raise EmptyOverlap(f"Trajectory is shorter than the RPE interval {delta} s.")
    return np.array(rows)


def write_rpe_csv(series: Matrix, path: str | Path) -> None:
    np.savetxt(
        path,
        series,
        delimiter=",",
        header="t,translation_m,rotation_deg",
        comments="",
        fmt="%.9g",
    )


def point_segment_distance(x: Vector, segment: Segment) -> float:
    a, b = (np.asarray(v, dtype=float) for v in segment)
    ab = b - a
    length2 = float(ab @ ab)
    s = 0.0 if length2 == 0.0 else float(np.clip((x - a) @ ab / length2, 0.0, 1.0))
    return float(np.linalg.norm(x - (a + s * ab)))


def map_errors(
    est_points: Mapping[int, Vector],
    gt_points: Mapping[int, Vector],
    est_lines: Optional[Mapping[int, Segment]] = None,
    gt_lines: Optional[Mapping[int, Segment]] = None,
    alignment: Optional[Pose] = None,
) -> Vector:
    """
    Distances (m) of id-matched point estimates and estimated line
    endpoints to their ground truth.
    """
    T = alignment or Pose()
    errors = [
        float(np.linalg.norm(T.transform(est_points[k]) - gt_points[k]))
        for k in sorted(set(est_points) & set(gt_points))
    ]
    est_lines = est_lines or {}
    gt_lines = gt_lines or {}
    for k in sorted(set(est_lines) & set(gt_lines)):
        for endpoint in est_lines[k]:
            errors.append(point_segment_distance(T.transform(endpoint), gt_lines[k]))
    return np.array(errors)


def map_error(
    est_points: Mapping[int, Vector],
    gt_points: Mapping[int, Vector],
    est_lines: Optional[Mapping[int, Segment]] = None,
    gt_lines: Optional[Mapping[int, Segment]] = None,
    alignment: Optional[Pose] = None,
) -> float:
    """
    Root mean square landmark error in centimeters.

    Raises:
        NoMatches: If no landmark id is shared with the ground truth
    """
    errors = map_errors(est_points, gt_points, est_lines, gt_lines, alignment)
    if not len(errors):
        raise NoMatches("No estimated landmark matches a ground truth id.")
    return 100.0 * math.sqrt(float(np.mean(errors**2)))


def triangle_areas(triangles: Matrix) -> Vector:
    a, b, c = triangles[:, 0], triangles[:, 1], triangles[:, 2]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def sample_triangles(
    triangles: Matrix, density: float, rng: np.random.Generator
) -> Matrix:
    """
    Uniformly sample ``round(area * density)`` points over a triangle soup
    of shape ``(M, 3, 3)``.
    """
    triangles = np.asarray(triangles, dtype=float).reshape(-1, 3, 3)
    areas = triangle_areas(triangles)
    total = float(areas.sum())
    if not len(triangles) or total <= 0.0:
        raise EmptyMesh("Mesh has no area to sample.")
    count = max(int(round(total * density)), 1)
    index = rng.choice(len(triangles), size=count, p=areas / total)
    u = rng.random((count, 2))
    flip = u.sum(axis=1) > 1.0
    u[flip] = 1.0 - u[flip]
    tri = triangles[index]
    return tri[:, 0] + u[:, :1] * (tri[:, 1] - tri[:, 0]) + u[:, 1:] * (
        tri[:, 2] - tri[:, 0]
    )


def mesh_error(
    triangles: Matrix,
    gt_cloud: Matrix,
    alignment: Optional[Pose] = None,
    density: Optional[float] = None,
    seed: int = 0,
    conf: AppSettings = app_settings,
) -> float:
    """
    Mean distance (cm) from points sampled on the mesh to their nearest
    ground truth cloud point.

    Raises:
        EmptyMesh: If the mesh has no triangles
    """
    triangles = np.asarray(triangles, dtype=float).reshape(-1, 3, 3)
    if not len(triangles):
        raise EmptyMesh("Mesh has no patches.")
    if density is None:
        density = conf.MESH_SAMPLE_DENSITY
    samples = sample_triangles(triangles, density, np.random.default_rng(seed))
    if alignment is not None:
        samples = samples @ alignment.R.T + alignment.p
    distances, _ = cKDTree(np.asarray(gt_cloud, dtype=float)).query(samples)
    logger.debug("Mesh error over %d samples", len(samples))
    return 100.0 * float(np.mean(distances))
