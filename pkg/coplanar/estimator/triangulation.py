"""
Landmark initialization from multiple keyframe observations.
"""
from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np

from coplanar.core.exceptions import DegenerateConfiguration, InsufficientParallax
from coplanar.core.typing import Segment, Vector
from coplanar.geometry.lines import PluckerLine, line_direction_angle
from coplanar.geometry.pose import ImuState, Pose

logger = logging.getLogger(__name__)


def camera_poses(states: Sequence[ImuState], extrinsics: Pose) -> list[Pose]:
    return [x.pose.compose(extrinsics) for x in states]


def triangulate_point(
    observations: Sequence[tuple[ImuState, Vector]],
    extrinsics: Pose,
    min_parallax_deg: float = 1.0,
) -> float:
    """
    Linear (DLT) triangulation of a point in the camera frame of its first
    observation.

    Args:
        observations (Sequence): ``(state, [u, v, 1])`` pairs, anchor first
        extrinsics (Pose): Camera to body transform ``T_bc``
        min_parallax_deg (float, optional): Minimum angle between the
            first and last viewing rays. Defaults to 1.

    Raises:
        InsufficientParallax: If the rays are too close to parallel or the
            point ends up behind the anchor camera

    Returns:
        float: Inverse depth along the anchor observation
    """
    if len(observations) < 2:
        raise InsufficientParallax("A point needs at least two observations.")

    poses = camera_poses([x for x, _ in observations], extrinsics)
    bearings = [np.asarray(obs, dtype=float) for _, obs in observations]

    ray0 = poses[0].R @ bearings[0]
    ray1 = poses[-1].R @ bearings[-1]
    parallax = line_direction_angle(ray0, ray1)
    if parallax < math.radians(min_parallax_deg):
        raise InsufficientParallax(f"Parallax {math.degrees(parallax):.3f} deg.")

    rows = []
    for T_wc, obs in zip(poses, bearings):
        T = T_wc.inverse().compose(poses[0])
        P = np.hstack([T.R, T.p.reshape(3, 1)])
        rows.append(obs[0] * P[2] - P[0])
        rows.append(obs[1] * P[2] - P[1])
    _, _, Vt = np.linalg.svd(np.array(rows))
    X = Vt[-1]
    if abs(X[3]) < 1e-12:
        raise InsufficientParallax("Point at infinity.")
    f_c0 = X[:3] / X[3]
    depth = float(f_c0[2])
    if depth <= 0.0:
        raise InsufficientParallax("Triangulated point is behind the anchor camera.")
    return 1.0 / depth


def triangulate_line(
    first: tuple[ImuState, Segment],
    second: tuple[ImuState, Segment],
    extrinsics: Pose,
    min_dihedral_deg: float = 1.0,
) -> PluckerLine:
    """
    Intersect the back-projection planes of two segment observations.

    Args:
        first (tuple): Anchor ``(state, (s, e))`` observation
        second (tuple): Other ``(state, (s, e))`` observation
        extrinsics (Pose): Camera to body transform ``T_bc``
        min_dihedral_deg (float, optional): Minimum angle between the two
            planes. Defaults to 1.

    Raises:
        DegenerateConfiguration: If the planes are (nearly) parallel

    Returns:
        PluckerLine: The line in the anchor camera frame
    """
    T_wa, T_wb = camera_poses([first[0], second[0]], extrinsics)
    T_ab = T_wa.inverse().compose(T_wb)

    s_a, e_a = (np.asarray(x, dtype=float) for x in first[1])
    s_b, e_b = (np.asarray(x, dtype=float) for x in second[1])
    a = np.cross(s_a, e_a)
    b = T_ab.R @ np.cross(s_b, e_b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        raise DegenerateConfiguration("Segment observation has no extent.")
    a, b = a / na, b / nb

    dihedral = line_direction_angle(a, b)
    if dihedral < math.radians(min_dihedral_deg):
        raise DegenerateConfiguration(
            f"Back-projection planes {math.degrees(dihedral):.3f} deg apart."
        )

    # Planes a.x = 0 and b.x + b0 = 0, the second through camera b's center.
    b0 = -float(np.dot(b, T_ab.p))
    return PluckerLine(n=-b0 * a, d=np.cross(a, b))
