"""
Co-planarity residuals tying point and line landmarks to planes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from coplanar.core.typing import Matrix, Vector
from coplanar.core.utils import skew
from coplanar.geometry.lines import PluckerLine, orthonormal_to_plucker
from coplanar.geometry.planes import PlaneParam, plane_distance
from coplanar.geometry.points import InverseDepthPoint
from coplanar.geometry.pose import ImuState, Pose

from .base import Factor, NoiseModel, Values, line_key, plane_key, point_key, state_key
from .loss import RobustLoss


@dataclass(frozen=True)
class CoplanarFactor:
    """
    Association of landmark ``landmark_id`` (``kind`` is ``"point"`` or
    ``"line"``) with plane ``plane_id``.
    """

    plane_id: int
    landmark_id: int
    kind: str


def point_on_plane_residual(
    f: Vector, pi: PlaneParam, jacobians: bool = True
) -> tuple[Vector, list[Matrix]]:
    """
    Signed point to plane distance ``n.f - d``.

    Returns:
        tuple: Residual (1,) and Jacobians w.r.t. the point (1x3) and the
            plane chart ``(w1, w2, dd)`` (1x3)
    """
    r = np.array([plane_distance(f, pi.n, pi.d)])
    if not jacobians:
        return r, []
    J_f = pi.n.reshape(1, 3).copy()
    J_pi = np.array([[np.dot(f, pi.b1), np.dot(f, pi.b2), -1.0]])
    return r, [J_f, J_pi]


def line_on_plane_residual(
    L: PluckerLine, pi: PlaneParam, jacobians: bool = True
) -> tuple[Vector, list[Matrix]]:
    """
    Distance of the point of ``L`` closest to the origin to the plane, and
    the cosine between the unit line direction and the plane normal.

    Returns:
        tuple: Residual (2,) and Jacobians w.r.t. the Plücker 6-vector
            ``[n; d]`` (2x6) and the plane chart (2x3)
    """
    n, d = L.n, L.d
    dd = float(np.dot(d, d))
    dn = np.sqrt(dd)
    Q = np.cross(d, n) / dd
    u = d / dn
    r = np.array([plane_distance(Q, pi.n, pi.d), float(np.dot(pi.n, u))])
    if not jacobians:
        return r, []

    dQ_dn = skew(d) / dd
    dQ_dd = -skew(n) / dd - 2.0 * np.outer(Q, d) / dd
    J_L = np.zeros((2, 6))
    J_L[0, :3] = pi.n @ dQ_dn
    J_L[0, 3:] = pi.n @ dQ_dd
    J_L[1, 3:] = pi.n @ (np.eye(3) - np.outer(u, u)) / dn
    J_pi = np.array(
        [
            [np.dot(Q, pi.b1), np.dot(Q, pi.b2), -1.0],
            [np.dot(u, pi.b1), np.dot(u, pi.b2), 0.0],
        ]
    )
    return r, [J_L, J_pi]


class PointOnPlaneFactor(Factor):
    """
    Point-on-plane term. The point is evaluated through its anchor
    keyframe, so the factor depends on the anchor state as well.
    """

    kind = "coplanar_point"

    def __init__(
        self,
        plane_id: int,
        point_id: int,
        anchor_frame: int,
        extrinsics: Pose,
        noise: NoiseModel,
        loss: RobustLoss | None = None,
    ) -> None:
        self.association = CoplanarFactor(plane_id, point_id, "point")
        self.extrinsics = extrinsics
        self.noise = noise
        self.loss = loss
        self.keys = (state_key(anchor_frame), point_key(point_id), plane_key(plane_id))

    def evaluate(
        self, values: Values, jacobians: bool = True
    ) -> tuple[Vector, list[Matrix]]:
        anchor, point, plane = (values[k] for k in self.keys)
        assert isinstance(anchor, ImuState) and isinstance(point, InverseDepthPoint)
        R_bc, p_bc = self.extrinsics.R, self.extrinsics.p
        f_bi = R_bc @ point.camera_point() + p_bc
        f_w = anchor.R @ f_bi + anchor.p
        r, Js = point_on_plane_residual(f_w, plane, jacobians)
        if not jacobians:
            return r, []

        J_f, J_pi = Js
        J_x = np.zeros((1, 15))
        J_x[:, 0:3] = J_f
        J_x[:, 3:6] = -J_f @ anchor.R @ skew(f_bi)
        df_dlam = anchor.R @ R_bc @ (-point.obs0 / point.inv_depth**2)
        J_lam = (J_f @ df_dlam).reshape(1, 1)
        return r, [J_x, J_lam, J_pi]


class LineOnPlaneFactor(Factor):
    kind = "coplanar_line"

    def __init__(
        self,
        plane_id: int,
        line_id: int,
        noise: NoiseModel,
        loss: RobustLoss | None = None,
    ) -> None:
        self.association = CoplanarFactor(plane_id, line_id, "line")
        self.noise = noise
        self.loss = loss
        self.keys = (line_key(line_id), plane_key(plane_id))

    def evaluate(
        self, values: Values, jacobians: bool = True
    ) -> tuple[Vector, list[Matrix]]:
        line, plane = (values[k] for k in self.keys)
        r, Js = line_on_plane_residual(orthonormal_to_plucker(line), plane, jacobians)
        if not jacobians:
            return r, []
        J_L, J_pi = Js
        return r, [J_L @ line.plucker_jacobian(), J_pi]
