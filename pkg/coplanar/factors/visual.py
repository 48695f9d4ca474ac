"""
Point and line re-projection residuals on the normalized image plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from coplanar.core.exceptions import BehindCamera, DegenerateProjection
from coplanar.core.typing import Matrix, Vector
from coplanar.core.utils import skew
from coplanar.geometry.lines import OrthonormalLine, orthonormal_to_plucker
from coplanar.geometry.points import InverseDepthPoint
from coplanar.geometry.pose import ImuState, Pose

from .base import Factor, NoiseModel, Values, line_key, point_key, state_key
from .loss import RobustLoss

MIN_DEPTH = 1e-6


@dataclass(frozen=True)
class PointReprojFactor:
    """
    Observation of point ``point_id`` in its anchor frame ``frame_i`` and in
    another frame ``frame_j``.
    """

    frame_i: int
    frame_j: int
    obs_i: Vector = field(compare=False)
    obs_j: Vector = field(compare=False)
    point_id: int

    def __post_init__(self) -> None:
        if self.frame_i == self.frame_j:
            raise ValueError("A re-projection factor needs two distinct frames.")


@dataclass(frozen=True)
class LineReprojFactor:
    """
    Observation of line ``line_id`` in frame ``frame`` as a segment with
    normalized-plane endpoints ``s`` and ``e``.
    """

    frame: int
    line_id: int
    s: Vector = field(compare=False)
    e: Vector = field(compare=False)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.asarray(self.s) - np.asarray(self.e)))


def _projection_jacobian(f: Vector) -> Matrix:
    x, y, z = f
    return np.array([[1.0 / z, 0.0, -x / (z * z)], [0.0, 1.0 / z, -y / (z * z)]])


def point_reproj_residual(
    x_i: ImuState,
    x_j: ImuState,
    inv_depth: float,
    factor: PointReprojFactor,
    extrinsics: Pose,
    jacobians: bool = True,
) -> tuple[Vector, list[Matrix]]:
    """
    Re-projection error of an inverse-depth point from its anchor frame into
    frame ``j``: ``[x/z - u, y/z - v]`` for ``f_cj = [x, y, z]``.

    Args:
        x_i (ImuState): Anchor keyframe state
        x_j (ImuState): Target keyframe state
        inv_depth (float): Inverse depth along ``obs_i``
        factor (PointReprojFactor): Observations
        extrinsics (Pose): Camera to body transform ``T_bc``
        jacobians (bool, optional): Compute Jacobians. Defaults to True.

    Raises:
        BehindCamera: If the point is not in front of camera ``j``

    Returns:
        tuple: Residual and Jacobians w.r.t. ``x_i`` (2x15), ``x_j`` (2x15)
            and the inverse depth (2x1)
    """
    R_bc, p_bc = extrinsics.R, extrinsics.p
    R_i, p_i = x_i.R, x_i.p
    R_j, p_j = x_j.R, x_j.p
    obs_i = np.asarray(factor.obs_i, dtype=float)

    f_ci = obs_i / inv_depth
    f_bi = R_bc @ f_ci + p_bc
    f_w = R_i @ f_bi + p_i
    f_bj = R_j.T @ (f_w - p_j)
    f_cj = R_bc.T @ (f_bj - p_bc)

    z = f_cj[2]
    if z <= MIN_DEPTH:
        raise BehindCamera(f"Point {factor.point_id} is behind frame {factor.frame_j}.")

    r = f_cj[:2] / z - np.asarray(factor.obs_j, dtype=float)[:2]
    if not jacobians:
        return r, []

    P = _projection_jacobian(f_cj)
    A = R_bc.T @ R_j.T
    J_i = np.zeros((2, 15))
    J_i[:, 0:3] = P @ A
    J_i[:, 3:6] = -P @ A @ R_i @ skew(f_bi)
    J_j = np.zeros((2, 15))
    J_j[:, 0:3] = -P @ A
    J_j[:, 3:6] = P @ R_bc.T @ skew(f_bj)
    J_lam = (P @ A @ R_i @ R_bc @ (-obs_i / inv_depth**2)).reshape(2, 1)
    return r, [J_i, J_j, J_lam]


def point_line_distance(s: Vector, n_proj: Vector) -> float:
    """
    Signed distance from image point ``s = [u, v, 1]`` to the image line
    ``n_proj``.

    Raises:
        DegenerateProjection: If the line has no image part
    """
    rho2 = n_proj[0] ** 2 + n_proj[1] ** 2
    if rho2 < 1e-16:
        raise DegenerateProjection("Projected line has a vanishing image part.")
    return float(np.dot(s, n_proj) / math.sqrt(rho2))


def _distance_gradient(s: Vector, l: Vector) -> Vector:
    rho2 = l[0] ** 2 + l[1] ** 2
    rho = math.sqrt(rho2)
    return np.asarray(s) / rho - float(np.dot(s, l)) / (rho2 * rho) * np.array(
        [l[0], l[1], 0.0]
    )


def line_reproj_residual(
    x: ImuState,
    O: OrthonormalLine,
    factor: LineReprojFactor,
    extrinsics: Pose,
    jacobians: bool = True,
) -> tuple[Vector, list[Matrix]]:
    """
    Distances of the observed endpoints to the projected line, divided by
    the observed segment length.

    Args:
        x (ImuState): Observing keyframe state
        O (OrthonormalLine): World line
        factor (LineReprojFactor): Observed segment
        extrinsics (Pose): Camera to body transform ``T_bc``
        jacobians (bool, optional): Compute Jacobians. Defaults to True.

    Raises:
        DegenerateProjection: If the line projects to a point

    Returns:
        tuple: Residual and Jacobians w.r.t. ``x`` (2x15) and the line (2x4)
    """
    L_w = orthonormal_to_plucker(O)
    R_wb, p_wb = x.R, x.p
    R_bc, p_bc = extrinsics.R, extrinsics.p
    R_wc = R_wb @ R_bc
    p_wc = p_wb + R_wb @ p_bc
    n_c = R_wc.T @ (L_w.n - np.cross(p_wc, L_w.d))

    s = np.asarray(factor.s, dtype=float)
    e = np.asarray(factor.e, dtype=float)
    length = factor.length
    r = np.array([point_line_distance(s, n_c), point_line_distance(e, n_c)]) / length
    if not jacobians:
        return r, []

    D = np.vstack([_distance_gradient(s, n_c), _distance_gradient(e, n_c)]) / length
    dn_dp = R_wc.T @ skew(L_w.d)
    dn_dtheta = skew(n_c) @ R_bc.T - R_wc.T @ skew(L_w.d) @ R_wb @ skew(p_bc)
    J_x = np.zeros((2, 15))
    J_x[:, 0:3] = D @ dn_dp
    J_x[:, 3:6] = D @ dn_dtheta
    dn_dL = np.hstack([R_wc.T, -R_wc.T @ skew(p_wc)])
    J_l = D @ dn_dL @ O.plucker_jacobian()
    return r, [J_x, J_l]


class PointFactor(Factor):
    kind = "point"

    def __init__(
        self,
        measurement: PointReprojFactor,
        extrinsics: Pose,
        noise: NoiseModel,
        loss: RobustLoss | None = None,
    ) -> None:
        self.measurement = measurement
        self.extrinsics = extrinsics
        self.noise = noise
        self.loss = loss
        self.keys = (
            state_key(measurement.frame_i),
            state_key(measurement.frame_j),
            point_key(measurement.point_id),
        )

    def evaluate(
        self, values: Values, jacobians: bool = True
    ) -> tuple[Vector, list[Matrix]]:
        x_i, x_j, point = (values[k] for k in self.keys)
        assert isinstance(point, InverseDepthPoint)
        return point_reproj_residual(
            x_i, x_j, point.inv_depth, self.measurement, self.extrinsics, jacobians
        )


class LineFactor(Factor):
    kind = "line"

    def __init__(
        self,
        measurement: LineReprojFactor,
        extrinsics: Pose,
        noise: NoiseModel,
        loss: RobustLoss | None = None,
    ) -> None:
        self.measurement = measurement
        self.extrinsics = extrinsics
        self.noise = noise
        self.loss = loss
        self.keys = (state_key(measurement.frame), line_key(measurement.line_id))

    def evaluate(
        self, values: Values, jacobians: bool = True
    ) -> tuple[Vector, list[Matrix]]:
        x, line = (values[k] for k in self.keys)
        return line_reproj_residual(
            x, line, self.measurement, self.extrinsics, jacobians
        )
