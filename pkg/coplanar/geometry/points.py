from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from coplanar.core.typing import Vector

from .pose import ImuState, Pose


@dataclass(frozen=True, eq=False)
class InverseDepthPoint:
    """
    Point stored as the inverse depth along its bearing in the anchor
    keyframe: ``f_c = obs0 / inv_depth``.
    """

    anchor_frame: int
    obs0: Vector
    inv_depth: float

    dim = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "obs0", np.array(self.obs0, dtype=float).reshape(3))
        object.__setattr__(self, "inv_depth", float(self.inv_depth))

    @property
    def depth(self) -> float:
        return 1.0 / self.inv_depth

    def is_valid(self, min_depth: float = 0.05, max_depth: float = 200.0) -> bool:
        """
        Check that the depth is finite and inside ``[min_depth, max_depth]``.
        """
        if not np.isfinite(self.inv_depth) or self.inv_depth <= 0.0:
            return False
        return min_depth <= self.depth <= max_depth

    def retract(self, delta: Vector) -> InverseDepthPoint:
        return InverseDepthPoint(
            self.anchor_frame, self.obs0, self.inv_depth + float(delta[0])
        )

    def camera_point(self) -> Vector:
        return self.obs0 / self.inv_depth

    def world_point(self, anchor: ImuState, extrinsics: Pose) -> Vector:
        """
        Position in the world frame given the anchor state and the camera
        extrinsics ``T_bc``.
        """
        return anchor.pose.transform(extrinsics.transform(self.camera_point()))


def reanchor(
    f_w: Vector,
    anchor_frame: int,
    anchor: ImuState,
    obs0: Vector,
    extrinsics: Pose,
) -> InverseDepthPoint:
    """
    Express a world point as an inverse depth along the observed bearing of a
    new anchor keyframe. The depth is the z coordinate of the point in the
    new anchor camera; the result may be invalid if it is behind it.
    """
    T_wc = anchor.pose.compose(extrinsics)
    f_c = T_wc.inverse().transform(f_w)
    z = float(f_c[2])
    inv_depth = 1.0 / z if abs(z) > 1e-12 else 0.0
    return InverseDepthPoint(anchor_frame, obs0, inv_depth)
