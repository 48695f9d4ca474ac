from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from coplanar.conf import AppSettings, app_settings
from coplanar.core.typing import Vector
from coplanar.geometry.pose import Pose

# Camera looking along the body x axis, image x to the right and y down.
R_BC = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
P_BC = np.array([0.05, 0.0, 0.02])


def default_extrinsics() -> Pose:
    """
    Camera to body transform ``T_bc`` of the simulated rig.
    """
    return Pose.from_matrix(R_BC, P_BC)


@dataclass(frozen=True)
class PinholeCamera:
    focal: float = 460.0
    width: int = 640
    height: int = 480
    extrinsics: Pose = field(default_factory=default_extrinsics)

    @classmethod
    def from_settings(cls, conf: AppSettings = app_settings) -> PinholeCamera:
        return cls(conf.FOCAL_LENGTH, conf.IMAGE_WIDTH, conf.IMAGE_HEIGHT)

    @property
    def principal_point(self) -> Vector:
        return np.array([0.5 * self.width, 0.5 * self.height])

    def to_pixels(self, obs: Vector) -> Vector:
        return self.focal * np.asarray(obs)[:2] + self.principal_point

    def in_image(self, obs: Vector) -> bool:
        u, v = self.to_pixels(obs)
        return 0.0 <= u < self.width and 0.0 <= v < self.height

    def normalized_bounds(self) -> tuple[float, float, float, float]:
        """
        Image rectangle on the normalized plane as ``(xmin, xmax, ymin, ymax)``.
        """
        cx, cy = self.principal_point
        f = self.focal
        return -cx / f, (self.width - cx) / f, -cy / f, (self.height - cy) / f
