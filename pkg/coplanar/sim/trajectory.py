"""
Analytic camera-rig trajectory inside the room: a horizontal circle with a
vertical oscillation, heading along the direction of travel with small
roll and pitch oscillations so every IMU axis is excited.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from coplanar.conf import AppSettings, app_settings
from coplanar.core.typing import Matrix, Vector
from coplanar.geometry.pose import ImuState, Pose

ROLL_AMPLITUDE = 0.08
PITCH_AMPLITUDE = 0.06


@dataclass(frozen=True)
class TrajectorySpec:
    radius: float = 1.5
    height: float = 1.5
    amplitude: float = 0.3
    period: float = 20.0
    duration: float = 20.0
    camera_rate: float = 20.0
    imu_rate: float = 200.0

    @classmethod
    def from_settings(cls, conf: AppSettings = app_settings) -> TrajectorySpec:
        return cls(
            radius=conf.TRAJECTORY_RADIUS,
            height=conf.TRAJECTORY_HEIGHT,
            amplitude=conf.TRAJECTORY_VERTICAL_AMPLITUDE,
            period=conf.TRAJECTORY_PERIOD,
            duration=conf.DURATION,
            camera_rate=conf.CAMERA_RATE,
            imu_rate=conf.IMU_RATE,
        )

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.period

    @property
    def imu_per_frame(self) -> int:
        return int(round(self.imu_rate / self.camera_rate))

    def imu_times(self) -> Vector:
        n = int(round(self.duration * self.imu_rate))
        return np.arange(n + 1) / self.imu_rate

    def camera_times(self) -> Vector:
        return self.imu_times()[:: self.imu_per_frame]

    # Position and its derivatives

    def position(self, t: float) -> Vector:
        w, r = self.omega, self.radius
        return np.array(
            [
                r * math.cos(w * t),
                r * math.sin(w * t),
                self.height + self.amplitude * math.sin(2.0 * w * t),
            ]
        )

    def velocity(self, t: float) -> Vector:
        w, r = self.omega, self.radius
        return np.array(
            [
                -r * w * math.sin(w * t),
                r * w * math.cos(w * t),
                2.0 * w * self.amplitude * math.cos(2.0 * w * t),
            ]
        )

    def acceleration(self, t: float) -> Vector:
        w, r = self.omega, self.radius
        return np.array(
            [
                -r * w * w * math.cos(w * t),
                -r * w * w * math.sin(w * t),
                -4.0 * w * w * self.amplitude * math.sin(2.0 * w * t),
            ]
        )

    # Orientation as yaw-pitch-roll (intrinsic z-y-x) and its rates

    def euler(self, t: float) -> tuple[Vector, Vector]:
        """
        ``(yaw, pitch, roll)`` angles and their time derivatives.
        """
        w = self.omega
        angles = np.array(
            [
                w * t + 0.5 * math.pi,
                PITCH_AMPLITUDE * math.sin(3.0 * w * t),
                ROLL_AMPLITUDE * math.cos(2.0 * w * t),
            ]
        )
        rates = np.array(
            [
                w,
                3.0 * w * PITCH_AMPLITUDE * math.cos(3.0 * w * t),
                -2.0 * w * ROLL_AMPLITUDE * math.sin(2.0 * w * t),
            ]
        )
        return angles, rates

    def rotation(self, t: float) -> Matrix:
        angles, _ = self.euler(t)
        return Rotation.from_euler("ZYX", angles).as_matrix()

    def angular_velocity(self, t: float) -> Vector:
        """
        Body-frame angular velocity.
        """
        (_, pitch, roll), (dyaw, dpitch, droll) = self.euler(t)
        return np.array(
            [
                droll - dyaw * math.sin(pitch),
                dpitch * math.cos(roll) + dyaw * math.cos(pitch) * math.sin(roll),
                dyaw * math.cos(pitch) * math.cos(roll) - dpitch * math.sin(roll),
            ]
        )

    def pose(self, t: float) -> Pose:
        return Pose.from_matrix(self.rotation(t), self.position(t))

    def state(
        self, t: float, ba: Vector | None = None, bg: Vector | None = None
    ) -> ImuState:
        return ImuState(
            pose=self.pose(t),
            v=self.velocity(t),
            ba=np.zeros(3) if ba is None else ba,
            bg=np.zeros(3) if bg is None else bg,
        )

    def specific_force(self, t: float, gravity: Vector) -> Vector:
        """
        Accelerometer reading without noise: ``R^T (a - g)``.
        """
        return self.rotation(t).T @ (self.acceleration(t) - gravity)
