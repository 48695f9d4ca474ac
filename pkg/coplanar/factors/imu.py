"""
Mid-point IMU pre-integration between consecutive keyframes and the
corresponding 15-dimensional residual.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from coplanar.core.typing import Matrix, Vector
from coplanar.core.utils import (
    right_jacobian,
    right_jacobian_inv,
    skew,
    so3_exp,
    so3_log,
)
from coplanar.geometry.pose import ImuState, Pose

from .base import Factor, NoiseModel, Values, state_key

logger = logging.getLogger(__name__)

O_P, O_R, O_V, O_BA, O_BG = 0, 3, 6, 9, 12


@dataclass(frozen=True)
class ImuNoise:
    """
    Continuous-time IMU noise densities.
    """

    accel_noise: float = 2e-3
    gyro_noise: float = 1.7e-4
    accel_walk: float = 1e-4
    gyro_walk: float = 1e-5

    @classmethod
    def from_settings(cls, conf: object) -> ImuNoise:
        return cls(
            accel_noise=getattr(conf, "ACCEL_NOISE_DENSITY"),
            gyro_noise=getattr(conf, "GYRO_NOISE_DENSITY"),
            accel_walk=getattr(conf, "ACCEL_BIAS_WALK"),
            gyro_walk=getattr(conf, "GYRO_BIAS_WALK"),
        )

    def discrete(self, dt: float) -> Matrix:
        """
        Covariance of the 18 stacked noise inputs of one step of length
        ``dt``: accel/gyro at both ends of the step and the two bias walks.
        """
        an, gn = self.accel_noise**2 / dt, self.gyro_noise**2 / dt
        aw, gw = self.accel_walk**2 / dt, self.gyro_walk**2 / dt
        return np.diag(np.repeat([an, gn, an, gn, aw, gw], 3))


class ImuPreintegration:
    """
    Relative motion ``(dp, dv, dR)`` integrated from raw IMU samples with the
    mid-point rule at fixed bias linearization points, with its covariance
    and the first-order Jacobians of the deltas with respect to the biases.

    Raw samples are kept so the deltas can be re-integrated when the bias
    estimate moves far from the linearization point.
    """

    def __init__(
        self,
        acc0: Vector,
        gyr0: Vector,
        ba: Vector,
        bg: Vector,
        noise: ImuNoise | None = None,
    ) -> None:
        self.acc0 = np.asarray(acc0, dtype=float)
        self.gyr0 = np.asarray(gyr0, dtype=float)
        self.linearized_ba = np.asarray(ba, dtype=float).copy()
        self.linearized_bg = np.asarray(bg, dtype=float).copy()
        self.noise = noise or ImuNoise()
        self.samples: list[tuple[float, Vector, Vector]] = []
        self._reset()

    def _reset(self) -> None:
        self.sum_dt = 0.0
        self.delta_p = np.zeros(3)
        self.delta_v = np.zeros(3)
        self.delta_R = np.eye(3)
        self.jacobian = np.eye(15)
        self.covariance = np.zeros((15, 15))
        self._acc = self.acc0
        self._gyr = self.gyr0

    def integrate(self, dt: float, acc: Vector, gyr: Vector) -> None:
        """
        Add one IMU sample taken ``dt`` seconds after the previous one.
        """
        acc, gyr = np.asarray(acc, dtype=float), np.asarray(gyr, dtype=float)
        self.samples.append((dt, acc, gyr))
        self._propagate(dt, acc, gyr)

    def extend(self, other: ImuPreintegration) -> None:
        """
        Append the samples of a following pre-integration.
        """
        for dt, acc, gyr in other.samples:
            self.integrate(dt, acc, gyr)

    def repropagate(self, ba: Vector, bg: Vector) -> None:
        """
        Re-integrate all samples around new bias linearization points.
        """
        logger.debug("Re-integrating %d IMU samples", len(self.samples))
        self.linearized_ba = np.asarray(ba, dtype=float).copy()
        self.linearized_bg = np.asarray(bg, dtype=float).copy()
        self._reset()
        for dt, acc, gyr in self.samples:
            self._propagate(dt, acc, gyr)

    @property
    def last_sample(self) -> tuple[Vector, Vector]:
        return self._acc, self._gyr

    @property
    def dp_dba(self) -> Matrix:
        return self.jacobian[O_P : O_P + 3, O_BA : O_BA + 3]

    @property
    def dp_dbg(self) -> Matrix:
        return self.jacobian[O_P : O_P + 3, O_BG : O_BG + 3]

    @property
    def dR_dbg(self) -> Matrix:
        return self.jacobian[O_R : O_R + 3, O_BG : O_BG + 3]

    @property
    def dv_dba(self) -> Matrix:
        return self.jacobian[O_V : O_V + 3, O_BA : O_BA + 3]

    @property
    def dv_dbg(self) -> Matrix:
        return self.jacobian[O_V : O_V + 3, O_BG : O_BG + 3]

    def _propagate(self, dt: float, acc1: Vector, gyr1: Vector) -> None:
        acc0, gyr0 = self._acc, self._gyr
        ba, bg = self.linearized_ba, self.linearized_bg
        R0 = self.delta_R

        w = 0.5 * (gyr0 + gyr1) - bg
        R_step = so3_exp(w * dt)
        R1 = R0 @ R_step
        a0, a1 = acc0 - ba, acc1 - ba
        un_acc = 0.5 * (R0 @ a0 + R1 @ a1)

        self.delta_p = self.delta_p + self.delta_v * dt + 0.5 * un_acc * dt * dt
        self.delta_v = self.delta_v + un_acc * dt
        self.delta_R = R1

        I3 = np.eye(3)
        A0, A1 = skew(a0), skew(a1)
        dt2 = dt * dt
        F = np.eye(15)
        F[O_P:O_R, O_R:O_V] = -0.25 * R0 @ A0 * dt2 - 0.25 * R1 @ A1 @ R_step.T * dt2
        F[O_P:O_R, O_V:O_BA] = I3 * dt
        F[O_P:O_R, O_BA:O_BG] = -0.25 * (R0 + R1) * dt2
        F[O_P:O_R, O_BG:] = 0.25 * R1 @ A1 * dt2 * dt
        F[O_R:O_V, O_R:O_V] = R_step.T
        F[O_R:O_V, O_BG:] = -right_jacobian(w * dt) * dt
        F[O_V:O_BA, O_R:O_V] = -0.5 * R0 @ A0 * dt - 0.5 * R1 @ A1 @ R_step.T * dt
        F[O_V:O_BA, O_BA:O_BG] = -0.5 * (R0 + R1) * dt
        F[O_V:O_BA, O_BG:] = 0.5 * R1 @ A1 * dt2

        V = np.zeros((15, 18))
        V[O_P:O_R, 0:3] = 0.25 * R0 * dt2
        V[O_P:O_R, 3:6] = -0.125 * R1 @ A1 * dt2 * dt
        V[O_P:O_R, 6:9] = 0.25 * R1 * dt2
        V[O_P:O_R, 9:12] = V[O_P:O_R, 3:6]
        V[O_R:O_V, 3:6] = 0.5 * I3 * dt
        V[O_R:O_V, 9:12] = 0.5 * I3 * dt
        V[O_V:O_BA, 0:3] = 0.5 * R0 * dt
        V[O_V:O_BA, 3:6] = -0.25 * R1 @ A1 * dt2
        V[O_V:O_BA, 6:9] = 0.5 * R1 * dt
        V[O_V:O_BA, 9:12] = V[O_V:O_BA, 3:6]
        V[O_BA:O_BG, 12:15] = I3 * dt
        V[O_BG:, 15:18] = I3 * dt

        self.jacobian = F @ self.jacobian
        self.covariance = F @ self.covariance @ F.T + V @ self.noise.discrete(dt) @ V.T
        self.sum_dt += dt
        self._acc, self._gyr = acc1, gyr1

    def corrected(self, ba: Vector, bg: Vector) -> tuple[Vector, Vector, Matrix]:
        """
        First-order bias correction of ``(dp, dv, dR)``.
        """
        dba = ba - self.linearized_ba
        dbg = bg - self.linearized_bg
        dp = self.delta_p + self.dp_dba @ dba + self.dp_dbg @ dbg
        dv = self.delta_v + self.dv_dba @ dba + self.dv_dbg @ dbg
        dR = self.delta_R @ so3_exp(self.dR_dbg @ dbg)
        return dp, dv, dR

    def predict(self, x_i: ImuState, gravity: Vector) -> ImuState:
        """
        Propagate ``x_i`` through the pre-integrated motion.
        """
        T = self.sum_dt
        dp, dv, dR = self.corrected(x_i.ba, x_i.bg)
        R_i = x_i.R
        p = x_i.p + x_i.v * T + 0.5 * gravity * T * T + R_i @ dp
        v = x_i.v + gravity * T + R_i @ dv
        return ImuState(pose=Pose.from_matrix(R_i @ dR, p), v=v, ba=x_i.ba, bg=x_i.bg)


def imu_residual(
    x_i: ImuState,
    x_j: ImuState,
    preint: ImuPreintegration,
    gravity: Vector,
    jacobians: bool = True,
) -> tuple[Vector, list[Matrix]]:
    """
    Raw 15-dimensional residual ``[r_p, r_theta, r_v, r_ba, r_bg]`` between
    two keyframes and the pre-integrated motion, with gravity ``g_w`` and
    the accelerometer measuring ``R^T (a_w - g_w)``.

    Args:
        x_i (ImuState): Earlier keyframe
        x_j (ImuState): Later keyframe
        preint (ImuPreintegration): Motion integrated from ``i`` to ``j``
        gravity (Vector): Gravity vector in the world frame
        jacobians (bool, optional): Compute Jacobians. Defaults to True.

    Returns:
        tuple: Residual and Jacobians w.r.t. ``x_i`` and ``x_j`` (15x15 each)
    """
    T = preint.sum_dt
    dbg = x_i.bg - preint.linearized_bg
    dp, dv, dR = preint.corrected(x_i.ba, x_i.bg)
    R_i, R_j = x_i.R, x_j.R
    a = x_j.p - x_i.p - x_i.v * T - 0.5 * gravity * T * T
    b = x_j.v - x_i.v - gravity * T

    r = np.zeros(15)
    r[O_P:O_R] = R_i.T @ a - dp
    E = dR.T @ R_i.T @ R_j
    r_theta = so3_log(E)
    r[O_R:O_V] = r_theta
    r[O_V:O_BA] = R_i.T @ b - dv
    r[O_BA:O_BG] = x_j.ba - x_i.ba
    r[O_BG:] = x_j.bg - x_i.bg
    if not jacobians:
        return r, []

    I3 = np.eye(3)
    Jr_inv = right_jacobian_inv(r_theta)
    phi = preint.dR_dbg @ dbg

    J_i = np.zeros((15, 15))
    J_i[O_P:O_R, O_P:O_R] = -R_i.T
    J_i[O_P:O_R, O_R:O_V] = skew(R_i.T @ a)
    J_i[O_P:O_R, O_V:O_BA] = -R_i.T * T
    J_i[O_P:O_R, O_BA:O_BG] = -preint.dp_dba
    J_i[O_P:O_R, O_BG:] = -preint.dp_dbg
    J_i[O_R:O_V, O_R:O_V] = -Jr_inv @ R_j.T @ R_i
    J_i[O_R:O_V, O_BG:] = -Jr_inv @ E.T @ right_jacobian(phi) @ preint.dR_dbg
    J_i[O_V:O_BA, O_R:O_V] = skew(R_i.T @ b)
    J_i[O_V:O_BA, O_V:O_BA] = -R_i.T
    J_i[O_V:O_BA, O_BA:O_BG] = -preint.dv_dba
    J_i[O_V:O_BA, O_BG:] = -preint.dv_dbg
    J_i[O_BA:O_BG, O_BA:O_BG] = -I3
    J_i[O_BG:, O_BG:] = -I3

    J_j = np.zeros((15, 15))
    J_j[O_P:O_R, O_P:O_R] = R_i.T
    J_j[O_R:O_V, O_R:O_V] = Jr_inv
    J_j[O_V:O_BA, O_V:O_BA] = R_i.T
    J_j[O_BA:O_BG, O_BA:O_BG] = I3
    J_j[O_BG:, O_BG:] = I3
    return r, [J_i, J_j]


class ImuFactor(Factor):
    kind = "imu"

    def __init__(
        self, frame_i: int, frame_j: int, preint: ImuPreintegration, gravity: Vector
    ) -> None:
        self.preint = preint
        self.gravity = np.asarray(gravity, dtype=float)
        self.noise = NoiseModel.from_covariance(preint.covariance)
        self.keys = (state_key(frame_i), state_key(frame_j))

    def evaluate(
        self, values: Values, jacobians: bool = True
    ) -> tuple[Vector, list[Matrix]]:
        x_i, x_j = (values[k] for k in self.keys)
        return imu_residual(x_i, x_j, self.preint, self.gravity, jacobians)
