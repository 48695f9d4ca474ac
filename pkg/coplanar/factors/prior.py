from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from coplanar.core.typing import Matrix, Vector
from coplanar.core.utils import right_jacobian_inv
from coplanar.geometry.pose import ImuState

from .base import Factor, NoiseModel, Values, VarKey, state_key


def difference_jacobian(reference: ImuState, x: ImuState) -> tuple[Vector, Matrix]:
    """
    Chart difference ``reference.difference(x)`` and its derivative with
    respect to a right perturbation of ``x``.
    """
    dx = reference.difference(x)
    D = np.eye(15)
    D[3:6, 3:6] = right_jacobian_inv(dx[3:6])
    return dx, D


class StatePriorFactor(Factor):
    """
    Gaussian prior on one keyframe state around a reference value.
    """

    kind = "prior"

    def __init__(self, frame_id: int, reference: ImuState, noise: NoiseModel) -> None:
        self.reference = reference
        self.noise = noise
        self.keys = (state_key(frame_id),)

    def evaluate(
        self, values: Values, jacobians: bool = True
    ) -> tuple[Vector, list[Matrix]]:
        dx, D = difference_jacobian(self.reference, values[self.keys[0]])
        return dx, [D] if jacobians else []


def gauge_prior(frame_id: int, state: ImuState, conf: Any) -> StatePriorFactor:
    """
    Prior fixing the position and yaw of the first keyframe, with weak
    terms on roll, pitch, velocity and biases.

    Args:
        frame_id (int): Keyframe id
        state (ImuState): Reference state
        conf (AppSettings): Settings providing the ``PRIOR_*`` sigmas

    Returns:
        StatePriorFactor: The gauge prior
    """
    sqrt_info = np.zeros((15, 15))
    sqrt_info[0:3, 0:3] = np.eye(3) / conf.PRIOR_POSITION_SIGMA
    # Rotation sigmas are given about world axes, the chart is body-frame.
    world = np.array(
        [conf.PRIOR_TILT_SIGMA, conf.PRIOR_TILT_SIGMA, conf.PRIOR_YAW_SIGMA]
    )
    sqrt_info[3:6, 3:6] = np.diag(1.0 / world) @ state.R
    sqrt_info[6:9, 6:9] = np.eye(3) / conf.PRIOR_VELOCITY_SIGMA
    sqrt_info[9:12, 9:12] = np.eye(3) / conf.PRIOR_ACCEL_BIAS_SIGMA
    sqrt_info[12:15, 12:15] = np.eye(3) / conf.PRIOR_GYRO_BIAS_SIGMA
    return StatePriorFactor(frame_id, state, NoiseModel(sqrt_info))


class MarginalPriorFactor(Factor):
    """
    Linearized prior ``r0 + J dx`` left by marginalization, where ``dx``
    stacks the chart differences of the kept states from their
    linearization points. Residual and Jacobian are already whitened.
    """

    kind = "marginal"

    def __init__(
        self,
        keys: Sequence[VarKey],
        linearization: Sequence[ImuState],
        jacobian: Matrix,
        residual: Vector,
    ) -> None:
        self.keys = tuple(keys)
        self.linearization = list(linearization)
        self.jacobian = jacobian
        self.residual = residual
        self.noise = NoiseModel(np.eye(len(residual)))

    def evaluate(
        self, values: Values, jacobians: bool = True
    ) -> tuple[Vector, list[Matrix]]:
        dxs, Ds = [], []
        for key, reference in zip(self.keys, self.linearization):
            dx, D = difference_jacobian(reference, values[key])
            dxs.append(dx)
            Ds.append(D)
        r = self.residual + self.jacobian @ np.concatenate(dxs)
        if not jacobians:
            return r, []
        Js = [
            self.jacobian[:, 15 * i : 15 * (i + 1)] @ D for i, D in enumerate(Ds)
        ]
        return r, Js
