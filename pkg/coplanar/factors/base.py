from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence, Tuple

import numpy as np
import scipy.linalg

from coplanar.core.typing import Matrix, Vector

from .loss import Corrector, RobustLoss

# Optimizer variables are keyed by kind and id: ("x", frame), ("f", point),
# ("l", line) and ("pi", plane).
VarKey = Tuple[str, int]
Values = Mapping[VarKey, Any]


def state_key(frame_id: int) -> VarKey:
    return ("x", frame_id)


def point_key(point_id: int) -> VarKey:
    return ("f", point_id)


def line_key(line_id: int) -> VarKey:
    return ("l", line_id)


def plane_key(plane_id: int) -> VarKey:
    return ("pi", plane_id)


class NoiseModel:
    """
    Gaussian noise model stored as the square root information matrix, so a
    raw residual ``r`` is whitened to ``sqrt_info @ r``.
    """

    def __init__(self, sqrt_info: Matrix) -> None:
        self.sqrt_info = np.atleast_2d(np.asarray(sqrt_info, dtype=float))

    @classmethod
    def isotropic(cls, dim: int, sigma: float) -> NoiseModel:
        return cls(np.eye(dim) / sigma)

    @classmethod
    def diagonal(cls, sigmas: Sequence[float]) -> NoiseModel:
        return cls(np.diag(1.0 / np.asarray(sigmas, dtype=float)))

    @classmethod
    def from_covariance(cls, covariance: Matrix) -> NoiseModel:
        """
        Noise model of a symmetric positive definite covariance. With
        ``cov = L L^T`` the square root information is ``L^-1``.
        """
        cov = 0.5 * (covariance + covariance.T)
        L = scipy.linalg.cholesky(cov, lower=True)
        sqrt_info = scipy.linalg.solve_triangular(L, np.eye(len(cov)), lower=True)
        return cls(sqrt_info)

    @property
    def dim(self) -> int:
        return int(self.sqrt_info.shape[0])

    def whiten(self, x: Vector | Matrix) -> Vector | Matrix:
        return self.sqrt_info @ x


@dataclass
class Linearization:
    """
    Whitened, robustified residual and Jacobian blocks of one factor
    (one block per key, on the minimal charts).
    """

    residual: Vector
    jacobians: list[Matrix]
    cost: float


class Factor:
    """
    Base class of all residual terms. Subclasses define ``kind``, ``keys``
    and :meth:`evaluate`; noise whitening and robust weighting are applied
    here.
    """

    kind: str = "factor"
    keys: tuple[VarKey, ...] = ()
    noise: NoiseModel
    loss: RobustLoss | None = None

    def evaluate(
        self, values: Values, jacobians: bool = True
    ) -> tuple[Vector, list[Matrix]]:
        """
        Evaluate the raw residual and optionally its Jacobians.

        Args:
            values (Values): Current variable values
            jacobians (bool, optional): Compute Jacobians. Defaults to True.

        Returns:
            tuple: Raw residual and one Jacobian per key (empty if not
                requested)
        """
        raise NotImplementedError  # pragma: no cover

    def whitened(self, values: Values) -> Vector:
        r, _ = self.evaluate(values, jacobians=False)
        return np.asarray(self.noise.whiten(r))

    def cost(self, values: Values) -> float:
        """
        Robustified cost ``0.5 * rho(|r|^2)`` of the whitened residual.
        """
        w = self.whitened(values)
        s = float(np.dot(w, w))
        if self.loss is None:
            return 0.5 * s
        return 0.5 * self.loss.evaluate(s)[0]

    def linearize(self, values: Values) -> Linearization:
        r, Js = self.evaluate(values, jacobians=True)
        r = np.asarray(self.noise.whiten(r))
        Js = [np.asarray(self.noise.whiten(J)) for J in Js]
        s = float(np.dot(r, r))
        if self.loss is None:
            return Linearization(r, Js, 0.5 * s)

        rho = self.loss.evaluate(s)
        corrector = Corrector(s, rho)
        Js = [corrector.jacobian(r, J) for J in Js]
        return Linearization(corrector.residual(r), Js, 0.5 * rho[0])
