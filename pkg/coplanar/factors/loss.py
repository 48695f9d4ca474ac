"""
Robust losses applied to squared whitened residual norms, with the
corrector that folds a loss into a Gauss-Newton linearization.
"""
from __future__ import annotations

import math

import numpy as np

from coplanar.core.typing import Matrix, Vector


def cauchy_weight(
    squared_norm: float, scale: float = 1.0
) -> tuple[float, float, float]:
    """
    Cauchy loss ``rho(s) = c^2 log(1 + s / c^2)`` and its first two
    derivatives with respect to ``s``.

    Args:
        squared_norm (float): Squared whitened residual norm ``s >= 0``
        scale (float, optional): Loss scale ``c``. Defaults to 1.

    Returns:
        tuple: ``(rho, rho', rho'')``
    """
    c2 = scale * scale
    inv = 1.0 / (1.0 + squared_norm / c2)
    return c2 * math.log1p(squared_norm / c2), inv, -inv * inv / c2


class RobustLoss:
    """
    Base robust loss. Losses set in ``ROBUST_LOSS`` must extend this class.
    """

    def __init__(self, scale: float = 1.0) -> None:
        self.scale = scale

    def evaluate(self, squared_norm: float) -> tuple[float, float, float]:
        """
        Returns ``(rho, rho', rho'')`` at ``squared_norm``.
        """
        raise NotImplementedError  # pragma: no cover


class TrivialLoss(RobustLoss):
    def evaluate(self, squared_norm: float) -> tuple[float, float, float]:
        return squared_norm, 1.0, 0.0


class CauchyLoss(RobustLoss):
    def evaluate(self, squared_norm: float) -> tuple[float, float, float]:
        return cauchy_weight(squared_norm, self.scale)


class HuberLoss(RobustLoss):
    def evaluate(self, squared_norm: float) -> tuple[float, float, float]:
        c2 = self.scale * self.scale
        if squared_norm <= c2:
            return squared_norm, 1.0, 0.0
        r = math.sqrt(squared_norm)
        return 2.0 * self.scale * r - c2, self.scale / r, -0.5 * self.scale / r**3


class Corrector:
    """
    Rescales a whitened residual and its Jacobian so that the Gauss-Newton
    model of ``rho(|r|^2)`` matches the robustified cost to second order.
    """

    def __init__(self, squared_norm: float, rho: tuple[float, float, float]) -> None:
        _, rho1, rho2 = rho
        self.sqrt_rho1 = math.sqrt(max(rho1, 0.0))
        if squared_norm == 0.0 or rho2 <= 0.0:
            self.residual_scaling = self.sqrt_rho1
            self.alpha_sq_norm = 0.0
            return
        D = 1.0 + 2.0 * squared_norm * rho2 / rho1
        alpha = 1.0 - math.sqrt(D)
        self.residual_scaling = self.sqrt_rho1 / (1.0 - alpha)
        self.alpha_sq_norm = alpha / squared_norm

    def residual(self, r: Vector) -> Vector:
        return self.residual_scaling * r

    def jacobian(self, r: Vector, J: Matrix) -> Matrix:
        if self.alpha_sq_norm == 0.0:
            return self.sqrt_rho1 * J
        return self.sqrt_rho1 * (J - self.alpha_sq_norm * np.outer(r, r @ J))
