from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from coplanar.core.typing import Vector


def plane_tangent_basis(n_bar: Vector) -> tuple[Vector, Vector]:
    """
    Orthonormal basis ``(b1, b2)`` of the tangent plane of a unit normal so
    that ``(b1, b2, n_bar)`` is right-handed. The construction pivots on the
    axis where ``n_bar`` has its smallest component (lowest index on ties),
    which keeps it deterministic and well conditioned.

    Args:
        n_bar (Vector): Unit normal

    Returns:
        tuple: Tangent vectors ``b1`` and ``b2``
    """
    n = np.asarray(n_bar, dtype=float)
    e = np.zeros(3)
    e[int(np.argmin(np.abs(n)))] = 1.0
    b1 = e - np.dot(e, n) * n
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(n, b1)
    return b1, b2


def plane_distance(f: Vector, n: Vector, d: float) -> float:
    """
    Signed distance of point ``f`` to the plane ``n.x = d``.
    """
    return float(np.dot(n, f) - d)


@dataclass(frozen=True, eq=False)
class PlaneParam:
    """
    Plane ``{x : n.x = d}`` with a cached tangent basis of its normal.
    Build it with :meth:`from_normal` to get a consistent basis.
    """

    n: Vector
    d: float
    b1: Vector
    b2: Vector

    dim = 3

    @classmethod
    def from_normal(cls, n: Vector, d: float) -> PlaneParam:
        n = np.asarray(n, dtype=float)
        n = n / np.linalg.norm(n)
        b1, b2 = plane_tangent_basis(n)
        return cls(n=n, d=float(d), b1=b1, b2=b2)

    def distance(self, x: Vector) -> float:
        """
        Signed distance of a point to the plane.
        """
        return plane_distance(x, self.n, self.d)

    def angle_to(self, other: PlaneParam) -> float:
        """
        Angle in radians between the two plane normals.
        """
        return math.acos(min(1.0, max(-1.0, float(np.dot(self.n, other.n)))))

    def retract(self, delta: Vector) -> PlaneParam:
        return plane_update(self, float(delta[0]), float(delta[1]), float(delta[2]))


def plane_update(pi: PlaneParam, w1: float, w2: float, delta_d: float) -> PlaneParam:
    """
    Tangent-space update of a plane: the normal moves to
    ``normalize(n + w1 b1 + w2 b2)`` and the basis is recomputed around it.
    """
    if w1 == 0.0 and w2 == 0.0 and delta_d == 0.0:
        return pi
    return PlaneParam.from_normal(pi.n + w1 * pi.b1 + w2 * pi.b2, pi.d + delta_d)
