"""
Plücker and orthonormal line parameterizations.

Lines use the moment convention ``n = p x d`` for any point ``p`` on the line
and direction ``d``. The orthonormal chart ``(U, W)`` is the minimal 4-DoF
representation used by the optimizer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.transform import Rotation

from coplanar.core.exceptions import DegenerateLine, UnstableEndpoint
from coplanar.core.typing import Matrix, Vector
from coplanar.core.utils import rot2, so3_exp

from .pose import Pose

DEGENERATE_NORM = 1e-12
ENDPOINT_MIN_ANGLE = math.radians(1.0)


@dataclass(frozen=True, eq=False)
class PluckerLine:
    n: Vector
    d: Vector

    def __post_init__(self) -> None:
        object.__setattr__(self, "n", np.array(self.n, dtype=float).reshape(3))
        object.__setattr__(self, "d", np.array(self.d, dtype=float).reshape(3))

    @classmethod
    def from_points(cls, a: Vector, b: Vector) -> PluckerLine:
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        d = b - a
        return cls(n=np.cross(a, d), d=d)

    @property
    def direction(self) -> Vector:
        """
        Unit direction of the line.
        """
        return self.d / np.linalg.norm(self.d)

    def constraint_error(self) -> float:
        """
        Plücker constraint residual ``n.d`` for the unit-direction line.
        """
        return float(np.dot(self.n, self.d) / np.dot(self.d, self.d))

    def normalized(self) -> PluckerLine:
        """
        Same line scaled to a unit direction.
        """
        s = float(np.linalg.norm(self.d))
        return PluckerLine(n=self.n / s, d=self.d / s)

    def closest_point(self) -> Vector:
        """
        Point of the line closest to the origin.
        """
        return np.cross(self.d, self.n) / np.dot(self.d, self.d)

    def point_distance(self, x: Vector) -> float:
        """
        Euclidean distance from ``x`` to the line.
        """
        return float(
            np.linalg.norm(np.cross(x, self.d) - self.n) / np.linalg.norm(self.d)
        )

    def transform(self, T: Pose) -> PluckerLine:
        return plucker_transform(self, T)


@dataclass(frozen=True, eq=False)
class OrthonormalLine:
    U: Matrix
    W: Matrix

    dim = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, "U", np.array(self.U, dtype=float).reshape(3, 3))
        object.__setattr__(self, "W", np.array(self.W, dtype=float).reshape(2, 2))

    @property
    def phi(self) -> float:
        return math.atan2(self.W[1, 0], self.W[0, 0])

    def retract(self, delta: Vector) -> OrthonormalLine:
        return orthonormal_update(self, delta)

    def to_plucker(self) -> PluckerLine:
        return orthonormal_to_plucker(self)

    def plucker_jacobian(self) -> Matrix:
        return orthonormal_jacobian(self)


def plucker_transform(L_w: PluckerLine, T_cw: Pose) -> PluckerLine:
    """
    Transforms a line with the 6x6 line motion matrix of ``T_cw``.

    Args:
        L_w (PluckerLine): Line in the source frame
        T_cw (Pose): Transform from the source to the target frame

    Returns:
        PluckerLine: Line in the target frame
    """
    R, t = T_cw.R, T_cw.p
    d = R @ L_w.d
    return PluckerLine(n=R @ L_w.n + np.cross(t, d), d=d)


def plucker_to_orthonormal(L: PluckerLine) -> OrthonormalLine:
    """
    Converts a Plücker line to its orthonormal representation. Lines through
    the origin have no moment direction; their ``U`` is completed from a
    column-pivoted QR of ``[n d]``.

    Args:
        L (PluckerLine): Line to convert

    Raises:
        DegenerateLine: If the line has no direction

    Returns:
        OrthonormalLine: Orthonormal representation
    """
    n, d = L.n, L.d
    nn, dn = float(np.linalg.norm(n)), float(np.linalg.norm(d))
    if dn < DEGENERATE_NORM:
        raise DegenerateLine(f"Line direction vanishes (|d| = {dn:.3g}).")

    if nn > DEGENERATE_NORM * max(1.0, dn):
        u1 = n / nn
        u2 = d - np.dot(d, u1) * u1
        u2 /= np.linalg.norm(u2)
    else:
        Q, _, _ = scipy.linalg.qr(np.column_stack([n, d]), pivoting=True)
        # ``d`` is always the pivot column once ``n`` vanishes
        u2 = Q[:, 0] * np.sign(np.dot(Q[:, 0], d))
        u1 = Q[:, 1]
        if u1[np.argmax(np.abs(u1))] < 0:
            u1 = -u1
        nn = 0.0
    u3 = np.cross(u1, u2)

    s = math.hypot(nn, dn)
    w1, w2 = nn / s, dn / s
    W = np.array([[w1, -w2], [w2, w1]])
    return OrthonormalLine(U=np.column_stack([u1, u2, u3]), W=W)


def orthonormal_to_plucker(O: OrthonormalLine) -> PluckerLine:
    """
    Plücker coordinates of an orthonormal line, scaled so ``|[n; d]| = 1``.
    """
    return PluckerLine(n=O.W[0, 0] * O.U[:, 0], d=O.W[1, 0] * O.U[:, 1])


def orthonormal_update(O: OrthonormalLine, delta: Vector) -> OrthonormalLine:
    """
    Minimal update ``U <- U Exp(delta[:3])``, ``W <- W Rot2(delta[3])``.
    Both factors are re-projected onto their rotation groups.
    """
    U = Rotation.from_matrix(O.U @ so3_exp(delta[:3])).as_matrix()
    return OrthonormalLine(U=U, W=rot2(O.phi + float(delta[3])))


def orthonormal_jacobian(O: OrthonormalLine) -> Matrix:
    """
    Derivative of the Plücker 6-vector ``[n; d]`` with respect to the
    orthonormal update at zero.
    """
    u1, u2, u3 = O.U[:, 0], O.U[:, 1], O.U[:, 2]
    w1, w2 = O.W[0, 0], O.W[1, 0]
    J = np.zeros((6, 4))
    J[:3, 1] = -w1 * u3
    J[:3, 2] = w1 * u2
    J[:3, 3] = -w2 * u1
    J[3:, 0] = w2 * u3
    J[3:, 2] = -w2 * u1
    J[3:, 3] = w1 * u2
    return J


def line_endpoints_3d(
    L_c: PluckerLine, seg_obs: tuple[Vector, Vector]
) -> tuple[Vector, Vector]:
    """
    Recover the 3D endpoints of an observed segment as the points of ``L_c``
    closest to the two viewing rays.

    Args:
        L_c (PluckerLine): Line in the observing camera frame
        seg_obs (tuple): Normalized-plane endpoints ``([u, v, 1], [u, v, 1])``

    Raises:
        UnstableEndpoint: If a viewing ray is within 1 deg of the line
            direction or meets it behind the camera

    Returns:
        tuple: Start and end points on the line
    """
    b = L_c.direction
    Q = L_c.closest_point()
    points = []
    for which, obs in zip(("start", "end"), seg_obs):
        a = np.asarray(obs, dtype=float)
        ab = float(np.dot(a, b))
        aa = float(np.dot(a, a))
        sin2 = 1.0 - ab * ab / aa
        if sin2 < math.sin(ENDPOINT_MIN_ANGLE) ** 2:
            raise UnstableEndpoint(
                f"Viewing ray of the {which} point is parallel to the line."
            )
        t = float(np.dot(a, Q)) / (aa - ab * ab)
        if t <= 0.0:
            raise UnstableEndpoint(f"The {which} point lies behind the camera.")
        points.append(Q + ab * t * b)
    return points[0], points[1]


def line_direction_angle(a: Vector, b: Vector) -> float:
    """
    Unsigned angle in ``[0, pi/2]`` between two undirected line directions.
    """
    c = abs(float(np.dot(a, b))) / float(np.linalg.norm(a) * np.linalg.norm(b))
    return math.acos(min(1.0, c))
