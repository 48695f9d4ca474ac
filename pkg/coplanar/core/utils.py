from __future__ import annotations

import math

import numpy as np
from scipy.spatial.transform import Rotation

from .typing import Matrix, Vector

SMALL_ANGLE = 1e-8
LARGE_ANGLE = 3.0


def skew(v: Vector) -> Matrix:
    """
    Returns the cross-product matrix ``[v]x`` so that ``skew(a) @ b == a x b``.
    """
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def so3_exp(phi: Vector) -> Matrix:
    """
    Exponential map from a rotation vector to a rotation matrix (Rodrigues).
    """
    phi = np.asarray(phi, dtype=float)
    theta = float(np.linalg.norm(phi))
    K = skew(phi)
    if theta < SMALL_ANGLE:
        return np.eye(3) + K + 0.5 * K @ K
    return (
        np.eye(3)
        + math.sin(theta) / theta * K
        + (1.0 - math.cos(theta)) / (theta * theta) * K @ K
    )


def so3_log(R: Matrix) -> Vector:
    """
    Logarithm map from a rotation matrix to a rotation vector. Angles close
    to pi, where the antisymmetric part vanishes, go through scipy.
    """
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    c = 0.5 * (float(np.trace(R)) - 1.0)
    s = 0.5 * float(np.linalg.norm(w))
    theta = math.atan2(s, c)
    if theta > LARGE_ANGLE:
        return Rotation.from_matrix(R).as_rotvec()
    if s < SMALL_ANGLE:
        return 0.5 * w
    return 0.5 * theta / s * w


def right_jacobian(phi: Vector) -> Matrix:
    """
    Right Jacobian of SO(3): ``Exp(phi + d) ≈ Exp(phi) Exp(Jr(phi) d)``.
    """
    theta = float(np.linalg.norm(phi))
    K = skew(phi)
    if theta < SMALL_ANGLE:
        return np.eye(3) - 0.5 * K
    t2 = theta * theta
    return (
        np.eye(3)
        - (1.0 - math.cos(theta)) / t2 * K
        + (theta - math.sin(theta)) / (t2 * theta) * K @ K
    )


def right_jacobian_inv(phi: Vector) -> Matrix:
    """
    Inverse of the right Jacobian: ``Log(Exp(phi) Exp(d)) ≈ phi + Jr⁻¹(phi) d``.
    """
    theta = float(np.linalg.norm(phi))
    K = skew(phi)
    if theta < SMALL_ANGLE:
        return np.eye(3) + 0.5 * K
    coef = 1.0 / (theta * theta) - (1.0 + math.cos(theta)) / (
        2.0 * theta * math.sin(theta)
    )
    return np.eye(3) + 0.5 * K + coef * K @ K


def quat_to_matrix(q: Vector) -> Matrix:
    """
    Converts a w-first Hamilton quaternion to a rotation matrix.
    """
    w, x, y, z = np.asarray(q, dtype=float) / float(np.linalg.norm(q))
    return np.array(
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]
    )


def matrix_to_quat(R: Matrix) -> Vector:
    """
    Converts a rotation matrix to a unit w-first quaternion with ``w >= 0``,
    branching on the largest diagonal term.
    """
    trace = float(np.trace(R))
    if trace > 0.0:
        s = 2.0 * math.sqrt(trace + 1.0)
        q = np.array(
            [0.25 * s, R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]
        )
        q[1:] /= s
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = np.array(
            [R[2, 1] - R[1, 2], 0.25 * s * s, R[0, 1] + R[1, 0], R[0, 2] + R[2, 0]]
        )
        q /= s
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = np.array(
            [R[0, 2] - R[2, 0], R[0, 1] + R[1, 0], 0.25 * s * s, R[1, 2] + R[2, 1]]
        )
        q /= s
    else:
        s = 2.0 * math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = np.array(
            [R[1, 0] - R[0, 1], R[0, 2] + R[2, 0], R[1, 2] + R[2, 1], 0.25 * s * s]
        )
        q /= s
    if q[0] < 0.0:
        q = -q
    return q / np.linalg.norm(q)


def quat_multiply(a: Vector, b: Vector) -> Vector:
    """
    Hamilton product of two w-first quaternions.
    """
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def rot2(angle: float) -> Matrix:
    """
    Planar rotation matrix.
    """
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def normalized(v: Vector) -> Vector:
    return np.asarray(v, dtype=float) / float(np.linalg.norm(v))


def angle_between(a: Vector, b: Vector) -> float:
    """
    Unsigned angle between two vectors in radians, robust near 0 and pi.
    """
    return math.atan2(float(np.linalg.norm(np.cross(a, b))), float(np.dot(a, b)))
