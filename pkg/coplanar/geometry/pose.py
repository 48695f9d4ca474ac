from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from coplanar.core.typing import Matrix, Vector
from coplanar.core.utils import matrix_to_quat, quat_to_matrix, so3_exp, so3_log


def _vec(value: Vector, size: int = 3) -> Vector:
    arr = np.array(value, dtype=float).reshape(size)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Pose:
    """
    Rigid transform with position ``p`` and unit w-first quaternion ``q``.
    A body pose ``T_wb`` maps body coordinates to world coordinates.
    """

    p: Vector = field(default_factory=lambda: np.zeros(3))
    q: Vector = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    dim = 6

    def __post_init__(self) -> None:
        q = np.array(self.q, dtype=float).reshape(4)
        q = q / np.linalg.norm(q)
        if q[0] < 0.0:
            q = -q
        object.__setattr__(self, "p", _vec(self.p))
        object.__setattr__(self, "q", _vec(q, 4))

    @classmethod
    def identity(cls) -> Pose:
        return cls()

    @classmethod
    def from_matrix(cls, R: Matrix, p: Vector) -> Pose:
        return cls(p=p, q=matrix_to_quat(R))

    @cached_property
    def R(self) -> Matrix:
        R = quat_to_matrix(self.q)
        R.setflags(write=False)
        return R

    def compose(self, other: Pose) -> Pose:
        """
        Returns ``self * other``.
        """
        return Pose.from_matrix(self.R @ other.R, self.p + self.R @ other.p)

    def inverse(self) -> Pose:
        Rt = self.R.T
        return Pose.from_matrix(Rt, -Rt @ self.p)

    def transform(self, x: Vector) -> Vector:
        return self.R @ x + self.p

    def retract(self, delta: Vector) -> Pose:
        """
        Apply ``[dp, dtheta]`` with the rotation perturbed on the right.
        """
        return Pose.from_matrix(self.R @ so3_exp(delta[3:6]), self.p + delta[:3])

    def difference(self, other: Pose) -> Vector:
        """
        Returns the chart coordinates of ``other`` around ``self`` so that
        ``self.retract(self.difference(other))`` equals ``other``.
        """
        return np.concatenate([other.p - self.p, so3_log(self.R.T @ other.R)])

    def as_matrix(self) -> Matrix:
        T = np.eye(4)
        T[:3, :3] = self.R
        T[:3, 3] = self.p
        return T


@dataclass(frozen=True, eq=False)
class ImuState:
    """
    Keyframe state: body pose in the world, velocity and IMU biases.
    The minimal chart is ``[dp, dtheta, dv, dba, dbg]``.
    """

    pose: Pose = field(default_factory=Pose)
    v: Vector = field(default_factory=lambda: np.zeros(3))
    ba: Vector = field(default_factory=lambda: np.zeros(3))
    bg: Vector = field(default_factory=lambda: np.zeros(3))

    dim = 15

    def __post_init__(self) -> None:
        for name in ("v", "ba", "bg"):
            object.__setattr__(self, name, _vec(getattr(self, name)))

    @property
    def p(self) -> Vector:
        return self.pose.p

    @property
    def R(self) -> Matrix:
        return self.pose.R

    def is_finite(self) -> bool:
        values = (self.pose.p, self.pose.q, self.v, self.ba, self.bg)
        return all(bool(np.all(np.isfinite(x))) for x in values)

    def retract(self, delta: Vector) -> ImuState:
        return ImuState(
            pose=self.pose.retract(delta[0:6]),
            v=self.v + delta[6:9],
            ba=self.ba + delta[9:12],
            bg=self.bg + delta[12:15],
        )

    def difference(self, other: ImuState) -> Vector:
        return np.concatenate(
            [
                self.pose.difference(other.pose),
                other.v - self.v,
                other.ba - self.ba,
                other.bg - self.bg,
            ]
        )

    def with_pose(self, pose: Pose) -> ImuState:
        return ImuState(pose=pose, v=self.v, ba=self.ba, bg=self.bg)
