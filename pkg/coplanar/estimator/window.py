from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Iterator

import numpy as np

from coplanar.conf import AppSettings, app_settings
from coplanar.core.exceptions import GeometryError
from coplanar.core.pipeline import Pipeline
from coplanar.core.typing import Segment, Vector
from coplanar.factors.base import VarKey, line_key, plane_key, point_key, state_key
from coplanar.factors.imu import ImuPreintegration
from coplanar.factors.prior import StatePriorFactor
from coplanar.geometry.lines import (
    OrthonormalLine,
    line_endpoints_3d,
    plucker_transform,
)
from coplanar.geometry.planes import PlaneParam
from coplanar.geometry.points import InverseDepthPoint
from coplanar.geometry.pose import ImuState, Pose

if TYPE_CHECKING:  # pragma: no cover
    from .marginalization import MarginalPrior

logger = logging.getLogger(__name__)


@dataclass
class Keyframe:
    frame_id: int
    timestamp: float
    state: ImuState
    # Pre-integrated IMU motion from the previous window frame to this one.
    preint: ImuPreintegration | None = None
    is_keyframe: bool = True


@dataclass
class PointTrack:
    point_id: int
    observations: dict[int, Vector] = field(default_factory=dict)
    estimate: InverseDepthPoint | None = None
    position: Vector | None = None
    plane_id: int | None = None
    retired: bool = False

    @property
    def anchor_frame(self) -> int:
        return min(self.observations)

    @property
    def initialized(self) -> bool:
        return self.estimate is not None


@dataclass
class LineTrack:
    line_id: int
    observations: dict[int, Segment] = field(default_factory=dict)
    estimate: OrthonormalLine | None = None
    endpoints: Segment | None = None
    plane_id: int | None = None
    retired: bool = False

    @property
    def anchor_frame(self) -> int:
        return min(self.observations)

    @property
    def initialized(self) -> bool:
        return self.estimate is not None


@dataclass
class PlaneTrack:
    plane_id: int
    param: PlaneParam
    kind: str
    score: float = 0.0


class SlidingWindow:
    """
    Keyframe states, landmark tables and priors of the sliding window.
    Owned by a single estimator; all mutation goes through it.
    """

    def __init__(
        self,
        extrinsics: Pose,
        pipeline: Pipeline = Pipeline.PLP,
        conf: AppSettings = app_settings,
    ) -> None:
        self.extrinsics = extrinsics
        self.pipeline = Pipeline(pipeline)
        self.conf = conf
        self.frames: list[Keyframe] = []
        self.points: dict[int, PointTrack] = {}
        self.lines: dict[int, LineTrack] = {}
        self.planes: dict[int, PlaneTrack] = {}
        self.prior: MarginalPrior | None = None
        self.gauge: StatePriorFactor | None = None
        # Motion from the latest frame to a dropped non-keyframe.
        self.carry: ImuPreintegration | None = None
        self._next_plane_id = 0

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def gravity(self) -> Vector:
        return np.array([0.0, 0.0, -self.conf.GRAVITY])

    @property
    def is_full(self) -> bool:
        return len(self.frames) > self.conf.WINDOW_SIZE

    @property
    def frame_ids(self) -> list[int]:
        return [f.frame_id for f in self.frames]

    def frame(self, frame_id: int) -> Keyframe:
        for f in self.frames:
            if f.frame_id == frame_id:
                return f
        raise KeyError(frame_id)

    def state(self, frame_id: int) -> ImuState:
        return self.frame(frame_id).state

    @property
    def latest(self) -> Keyframe:
        return self.frames[-1]

    def add_frame(self, frame: Keyframe) -> None:
        self.frames.append(frame)

    # Landmarks

    def add_point_observation(self, point_id: int, frame_id: int, obs: Vector) -> None:
        track = self.points.setdefault(point_id, PointTrack(point_id))
        if track.retired:
            return
        track.observations[frame_id] = np.asarray(obs, dtype=float)

    def add_line_observation(self, line_id: int, frame_id: int, seg: Segment) -> None:
        track = self.lines.setdefault(line_id, LineTrack(line_id))
        if track.retired:
            return
        track.observations[frame_id] = (
            np.asarray(seg[0], dtype=float),
            np.asarray(seg[1], dtype=float),
        )

    def active_points(self) -> Iterator[PointTrack]:
        for track in self.points.values():
            if not track.retired and track.observations:
                yield track

    def active_lines(self) -> Iterator[LineTrack]:
        if not self.pipeline.uses_lines:
            return
        for track in self.lines.values():
            if not track.retired and track.observations:
                yield track

    def optimizable_points(self) -> Iterator[PointTrack]:
        """
        Initialized points with a valid depth seen from at least two frames.
        """
        conf = self.conf
        for track in self.active_points():
            if (
                track.estimate is not None
                and len(track.observations) >= 2
                and track.estimate.is_valid(conf.MIN_DEPTH, conf.MAX_DEPTH)
            ):
                yield track

    def optimizable_lines(self) -> Iterator[LineTrack]:
        for track in self.active_lines():
            if track.estimate is not None and len(track.observations) >= 2:
                yield track

    def point_position(self, track: PointTrack) -> Vector | None:
        """
        World position of a point from its estimate, None while the depth
        is outside ``MIN_DEPTH`` and ``MAX_DEPTH``. Points without an
        estimate keep their cached position.
        """
        estimate = track.estimate
        if estimate is None:
            return track.position
        if not estimate.is_valid(self.conf.MIN_DEPTH, self.conf.MAX_DEPTH):
            return None
        anchor = self.state(estimate.anchor_frame)
        return estimate.world_point(anchor, self.extrinsics)

    def line_endpoints(self, track: LineTrack) -> Segment | None:
        """
        World endpoints of a line, recovered from its latest observation.
        Falls back to the cached endpoints when they cannot be recovered
        or lie outside ``MIN_DEPTH`` and ``MAX_DEPTH`` of that frame.
        """
        if track.estimate is None or not track.observations:
            return track.endpoints
        frame_id = max(track.observations)
        T_wc = self.state(frame_id).pose.compose(self.extrinsics)
        L_c = plucker_transform(track.estimate.to_plucker(), T_wc.inverse())
        try:
            ps, pe = line_endpoints_3d(L_c, track.observations[frame_id])
        except GeometryError as e:
            logger.debug("Line %d endpoints kept: %s", track.line_id, e)
            return track.endpoints
        conf = self.conf
        if not all(conf.MIN_DEPTH <= x[2] <= conf.MAX_DEPTH for x in (ps, pe)):
            logger.debug("Line %d endpoints kept: depth out of range", track.line_id)
            return track.endpoints
        return T_wc.transform(ps), T_wc.transform(pe)

    def refresh_landmarks(self) -> None:
        """
        Cache world positions and endpoints from the current estimates.
        """
        for point in self.active_points():
            if point.estimate is not None:
                point.position = self.point_position(point)
        for line in self.active_lines():
            if line.estimate is not None:
                line.endpoints = self.line_endpoints(line)

    # Planes

    def add_plane(self, param: PlaneParam, kind: str, score: float = 0.0) -> int:
        plane_id = self._next_plane_id
        self._next_plane_id += 1
        self.planes[plane_id] = PlaneTrack(plane_id, param, kind, score)
        return plane_id

    def remove_plane(self, plane_id: int) -> None:
        self.planes.pop(plane_id, None)
        for point in self.points.values():
            if point.plane_id == plane_id:
                point.plane_id = None
        for line in self.lines.values():
            if line.plane_id == plane_id:
                line.plane_id = None

    def associated(self, plane_id: int) -> tuple[list[PointTrack], list[LineTrack]]:
        """
        Active landmarks associated to a plane.
        """
        points = [p for p in self.active_points() if p.plane_id == plane_id]
        lines = [ln for ln in self.active_lines() if ln.plane_id == plane_id]
        return points, lines

    def retired_landmarks(self) -> tuple[list[PointTrack], list[LineTrack]]:
        """
        Retired points and lines that kept a world position.
        """
        points = [
            p for p in self.points.values() if p.retired and p.position is not None
        ]
        lines: list[LineTrack] = []
        if self.pipeline.uses_lines:
            lines = [
                ln
                for ln in self.lines.values()
                if ln.retired and ln.endpoints is not None
            ]
        return points, lines

    def support(self, plane_id: int) -> int:
        """
        Number of map landmarks on a plane: the associated active ones and
        the retired ones that left the window associated.
        """
        points, lines = self.associated(plane_id)
        retired_points, retired_lines = self.retired_landmarks()
        return (
            len(points)
            + len(lines)
            + sum(1 for p in retired_points if p.plane_id == plane_id)
            + sum(1 for ln in retired_lines if ln.plane_id == plane_id)
        )

    # Optimizer values

    def values(self) -> dict[VarKey, Any]:
        values: dict[VarKey, Any] = {}
        for f in self.frames:
            values[state_key(f.frame_id)] = f.state
        for point in self.active_points():
            if point.estimate is not None:
                values[point_key(point.point_id)] = point.estimate
        for line in self.active_lines():
            if line.estimate is not None:
                values[line_key(line.line_id)] = line.estimate
        for plane in self.planes.values():
            values[plane_key(plane.plane_id)] = plane.param
        return values

    def set_values(self, values: dict[VarKey, Any]) -> None:
        for (kind, index), value in values.items():
            if kind == "x":
                self.frame(index).state = value
            elif kind == "f":
                self.points[index].estimate = value
            elif kind == "l":
                self.lines[index].estimate = value
            elif kind == "pi":
                self.planes[index].param = value
