"""
Frame by frame estimator: IMU prediction, keyframe policy, landmark
initialization, meshing, plane detection, window optimization and
marginalization, in that order.
"""
from __future__ import annotations

import logging
import time
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Optional

import numpy as np

from coplanar.conf import AppSettings, app_settings
from coplanar.core.exceptions import SolverDiverged, TriangulationError
from coplanar.core.pipeline import Pipeline
from coplanar.core.typing import LandmarkRef, Matrix, Segment, Vector
from coplanar.core.utils import normalized
from coplanar.factors.imu import ImuNoise, ImuPreintegration
from coplanar.factors.prior import gauge_prior
from coplanar.geometry.lines import plucker_to_orthonormal, plucker_transform
from coplanar.geometry.points import InverseDepthPoint
from coplanar.geometry.pose import ImuState, Pose
from coplanar.mesh.cdt import cdt_2d
from coplanar.mesh.fusion import MeshMap, fuse_mesh
from coplanar.mesh.patches import filter_patches, lift_mesh, single_plane
from coplanar.structure.detection import (
    azimuth_histogram,
    detect_horizontal_planes,
    detect_vertical_planes,
    height_histogram,
)

from .marginalization import MarginalizationResult, marginalize
from .planes import add_planes, cull_planes, deassociate_outliers
from .solver import SolverStats, optimize_window
from .triangulation import triangulate_line, triangulate_point
from .window import Keyframe, SlidingWindow

logger = logging.getLogger(__name__)

# Bias change that triggers re-integration of a pre-integrated interval.
REPROPAGATE_BIAS_DELTA = 0.05

STAGES = (
    "prediction",
    "triangulation",
    "mesh_creation",
    "plane_detection",
    "optimization",
    "marginalization",
)


@dataclass
class FrameResult:
    frame_id: int
    is_keyframe: bool
    stats: SolverStats | None = None
    diverged: bool = False
    new_planes: list[int] = field(default_factory=list)
    culled_planes: list[int] = field(default_factory=list)
    marginalization: MarginalizationResult | None = None
    timings: dict[str, float] = field(default_factory=dict)


class Estimator:
    """
    Sliding-window estimator fed one camera frame at a time.

    Args:
        extrinsics (Pose): Camera to body transform ``T_bc``
        pipeline (Pipeline, optional): Estimator variant. Defaults to PLP.
        conf (AppSettings, optional): Settings. Defaults to ``app_settings``.
        histogram_dir (Path, optional): Directory receiving the plane
            detection histograms of every keyframe
    """

    def __init__(
        self,
        extrinsics: Pose,
        pipeline: Pipeline = Pipeline.PLP,
        conf: AppSettings = app_settings,
        histogram_dir: Optional[Path] = None,
    ) -> None:
        self.conf = conf
        self.window = SlidingWindow(extrinsics, pipeline, conf)
        self.mesh = MeshMap()
        self.noise = ImuNoise.from_settings(conf)
        self.histogram_dir = histogram_dir
        self.trajectory: dict[int, tuple[float, Pose]] = {}
        self.timings: dict[str, list[float]] = defaultdict(list)
        self.diverged_windows = 0
        self.rolled_back = 0
        self._imu_last: Vector | None = None

    @property
    def pipeline(self) -> Pipeline:
        return self.window.pipeline

    @contextmanager
    def _timed(self, stage: str, result: FrameResult) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            ms = 1e3 * (time.perf_counter() - start)
            result.timings[stage] = result.timings.get(stage, 0.0) + ms

    def process_frame(
        self,
        frame_id: int,
        timestamp: float,
        imu: Matrix,
        points: Mapping[int, Vector],
        lines: Mapping[int, Segment],
        initial_state: ImuState | None = None,
    ) -> FrameResult:
        """
        Run all estimator stages for one camera frame.

        Args:
            frame_id (int): Frame id
            timestamp (float): Frame time
            imu (Matrix): IMU rows ``(t, wx, wy, wz, ax, ay, az)`` since the
                previous frame, up to and including ``timestamp``
            points (Mapping): Point observations of the frame
            lines (Mapping): Segment observations of the frame
            initial_state (ImuState, optional): State of the first frame

        Raises:
            SolverDiverged: After ``MAX_DIVERGED_WINDOWS`` consecutive windows
                failed to optimize

        Returns:
            FrameResult: What happened to the frame
        """
        window = self.window
        result = FrameResult(frame_id, is_keyframe=True)
        imu = np.asarray(imu, dtype=float).reshape(-1, 7)

        with self._timed("prediction", result):
            if not window.frames:
                if initial_state is None:
                    raise ValueError("The first frame needs an initial state.")
                frame = Keyframe(frame_id, timestamp, initial_state)
                window.gauge = gauge_prior(frame_id, initial_state, self.conf)
            else:
                frame = self._predict(frame_id, timestamp, imu)
            if len(imu):
                self._imu_last = imu[-1]
            frame.is_keyframe = self._is_keyframe(points)
            result.is_keyframe = frame.is_keyframe
            window.add_frame(frame)
            for point_id, obs in points.items():
                window.add_point_observation(point_id, frame_id, obs)
            if self.pipeline.uses_lines:
                for line_id, segment in lines.items():
                    window.add_line_observation(line_id, frame_id, segment)

        with self._timed("triangulation", result):
            self.triangulate()

        with self._timed("mesh_creation", result):
            self.build_mesh(frame_id)

        if self.pipeline.uses_planes:
            with self._timed("plane_detection", result):
                result.new_planes = self.detect_planes(frame_id)

        if len(window) >= 2:
            with self._timed("optimization", result):
                self._optimize(result)

        with self._timed("marginalization", result):
            window.refresh_landmarks()
            self.mesh.refresh(self.landmark_positions())
            self._record_trajectory()
            result.marginalization = marginalize(window)
            if result.marginalization is not None:
                retired: list[LandmarkRef] = [
                    ("point", i) for i in result.marginalization.retired_points
                ]
                retired += [("line", i) for i in result.marginalization.retired_lines]
                self.mesh.freeze(retired)

        for stage, ms in result.timings.items():
            self.timings[stage].append(ms)
        logger.debug(
            "Frame %d: keyframe=%s planes=%d patches=%d",
            frame_id,
            result.is_keyframe,
            len(window.planes),
            len(self.mesh),
        )
        return result

    def _predict(self, frame_id: int, timestamp: float, imu: Matrix) -> Keyframe:
        window = self.window
        latest = window.latest
        preint = window.carry
        window.carry = None
        if preint is None:
            if self._imu_last is None:
                raise ValueError("No IMU sample at the previous frame.")
            last = self._imu_last
            preint = ImuPreintegration(
                last[4:7], last[1:4], latest.state.ba, latest.state.bg, self.noise
            )
        t = float(self._imu_last[0]) if self._imu_last is not None else latest.timestamp
        for row in imu:
            dt = float(row[0]) - t
            if dt <= 0.0:
                continue
            preint.integrate(dt, row[4:7], row[1:4])
            t = float(row[0])
        state = preint.predict(latest.state, window.gravity)
        return Keyframe(frame_id, timestamp, state, preint)

    def _is_keyframe(self, points: Mapping[int, Vector]) -> bool:
        """
        A frame is a keyframe when few features are tracked from the latest
        window frame or their mean parallax is large.
        """
        window = self.window
        if not window.frames:
            return True
        latest = window.latest.frame_id
        parallax = [
            float(np.linalg.norm(np.asarray(obs)[:2] - track.observations[latest][:2]))
            for point_id, obs in points.items()
            if (track := window.points.get(point_id)) is not None
            and latest in track.observations
        ]
        if len(parallax) < self.conf.KEYFRAME_MIN_TRACKED:
            return True
        mean_px = float(np.mean(parallax)) * self.conf.FOCAL_LENGTH
        return mean_px > self.conf.KEYFRAME_PARALLAX_PX

    def triangulate(self) -> tuple[int, int]:
        """
        Initialize points and lines observed in at least two window frames.

        Returns:
            tuple: Number of points and lines initialized
        """
        window = self.window
        conf = self.conf
        n_points = n_lines = 0
        for point in window.active_points():
            if point.estimate is not None or len(point.observations) < 2:
                continue
            observations = [
                (window.state(f), obs) for f, obs in sorted(point.observations.items())
            ]
            try:
                inv_depth = triangulate_point(
                    observations,
                    window.extrinsics,
                    conf.TRIANGULATION_MIN_PARALLAX_DEG,
                )
            except TriangulationError as e:
                logger.debug("Point %d not initialized: %s", point.point_id, e)
                continue
            anchor = point.anchor_frame
            estimate = InverseDepthPoint(
                anchor, point.observations[anchor], inv_depth
            )
            if not estimate.is_valid(conf.MIN_DEPTH, conf.MAX_DEPTH):
                continue
            point.estimate = estimate
            point.position = window.point_position(point)
            n_points += 1

        for line in window.active_lines():
            if line.estimate is not None or len(line.observations) < 2:
                continue
            frames = sorted(line.observations)
            first, last = frames[0], frames[-1]
            try:
                L_c = triangulate_line(
                    (window.state(first), line.observations[first]),
                    (window.state(last), line.observations[last]),
                    window.extrinsics,
                    conf.TRIANGULATION_MIN_DIHEDRAL_DEG,
                )
            except TriangulationError as e:
                logger.debug("Line %d not initialized: %s", line.line_id, e)
                continue
            T_wc = window.state(first).pose.compose(window.extrinsics)
            L_w = plucker_transform(L_c, T_wc).normalized()
            line.estimate = plucker_to_orthonormal(L_w)
            line.endpoints = window.line_endpoints(line)
            if line.endpoints is None:
                line.estimate = None
                continue
            n_lines += 1
        if n_points or n_lines:
            logger.debug("Initialized %d points and %d lines", n_points, n_lines)
        return n_points, n_lines

    def landmark_positions(self) -> dict[LandmarkRef, Optional[Vector]]:
        """
        World position of every mesh vertex reference of the active landmarks.
        """
        positions: dict[LandmarkRef, Optional[Vector]] = {}
        for point in self.window.active_points():
            positions[("point", point.point_id)] = point.position
        for line in self.window.active_lines():
            s, e = line.endpoints if line.endpoints is not None else (None, None)
            positions[("line_start", line.line_id)] = s
            positions[("line_end", line.line_id)] = e
        return positions

    def plane_of(self) -> dict[LandmarkRef, int]:
        """
        Plane id of every mesh vertex reference of the associated landmarks.
        """
        out: dict[LandmarkRef, int] = {}
        for point in self.window.active_points():
            if point.plane_id is not None:
                out[("point", point.point_id)] = point.plane_id
        for line in self.window.active_lines():
            if line.plane_id is not None:
                out[("line_start", line.line_id)] = line.plane_id
                out[("line_end", line.line_id)] = line.plane_id
        return out

    def build_mesh(self, frame_id: int) -> int:
        """
        Triangulate the frame's initialized observations in the image plane,
        with observed segments as constraints, lift the triangles to 3D,
        filter them and fuse the survivors into the mesh. With planes,
        triangles joining landmarks of different planes are dropped first.

        Returns:
            int: Number of patches added
        """
        window = self.window
        coords: list[Vector] = []
        refs: list[LandmarkRef] = []
        segments: list[tuple[int, int]] = []
        for point in window.active_points():
            obs = point.observations.get(frame_id)
            if obs is not None and point.position is not None:
                coords.append(obs[:2])
                refs.append(("point", point.point_id))
        for line in window.active_lines():
            seg = line.observations.get(frame_id)
            if seg is None or line.endpoints is None:
                continue
            segments.append((len(coords), len(coords) + 1))
            coords.extend([seg[0][:2], seg[1][:2]])
            refs.extend([("line_start", line.line_id), ("line_end", line.line_id)])
        if len(coords) < 3:
            return 0

        mesh2d = cdt_2d(np.array(coords), segments, refs)
        if mesh2d.is_empty:
            return 0
        T_wc = window.state(frame_id).pose.compose(window.extrinsics)
        patches = lift_mesh(
            mesh2d,
            self.landmark_positions(),
            T_wc.p,
            frame_id,
            self.conf.MESH_MIN_AREA,
        )
        if self.pipeline.uses_planes:
            patches = single_plane(patches, self.plane_of())
        kept = filter_patches(patches, self.conf, self.mesh.patches(active_only=True))
        before = len(self.mesh)
        fuse_mesh(self.mesh, kept)
        return len(self.mesh) - before

    def detect_planes(self, frame_id: int) -> list[int]:
        """
        Detect planes over the active mesh and line landmarks and add the
        new ones to the window.

        Returns:
            list: Ids of the planes added
        """
        window = self.window
        conf = self.conf
        patches = self.mesh.patches(active_only=True)
        lines = {
            ln.line_id: ln.endpoints
            for ln in window.optimizable_lines()
            if ln.endpoints is not None
        }
        gravity_dir = normalized(window.gravity)
        heights = height_histogram(patches, lines, gravity_dir, conf)
        azimuths = azimuth_histogram(patches, lines, gravity_dir, conf)
        if self.histogram_dir is not None:
            heights.dump_csv(self.histogram_dir / f"height_{frame_id:06d}.csv")
            azimuths.dump_csv(self.histogram_dir / f"azimuth_{frame_id:06d}.csv")
        candidates = detect_horizontal_planes(
            patches, lines, gravity_dir, conf, histogram=heights
        )
        candidates += detect_vertical_planes(
            patches, lines, gravity_dir, conf, histogram=azimuths
        )
        return add_planes(window, candidates)

    def _optimize(self, result: FrameResult) -> None:
        window = self.window
        try:
            result.stats = optimize_window(window)
        except SolverDiverged as e:
            self.diverged_windows += 1
            self.rolled_back += 1
            result.diverged = True
            logger.warning(
                "Window at frame %d rolled back (%d in a row): %s",
                result.frame_id,
                self.diverged_windows,
                e,
            )
            if self.diverged_windows > self.conf.MAX_DIVERGED_WINDOWS:
                raise
            return
        self.diverged_windows = 0
        self._repropagate()
        if self.pipeline.uses_planes:
            deassociate_outliers(window, self.mesh)
            result.culled_planes = cull_planes(window)

    def _repropagate(self) -> None:
        frames = self.window.frames
        for prev, frame in zip(frames, frames[1:]):
            preint = frame.preint
            if preint is None:
                continue
            moved = max(
                float(np.linalg.norm(prev.state.ba - preint.linearized_ba)),
                float(np.linalg.norm(prev.state.bg - preint.linearized_bg)),
            )
            if moved > REPROPAGATE_BIAS_DELTA:
                preint.repropagate(prev.state.ba, prev.state.bg)

    def _record_trajectory(self) -> None:
        for frame in self.window.frames:
            self.trajectory[frame.frame_id] = (frame.timestamp, frame.state.pose)

    # Results

    def estimated_trajectory(self) -> tuple[list[float], list[Pose]]:
        ids = sorted(self.trajectory)
        stamps = [self.trajectory[i][0] for i in ids]
        return stamps, [self.trajectory[i][1] for i in ids]

    def estimated_map(self) -> tuple[dict[int, Vector], dict[int, Segment]]:
        """
        Latest world estimate of every point and line, retired ones included.
        Points whose depth left the valid range have no position and are
        left out.
        """
        points = {
            i: p.position
            for i, p in self.window.points.items()
            if p.position is not None and np.all(np.isfinite(p.position))
        }
        lines = {
            i: ln.endpoints
            for i, ln in self.window.lines.items()
            if ln.endpoints is not None
        }
        return points, lines

    def mesh_triangles(self) -> Matrix:
        patches = self.mesh.patches()
        if not patches:
            return np.zeros((0, 3, 3))
        return np.array([p.vertices for p in patches])

    def timing_summary(self) -> dict[str, tuple[float, float]]:
        """
        Mean and maximum duration in milliseconds per stage.
        """
        return {
            stage: (float(np.mean(values)), float(np.max(values)))
            for stage in STAGES
            if (values := self.timings.get(stage))
        }

