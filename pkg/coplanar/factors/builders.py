"""
Factor builders turn the landmark and keyframe tables of a sliding window
into the factors of one optimization. The active set is configured with
``FACTOR_BUILDERS`` and filtered by the pipeline's feature switches.
"""
from __future__ import annotations

import math
from typing import TYPE_CHECKING, Any

from coplanar.conf import AppSettings, app_settings
from coplanar.core.pipeline import Pipeline

from .base import Factor, NoiseModel
from .coplanar import LineOnPlaneFactor, PointOnPlaneFactor
from .imu import ImuFactor
from .loss import RobustLoss
from .visual import LineFactor, LineReprojFactor, PointFactor, PointReprojFactor

if TYPE_CHECKING:  # pragma: no cover
    from coplanar.estimator.window import SlidingWindow


class FactorBuilder:
    """
    Base factor builder. All builders listed in ``FACTOR_BUILDERS`` must
    extend this class and define a unique ``identifier``.
    """

    identifier: str

    def is_enabled(self, pipeline: Pipeline) -> bool:
        """
        Whether the builder contributes factors for the given pipeline.

        Args:
            pipeline (Pipeline): Estimator variant

        Returns:
            bool: True if enabled
        """
        return True

    def build(self, window: SlidingWindow) -> list[Factor]:
        """
        Build the factors for the current window contents.

        Args:
            window (SlidingWindow): Sliding window

        Returns:
            list: Factors
        """
        raise NotImplementedError  # pragma: no cover

    def get_loss(self, conf: AppSettings) -> RobustLoss:
        return conf.ROBUST_LOSS(conf.ROBUST_LOSS_SCALE)


class ImuFactorBuilder(FactorBuilder):
    identifier = "imu"

    def build(self, window: SlidingWindow) -> list[Factor]:
        factors: list[Factor] = []
        for prev, frame in zip(window.frames, window.frames[1:]):
            if frame.preint is not None and frame.preint.sum_dt > 0:
                factors.append(
                    ImuFactor(
                        prev.frame_id, frame.frame_id, frame.preint, window.gravity
                    )
                )
        return factors


class PointFactorBuilder(FactorBuilder):
    identifier = "point"

    def build(self, window: SlidingWindow) -> list[Factor]:
        conf = window.conf
        noise = NoiseModel.isotropic(2, conf.PIXEL_SIGMA / conf.FOCAL_LENGTH)
        loss = self.get_loss(conf)
        factors: list[Factor] = []
        for track in window.optimizable_points():
            anchor = track.anchor_frame
            obs_i = track.observations[anchor]
            for frame_id, obs_j in sorted(track.observations.items()):
                if frame_id == anchor:
                    continue
                m = PointReprojFactor(anchor, frame_id, obs_i, obs_j, track.point_id)
                factors.append(PointFactor(m, window.extrinsics, noise, loss))
        return factors


class LineFactorBuilder(FactorBuilder):
    identifier = "line"

    def is_enabled(self, pipeline: Pipeline) -> bool:
        return pipeline.uses_lines

    def build(self, window: SlidingWindow) -> list[Factor]:
        conf = window.conf
        noise = NoiseModel.isotropic(2, conf.PIXEL_SIGMA / conf.FOCAL_LENGTH)
        loss = self.get_loss(conf)
        factors: list[Factor] = []
        for track in window.optimizable_lines():
            for frame_id, (s, e) in sorted(track.observations.items()):
                m = LineReprojFactor(frame_id, track.line_id, s, e)
                factors.append(LineFactor(m, window.extrinsics, noise, loss))
        return factors


class CoplanarFactorBuilder(FactorBuilder):
    identifier = "coplanar"

    def is_enabled(self, pipeline: Pipeline) -> bool:
        return pipeline.uses_planes

    def build(self, window: SlidingWindow) -> list[Factor]:
        conf = window.conf
        sigma_d = conf.PLANE_DISTANCE_SIGMA
        sigma_a = math.radians(conf.PLANE_ANGLE_SIGMA_DEG)
        point_noise = NoiseModel.isotropic(1, sigma_d)
        line_noise = NoiseModel.diagonal([sigma_d, sigma_a])
        loss = self.get_loss(conf)
        factors: list[Factor] = []
        for track in window.optimizable_points():
            if track.plane_id in window.planes:
                factors.append(
                    PointOnPlaneFactor(
                        track.plane_id,
                        track.point_id,
                        track.anchor_frame,
                        window.extrinsics,
                        point_noise,
                        loss,
                    )
                )
        for line in window.optimizable_lines():
            if line.plane_id in window.planes:
                factors.append(
                    LineOnPlaneFactor(line.plane_id, line.line_id, line_noise, loss)
                )
        return factors


class FactorBuildersPool:
    """
    Pool for storing factor builder instances per settings object.
    """

    def __init__(self) -> None:
        self._builders: dict[int, tuple[Any, list[FactorBuilder]]] = {}

    def get_builders(self, conf: AppSettings = app_settings) -> list[FactorBuilder]:
        """
        Returns builder instances.

        Args:
            conf (AppSettings, optional): Settings. Defaults to ``app_settings``.

        Returns:
            list: Builder instances
        """
        classes = conf.FACTOR_BUILDERS
        cached = self._builders.get(id(conf))
        if cached is None or cached[0] is not classes:
            cached = (classes, [B() for B in classes])
            self._builders[id(conf)] = cached
        return cached[1]

    def get_enabled(
        self, pipeline: Pipeline, conf: AppSettings = app_settings
    ) -> list[FactorBuilder]:
        return [b for b in self.get_builders(conf) if b.is_enabled(pipeline)]


factor_builders_pool = FactorBuildersPool()
