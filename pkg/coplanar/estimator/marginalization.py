"""
Marginalization of the oldest keyframe into a Gaussian prior, and the
two-way policy deciding between marginalizing the oldest keyframe and
dropping the newest frame.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from coplanar.core.typing import Matrix, Vector
from coplanar.factors.base import Factor, VarKey, line_key, point_key, state_key
from coplanar.factors.builders import factor_builders_pool
from coplanar.factors.prior import MarginalPriorFactor
from coplanar.geometry.points import reanchor
from coplanar.geometry.pose import ImuState

from .solver import Problem
from .window import SlidingWindow

logger = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-9


def marginalize_information(
    H: Matrix,
    b: Vector,
    marg_idx: Sequence[int],
    keep_idx: Sequence[int],
    eps: float = 1e-8,
) -> tuple[Matrix, Vector]:
    """
    Schur complement of the marginalized block of ``(H, b)``. The block is
    inverted through its eigen decomposition with eigenvalues below ``eps``
    treated as zero.

    Args:
        H (Matrix): Information matrix
        b (Vector): Information vector ``J^T r``
        marg_idx (Sequence): Indices to marginalize
        keep_idx (Sequence): Indices to keep
        eps (float, optional): Eigenvalue cut-off. Defaults to 1e-8.

    Returns:
        tuple: Information matrix and vector over the kept indices
    """
    m, k = np.asarray(marg_idx, dtype=int), np.asarray(keep_idx, dtype=int)
    Hmm = H[np.ix_(m, m)]
    Hmm = 0.5 * (Hmm + Hmm.T)
    s, V = np.linalg.eigh(Hmm)
    s_inv = np.where(s > eps, 1.0 / np.where(s > eps, s, 1.0), 0.0)
    Hmm_inv = (V * s_inv) @ V.T

    Hkm = H[np.ix_(k, m)]
    Hp = H[np.ix_(k, k)] - Hkm @ Hmm_inv @ Hkm.T
    bp = b[k] - Hkm @ Hmm_inv @ b[m]
    return 0.5 * (Hp + Hp.T), bp


@dataclass
class MarginalPrior:
    """
    Prior over keyframe states as the whitened linear residual
    ``r0 + J dx``, where ``dx`` are chart differences from the stored
    linearization states.
    """

    keys: list[VarKey]
    linearization: list[ImuState]
    jacobian: Matrix
    residual: Vector

    @classmethod
    def from_information(
        cls,
        H: Matrix,
        b: Vector,
        keys: Sequence[VarKey],
        linearization: Sequence[ImuState],
        eps: float = 1e-8,
    ) -> MarginalPrior:
        """
        Factor ``H = J^T J`` and ``b = J^T r0`` from the eigen decomposition
        of ``H``; negative eigenvalues from round-off are clamped to zero.
        """
        s, V = np.linalg.eigh(0.5 * (H + H.T))
        s = np.where(s > eps, s, 0.0)
        sqrt_s = np.sqrt(s)
        inv_sqrt_s = np.where(s > 0.0, 1.0 / np.where(s > 0.0, sqrt_s, 1.0), 0.0)
        J = sqrt_s[:, None] * V.T
        r0 = inv_sqrt_s * (V.T @ b)
        return cls(list(keys), list(linearization), J, r0)

    @property
    def information(self) -> Matrix:
        return self.jacobian.T @ self.jacobian

    @property
    def dim(self) -> int:
        return int(self.jacobian.shape[1])

    def is_psd(self, tolerance: float = PSD_TOLERANCE) -> bool:
        return bool(np.linalg.eigvalsh(self.information).min() >= -tolerance)

    def factor(self) -> MarginalPriorFactor:
        return MarginalPriorFactor(
            self.keys, self.linearization, self.jacobian, self.residual
        )


@dataclass
class MarginalizationResult:
    frame_id: int
    prior: MarginalPrior | None
    dropped: bool = False
    retired_points: list[int] = field(default_factory=list)
    retired_lines: list[int] = field(default_factory=list)


def marginalization_factors(window: SlidingWindow, frame_id: int) -> list[Factor]:
    """
    Factors folded into the prior when ``frame_id`` (the oldest keyframe) is
    marginalized: the current priors, the IMU factor leaving the frame, and
    the visual factors of landmarks first observed in it. Co-planarity
    factors are left out.
    """
    x0 = state_key(frame_id)
    factors: list[Factor] = []
    if window.gauge is not None and x0 in window.gauge.keys:
        factors.append(window.gauge)
    if window.prior is not None:
        factors.append(window.prior.factor())

    points = {
        point_key(p.point_id)
        for p in window.optimizable_points()
        if p.anchor_frame == frame_id
    }
    lines = {
        line_key(ln.line_id)
        for ln in window.optimizable_lines()
        if ln.anchor_frame == frame_id
    }
    for builder in factor_builders_pool.get_enabled(window.pipeline, window.conf):
        if builder.identifier == "coplanar":
            continue
        for factor in builder.build(window):
            keys = set(factor.keys)
            if factor.kind == "imu" and x0 in keys:
                factors.append(factor)
            elif keys & points:
                factors.append(factor)
            elif keys & lines and x0 in keys:
                factors.append(factor)
    return factors


def marginalize_oldest(window: SlidingWindow) -> MarginalizationResult:
    """
    Fold the oldest keyframe and the landmark parameters anchored in it into
    the marginalization prior, then remove it from the window.

    Points anchored in it are re-anchored to their next observation, lines
    lose its observation. Landmarks with nothing left to observe them are
    retired and keep their last world estimate.

    Args:
        window (SlidingWindow): Sliding window

    Returns:
        MarginalizationResult: The new prior and the retired landmarks
    """
    oldest = window.frames[0]
    x0 = state_key(oldest.frame_id)
    factors = marginalization_factors(window, oldest.frame_id)
    touching = [f for f in factors if x0 in f.keys or f.kind != "marginal"]
    prior = window.prior

    if touching:
        problem = Problem(factors, window.values())
        J, r, _, _ = problem.linearize(problem.values)
        H = (J.T @ J).toarray()
        b = J.T @ r
        marg_idx: list[int] = []
        keep_idx: list[int] = []
        keep_keys: list[VarKey] = []
        for key in problem.keys:
            o, d = problem.offsets[key], problem.values[key].dim
            if key[0] == "x" and key != x0:
                keep_idx.extend(range(o, o + d))
                keep_keys.append(key)
            else:
                marg_idx.extend(range(o, o + d))
        if keep_keys:
            eps = window.conf.MARGINALIZATION_EPS
            Hp, bp = marginalize_information(H, b, marg_idx, keep_idx, eps)
            prior = MarginalPrior.from_information(
                Hp, bp, keep_keys, [problem.values[k] for k in keep_keys], eps
            )
            logger.debug(
                "Marginalized frame %d: %d -> %d dimensions",
                oldest.frame_id,
                len(marg_idx) + len(keep_idx),
                len(keep_idx),
            )
        else:
            prior = None

    result = MarginalizationResult(oldest.frame_id, prior)
    window.prior = prior
    if window.gauge is not None and x0 in window.gauge.keys:
        window.gauge = None
    _remove_oldest(window, result)
    return result


def _remove_oldest(window: SlidingWindow, result: MarginalizationResult) -> None:
    frame_id = window.frames[0].frame_id
    positions = {
        p.point_id: window.point_position(p)
        for p in window.points.values()
        if not p.retired and frame_id in p.observations
    }
    for line in window.active_lines():
        if set(line.observations) == {frame_id} and line.estimate is not None:
            line.endpoints = window.line_endpoints(line)
    window.frames.pop(0)
    if window.frames:
        window.frames[0].preint = None

    for point in window.points.values():
        if point.point_id not in positions:
            continue
        position = positions[point.point_id]
        del point.observations[frame_id]
        if not point.observations:
            point.retired = True
            point.position = position
            if position is None:
                point.plane_id = None
            result.retired_points.append(point.point_id)
            continue
        if point.estimate is not None and point.estimate.anchor_frame == frame_id:
            if position is None:
                point.estimate = None
                continue
            anchor = point.anchor_frame
            moved = reanchor(
                position,
                anchor,
                window.state(anchor),
                point.observations[anchor],
                window.extrinsics,
            )
            conf = window.conf
            point.estimate = (
                moved if moved.is_valid(conf.MIN_DEPTH, conf.MAX_DEPTH) else None
            )
            point.position = position

    for line in window.lines.values():
        if line.retired or frame_id not in line.observations:
            continue
        del line.observations[frame_id]
        if not line.observations:
            line.retired = True
            result.retired_lines.append(line.line_id)


def drop_newest(window: SlidingWindow) -> MarginalizationResult:
    """
    Remove the newest frame when it is not a keyframe. Its observations are
    discarded and its IMU motion is kept in ``window.carry`` to be extended
    by the samples up to the next frame.
    """
    newest = window.frames.pop()
    window.carry = newest.preint
    for point in window.points.values():
        point.observations.pop(newest.frame_id, None)
        estimate = point.estimate
        if estimate is not None and estimate.anchor_frame == newest.frame_id:
            point.estimate = None
    for line in window.lines.values():
        line.observations.pop(newest.frame_id, None)
    logger.debug("Dropped non-keyframe %d", newest.frame_id)
    return MarginalizationResult(newest.frame_id, window.prior, dropped=True)


def marginalize(window: SlidingWindow) -> MarginalizationResult | None:
    """
    Apply the two-way policy once the window holds more than
    ``WINDOW_SIZE`` frames: a non-keyframe newest frame is dropped,
    otherwise the oldest keyframe is marginalized.

    Args:
        window (SlidingWindow): Sliding window

    Returns:
        MarginalizationResult: What was removed, or None if the window
            is not full
    """
    if not window.is_full:
        return None
    if not window.latest.is_keyframe:
        return drop_newest(window)
    return marginalize_oldest(window)
