"""
Levenberg-Marquardt over the sliding window with the landmarks eliminated
by the Schur complement.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse

from coplanar.conf import AppSettings
from coplanar.core.exceptions import FactorError, GeometryError, SolverDiverged
from coplanar.core.typing import Matrix, Vector
from coplanar.factors.base import Factor, Linearization, VarKey
from coplanar.factors.builders import factor_builders_pool
from coplanar.geometry.points import InverseDepthPoint

from .window import SlidingWindow

logger = logging.getLogger(__name__)

# States and planes stay in the reduced system, points and lines are
# eliminated.
FRAME_SIDE = ("x", "pi")
KIND_ORDER = ("x", "pi", "f", "l")
MIN_DIAGONAL, MAX_DIAGONAL = 1e-6, 1e32


@dataclass
class SolverStats:
    iterations: int = 0
    accepted: int = 0
    rejected: int = 0
    initial_cost: float = 0.0
    final_cost: float = 0.0
    converged: bool = False
    skipped_factors: int = 0
    cost_by_kind: dict[str, float] = field(default_factory=dict)
    factor_counts: dict[str, int] = field(default_factory=dict)


class Problem:
    """
    Factors together with the variables they touch. Frame-side variables
    come first in the layout, followed by the eliminated landmarks.
    """

    def __init__(self, factors: Sequence[Factor], values: Mapping[VarKey, Any]) -> None:
        self.factors = list(factors)
        keys = {k for f in self.factors for k in f.keys}
        missing = keys.difference(values)
        if missing:
            raise KeyError(f"Factors reference unknown variables: {sorted(missing)}")

        def order(k: VarKey) -> tuple[int, int]:
            return (KIND_ORDER.index(k[0]), k[1])

        self.keys = sorted(keys, key=order)
        self.values = {k: values[k] for k in self.keys}
        self.offsets: dict[VarKey, int] = {}
        offset = 0
        self.frame_dim = 0
        for k in self.keys:
            self.offsets[k] = offset
            offset += self.values[k].dim
            if k[0] in FRAME_SIDE:
                self.frame_dim = offset
        self.dim = offset

    def eliminated_blocks(self) -> list[tuple[int, int]]:
        return [
            (self.offsets[k], self.values[k].dim)
            for k in self.keys
            if k[0] not in FRAME_SIDE
        ]

    def retract(
        self,
        values: Mapping[VarKey, Any],
        delta: Vector,
        inv_depth_range: Optional[tuple[float, float]] = None,
    ) -> dict[VarKey, Any]:
        """
        Apply a step to every variable. Inverse depths are clipped to
        ``inv_depth_range`` when given, so a long step cannot push a point
        behind its anchor camera.
        """
        out = dict(values)
        for k in self.keys:
            o = self.offsets[k]
            x = values[k].retract(delta[o : o + values[k].dim])
            if inv_depth_range is not None and isinstance(x, InverseDepthPoint):
                lo, hi = inv_depth_range
                if not lo <= x.inv_depth <= hi:
                    x = replace(x, inv_depth=min(max(x.inv_depth, lo), hi))
            out[k] = x
        return out

    def linearize(
        self, values: Mapping[VarKey, Any]
    ) -> tuple[scipy.sparse.csr_matrix, Vector, list[bool], float]:
        """
        Stack the whitened Jacobian and residual of all factors. Factors
        that cannot be evaluated (point behind a camera, degenerate line
        projection) are skipped for this iteration.

        Returns:
            tuple: Sparse Jacobian, residual, per-factor active mask and cost
        """
        rows: list[Vector] = []
        cols: list[Vector] = []
        data: list[Vector] = []
        residuals: list[Vector] = []
        active: list[bool] = []
        cost, row = 0.0, 0
        for factor in self.factors:
            try:
                lin: Linearization = factor.linearize(values)
            except (FactorError, GeometryError) as e:
                logger.debug("Skipping %s factor %s: %s", factor.kind, factor.keys, e)
                active.append(False)
                continue
            m = len(lin.residual)
            rr = np.arange(row, row + m)
            for k, J in zip(factor.keys, lin.jacobians):
                o, d = self.offsets[k], J.shape[1]
                rows.append(np.repeat(rr, d))
                cols.append(np.tile(np.arange(o, o + d), m))
                data.append(J.ravel())
            residuals.append(lin.residual)
            active.append(True)
            cost += lin.cost
            row += m

        if residuals:
            r = np.concatenate(residuals)
            J = scipy.sparse.csr_matrix(
                (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                shape=(row, self.dim),
            )
        else:
            r = np.zeros(0)
            J = scipy.sparse.csr_matrix((0, self.dim))
        return J, r, active, cost

    def cost(self, values: Mapping[VarKey, Any], active: Sequence[bool]) -> float:
        """
        Total cost over the active factors; infinite if one of them can no
        longer be evaluated.
        """
        total = 0.0
        for factor, on in zip(self.factors, active):
            if not on:
                continue
            try:
                total += factor.cost(values)
            except (FactorError, GeometryError):
                return math.inf
        return total

    def cost_by_kind(self, values: Mapping[VarKey, Any]) -> dict[str, float]:
        costs: dict[str, float] = {}
        for factor in self.factors:
            try:
                c = factor.cost(values)
            except (FactorError, GeometryError):
                continue
            costs[factor.kind] = costs.get(factor.kind, 0.0) + c
        return costs


def _block_inverse(C: Matrix, blocks: Sequence[tuple[int, int]], offset: int) -> Matrix:
    """
    Inverse of a block diagonal matrix given its ``(offset, size)`` blocks.
    Scalar blocks are inverted in one vectorized step.
    """
    Cinv = np.zeros_like(C)
    scalar = np.array([o - offset for o, d in blocks if d == 1], dtype=int)
    if len(scalar):
        Cinv[scalar, scalar] = 1.0 / C[scalar, scalar]
    sizes = {d for _, d in blocks if d > 1}
    for size in sizes:
        starts = np.array([o - offset for o, d in blocks if d == size], dtype=int)
        idx = starts[:, None] + np.arange(size)
        stacked = C[idx[:, :, None], idx[:, None, :]]
        Cinv[idx[:, :, None], idx[:, None, :]] = np.linalg.inv(stacked)
    return Cinv


def _solve_spd(A: Matrix, b: Vector) -> Vector:
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(A), b)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        logger.debug("Normal equations not positive definite, using least squares")
        return scipy.linalg.lstsq(A, b)[0]


def damp(H: Matrix, mu: float) -> Matrix:
    """
    Marquardt damping ``H + mu * diag(H)`` with the diagonal clamped.
    """
    diag = np.clip(np.diag(H), MIN_DIAGONAL, MAX_DIAGONAL)
    return H + mu * np.diag(diag)


def solve_schur(
    H: Matrix, b: Vector, frame_dim: int, blocks: Sequence[tuple[int, int]]
) -> Vector:
    """
    Solve ``H dx = -b`` by eliminating the block diagonal landmark part.

    Args:
        H (Matrix): (Damped) normal matrix
        b (Vector): Gradient ``J^T r``
        frame_dim (int): Size of the frame-side block
        blocks (Sequence): ``(offset, size)`` of the eliminated blocks

    Returns:
        Vector: Step ``dx``
    """
    A = H[:frame_dim, :frame_dim]
    B = H[:frame_dim, frame_dim:]
    C = H[frame_dim:, frame_dim:]
    b_c, b_e = b[:frame_dim], b[frame_dim:]
    if C.size == 0:
        return _solve_spd(A, -b_c)

    Cinv = _block_inverse(C, blocks, frame_dim)
    BCinv = B @ Cinv
    S = A - BCinv @ B.T
    dx_c = _solve_spd(0.5 * (S + S.T), -b_c + BCinv @ b_e)
    dx_e = Cinv @ (-b_e - B.T @ dx_c)
    return np.concatenate([dx_c, dx_e])


def solve_dense(H: Matrix, b: Vector) -> Vector:
    return _solve_spd(H, -b)


def predicted_decrease(H: Matrix, g: Vector, delta: Vector) -> float:
    """
    Cost decrease the Gauss-Newton model ``0.5 |J dx + r|^2`` predicts for
    a step, with ``H = J^T J`` and ``g = J^T r``.
    """
    return float(-g @ delta - 0.5 * delta @ H @ delta)


def levenberg_marquardt(
    problem: Problem, conf: AppSettings
) -> tuple[dict[VarKey, Any], SolverStats]:
    """
    Minimize the total robustified cost of a problem.

    Args:
        problem (Problem): Factors and initial values
        conf (AppSettings): Solver settings

    Raises:
        SolverDiverged: After ``LM_MAX_REJECTIONS`` consecutive rejected steps
            while the local model still predicts a relative decrease above
            ``LM_RELATIVE_TOLERANCE``

    Returns:
        tuple: Optimized values and statistics
    """
    values = problem.values
    stats = SolverStats()
    J, r, active, cost = problem.linearize(values)
    stats.initial_cost = cost
    stats.skipped_factors = active.count(False)
    mu = conf.LM_INITIAL_DAMPING
    factor = conf.LM_DAMPING_FACTOR
    rejections = 0
    H = (J.T @ J).toarray()
    g = J.T @ r
    blocks = problem.eliminated_blocks()
    inv_depth_range = (1.0 / conf.MAX_DEPTH, 1.0 / conf.MIN_DEPTH)

    while stats.iterations < conf.LM_MAX_ITERATIONS:
        stats.iterations += 1
        delta = solve_schur(damp(H, mu), g, problem.frame_dim, blocks)
        predicted = math.inf
        if not np.all(np.isfinite(delta)):
            new_cost = math.inf
        elif np.linalg.norm(delta) < conf.LM_STEP_TOLERANCE:
            stats.converged = True
            break
        else:
            predicted = predicted_decrease(H, g, delta)
            candidate = problem.retract(values, delta, inv_depth_range)
            new_cost = problem.cost(candidate, active)
        logger.debug(
            "LM iteration %d: cost %.6g -> %.6g (mu %.1e)",
            stats.iterations,
            cost,
            new_cost,
            mu,
        )

        if new_cost < cost:
            decrease = (cost - new_cost) / max(cost, 1e-300)
            values, cost = candidate, new_cost
            stats.accepted += 1
            rejections = 0
            mu = max(mu / factor, 1e-12)
            if decrease < conf.LM_RELATIVE_TOLERANCE:
                stats.converged = True
                break
            J, r, active, cost = problem.linearize(values)
            H = (J.T @ J).toarray()
            g = J.T @ r
            continue

        stalled = new_cost - cost <= conf.LM_RELATIVE_TOLERANCE * cost
        if math.isfinite(new_cost) and stalled:
            # No decrease left to find around the current estimate.
            stats.converged = True
            break
        if predicted <= conf.LM_RELATIVE_TOLERANCE * cost:
            # The local model has nothing left to gain either.
            stats.converged = True
            break
        stats.rejected += 1
        rejections += 1
        mu *= factor
        if rejections >= conf.LM_MAX_REJECTIONS:
            raise SolverDiverged(
                f"Cost did not decrease in {rejections} consecutive attempts "
                f"(cost {cost:.6g})."
            )

    stats.final_cost = cost
    return values, stats


def window_factors(window: SlidingWindow) -> list[Factor]:
    """
    All factors of a window: priors plus the ones of the enabled builders.
    """
    factors: list[Factor] = []
    if window.gauge is not None:
        factors.append(window.gauge)
    if window.prior is not None:
        factors.append(window.prior.factor())
    for builder in factor_builders_pool.get_enabled(window.pipeline, window.conf):
        factors.extend(builder.build(window))
    return factors


def optimize_window(window: SlidingWindow) -> SolverStats:
    """
    Jointly optimize keyframe states, landmarks and planes of the window.
    The window is only written when the solver succeeds.

    Args:
        window (SlidingWindow): Sliding window with at least two keyframes

    Raises:
        SolverDiverged: If the solver could not decrease the cost; the window
            is left untouched

    Returns:
        SolverStats: Iterations, costs and factor counts
    """
    factors = window_factors(window)
    problem = Problem(factors, window.values())
    values, stats = levenberg_marquardt(problem, window.conf)
    window.set_values(values)
    for f in factors:
        stats.factor_counts[f.kind] = stats.factor_counts.get(f.kind, 0) + 1
    stats.cost_by_kind = problem.cost_by_kind(values)
    logger.debug(
        "Window optimized in %d iterations: cost %.6g -> %.6g",
        stats.iterations,
        stats.initial_cost,
        stats.final_cost,
    )
    return stats
