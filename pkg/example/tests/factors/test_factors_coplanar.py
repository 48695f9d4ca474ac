import numpy as np
import pytest

from coplanar.factors.base import NoiseModel, line_key, plane_key, point_key, state_key
from coplanar.factors.coplanar import (
    LineOnPlaneFactor,
    PointOnPlaneFactor,
    line_on_plane_residual,
    point_on_plane_residual,
)
from coplanar.geometry.lines import PluckerLine, plucker_to_orthonormal
from coplanar.geometry.planes import PlaneParam
from coplanar.geometry.points import InverseDepthPoint
from coplanar.sim.camera import default_extrinsics
from tests.dummy import check_jacobians, random_state

FLOOR = PlaneParam.from_normal([0.0, 0.0, 1.0], 1.0)


def test_point_on_plane_residual():
    r, _ = point_on_plane_residual(np.array([3.0, -2.0, 1.0]), FLOOR)
    assert r[0] == 0.0
    r, Js = point_on_plane_residual(np.array([0.0, 0.0, 1.03]), FLOOR)
    assert r[0] == pytest.approx(0.03)
    np.testing.assert_allclose(Js[0], [[0.0, 0.0, 1.0]])
    assert Js[1][0, 2] == -1.0


def test_line_on_plane_residual():
    L = PluckerLine.from_points([1.0, 0.0, 0.0], [1.0, 1.0, 0.0])
    ground = PlaneParam.from_normal([0.0, 0.0, 1.0], 0.0)
    r, _ = line_on_plane_residual(L, ground)
    np.testing.assert_allclose(r, [0.0, 0.0], atol=1e-15)

    below = PlaneParam.from_normal([0.0, 0.0, 1.0], -0.02)
    r, _ = line_on_plane_residual(L, below)
    np.testing.assert_allclose(r, [0.02, 0.0], atol=1e-15)

    vertical = PluckerLine(n=[0.0, 0.0, 0.0], d=[0.0, 0.0, 1.0])
    r, _ = line_on_plane_residual(vertical, ground)
    assert r[1] == pytest.approx(1.0)


def _random_plane(rng):
    n = rng.normal(size=3)
    return PlaneParam.from_normal(n, rng.uniform(-3.0, 3.0))


def test_point_on_plane_factor_jacobians(rng):
    extrinsics = default_extrinsics()
    for _ in range(100):
        anchor = random_state(rng)
        point = InverseDepthPoint(
            4, np.array([*rng.uniform(-0.5, 0.5, 2), 1.0]), 1.0 / rng.uniform(1, 6)
        )
        factor = PointOnPlaneFactor(2, 9, 4, extrinsics, NoiseModel.isotropic(1, 0.01))
        assert factor.keys == (state_key(4), point_key(9), plane_key(2))
        values = {
            state_key(4): anchor,
            point_key(9): point,
            plane_key(2): _random_plane(rng),
        }
        check_jacobians(factor, values)


def test_point_on_plane_factor_world_point():
    extrinsics = default_extrinsics()
    anchor = random_state(np.random.default_rng(3))
    point = InverseDepthPoint(0, np.array([0.1, 0.2, 1.0]), 0.5)
    f_w = point.world_point(anchor, extrinsics)
    plane = PlaneParam.from_normal([0.0, 1.0, 0.0], f_w[1] - 0.05)
    factor = PointOnPlaneFactor(0, 0, 0, extrinsics, NoiseModel.isotropic(1, 1.0))
    values = {state_key(0): anchor, point_key(0): point, plane_key(0): plane}
    r, _ = factor.evaluate(values, jacobians=False)
    assert r[0] == pytest.approx(0.05)


def test_line_on_plane_factor_jacobians(rng):
    noise = NoiseModel.diagonal([0.01, 0.05])
    for _ in range(100):
        L = PluckerLine.from_points(rng.normal(size=3) * 2, rng.normal(size=3) * 2)
        factor = LineOnPlaneFactor(1, 6, noise)
        values = {
            line_key(6): plucker_to_orthonormal(L),
            plane_key(1): _random_plane(rng),
        }
        check_jacobians(factor, values)
