import math

import numpy as np
import pytest

from coplanar.core.exceptions import DegenerateLine, UnstableEndpoint
from coplanar.geometry.lines import (
    PluckerLine,
    line_direction_angle,
    line_endpoints_3d,
    orthonormal_jacobian,
    orthonormal_to_plucker,
    orthonormal_update,
    plucker_to_orthonormal,
    plucker_transform,
)
from coplanar.geometry.pose import Pose
from tests.dummy import random_pose


def test_plucker_transform_identity(rng):
    L = PluckerLine.from_points(rng.normal(size=3), rng.normal(size=3))
    out = plucker_transform(L, Pose.identity())
    np.testing.assert_allclose(out.n, L.n)
    np.testing.assert_allclose(out.d, L.d)


def test_plucker_transform_translation():
    L = PluckerLine(n=[0.0, 0.0, 0.0], d=[0.0, 1.0, 0.0])
    T = Pose([1.0, 0.0, 0.0])
    out = plucker_transform(L, T)
    np.testing.assert_allclose(out.d, [0.0, 1.0, 0.0])
    expected = PluckerLine.from_points(T.transform([0, 0, 0]), T.transform([0, 1, 0]))
    np.testing.assert_allclose(out.n, expected.n)
    np.testing.assert_allclose(out.n, [0.0, 0.0, 1.0])


def test_plucker_transform_two_points(rng):
    worst = 0.0
    for _ in range(10_000):
        a, b = rng.normal(scale=3.0, size=3), rng.normal(scale=3.0, size=3)
        T = random_pose(rng, translation=10.0)
        out = plucker_transform(PluckerLine.from_points(a, b), T)
        expected = PluckerLine.from_points(T.transform(a), T.transform(b))
        np.testing.assert_allclose(out.n, expected.n, atol=1e-9)
        np.testing.assert_allclose(out.d, expected.d, atol=1e-9)
        worst = max(worst, abs(out.constraint_error()))
    assert worst < 1e-8


def test_plucker_to_orthonormal_axes():
    O = plucker_to_orthonormal(PluckerLine(n=[1.0, 0.0, 0.0], d=[0.0, 1.0, 0.0]))
    np.testing.assert_allclose(O.U, np.eye(3), atol=1e-12)
    assert O.phi == pytest.approx(math.pi / 4)

    O2 = plucker_to_orthonormal(PluckerLine(n=[2.0, 0.0, 0.0], d=[0.0, 1.0, 0.0]))
    np.testing.assert_allclose(O2.U, O.U, atol=1e-12)
    assert O2.phi == pytest.approx(math.atan2(1.0, 2.0))


def test_plucker_to_orthonormal_round_trip(rng):
    for _ in range(50):
        L = PluckerLine.from_points(rng.normal(size=3), rng.normal(size=3))
        out = orthonormal_to_plucker(plucker_to_orthonormal(L))
        v, w = np.r_[L.n, L.d], np.r_[out.n, out.d]
        assert np.dot(v, w) / (np.linalg.norm(v) * np.linalg.norm(w)) > 1 - 1e-9
        assert np.linalg.norm(w) == pytest.approx(1.0)


def test_plucker_to_orthonormal_through_origin():
    O = plucker_to_orthonormal(PluckerLine(n=[0.0, 0.0, 0.0], d=[0.0, 0.0, 2.0]))
    np.testing.assert_allclose(O.U.T @ O.U, np.eye(3), atol=1e-12)
    assert O.phi == pytest.approx(math.pi / 2)
    L = O.to_plucker()
    np.testing.assert_allclose(L.direction, [0.0, 0.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(L.n, 0.0, atol=1e-12)

    with pytest.raises(DegenerateLine):
        plucker_to_orthonormal(PluckerLine(n=[1.0, 0.0, 0.0], d=[0.0, 0.0, 0.0]))


def test_orthonormal_update(rng):
    L = PluckerLine.from_points([1.0, 2.0, 3.0], [2.0, 2.5, 3.0])
    O = plucker_to_orthonormal(L)
    same = orthonormal_update(O, np.zeros(4))
    np.testing.assert_allclose(same.U, O.U, atol=1e-12)
    np.testing.assert_allclose(same.W, O.W, atol=1e-12)

    moved = O.retract(rng.normal(scale=0.3, size=4))
    np.testing.assert_allclose(moved.U.T @ moved.U, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(moved.W.T @ moved.W, np.eye(2), atol=1e-12)
    assert abs(moved.to_plucker().constraint_error()) < 1e-12


def test_orthonormal_jacobian(rng):
    for _ in range(20):
        L = PluckerLine.from_points(rng.normal(size=3), rng.normal(size=3))
        O = plucker_to_orthonormal(L)
        J = orthonormal_jacobian(O)
        h = 1e-6
        numeric = np.zeros((6, 4))
        for k in range(4):
            delta = np.zeros(4)
            delta[k] = h
            plus, minus = O.retract(delta).to_plucker(), O.retract(-delta).to_plucker()
            numeric[:, k] = (np.r_[plus.n, plus.d] - np.r_[minus.n, minus.d]) / (2 * h)
        np.testing.assert_allclose(J, numeric, atol=1e-8)


def test_line_endpoints_3d():
    L = PluckerLine.from_points([1.0, 0.0, 2.0], [1.0, 1.0, 2.0])
    ps, pe = line_endpoints_3d(L, ([0.5, 0.0, 1.0], [0.5, 0.5, 1.0]))
    np.testing.assert_allclose(ps, [1.0, 0.0, 2.0], atol=1e-12)
    np.testing.assert_allclose(pe, [1.0, 1.0, 2.0], atol=1e-12)


def test_line_endpoints_3d_unstable():
    # viewing ray along the line
    L = PluckerLine.from_points([0.0, 0.0, 1.0], [0.0, 0.0, 2.0])
    with pytest.raises(UnstableEndpoint):
        line_endpoints_3d(L, ([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]))
    # line met behind the camera
    L = PluckerLine.from_points([1.0, 0.0, -2.0], [1.0, 1.0, -2.0])
    with pytest.raises(UnstableEndpoint):
        line_endpoints_3d(L, ([0.5, 0.0, 1.0], [0.5, 0.5, 1.0]))


def test_line_helpers():
    L = PluckerLine.from_points([1.0, 0.0, 2.0], [1.0, 3.0, 2.0])
    np.testing.assert_allclose(L.closest_point(), [1.0, 0.0, 2.0], atol=1e-12)
    assert L.point_distance(np.array([1.0, 5.0, 0.0])) == pytest.approx(2.0)
    assert line_direction_angle([1, 0, 0], [-1, 0, 0]) == pytest.approx(0.0)
    assert line_direction_angle([1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2)
