import math

import numpy as np
import pytest

from coplanar.conf import AppSettings
from coplanar.geometry.planes import PlaneParam
from coplanar.mesh.patches import MeshPatch
from coplanar.structure.detection import (
    HORIZONTAL,
    VERTICAL,
    PlaneCandidate,
    associate_landmarks,
    azimuth_histogram,
    dedup_planes,
    detect_horizontal_planes,
    detect_vertical_planes,
    gravity_frame,
    height_histogram,
    merge_lines,
    representative_lines,
    same_plane,
)
from tests.dummy import NOISE_FREE, room_log, room_mesh

GRAVITY = np.array([0.0, 0.0, -1.0])


def grid(rows, cols, corner, u, v, normal, first_id=0, spacing=0.2):
    """
    Patches over a ``rows x cols`` vertex grid spanned by ``u`` and ``v``.
    """
    corner, u, v = (np.asarray(x, dtype=float) for x in (corner, u, v))
    ids = {}
    vertices = {}
    for i in range(rows):
        for j in range(cols):
            ids[i, j] = ("point", first_id + i * cols + j)
            vertices[i, j] = corner + spacing * (i * u + j * v)
    patches = []
    for i in range(rows - 1):
        for j in range(cols - 1):
            for tri in (
                [(i, j), (i + 1, j), (i, j + 1)],
                [(i + 1, j), (i + 1, j + 1), (i, j + 1)],
            ):
                patches.append(
                    MeshPatch(
                        tuple(ids[c] for c in tri),
                        [vertices[c] for c in tri],
                        np.asarray(normal, dtype=float),
                    )
                )
    return patches


def floor_grid(rows, cols, height=1.0, first_id=0):
    return grid(rows, cols, [0, 0, height], [1, 0, 0], [0, 1, 0], [0, 0, 1], first_id)


def wall_grid(rows, cols, x=4.0, first_id=0):
    return grid(rows, cols, [x, 0, 0.5], [0, 1, 0], [0, 0, 1], [-1, 0, 0], first_id)


def test_gravity_frame():
    up, e1, e2 = gravity_frame(GRAVITY)
    np.testing.assert_allclose(up, [0, 0, 1])
    np.testing.assert_allclose(e1, [1, 0, 0])
    np.testing.assert_allclose(e2, [0, 1, 0])
    up, e1, e2 = gravity_frame(np.array([-1.0, 0.0, 0.0]))
    np.testing.assert_allclose(np.cross(e1, e2), up)


def test_detect_floor():
    patches = floor_grid(3, 9)
    planes = detect_horizontal_planes(patches, {}, GRAVITY, AppSettings({}))
    assert len(planes) == 1
    plane = planes[0]
    assert plane.kind == HORIZONTAL
    np.testing.assert_allclose(plane.param.n, [0, 0, 1])
    assert plane.param.d == pytest.approx(1.0)
    assert plane.score == pytest.approx(27.0)
    assert plane.point_ids == list(range(27))
    assert len(plane.patch_keys) == len(patches)


def test_below_threshold():
    assert detect_horizontal_planes(floor_grid(3, 3), {}, GRAVITY) == []
    assert detect_horizontal_planes([], {}, GRAVITY) == []
    assert detect_vertical_planes([], {}, GRAVITY) == []


def _floor_lines(height=1.0):
    return {
        k: (np.array([0.0, 2.0 + k, height]), np.array([1.0, 2.0 + k, height]))
        for k in range(3)
    }


@pytest.mark.parametrize("weight, detected", [(2.0, True), (1.0, False)])
def test_lines_vote(weight, detected):
    conf = AppSettings({"line_vote_weight": weight})
    patches = floor_grid(3, 3)
    hist = height_histogram(patches, _floor_lines(), GRAVITY, conf)
    assert hist.weights[220] == pytest.approx(9.0 + 6.0 * weight)
    planes = detect_horizontal_planes(patches, _floor_lines(), GRAVITY, conf)
    assert bool(planes) is detected
    if detected:
        assert planes[0].line_ids == [0, 1, 2]


def test_vertical_line_skipped_by_height():
    lines = {0: (np.array([2.0, 3.0, 0.5]), np.array([2.0, 3.0, 2.5]))}
    hist = height_histogram([], lines, GRAVITY, AppSettings({}))
    assert hist.weights.sum() == 0.0


def test_detect_wall():
    patches = wall_grid(3, 9)
    planes = detect_vertical_planes(patches, {}, GRAVITY, AppSettings({}))
    assert len(planes) == 1
    plane = planes[0]
    assert plane.kind == VERTICAL
    np.testing.assert_allclose(plane.param.n, [1, 0, 0], atol=1e-12)
    assert plane.param.d == pytest.approx(4.0)
    assert detect_horizontal_planes(patches, {}, GRAVITY) == []


def test_horizontal_patches_do_not_vote_azimuth():
    hist = azimuth_histogram(floor_grid(3, 9), {}, GRAVITY, AppSettings({}))
    assert hist.weights.sum() == 0.0


def test_vertical_line_votes_every_column():
    lines = {0: (np.array([2.0, 3.0, 0.5]), np.array([2.0, 3.0, 2.5]))}
    hist = azimuth_histogram([], lines, GRAVITY, AppSettings({}))
    assert hist.weights[0, 20] == pytest.approx(4.0)
    assert hist.weights[30, 30] == pytest.approx(4.0)
    # facing away from the line
    assert hist.weights[60].sum() == 0.0


def test_horizontal_line_votes_its_plane():
    lines = {0: (np.array([4.0, 0.0, 1.0]), np.array([4.0, 1.0, 1.0]))}
    hist = azimuth_histogram([], lines, GRAVITY, AppSettings({}))
    assert hist.weights[0, 40] == pytest.approx(4.0)
    assert hist.weights.sum() == pytest.approx(4.0)


def test_detection_is_order_independent(rng):
    patches = floor_grid(3, 9) + wall_grid(3, 9, first_id=100)
    conf = AppSettings({})
    expected = detect_vertical_planes(patches, {}, GRAVITY, conf)
    shuffled = [patches[i] for i in rng.permutation(len(patches))]
    planes = detect_vertical_planes(shuffled, {}, GRAVITY, conf)
    assert [(p.param.d, p.score, p.point_ids) for p in planes] == [
        (p.param.d, p.score, p.point_ids) for p in expected
    ]


def test_doubled_votes_double_the_score():
    patches = floor_grid(3, 9)
    single = detect_horizontal_planes(patches, {}, GRAVITY)
    double = detect_horizontal_planes(
        patches + floor_grid(3, 9, first_id=100), {}, GRAVITY
    )
    assert double[0].score == pytest.approx(2.0 * single[0].score)
    assert double[0].param.d == pytest.approx(single[0].param.d)


def test_merge_lines():
    lines = {
        0: (np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 1.0])),
        1: (np.array([0.5, 0.01, 1.0]), np.array([2.0, 0.01, 1.0])),
        2: (np.array([0.0, 1.0, 1.0]), np.array([1.0, 1.0, 1.0])),
        3: (np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 1.0])),
    }
    assert merge_lines(lines) == [[0, 1], [2], [3]]
    assert sorted(representative_lines(lines)) == [1, 2, 3]
    assert merge_lines({}) == []


def test_same_plane():
    a = PlaneParam.from_normal([1, 0, 0], 4.0)
    flipped = PlaneParam.from_normal([-1, 0, 0], -4.0)
    assert same_plane(a, flipped, math.radians(5), 0.05)
    near = PlaneParam.from_normal([1, 0.02, 0], 4.03)
    assert same_plane(a, near, math.radians(5), 0.05)
    assert not same_plane(a, PlaneParam.from_normal([1, 0, 0], 4.1), 1.0, 0.05)
    assert not same_plane(a, PlaneParam.from_normal([1, 1, 0], 4.0), 0.1, 0.05)


def test_dedup_planes():
    def candidate(d, score):
        return PlaneCandidate(HORIZONTAL, PlaneParam.from_normal([0, 0, 1], d), score)

    kept = dedup_planes(
        [candidate(1.0, 20.0), candidate(1.02, 30.0), candidate(2.0, 25.0)],
        [PlaneParam.from_normal([0, 0, 1], 2.01)],
    )
    assert [(c.param.d, c.score) for c in kept] == [(1.02, 30.0)]


def test_associate_landmarks():
    planes = {
        0: PlaneParam.from_normal([0, 0, 1], 0.0),
        1: PlaneParam.from_normal([0, 0, 1], 0.04),
        2: PlaneParam.from_normal([1, 0, 0], 4.0),
    }
    points = {
        10: np.array([1.0, 1.0, 0.02]),
        11: np.array([1.0, 1.0, 0.035]),
        12: np.array([3.99, 0.0, 1.0]),
        13: np.array([2.0, 2.0, 2.0]),
        14: None,
    }
    lines = {
        20: (np.array([4.0, 0.0, 0.5]), np.array([4.01, 0.0, 2.5])),
        21: (np.array([3.0, 0.0, 0.0]), np.array([4.0, 0.0, 0.0])),
        22: None,
    }
    points_to, lines_to = associate_landmarks(planes, points, lines)
    # equidistant points go to the lower plane id
    assert points_to == {10: 0, 11: 1, 12: 2}
    # line 21 lies in the floor and ends on the wall
    assert lines_to == {20: 2, 21: 0}


def test_detect_room_planes():
    conf = AppSettings(NOISE_FREE)
    log, scene = room_log(conf)
    patches = room_mesh(log, scene, conf).patches()
    horizontal = detect_horizontal_planes(patches, scene.lines, GRAVITY, conf)
    vertical = detect_vertical_planes(patches, scene.lines, GRAVITY, conf)
    assert len(horizontal) == 1
    assert len(vertical) == 4

    def matches(candidate, plane):
        n, d = candidate.param.n, candidate.param.d
        if np.dot(n, plane.n) < 0.0:
            n, d = -n, -d
        angle = math.degrees(math.acos(min(1.0, float(np.dot(n, plane.n)))))
        return angle < 0.5 and abs(d - plane.d) < 0.01

    assert matches(horizontal[0], scene.planes["floor"])
    for name in scene.walls:
        assert sum(matches(c, scene.planes[name]) for c in vertical) == 1
