import math

import numpy as np
import pytest

from coplanar.conf import AppSettings
from coplanar.mesh.cdt import Mesh2D, cdt_2d
from coplanar.mesh.patches import (
    MeshPatch,
    adjacency,
    filter_patches,
    lift_mesh,
    single_plane,
    triangle_normal,
)
from tests.dummy import NOISE_FREE, room_log, room_mesh

UP = np.array([0.0, 0.0, 1.0])


def _patch(ids, vertices, normal=UP, **kwargs):
    refs = tuple(("point", i) for i in ids)
    return MeshPatch(refs, vertices, normal, **kwargs)


def test_triangle_normal():
    normal, area = triangle_normal(np.array([[0, 0, 0], [2, 0, 0], [0, 2, 0]], float))
    np.testing.assert_allclose(normal, UP)
    assert area == 2.0
    normal, area = triangle_normal(np.array([[0, 0, 0], [1, 1, 1], [2, 2, 2]], float))
    assert area == 0.0
    np.testing.assert_array_equal(normal, np.zeros(3))


def test_patch_shape():
    patch = _patch([0, 1, 2], [[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    assert patch.area == pytest.approx(0.5)
    assert patch.key == (("point", 0), ("point", 1), ("point", 2))
    np.testing.assert_allclose(patch.centroid, [1 / 3, 1 / 3, 0])
    assert patch.min_angle() == pytest.approx(45.0)
    # longest edge sqrt(2), altitude onto it 1 / sqrt(2)
    assert patch.aspect_ratio() == pytest.approx(2.0)

    sliver = _patch([0, 1, 2], [[0, 0, 0], [1, 0, 0], [2, 0, 0]])
    assert sliver.aspect_ratio() == math.inf
    assert sliver.min_angle() == pytest.approx(0.0)


def test_patch_key_is_order_free():
    a = _patch([2, 0, 1], [[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    b = _patch([1, 2, 0], [[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    assert a.key == b.key


def test_patch_refresh():
    patch = _patch([0, 1, 2], [[0, 0, 0], [1, 0, 0], [0, 1, 0]], -UP)
    positions = {
        ("point", 0): np.array([0.0, 0.0, 1.0]),
        ("point", 1): np.array([2.0, 0.0, 1.0]),
        ("point", 2): np.array([0.0, 2.0, 1.0]),
    }
    assert patch.refresh(positions)
    np.testing.assert_allclose(patch.vertices[:, 2], 1.0)
    # the normal keeps its side
    np.testing.assert_allclose(patch.normal, -UP)
    assert patch.area == pytest.approx(2.0)

    positions[("point", 2)] = None
    assert not patch.refresh(positions)
    patch.frozen = True
    assert not patch.refresh({})


def test_lift_mesh():
    mesh = cdt_2d(
        np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
        refs=[("point", i) for i in range(4)],
    )
    positions = {
        ("point", 0): np.array([0.0, 0.0, 0.0]),
        ("point", 1): np.array([1.0, 0.0, 0.0]),
        ("point", 2): np.array([1.0, 1.0, 0.0]),
        ("point", 3): np.array([0.0, 1.0, 0.0]),
    }
    patches = lift_mesh(mesh, positions, np.array([0.5, 0.5, -2.0]), frame_id=4)
    assert len(patches) == 2
    for patch in patches:
        # normals face the camera below the floor
        np.testing.assert_allclose(patch.normal, -UP)
        assert patch.source_frame == 4
        assert patch.area == pytest.approx(0.5)

    positions[("point", 0)] = None
    remaining = sum(0 not in tri for tri in mesh.triangles)
    assert len(lift_mesh(mesh, positions, np.zeros(3))) == remaining


def test_lift_mesh_skips_degenerate():
    refs = [("point", 0), ("point", 1), ("point", 2)]
    mesh = Mesh2D(np.zeros((3, 2)), refs, triangles=np.array([[0, 1, 2]]))
    collinear = {ref: np.full(3, float(k)) for k, ref in enumerate(refs)}
    assert lift_mesh(mesh, collinear, np.zeros(3)) == []

    mesh.refs[2] = None
    assert lift_mesh(mesh, collinear, np.zeros(3)) == []


def _fan(normals):
    """
    Patches around the centre vertex 0 of a hexagon, one per normal.
    """
    patches = []
    for k, normal in enumerate(normals):
        a, b = 2 * math.pi * k / 6, 2 * math.pi * (k + 1) / 6
        vertices = [
            [0, 0, 0],
            [math.cos(a), math.sin(a), 0],
            [math.cos(b), math.sin(b), 0],
        ]
        patches.append(_patch([0, 1 + k, 1 + (k + 1) % 6], vertices, normal))
    return patches


def test_adjacency():
    neighbors = adjacency(_fan([UP] * 6))
    assert neighbors[0] == [1, 5]
    assert all(len(n) == 2 for n in neighbors)


def test_filter_patches_needs_similar_neighbours():
    conf = AppSettings({"mesh_min_neighbors": 2})
    tilted = np.array([0.0, math.sin(0.2), math.cos(0.2)])
    patches = _fan([UP, UP, UP, tilted, UP, UP])
    kept = filter_patches(patches, conf)
    # the tilted patch and its two neighbours lose a similar neighbour
    assert [patches.index(p) for p in kept] == [0, 1, 5]

    conf = AppSettings({"mesh_min_neighbors": 3})
    assert filter_patches(_fan([UP] * 6), conf) == []


def test_filter_patches_counts_pool():
    conf = AppSettings({"mesh_min_neighbors": 2})
    patches = _fan([UP] * 6)
    kept = filter_patches(patches[:1], conf, pool=patches[1:])
    assert kept == patches[:1]
    assert filter_patches(patches[:1], conf) == []


def test_filter_patches_shape():
    conf = AppSettings({"mesh_min_neighbors": 0, "mesh_max_aspect_ratio": 5.0})
    good = _patch([0, 1, 2], [[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    thin = _patch([3, 4, 5], [[0, 0, 0], [10, 0, 0], [0, 0.5, 0]])
    assert filter_patches([good, thin], conf) == [good]


def _flat(ids, vertices):
    vertices = np.asarray(vertices, dtype=float)
    normal, _ = triangle_normal(vertices)
    return _patch(ids, vertices, normal)


def test_filter_patches_skips_own_pool_copy():
    conf = AppSettings({"mesh_min_neighbors": 3})
    fan = _fan([UP] * 6)
    new = fan[0]
    old = _patch([0, 1, 2], fan[0].vertices.copy())
    # the earlier copy of the same triangle is not a neighbour
    assert filter_patches([new], conf, pool=[old, fan[1], fan[5]]) == []
    conf = AppSettings({"mesh_min_neighbors": 2})
    assert filter_patches([new], conf, pool=[old, fan[1], fan[5]]) == [new]


def test_filter_patches_needs_coplanar_neighbours():
    # two corners on the wall y = 4, the third on the wall x = -4 close to
    # the corner: the normal is within 4 deg of the wall's
    bridge = _flat([0, 1, 2], [[0.1, 4.0, 2.6], [-0.7, 4.0, 1.0], [-4.0, 3.79, 2.5]])
    wall = [
        _flat([0, 1, 3], [[0.1, 4.0, 2.6], [-0.7, 4.0, 1.0], [0.9, 4.0, 1.4]]),
        _flat([0, 1, 4], [[0.1, 4.0, 2.6], [-0.7, 4.0, 1.0], [1.2, 4.0, 2.0]]),
        _flat([0, 1, 5], [[0.1, 4.0, 2.6], [-0.7, 4.0, 1.0], [0.6, 4.0, 0.8]]),
    ]
    angle = math.degrees(math.acos(abs(float(np.dot(bridge.normal, wall[0].normal)))))
    assert angle < 5.0
    assert filter_patches([bridge], AppSettings({}), pool=wall) == []
    loose = AppSettings({"mesh_coplanar_distance": 0.5})
    assert filter_patches([bridge], loose, pool=wall) == [bridge]

    # patches of the wall itself keep each other
    assert filter_patches(wall, AppSettings({"mesh_min_neighbors": 2})) == wall


def test_single_plane():
    a = _patch([0, 1, 2], [[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    b = _patch([1, 2, 3], [[1, 0, 0], [0, 1, 0], [1, 1, 0]])
    plane_of = {("point", 0): 7, ("point", 1): 7, ("point", 3): 8}
    assert single_plane([a, b], plane_of) == [a]
    assert single_plane([a, b], {}) == [a, b]


def test_room_mesh_stays_on_planes():
    conf = AppSettings(NOISE_FREE)
    log, scene = room_log(conf)
    patches = room_mesh(log, scene, conf).patches()
    assert len(patches) > 100
    planes = list(scene.planes.values())
    # landmarks keep 10 cm from every other plane, so a patch within the
    # coplanarity distance of a plane has all its corners on it
    tolerance = conf.MESH_COPLANAR_DISTANCE
    crossing = [
        p
        for p in patches
        if not any(
            np.abs(p.vertices @ plane.n - plane.d).max() < tolerance
            for plane in planes
        )
    ]
    assert crossing == []
