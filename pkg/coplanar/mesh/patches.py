from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple, cast

import numpy as np

from coplanar.conf import AppSettings, app_settings
from coplanar.core.typing import LandmarkRef, Matrix, Vector

from .cdt import Mesh2D

Triple = Tuple[LandmarkRef, LandmarkRef, LandmarkRef]


def triangle_normal(vertices: Matrix) -> tuple[Vector, float]:
    """
    Unit normal and area of a triangle; the normal is zero when degenerate.
    """
    a, b, c = vertices
    n = np.cross(b - a, c - a)
    norm = float(np.linalg.norm(n))
    if norm == 0.0:
        return np.zeros(3), 0.0
    return n / norm, 0.5 * norm


@dataclass(eq=False)
class MeshPatch:
    """
    Triangle over three landmark vertices with its cached 3D corners and
    unit normal. Frozen patches keep their geometry.
    """

    refs: Triple
    vertices: Matrix
    normal: Vector
    source_frame: int = -1
    frozen: bool = False
    area: float = field(default=0.0)

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(3, 3)
        if not self.area:
            _, self.area = triangle_normal(self.vertices)

    @property
    def key(self) -> tuple[LandmarkRef, ...]:
        return tuple(sorted(self.refs))

    @property
    def centroid(self) -> Vector:
        return self.vertices.mean(axis=0)

    def edge_lengths(self) -> Vector:
        v = self.vertices
        return np.array(
            [
                np.linalg.norm(v[1] - v[0]),
                np.linalg.norm(v[2] - v[1]),
                np.linalg.norm(v[0] - v[2]),
            ]
        )

    def aspect_ratio(self) -> float:
        """
        Longest edge over the shortest altitude.
        """
        if self.area <= 0.0:
            return math.inf
        lengths = self.edge_lengths()
        shortest_altitude = 2.0 * self.area / float(lengths.max())
        return float(lengths.max()) / shortest_altitude

    def min_angle(self) -> float:
        """
        Smallest interior angle in degrees.
        """
        v = self.vertices
        angles = []
        for i in range(3):
            a, b = v[(i + 1) % 3] - v[i], v[(i + 2) % 3] - v[i]
            na, nb = np.linalg.norm(a), np.linalg.norm(b)
            if na == 0.0 or nb == 0.0:
                return 0.0
            c = float(np.dot(a, b) / (na * nb))
            angles.append(math.degrees(math.acos(min(1.0, max(-1.0, c)))))
        return min(angles)

    def refresh(self, positions: Mapping[LandmarkRef, Optional[Vector]]) -> bool:
        """
        Recompute corners and normal from updated landmark positions, keeping
        the normal on the same side. Frozen patches and patches with a
        missing or degenerate vertex are left as they are.

        Returns:
            bool: True if the patch was updated
        """
        if self.frozen:
            return False
        corners = [positions.get(ref) for ref in self.refs]
        if any(c is None for c in corners):
            return False
        vertices = np.array(corners, dtype=float)
        normal, area = triangle_normal(vertices)
        if area <= 0.0:
            return False
        if np.dot(normal, self.normal) < 0.0:
            normal = -normal
        self.vertices, self.normal, self.area = vertices, normal, area
        return True


def lift_mesh(
    mesh: Mesh2D,
    positions: Mapping[LandmarkRef, Optional[Vector]],
    camera_center: Vector,
    frame_id: int = -1,
    min_area: float = 1e-10,
) -> list[MeshPatch]:
    """
    Turn 2D triangles into 3D patches over the landmark positions. Triangles
    with a vertex lacking a landmark estimate, or with an area below
    ``min_area``, are skipped. Normals face the observing camera.

    Args:
        mesh (Mesh2D): Triangulation of one frame's observations
        positions (Mapping): World position per landmark reference
        camera_center (Vector): World position of the observing camera
        frame_id (int, optional): Source keyframe id
        min_area (float, optional): Minimum area in square meters

    Returns:
        list: Patches
    """
    patches = []
    for tri in mesh.triangles:
        refs = [mesh.refs[i] for i in tri]
        corners = [positions.get(ref) if ref else None for ref in refs]
        if any(c is None for c in corners):
            continue
        vertices = np.array(corners, dtype=float)
        normal, area = triangle_normal(vertices)
        if area <= min_area:
            continue
        if np.dot(normal, camera_center - vertices.mean(axis=0)) < 0.0:
            normal = -normal
        key = cast(Triple, tuple(refs))
        patches.append(MeshPatch(key, vertices, normal, frame_id, area=area))
    return patches


def adjacency(patches: Sequence[MeshPatch]) -> list[list[int]]:
    """
    Indices of the patches sharing an edge (two landmark refs) with each
    patch.
    """
    by_edge: dict[tuple[LandmarkRef, LandmarkRef], list[int]] = {}
    for i, patch in enumerate(patches):
        a, b, c = patch.key
        for edge in ((a, b), (a, c), (b, c)):
            by_edge.setdefault(edge, []).append(i)
    neighbors: list[set[int]] = [set() for _ in patches]
    for members in by_edge.values():
        for i in members:
            neighbors[i].update(j for j in members if j != i)
    return [sorted(n) for n in neighbors]


def coplanar(a: MeshPatch, b: MeshPatch, tolerance: float) -> bool:
    """
    Whether the corners of each patch lie within ``tolerance`` of the other
    patch's plane.
    """
    to_a = np.abs((b.vertices - a.vertices[0]) @ a.normal).max()
    to_b = np.abs((a.vertices - b.vertices[0]) @ b.normal).max()
    return bool(max(to_a, to_b) <= tolerance)


def filter_patches(
    patches: Sequence[MeshPatch],
    conf: AppSettings = app_settings,
    pool: Sequence[MeshPatch] = (),
) -> list[MeshPatch]:
    """
    Keep patches that have at least ``MESH_MIN_NEIGHBORS`` similar adjacent
    patches, an aspect ratio up to ``MESH_MAX_ASPECT_RATIO`` and no angle
    below ``MESH_MIN_ANGLE_DEG``. A neighbour is similar when its normal is
    within ``MESH_NORMAL_ANGLE_DEG`` and both patches lie within
    ``MESH_COPLANAR_DISTANCE`` of each other's plane.

    Args:
        patches (Sequence): Patches to filter
        conf (AppSettings, optional): Settings. Defaults to ``app_settings``.
        pool (Sequence, optional): Further patches counted as neighbours,
            such as the current window's mesh. Pool patches over the same
            three landmarks as a filtered patch are left out.

    Returns:
        list: Retained patches, in input order
    """
    keys = {p.key for p in patches}
    everything = list(patches) + [p for p in pool if p.key not in keys]
    neighbors = adjacency(everything)
    cos_limit = math.cos(math.radians(conf.MESH_NORMAL_ANGLE_DEG))
    tolerance = conf.MESH_COPLANAR_DISTANCE
    kept = []
    for i, patch in enumerate(patches):
        if patch.aspect_ratio() > conf.MESH_MAX_ASPECT_RATIO:
            continue
        if patch.min_angle() < conf.MESH_MIN_ANGLE_DEG:
            continue
        similar = 0
        for j in neighbors[i]:
            other = everything[j]
            if abs(float(np.dot(patch.normal, other.normal))) <= cos_limit:
                continue
            if coplanar(patch, other, tolerance):
                similar += 1
        if similar >= conf.MESH_MIN_NEIGHBORS:
            kept.append(patch)
    return kept


def single_plane(
    patches: Sequence[MeshPatch], plane_of: Mapping[LandmarkRef, int]
) -> list[MeshPatch]:
    """
    Drop patches whose vertices are associated with different planes.
    Vertices without a plane do not count.
    """
    kept = []
    for patch in patches:
        planes = {plane_of[ref] for ref in patch.refs if ref in plane_of}
        if len(planes) <= 1:
            kept.append(patch)
    return kept
