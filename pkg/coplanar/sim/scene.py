"""
Synthetic square room: four walls and a floor carrying point landmarks and
line segments that lie exactly on them.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from coplanar.conf import AppSettings, app_settings
from coplanar.core.typing import Segment, Vector
from coplanar.geometry.planes import PlaneParam

logger = logging.getLogger(__name__)

MARGIN = 0.1
# Per wall: vertical, horizontal and diagonal segments, cycled.
LINE_PATTERN = ("vertical", "horizontal", "vertical", "horizontal", "diagonal")


@dataclass
class SceneSpec:
    room_size: float
    wall_height: float
    planes: dict[str, PlaneParam]
    points: dict[int, Vector] = field(default_factory=dict)
    lines: dict[int, Segment] = field(default_factory=dict)
    point_planes: dict[int, str] = field(default_factory=dict)
    line_planes: dict[int, str] = field(default_factory=dict)

    @property
    def walls(self) -> list[str]:
        return [name for name in self.planes if name != "floor"]

    def counts(self) -> dict[str, tuple[int, int]]:
        """
        Point and line counts per plane.
        """
        return {
            name: (
                sum(1 for p in self.point_planes.values() if p == name),
                sum(1 for p in self.line_planes.values() if p == name),
            )
            for name in self.planes
        }


def room_planes(room_size: float) -> dict[str, PlaneParam]:
    """
    Floor at ``z = 0`` with an upward normal and four walls with outward
    normals, so every wall has ``d = room_size / 2``.
    """
    h = 0.5 * room_size
    return {
        "floor": PlaneParam.from_normal(np.array([0.0, 0.0, 1.0]), 0.0),
        "wall_x+": PlaneParam.from_normal(np.array([1.0, 0.0, 0.0]), h),
        "wall_y+": PlaneParam.from_normal(np.array([0.0, 1.0, 0.0]), h),
        "wall_x-": PlaneParam.from_normal(np.array([-1.0, 0.0, 0.0]), h),
        "wall_y-": PlaneParam.from_normal(np.array([0.0, -1.0, 0.0]), h),
    }


def _wall_frame(plane: PlaneParam) -> tuple[Vector, Vector]:
    """
    Wall origin (bottom centre) and horizontal in-wall axis.
    """
    origin = plane.n * plane.d
    axis = np.cross(np.array([0.0, 0.0, 1.0]), plane.n)
    return origin, axis


def _wall_point(plane: PlaneParam, s: float, z: float) -> Vector:
    origin, axis = _wall_frame(plane)
    return origin + s * axis + np.array([0.0, 0.0, z])


def _wall_segment(
    rng: np.random.Generator, plane: PlaneParam, kind: str, half: float, height: float
) -> Segment:
    length = rng.uniform(0.6, 1.5)
    lo, hi = -half + MARGIN, half - MARGIN
    if kind == "vertical":
        s = rng.uniform(lo, hi)
        z0 = rng.uniform(MARGIN, height - MARGIN - length)
        return _wall_point(plane, s, z0), _wall_point(plane, s, z0 + length)
    if kind == "horizontal":
        z = rng.uniform(MARGIN, height - MARGIN)
        s0 = rng.uniform(lo, hi - length)
        return _wall_point(plane, s0, z), _wall_point(plane, s0 + length, z)
    step = length / np.sqrt(2.0)
    s0 = rng.uniform(lo, hi - step)
    z0 = rng.uniform(MARGIN, height - MARGIN - step)
    return _wall_point(plane, s0, z0), _wall_point(plane, s0 + step, z0 + step)


def build_room_scene(
    seed: int = 0, conf: AppSettings = app_settings, **overrides: Any
) -> SceneSpec:
    """
    Build the room scene. Points are scattered uniformly on the walls and
    the floor, segments on the walls are vertical, horizontal or diagonal.

    Args:
        seed (int, optional): Random seed. Defaults to 0.
        conf (AppSettings, optional): Settings. Defaults to ``app_settings``.
        **overrides: ``room_size``, ``wall_height``, ``points_per_wall``,
            ``floor_points`` or ``lines_per_wall`` replacing the settings

    Returns:
        SceneSpec: The scene; ids are stable for a given seed
    """
    room_size = overrides.get("room_size", conf.ROOM_SIZE)
    height = overrides.get("wall_height", conf.WALL_HEIGHT)
    points_per_wall = overrides.get("points_per_wall", conf.POINTS_PER_WALL)
    floor_points = overrides.get("floor_points", conf.FLOOR_POINTS)
    lines_per_wall = overrides.get("lines_per_wall", conf.LINES_PER_WALL)
    unknown = set(overrides) - {
        "room_size",
        "wall_height",
        "points_per_wall",
        "floor_points",
        "lines_per_wall",
    }
    if unknown:
        raise TypeError(f"Unknown scene overrides: {sorted(unknown)}")

    rng = np.random.default_rng(seed)
    half = 0.5 * room_size
    scene = SceneSpec(room_size, height, room_planes(room_size))

    for name in scene.walls:
        plane = scene.planes[name]
        for _ in range(points_per_wall):
            s = rng.uniform(-half + MARGIN, half - MARGIN)
            z = rng.uniform(MARGIN, height - MARGIN)
            point_id = len(scene.points)
            scene.points[point_id] = _wall_point(plane, s, z)
            scene.point_planes[point_id] = name
    for _ in range(floor_points):
        x, y = rng.uniform(-half + MARGIN, half - MARGIN, size=2)
        point_id = len(scene.points)
        scene.points[point_id] = np.array([x, y, 0.0])
        scene.point_planes[point_id] = "floor"

    for name in scene.walls:
        plane = scene.planes[name]
        for k in range(lines_per_wall):
            kind = LINE_PATTERN[k % len(LINE_PATTERN)]
            line_id = len(scene.lines)
            scene.lines[line_id] = _wall_segment(rng, plane, kind, half, height)
            scene.line_planes[line_id] = name

    logger.debug(
        "Room scene: %d points, %d lines", len(scene.points), len(scene.lines)
    )
    return scene


def ground_truth_cloud(scene: SceneSpec, spacing: float = 0.02) -> np.ndarray:
    """
    Regular grid of points over the walls and the floor, used as the
    reference surface when evaluating meshes.
    """
    half = 0.5 * scene.room_size
    s = np.arange(-half, half + 0.5 * spacing, spacing)
    z = np.arange(0.0, scene.wall_height + 0.5 * spacing, spacing)
    clouds = []
    for name in scene.walls:
        origin, axis = _wall_frame(scene.planes[name])
        S, Z = np.meshgrid(s, z, indexing="ij")
        pts = origin + S.reshape(-1, 1) * axis + Z.reshape(-1, 1) * np.eye(3)[2]
        clouds.append(pts)
    X, Y = np.meshgrid(s, s, indexing="ij")
    clouds.append(np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)]))
    return np.vstack(clouds)
