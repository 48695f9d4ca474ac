"""
Non-iterative plane detection. Horizontal planes are peaks of a height
histogram, vertical planes are peaks of an azimuth/distance histogram,
both voted by mesh patch vertices and by the endpoints of spatial lines.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

from coplanar.conf import AppSettings, app_settings
from coplanar.core.typing import LandmarkRef, Segment, Vector
from coplanar.core.utils import normalized
from coplanar.geometry.lines import line_direction_angle
from coplanar.geometry.planes import PlaneParam

from .histograms import AzimuthDistanceHistogram, HeightHistogram

if TYPE_CHECKING:  # pragma: no cover
    from coplanar.mesh.patches import MeshPatch

logger = logging.getLogger(__name__)

HORIZONTAL = "horizontal"
VERTICAL = "vertical"


@dataclass
class PlaneCandidate:
    kind: str
    param: PlaneParam
    score: float
    patch_keys: list[tuple[LandmarkRef, ...]] = field(default_factory=list)
    point_ids: list[int] = field(default_factory=list)
    line_ids: list[int] = field(default_factory=list)


def gravity_frame(gravity_dir: Vector) -> tuple[Vector, Vector, Vector]:
    """
    Up direction and two horizontal axes ``(e1, e2)`` with
    ``e1 x e2 = up``. For gravity along ``-z`` they are the world x and y
    axes.
    """
    up = -normalized(gravity_dir)
    axis = np.eye(3)[0] if abs(up[0]) < 0.9 else np.eye(3)[1]
    e1 = normalized(axis - np.dot(axis, up) * up)
    e2 = np.cross(up, e1)
    return up, e1, e2


def _point_line_distance(x: Vector, a: Vector, direction: Vector) -> float:
    return float(np.linalg.norm(np.cross(x - a, direction)))


def merge_lines(
    lines: Mapping[int, Segment], conf: AppSettings = app_settings
) -> list[list[int]]:
    """
    Group lines that are the same straight line: direction angle below
    ``MERGE_ANGLE_DEG`` and every endpoint within ``MERGE_DISTANCE`` of the
    other line. Groups are the connected components of that relation.

    Args:
        lines (Mapping): World endpoints per line id
        conf (AppSettings, optional): Settings. Defaults to ``app_settings``.

    Returns:
        list: Sorted groups of line ids, ordered by their first id
    """
    ids = sorted(lines)
    n = len(ids)
    if not n:
        return []
    segments = [(np.asarray(lines[i][0]), np.asarray(lines[i][1])) for i in ids]
    directions = [normalized(e - s) for s, e in segments]
    max_angle = math.radians(conf.MERGE_ANGLE_DEG)
    rows, cols = [], []
    for a in range(n):
        for b in range(a + 1, n):
            if line_direction_angle(directions[a], directions[b]) >= max_angle:
                continue
            sa, ea = segments[a]
            sb, eb = segments[b]
            distances = [
                _point_line_distance(sb, sa, directions[a]),
                _point_line_distance(eb, sa, directions[a]),
                _point_line_distance(sa, sb, directions[b]),
                _point_line_distance(ea, sb, directions[b]),
            ]
            if max(distances) < conf.MERGE_DISTANCE:
                rows.append(a)
                cols.append(b)
    graph = scipy.sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = scipy.sparse.csgraph.connected_components(graph, directed=False)
    groups: dict[int, list[int]] = {}
    for index, label in enumerate(labels):
        groups.setdefault(int(label), []).append(ids[index])
    return sorted(groups.values(), key=lambda g: g[0])


def representative_lines(
    lines: Mapping[int, Segment], conf: AppSettings = app_settings
) -> dict[int, Segment]:
    """
    One line per merged group, the longest one (lowest id on ties).
    """
    out = {}
    for group in merge_lines(lines, conf):
        best = max(
            group,
            key=lambda i: (
                float(np.linalg.norm(np.asarray(lines[i][1]) - lines[i][0])),
                -i,
            ),
        )
        out[best] = lines[best]
    return out


def _unique_vertices(
    patches: Iterable[MeshPatch],
) -> dict[LandmarkRef, list[tuple[Vector, Vector]]]:
    """
    Patch vertex positions keyed by landmark reference, with the normals of
    the patches they belong to.
    """
    vertices: dict[LandmarkRef, list[tuple[Vector, Vector]]] = {}
    for patch in sorted(patches, key=lambda p: p.key):
        for ref, x in zip(patch.refs, patch.vertices):
            vertices.setdefault(ref, []).append((np.asarray(x), patch.normal))
    return vertices


def _supporting(sources: Sequence[Any], votes: Sequence[int]) -> set[LandmarkRef]:
    return {sources[k] for k in votes if sources[k] is not None}


def _candidate(
    kind: str,
    param: PlaneParam,
    score: float,
    support: set[LandmarkRef],
    patches: Sequence[MeshPatch],
) -> PlaneCandidate:
    point_ids = sorted(ref[1] for ref in support if ref[0] == "point")
    line_ids = sorted({ref[1] for ref in support if ref[0] != "point"})
    patch_keys = sorted(p.key for p in patches if any(r in support for r in p.refs))
    return PlaneCandidate(kind, param, score, patch_keys, point_ids, line_ids)


def height_histogram(
    patches: Sequence[MeshPatch],
    lines: Mapping[int, Segment],
    gravity_dir: Vector,
    conf: AppSettings = app_settings,
) -> HeightHistogram:
    """
    Heights of the vertices of patches facing up or down (weight 1) and of
    the endpoints of horizontal lines (weight ``LINE_VOTE_WEIGHT``).
    """
    up, _, _ = gravity_frame(gravity_dir)
    gate = math.cos(math.radians(conf.GRAVITY_GATE_DEG))
    hist = HeightHistogram(
        conf.HEIGHT_BIN,
        conf.HEIGHT_RANGE,
        conf.HISTOGRAM_SIGMA_BINS,
        conf.HISTOGRAM_TRUNCATE,
    )
    qualifying = [p for p in patches if abs(float(np.dot(p.normal, up))) > gate]
    for ref, entries in sorted(_unique_vertices(qualifying).items()):
        hist.add(float(np.dot(entries[0][0], up)), 1.0, ref)

    sin_gate = math.sin(math.radians(conf.GRAVITY_GATE_DEG))
    for line_id, (s, e) in sorted(representative_lines(lines, conf).items()):
        direction = normalized(np.asarray(e) - s)
        if abs(float(np.dot(direction, up))) >= sin_gate:
            continue
        for x in (s, e):
            hist.add(float(np.dot(x, up)), conf.LINE_VOTE_WEIGHT, ("line", line_id))
    return hist


def detect_horizontal_planes(
    patches: Sequence[MeshPatch],
    lines: Mapping[int, Segment],
    gravity_dir: Vector,
    conf: AppSettings = app_settings,
    histogram: HeightHistogram | None = None,
) -> list[PlaneCandidate]:
    """
    Detect horizontal planes as smoothed height histogram peaks reaching
    ``PLANE_SCORE_THRESHOLD``. The normal points up.

    Args:
        patches (Sequence): Mesh patches
        lines (Mapping): World endpoints per line id
        gravity_dir (Vector): Unit gravity direction
        conf (AppSettings, optional): Settings. Defaults to ``app_settings``.
        histogram (HeightHistogram, optional): Prebuilt histogram

    Returns:
        list: Plane candidates, in-batch duplicates removed
    """
    up, _, _ = gravity_frame(gravity_dir)
    hist = histogram or height_histogram(patches, lines, gravity_dir, conf)
    smoothed = hist.smoothed()
    candidates: list[PlaneCandidate] = []
    for index in hist.peaks(conf.PLANE_SCORE_THRESHOLD):
        height = hist.refine(index)
        support = _supporting(hist.sources, hist.votes_near(index))
        param = PlaneParam.from_normal(up, height)
        candidates.append(
            _candidate(HORIZONTAL, param, float(smoothed[index]), support, patches)
        )
    logger.debug("Horizontal plane peaks: %s", [c.param.d for c in candidates])
    return dedup_planes(candidates, [], conf)


def azimuth_histogram(
    patches: Sequence[MeshPatch],
    lines: Mapping[int, Segment],
    gravity_dir: Vector,
    conf: AppSettings = app_settings,
) -> AzimuthDistanceHistogram:
    """
    Votes of the vertices of patches with a horizontal normal, and of the
    endpoints of lines. A line that is not parallel to gravity votes for
    the vertical plane containing it; a gravity-parallel line votes in
    every azimuth column at its projected distance.
    """
    up, e1, e2 = gravity_frame(gravity_dir)
    sin_gate = math.sin(math.radians(conf.GRAVITY_GATE_DEG))
    cos_gate = math.cos(math.radians(conf.GRAVITY_GATE_DEG))
    hist = AzimuthDistanceHistogram(
        conf.AZIMUTH_BIN_DEG,
        conf.DISTANCE_BIN,
        conf.DISTANCE_RANGE,
        conf.HISTOGRAM_SIGMA_BINS,
        conf.HISTOGRAM_TRUNCATE,
    )

    def vote(normal: Vector, x: Vector, weight: float, source: object) -> None:
        distance = float(np.dot(normal, x))
        theta = math.atan2(float(np.dot(normal, e2)), float(np.dot(normal, e1)))
        if distance < 0.0:
            theta, distance = theta + math.pi, -distance
        hist.add(theta % (2.0 * math.pi), distance, weight, source)

    qualifying = [p for p in patches if abs(float(np.dot(p.normal, up))) < sin_gate]
    for ref, entries in sorted(_unique_vertices(qualifying).items()):
        x = entries[0][0]
        total = np.zeros(3)
        for _, n in entries:
            h = n - np.dot(n, up) * up
            total += h if np.dot(h, x) >= 0.0 else -h
        if np.linalg.norm(total) > 0.0:
            vote(normalized(total), x, 1.0, ref)

    weight = conf.LINE_VOTE_WEIGHT
    for line_id, (s, e) in sorted(representative_lines(lines, conf).items()):
        s, e = np.asarray(s), np.asarray(e)
        direction = normalized(e - s)
        source = ("line", line_id)
        if abs(float(np.dot(direction, up))) < cos_gate:
            normal = normalized(np.cross(-up, direction))
            for x in (s, e):
                vote(normal, x, weight, source)
            continue
        for i, theta in enumerate(hist.thetas):
            normal = math.cos(theta) * e1 + math.sin(theta) * e2
            for x in (s, e):
                distance = float(np.dot(normal, x))
                if distance >= 0.0:
                    hist.add_column(i, distance, weight, source)
    return hist


def detect_vertical_planes(
    patches: Sequence[MeshPatch],
    lines: Mapping[int, Segment],
    gravity_dir: Vector,
    conf: AppSettings = app_settings,
    histogram: AzimuthDistanceHistogram | None = None,
) -> list[PlaneCandidate]:
    """
    Detect vertical planes as smoothed azimuth/distance histogram peaks
    reaching ``PLANE_SCORE_THRESHOLD``, with normal
    ``cos(theta) e1 + sin(theta) e2`` in the gravity aligned frame.
    """
    _, e1, e2 = gravity_frame(gravity_dir)
    hist = histogram or azimuth_histogram(patches, lines, gravity_dir, conf)
    smoothed = hist.smoothed()
    candidates: list[PlaneCandidate] = []
    for cell in hist.peaks(conf.PLANE_SCORE_THRESHOLD):
        theta, distance = hist.refine(cell)
        normal = math.cos(theta) * e1 + math.sin(theta) * e2
        support = _supporting(hist.sources, hist.votes_near(cell))
        param = PlaneParam.from_normal(normal, distance)
        candidates.append(
            _candidate(VERTICAL, param, float(smoothed[cell]), support, patches)
        )
    logger.debug(
        "Vertical plane peaks: %s",
        [(c.param.n.round(3).tolist(), round(c.param.d, 3)) for c in candidates],
    )
    return dedup_planes(candidates, [], conf)


def same_plane(
    a: PlaneParam, b: PlaneParam, max_angle: float, max_distance: float
) -> bool:
    """
    Whether two planes coincide within the gates, regardless of the sign
    of their normals.
    """
    n, d = b.n, b.d
    if float(np.dot(a.n, n)) < 0.0:
        n, d = -n, -d
    angle = math.acos(min(1.0, float(np.dot(a.n, n))))
    return angle < max_angle and abs(a.d - d) < max_distance


def dedup_planes(
    candidates: Sequence[PlaneCandidate],
    existing: Sequence[PlaneParam],
    conf: AppSettings = app_settings,
) -> list[PlaneCandidate]:
    """
    Drop candidates matching an existing plane, or an earlier candidate, within
    ``DEDUP_ANGLE_DEG`` and ``DEDUP_DISTANCE``. Higher scores are kept first.

    Returns:
        list: New planes only
    """
    max_angle = math.radians(conf.DEDUP_ANGLE_DEG)
    kept: list[PlaneCandidate] = []
    known = list(existing)
    for candidate in sorted(candidates, key=lambda c: -c.score):
        if any(
            same_plane(p, candidate.param, max_angle, conf.DEDUP_DISTANCE)
            for p in known
        ):
            continue
        kept.append(candidate)
        known.append(candidate.param)
    return kept


def associate_landmarks(
    planes: Mapping[int, PlaneParam],
    points: Mapping[int, Vector | None],
    lines: Mapping[int, Segment | None],
    conf: AppSettings = app_settings,
) -> tuple[dict[int, int], dict[int, int]]:
    """
    Assign landmarks to their nearest plane. A point qualifies when its
    distance is below ``PLANE_ASSOCIATION_DISTANCE``; a line when both
    endpoints do and its direction is within ``PLANE_ASSOCIATION_ANGLE_DEG``
    of the plane. Near-equal distances go to the lower plane id.

    Returns:
        tuple: ``point id -> plane id`` and ``line id -> plane id``
    """
    limit = conf.PLANE_ASSOCIATION_DISTANCE
    sin_angle = math.sin(math.radians(conf.PLANE_ASSOCIATION_ANGLE_DEG))
    plane_ids = sorted(planes)

    def nearest(distances: list[tuple[float, int]]) -> int | None:
        best: tuple[float, int] | None = None
        for distance, plane_id in distances:
            if distance >= limit:
                continue
            if best is None or distance < best[0] - 1e-9:
                best = (distance, plane_id)
        return None if best is None else best[1]

    point_map: dict[int, int] = {}
    for point_id, f in points.items():
        if f is None:
            continue
        found = nearest([(abs(planes[i].distance(f)), i) for i in plane_ids])
        if found is not None:
            point_map[point_id] = found

    line_map: dict[int, int] = {}
    for line_id, segment in lines.items():
        if segment is None:
            continue
        s, e = np.asarray(segment[0]), np.asarray(segment[1])
        direction = normalized(e - s)
        distances = []
        for i in plane_ids:
            plane = planes[i]
            if abs(float(np.dot(plane.n, direction))) >= sin_angle:
                continue
            distances.append((max(abs(plane.distance(s)), abs(plane.distance(e))), i))
        found = nearest(distances)
        if found is not None:
            line_map[line_id] = found
    return point_map, line_map
