"""
Plane lifecycle inside the window: association of landmarks to new
planes, removal of landmarks drifting off their plane, and culling of
planes with too little support.
"""
from __future__ import annotations

import logging
from typing import TYPE_CHECKING

from coplanar.structure.detection import associate_landmarks, dedup_planes

from .window import SlidingWindow

if TYPE_CHECKING:  # pragma: no cover
    from coplanar.mesh.fusion import MeshMap
    from coplanar.structure.detection import PlaneCandidate

logger = logging.getLogger(__name__)


def add_planes(window: SlidingWindow, candidates: list[PlaneCandidate]) -> list[int]:
    """
    Add detected planes that are not yet in the window and associate free
    landmarks to all window planes. Retired landmarks are associated from
    their last position so that they keep supporting the plane.

    Returns:
        list: Ids of the planes added
    """
    conf = window.conf
    existing = [p.param for p in window.planes.values()]
    added = []
    for candidate in dedup_planes(candidates, existing, conf):
        plane_id = window.add_plane(candidate.param, candidate.kind, candidate.score)
        added.append(plane_id)
    if added:
        logger.debug("Added planes %s", added)

    points = {
        p.point_id: window.point_position(p)
        for p in window.optimizable_points()
        if p.plane_id is None
    }
    lines = {
        ln.line_id: window.line_endpoints(ln)
        for ln in window.optimizable_lines()
        if ln.plane_id is None
    }
    retired_points, retired_lines = window.retired_landmarks()
    for p in retired_points:
        if p.plane_id is None:
            points[p.point_id] = p.position
    for ln in retired_lines:
        if ln.plane_id is None:
            lines[ln.line_id] = ln.endpoints
    planes = {pid: plane.param for pid, plane in window.planes.items()}
    points_to, lines_to = associate_landmarks(planes, points, lines, conf)
    for point_id, plane_id in points_to.items():
        window.points[point_id].plane_id = plane_id
    for line_id, plane_id in lines_to.items():
        window.lines[line_id].plane_id = plane_id
    return added


def deassociate_outliers(
    window: SlidingWindow, mesh: MeshMap | None = None
) -> list[tuple[str, int]]:
    """
    Remove the plane association of landmarks whose distance to their plane
    exceeds ``PLANE_DEASSOCIATION_DISTANCE``; for lines the farther endpoint
    is used. Mesh patches using these landmarks as vertices are removed.

    Args:
        window (SlidingWindow): Sliding window, after optimization
        mesh (MeshMap, optional): Mesh to prune. Defaults to None.

    Returns:
        list: ``("point", id)`` / ``("line", id)`` of the released landmarks
    """
    limit = window.conf.PLANE_DEASSOCIATION_DISTANCE
    released: list[tuple[str, int]] = []
    for point in window.active_points():
        if point.plane_id is None or point.plane_id not in window.planes:
            continue
        f = window.point_position(point)
        if f is None:
            continue
        if abs(window.planes[point.plane_id].param.distance(f)) > limit:
            point.plane_id = None
            released.append(("point", point.point_id))
    for line in window.active_lines():
        if line.plane_id is None or line.plane_id not in window.planes:
            continue
        endpoints = window.line_endpoints(line)
        if endpoints is None:
            continue
        plane = window.planes[line.plane_id].param
        if max(abs(plane.distance(x)) for x in endpoints) > limit:
            line.plane_id = None
            released.append(("line", line.line_id))

    if mesh is not None:
        for ref in released:
            mesh.remove_landmark(ref)
    if released:
        logger.debug("Released %d landmarks from their planes", len(released))
    return released


def cull_planes(window: SlidingWindow) -> list[int]:
    """
    Remove planes supported by fewer than ``PLANE_CULL_THRESHOLD`` points
    and lines, counting the associated active landmarks and the retired
    ones that left the window associated (see
    :meth:`SlidingWindow.support`). Landmarks themselves are never removed.

    Returns:
        list: Ids of the culled planes
    """
    threshold = window.conf.PLANE_CULL_THRESHOLD
    culled = []
    for plane_id in list(window.planes):
        if window.support(plane_id) < threshold:
            window.remove_plane(plane_id)
            culled.append(plane_id)
    if culled:
        logger.debug("Culled planes %s", culled)
    return culled
