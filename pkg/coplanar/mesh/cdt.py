"""
2D constrained Delaunay triangulation. An unconstrained Delaunay seed is
built with qhull, constraint edges are recovered by edge flips and a final
Lawson pass restores the Delaunay property wherever no constraint forbids
it.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.spatial

from coplanar.core.exceptions import DegenerateInput
from coplanar.core.typing import LandmarkRef, Matrix

logger = logging.getLogger(__name__)

SNAP = 1e-9
EPS = 1e-15

Edge = tuple[int, int]


def orient(p: Sequence[float], q: Sequence[float], r: Sequence[float]) -> float:
    """
    Twice the signed area of ``pqr``; positive for counter-clockwise.
    """
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def in_circle(
    a: Sequence[float], b: Sequence[float], c: Sequence[float], d: Sequence[float]
) -> float:
    """
    Positive when ``d`` lies inside the circumcircle of the counter-clockwise
    triangle ``abc``.
    """
    m = np.array(
        [
            [a[0] - d[0], a[1] - d[1], (a[0] - d[0]) ** 2 + (a[1] - d[1]) ** 2],
            [b[0] - d[0], b[1] - d[1], (b[0] - d[0]) ** 2 + (b[1] - d[1]) ** 2],
            [c[0] - d[0], c[1] - d[1], (c[0] - d[0]) ** 2 + (c[1] - d[1]) ** 2],
        ]
    )
    return float(np.linalg.det(m))


def _key(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass
class Mesh2D:
    """
    Triangulation of normalized-plane observations. ``refs`` names the
    landmark behind each vertex; vertices created where constraint segments
    cross have no landmark.
    """

    vertices: Matrix = field(default_factory=lambda: np.zeros((0, 2)))
    refs: list[Optional[LandmarkRef]] = field(default_factory=list)
    constraints: list[Edge] = field(default_factory=list)
    triangles: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), int))

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    def edges(self) -> set[Edge]:
        out = set()
        for a, b, c in self.triangles:
            out.update({_key(a, b), _key(b, c), _key(c, a)})
        return out

    def has_edge(self, u: int, v: int) -> bool:
        return _key(u, v) in self.edges()


class _Triangulation:
    """
    Mutable triangle soup with a directed edge index, enough to flip edges.
    """

    def __init__(self, points: Matrix, simplices: np.ndarray) -> None:
        self.points = points
        self.triangles: dict[int, tuple[int, int, int]] = {}
        self.edge_map: dict[Edge, int] = {}
        self._next = 0
        for a, b, c in simplices:
            a, b, c = int(a), int(b), int(c)
            if orient(points[a], points[b], points[c]) < 0:
                b, c = c, b
            self._add((a, b, c))

    def _add(self, tri: tuple[int, int, int]) -> None:
        tid = self._next
        self._next += 1
        self.triangles[tid] = tri
        a, b, c = tri
        for e in ((a, b), (b, c), (c, a)):
            self.edge_map[e] = tid

    def _remove(self, tid: int) -> None:
        a, b, c = self.triangles.pop(tid)
        for e in ((a, b), (b, c), (c, a)):
            del self.edge_map[e]

    def opposite(self, u: int, v: int) -> int | None:
        """
        Vertex opposite the directed edge ``(u, v)``.
        """
        tid = self.edge_map.get((u, v))
        if tid is None:
            return None
        tri = self.triangles[tid]
        return next(w for w in tri if w != u and w != v)

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edge_map or (v, u) in self.edge_map

    def edges(self) -> list[Edge]:
        return sorted({_key(u, v) for u, v in self.edge_map})

    def flippable(self, a: int, b: int) -> tuple[int, int] | None:
        """
        Opposite vertices ``(c, d)`` of edge ``ab`` if its two triangles form
        a strictly convex quadrilateral.
        """
        c, d = self.opposite(a, b), self.opposite(b, a)
        if c is None or d is None:
            return None
        p = self.points
        if orient(p[a], p[d], p[c]) > EPS and orient(p[d], p[b], p[c]) > EPS:
            return c, d
        return None

    def flip(self, a: int, b: int, c: int, d: int) -> None:
        self._remove(self.edge_map[(a, b)])
        self._remove(self.edge_map[(b, a)])
        self._add((a, d, c))
        self._add((d, b, c))

    def array(self) -> np.ndarray:
        if not self.triangles:
            return np.zeros((0, 3), dtype=int)
        return np.array([self.triangles[t] for t in sorted(self.triangles)], dtype=int)


def _crosses(p: Matrix, a: int, b: int, u: int, v: int) -> bool:
    """
    Proper intersection of segments ``ab`` and ``uv`` (no shared endpoint).
    """
    if len({a, b, u, v}) < 4:
        return False
    o1 = orient(p[u], p[v], p[a])
    o2 = orient(p[u], p[v], p[b])
    o3 = orient(p[a], p[b], p[u])
    o4 = orient(p[a], p[b], p[v])
    return o1 * o2 < 0.0 and o3 * o4 < 0.0


def _crossing_mask(p: Matrix, edges: np.ndarray, u: int, v: int) -> np.ndarray:
    """
    Vectorized :func:`_crosses` of every ``(a, b)`` row of ``edges`` with
    ``uv``.
    """
    a, b = edges[:, 0], edges[:, 1]
    distinct = (a != u) & (a != v) & (b != u) & (b != v)
    pu, pv, pa, pb = p[u], p[v], p[a], p[b]
    d, e = pv - pu, pb - pa
    o1 = d[0] * (pa[:, 1] - pu[1]) - d[1] * (pa[:, 0] - pu[0])
    o2 = d[0] * (pb[:, 1] - pu[1]) - d[1] * (pb[:, 0] - pu[0])
    o3 = e[:, 0] * (pu[1] - pa[:, 1]) - e[:, 1] * (pu[0] - pa[:, 0])
    o4 = e[:, 0] * (pv[1] - pa[:, 1]) - e[:, 1] * (pv[0] - pa[:, 0])
    return distinct & (o1 * o2 < 0.0) & (o3 * o4 < 0.0)


def _on_segment(p: Matrix, u: int, v: int) -> np.ndarray:
    """
    Indices of the vertices lying strictly inside segment ``uv``.
    """
    d = p[v] - p[u]
    length2 = float(np.dot(d, d))
    if length2 == 0.0:
        return np.zeros(0, dtype=int)
    rel = p - p[u]
    area = d[0] * rel[:, 1] - d[1] * rel[:, 0]
    t = rel @ d / length2
    mask = (np.abs(area) <= SNAP * np.sqrt(length2)) & (t > 0.0) & (t < 1.0)
    mask[[u, v]] = False
    return np.flatnonzero(mask)


def split_constraints(
    points: Matrix, refs: list[Optional[LandmarkRef]], segments: Sequence[Edge]
) -> tuple[Matrix, list[Optional[LandmarkRef]], list[Edge]]:
    """
    Split constraint segments at the vertices lying on them and at their
    mutual crossings, adding a vertex per crossing.
    """
    pts = [np.asarray(x, dtype=float) for x in points]
    refs = list(refs)
    pending = deque(_key(u, v) for u, v in segments if u != v)
    done: set[Edge] = set()
    while pending:
        u, v = pending.popleft()
        if (u, v) in done:
            continue
        p = np.array(pts)
        on = _on_segment(p, u, v)
        if len(on):
            w = int(on[np.argmin(np.sum((p[on] - p[u]) ** 2, axis=1))])
            pending.extend([_key(u, w), _key(w, v)])
            continue
        crossing = next(
            ((a, b) for a, b in list(done) + list(pending) if _crosses(p, a, b, u, v)),
            None,
        )
        if crossing is None:
            done.add((u, v))
            continue
        a, b = crossing
        denom = orient(p[u], p[v], p[a]) - orient(p[u], p[v], p[b])
        t = orient(p[u], p[v], p[a]) / denom
        x = np.round((p[a] + t * (p[b] - p[a])) / SNAP) * SNAP
        pts.append(x)
        refs.append(None)
        w = len(pts) - 1
        done.discard((a, b))
        if (a, b) in pending:
            pending.remove((a, b))
        pending.extend([_key(u, w), _key(w, v), _key(a, w), _key(w, b)])
    return np.array(pts), refs, sorted(done)


def _seed(points: Matrix) -> np.ndarray:
    if len(points) < 3:
        raise DegenerateInput("At least three vertices are needed.")
    centered = points - points.mean(axis=0)
    if np.linalg.matrix_rank(centered, tol=SNAP) < 2:
        raise DegenerateInput("All vertices are collinear.")
    try:
        return scipy.spatial.Delaunay(points).simplices
    except scipy.spatial.QhullError as e:
        raise DegenerateInput(str(e)) from e


def _recover(tri: _Triangulation, u: int, v: int) -> None:
    """
    Flip edges crossing ``uv`` until ``uv`` is an edge of the triangulation.
    """
    p = tri.points
    edges = np.array(tri.edges(), dtype=int).reshape(-1, 2)
    crossing = edges[_crossing_mask(p, edges, u, v)].tolist()
    queue = deque((a, b) for a, b in crossing)
    stalled = 0
    while queue and stalled <= len(queue):
        a, b = queue.popleft()
        if not tri.has_edge(a, b):
            continue
        if (a, b) not in tri.edge_map:
            a, b = b, a
        flip = tri.flippable(a, b)
        if flip is None:
            queue.append((a, b))
            stalled += 1
            continue
        c, d = flip
        tri.flip(a, b, c, d)
        stalled = 0
        if _crosses(p, c, d, u, v):
            queue.append((c, d))
    if not tri.has_edge(u, v):
        logger.warning("Constraint edge (%d, %d) could not be recovered", u, v)


def _legalize(tri: _Triangulation, constraints: set[Edge]) -> None:
    """
    Lawson flips of every non-constraint edge failing the empty circle test.
    """
    p = tri.points
    stack = [e for e in tri.edges() if e not in constraints]
    while stack:
        a, b = stack.pop()
        if _key(a, b) in constraints or not tri.has_edge(a, b):
            continue
        if (a, b) not in tri.edge_map:
            a, b = b, a
        flip = tri.flippable(a, b)
        if flip is None:
            continue
        c, d = flip
        if in_circle(p[a], p[b], p[c], p[d]) <= EPS:
            continue
        tri.flip(a, b, c, d)
        stack.extend([_key(a, d), _key(d, b), _key(b, c), _key(c, a)])


def cdt_2d(
    points: Matrix,
    segments: Sequence[Edge] = (),
    refs: Sequence[Optional[LandmarkRef]] | None = None,
) -> Mesh2D:
    """
    Constrained Delaunay triangulation of 2D points.

    Vertices are snapped to a 1e-9 grid and merged when they coincide;
    constraint segments are split where they cross each other or pass
    through a vertex.

    Args:
        points (Matrix): ``(N, 2)`` vertex coordinates
        segments (Sequence, optional): Constraint edges as vertex index pairs
        refs (Sequence, optional): Landmark reference per vertex

    Returns:
        Mesh2D: The triangulation, empty if the vertices are degenerate
    """
    points = np.round(np.asarray(points, dtype=float).reshape(-1, 2) / SNAP) * SNAP
    refs = list(refs) if refs is not None else [None] * len(points)

    # Merge coincident vertices, keeping the first.
    unique, index, inverse = np.unique(
        points, axis=0, return_index=True, return_inverse=True
    )
    order = np.argsort(index)
    remap = np.empty(len(order), dtype=int)
    remap[order] = np.arange(len(order))
    points = unique[order]
    vertex_of = remap[np.asarray(inverse).reshape(-1)]
    refs = [refs[i] for i in np.sort(index)]
    segments = [(int(vertex_of[u]), int(vertex_of[v])) for u, v in segments]

    points, refs, constraints = split_constraints(points, refs, segments)
    try:
        simplices = _seed(points)
    except DegenerateInput as e:
        logger.debug("Empty mesh: %s", e)
        return Mesh2D(points, refs)

    tri = _Triangulation(points, simplices)
    for u, v in constraints:
        if not tri.has_edge(u, v):
            _recover(tri, u, v)
    _legalize(tri, set(constraints))
    return Mesh2D(points, refs, constraints, tri.array())
