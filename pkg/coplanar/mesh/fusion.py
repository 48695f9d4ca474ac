from __future__ import annotations

import logging
from typing import Iterable, Iterator, Mapping, Optional

from coplanar.core.typing import LandmarkRef, Vector

from .patches import MeshPatch

logger = logging.getLogger(__name__)

PatchKey = tuple[LandmarkRef, ...]


def vertex_matches(ref: LandmarkRef, landmark: LandmarkRef) -> bool:
    """
    Whether a patch vertex belongs to a ``("point", id)`` or ``("line", id)``
    landmark; line vertices are ``("line_start", id)`` and
    ``("line_end", id)``.
    """
    if landmark[0] == "line":
        return ref[0].startswith("line") and ref[1] == landmark[1]
    return ref == landmark


class MeshMap:
    """
    Mesh of the session, one patch per landmark triple.
    """

    def __init__(self) -> None:
        self._patches: dict[PatchKey, MeshPatch] = {}

    def __len__(self) -> int:
        return len(self._patches)

    def __iter__(self) -> Iterator[MeshPatch]:
        return iter(self._patches.values())

    def __contains__(self, key: object) -> bool:
        return key in self._patches

    def patches(self, active_only: bool = False) -> list[MeshPatch]:
        return [p for p in self._patches.values() if not (active_only and p.frozen)]

    def fuse(self, patches: Iterable[MeshPatch]) -> int:
        """
        Add patches whose landmark triple is not in the map yet.

        Returns:
            int: Number of patches added
        """
        added = 0
        for patch in patches:
            if patch.key not in self._patches:
                self._patches[patch.key] = patch
                added += 1
        return added

    def freeze(self, landmarks: Iterable[LandmarkRef]) -> int:
        """
        Freeze the patches with a vertex on any of the given landmarks.
        """
        landmarks = list(landmarks)
        count = 0
        for patch in self._patches.values():
            if patch.frozen:
                continue
            if any(vertex_matches(r, lm) for r in patch.refs for lm in landmarks):
                patch.frozen = True
                count += 1
        return count

    def remove_landmark(self, landmark: LandmarkRef) -> int:
        """
        Remove the non-frozen patches with a vertex on the landmark.
        """
        doomed = [
            key
            for key, patch in self._patches.items()
            if not patch.frozen and any(vertex_matches(r, landmark) for r in key)
        ]
        for key in doomed:
            del self._patches[key]
        return len(doomed)

    def refresh(self, positions: Mapping[LandmarkRef, Optional[Vector]]) -> int:
        """
        Update non-frozen patches from new landmark positions.
        """
        return sum(p.refresh(positions) for p in self._patches.values())


def fuse_mesh(mesh: MeshMap, patches: Iterable[MeshPatch]) -> MeshMap:
    """
    Fuse new patches into the map, dropping re-detected landmark triples.
    """
    added = mesh.fuse(patches)
    logger.debug("Fused %d new patches, %d in map", added, len(mesh))
    return mesh
