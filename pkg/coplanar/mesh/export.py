from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable

import numpy as np

from coplanar.core.exceptions import LogFormatError
from coplanar.core.typing import Matrix

from .patches import MeshPatch


def write_obj(patches: Iterable[MeshPatch], path: str | Path) -> int:
    """
    Write patches as a Wavefront OBJ file. Corners shared by patches are
    written once.

    Returns:
        int: Number of faces written
    """
    vertices: dict[tuple[object, ...], int] = {}
    faces = []
    for patch in patches:
        face = []
        for ref, x in zip(patch.refs, patch.vertices):
            key = (ref, *np.round(x, 9))
            if key not in vertices:
                vertices[key] = len(vertices) + 1
            face.append(vertices[key])
        faces.append(face)

    with Path(path).open("w") as f:
        f.write("# coplanar mesh\n# up axis: Z\n")
        for key in vertices:
            x, y, z = key[1:]
            f.write(f"v {x:.9f} {y:.9f} {z:.9f}\n")
        for a, b, c in faces:
            f.write(f"f {a} {b} {c}\n")
    return len(faces)


def read_obj(path: str | Path) -> tuple[Matrix, np.ndarray]:
    """
    Read the vertices and triangular faces of an OBJ file.

    Raises:
        LogFormatError: On malformed records
    """
    vertices, faces = [], []
    path = Path(path)
    if not path.exists():
        raise LogFormatError(f"Missing mesh `{path}`.")
    with path.open() as f:
        for lineno, line in enumerate(f, 1):
            fields = line.split()
            if not fields or fields[0].startswith("#"):
                continue
            try:
                if fields[0] == "v":
                    vertices.append([float(v) for v in fields[1:4]])
                elif fields[0] == "f":
                    faces.append([int(v.split("/")[0]) - 1 for v in fields[1:4]])
            except ValueError as e:
                raise LogFormatError(f"{path}:{lineno}: {e}") from e
    return np.array(vertices, dtype=float).reshape(-1, 3), np.array(
        faces, dtype=int
    ).reshape(-1, 3)


def write_patches_csv(patches: Iterable[MeshPatch], path: str | Path) -> None:
    with Path(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["v0", "v1", "v2", "nx", "ny", "nz", "frame", "frozen"])
        for patch in patches:
            refs = [f"{kind}:{index}" for kind, index in patch.refs]
            normal = [f"{v:.9f}" for v in patch.normal]
            writer.writerow(refs + normal + [patch.source_frame, int(patch.frozen)])
