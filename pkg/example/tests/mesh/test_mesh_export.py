import csv

import numpy as np
import pytest

from coplanar.core.exceptions import LogFormatError
from coplanar.mesh.export import read_obj, write_obj, write_patches_csv
from coplanar.mesh.patches import MeshPatch

UP = np.array([0.0, 0.0, 1.0])


def _square():
    corners = {
        ("point", 0): [0.0, 0.0, 0.0],
        ("point", 1): [1.0, 0.0, 0.0],
        ("point", 2): [1.0, 1.0, 0.0],
        ("point", 3): [0.0, 1.0, 0.0],
    }
    faces = [
        (("point", 0), ("point", 1), ("point", 2)),
        (("point", 0), ("point", 2), ("point", 3)),
    ]
    return [
        MeshPatch(refs, [corners[r] for r in refs], UP, source_frame=k)
        for k, refs in enumerate(faces)
    ]


def test_obj_shares_vertices(tmp_path):
    path = tmp_path / "mesh.obj"
    assert write_obj(_square(), path) == 2
    lines = path.read_text().splitlines()
    assert sum(line.startswith("v ") for line in lines) == 4
    assert sum(line.startswith("f ") for line in lines) == 2

    vertices, faces = read_obj(path)
    assert vertices.shape == (4, 3)
    np.testing.assert_array_equal(faces, [[0, 1, 2], [0, 2, 3]])
    np.testing.assert_allclose(vertices[faces[1]], _square()[1].vertices)


def test_obj_empty(tmp_path):
    path = tmp_path / "empty.obj"
    assert write_obj([], path) == 0
    vertices, faces = read_obj(path)
    assert vertices.shape == (0, 3)
    assert faces.shape == (0, 3)


def test_read_obj_errors(tmp_path):
    with pytest.raises(LogFormatError):
        read_obj(tmp_path / "missing.obj")
    path = tmp_path / "bad.obj"
    path.write_text("v 0 0 0\nv 1 zero 0\n")
    with pytest.raises(LogFormatError, match="bad.obj:2"):
        read_obj(path)


def test_write_patches_csv(tmp_path):
    patches = _square()
    patches[1].frozen = True
    path = tmp_path / "patches.csv"
    write_patches_csv(patches, path)
    with path.open() as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["v0", "v1", "v2", "nx", "ny", "nz", "frame", "frozen"]
    assert rows[1][:3] == ["point:0", "point:1", "point:2"]
    assert float(rows[1][5]) == 1.0
    assert rows[2][6:] == ["1", "1"]
