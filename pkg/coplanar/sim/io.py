"""
Reading and writing measurement logs and TUM trajectories.

A log directory holds ``imu.csv``, ``frames.csv``, ``points.csv``,
``lines.csv``, ``gt_traj.txt`` (TUM), ``gt_states.csv`` and ``gt_map.csv``.
"""
from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from coplanar.core.exceptions import LogFormatError
from coplanar.core.typing import Matrix, Segment, Vector
from coplanar.geometry.pose import ImuState, Pose

from .measurements import MeasurementLog

logger = logging.getLogger(__name__)

IMU_HEADER = ["t", "wx", "wy", "wz", "ax", "ay", "az"]
FRAMES_HEADER = ["t", "frame_id"]
POINTS_HEADER = ["frame_id", "landmark_id", "u", "v"]
LINES_HEADER = ["frame_id", "line_id", "us", "vs", "ue", "ve"]
STATES_HEADER = [
    "frame_id",
    *("px py pz qw qx qy qz vx vy vz bax bay baz bgx bgy bgz".split()),
]
MAP_HEADER = ["kind", "landmark_id", "x", "y", "z"]


def _f(x: float) -> str:
    return repr(float(x))


def _write(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def _read(path: Path, header: Sequence[str]) -> Iterator[list[str]]:
    if not path.exists():
        raise LogFormatError(f"Missing log file `{path}`.")
    with path.open(newline="") as f:
        reader = csv.reader(f)
        found = next(reader, None)
        if found is None or [h.strip() for h in found] != list(header):
            raise LogFormatError(f"`{path}` must start with header {','.join(header)}.")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise LogFormatError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}."
                )
            yield row


def _floats(path: Path, row: Sequence[str]) -> list[float]:
    try:
        return [float(v) for v in row]
    except ValueError as e:
        raise LogFormatError(f"{path}: {e}") from e


def write_tum(
    path: str | Path, stamps: Sequence[float], poses: Sequence[Pose]
) -> None:
    """
    Write ``timestamp tx ty tz qx qy qz qw`` lines with 9 significant digits.
    """
    with Path(path).open("w") as f:
        for t, pose in zip(stamps, poses):
            w, x, y, z = pose.q
            values = [t, *pose.p, x, y, z, w]
            f.write(" ".join(f"{v:.9g}" for v in values) + "\n")


def read_tum(path: str | Path) -> tuple[Vector, list[Pose]]:
    """
    Read a TUM trajectory file.

    Raises:
        LogFormatError: On malformed lines
    """
    stamps, poses = [], []
    path = Path(path)
    if not path.exists():
        raise LogFormatError(f"Missing trajectory `{path}`.")
    with path.open() as f:
        for lineno, line in enumerate(f, start=1):
            fields = line.split()
            if not fields or fields[0].startswith("#"):
                continue
            if len(fields) != 8:
                raise LogFormatError(f"{path}:{lineno}: expected 8 fields.")
            t, px, py, pz, qx, qy, qz, qw = _floats(path, fields)
            stamps.append(t)
            poses.append(Pose(np.array([px, py, pz]), np.array([qw, qx, qy, qz])))
    return np.array(stamps), poses


def write_log(log: MeasurementLog, directory: str | Path) -> Path:
    """
    Write a measurement log directory.
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "imu.csv", IMU_HEADER, ([_f(v) for v in row] for row in log.imu))
    _write(out / "frames.csv", FRAMES_HEADER, ([_f(t), f] for t, f in log.frames))
    _write(
        out / "points.csv",
        POINTS_HEADER,
        (
            [frame_id, point_id, _f(obs[0]), _f(obs[1])]
            for frame_id, observed in sorted(log.points.items())
            for point_id, obs in sorted(observed.items())
        ),
    )
    _write(
        out / "lines.csv",
        LINES_HEADER,
        (
            [frame_id, line_id, _f(s[0]), _f(s[1]), _f(e[0]), _f(e[1])]
            for frame_id, observed in sorted(log.lines.items())
            for line_id, (s, e) in sorted(observed.items())
        ),
    )
    frame_ids = sorted(log.gt_states)
    times = dict((f, t) for t, f in log.frames)
    write_tum(
        out / "gt_traj.txt",
        [times[f] for f in frame_ids],
        [log.gt_states[f].pose for f in frame_ids],
    )
    _write(
        out / "gt_states.csv",
        STATES_HEADER,
        (
            [f, *(_f(v) for v in _state_row(log.gt_states[f]))]
            for f in frame_ids
        ),
    )
    write_map(log.gt_points, log.gt_lines, out / "gt_map.csv")
    logger.info("Wrote log with %d frames to %s", len(log.frames), out)
    return out


def _state_row(x: ImuState) -> Vector:
    return np.concatenate([x.p, x.pose.q, x.v, x.ba, x.bg])


def read_log(directory: str | Path) -> MeasurementLog:
    """
    Read a measurement log directory written by :func:`write_log`.

    Raises:
        LogFormatError: If a file is missing or malformed
    """
    root = Path(directory)
    if not root.is_dir():
        raise LogFormatError(f"Log directory `{root}` does not exist.")

    imu_path = root / "imu.csv"
    imu_rows = [_floats(imu_path, r) for r in _read(imu_path, IMU_HEADER)]
    imu = np.array(imu_rows, dtype=float).reshape(-1, 7)
    if len(imu) > 1 and np.any(np.diff(imu[:, 0]) <= 0.0):
        raise LogFormatError("IMU timestamps must be strictly increasing.")

    frames = []
    for row in _read(root / "frames.csv", FRAMES_HEADER):
        t, frame_id = _floats(root / "frames.csv", row)
        frames.append((t, int(frame_id)))
    log = MeasurementLog(imu=imu, frames=frames)
    for _, frame_id in frames:
        log.points[frame_id] = {}
        log.lines[frame_id] = {}

    for row in _read(root / "points.csv", POINTS_HEADER):
        frame_id, point_id, u, v = _floats(root / "points.csv", row)
        if int(frame_id) not in log.points:
            raise LogFormatError(f"points.csv references unknown frame {frame_id}.")
        log.points[int(frame_id)][int(point_id)] = np.array([u, v, 1.0])
    for row in _read(root / "lines.csv", LINES_HEADER):
        frame_id, line_id, us, vs, ue, ve = _floats(root / "lines.csv", row)
        if int(frame_id) not in log.lines:
            raise LogFormatError(f"lines.csv references unknown frame {frame_id}.")
        log.lines[int(frame_id)][int(line_id)] = (
            np.array([us, vs, 1.0]),
            np.array([ue, ve, 1.0]),
        )

    for row in _read(root / "gt_states.csv", STATES_HEADER):
        values = _floats(root / "gt_states.csv", row)
        log.gt_states[int(values[0])] = _state_from_row(np.array(values[1:]))
    log.gt_points, log.gt_lines = read_map(root / "gt_map.csv")
    return log


def _state_from_row(values: Vector) -> ImuState:
    return ImuState(
        pose=Pose(values[0:3], values[3:7]),
        v=values[7:10],
        ba=values[10:13],
        bg=values[13:16],
    )


def read_cloud(path: str | Path) -> Matrix:
    return np.loadtxt(path, delimiter=",", skiprows=1).reshape(-1, 3)


def write_cloud(cloud: Matrix, path: str | Path) -> None:
    np.savetxt(path, cloud, delimiter=",", header="x,y,z", comments="", fmt="%.6f")


def write_map(
    points: Mapping[int, Vector], lines: Mapping[int, Segment], path: str | Path
) -> None:
    """
    Write point positions and line endpoints as ``kind, landmark_id, x, y, z``
    rows, kinds being ``point``, ``line_start`` and ``line_end``.
    """
    rows: list[list[object]] = [
        ["point", k, *(_f(v) for v in x)] for k, x in sorted(points.items())
    ]
    for k, (s, e) in sorted(lines.items()):
        rows.append(["line_start", k, *(_f(v) for v in s)])
        rows.append(["line_end", k, *(_f(v) for v in e)])
    _write(Path(path), MAP_HEADER, rows)


def read_map(path: str | Path) -> tuple[dict[int, Vector], dict[int, Segment]]:
    """
    Read a landmark map written by :func:`write_map`.

    Raises:
        LogFormatError: On unknown landmark kinds or malformed rows
    """
    path = Path(path)
    points: dict[int, Vector] = {}
    lines: dict[int, Segment] = {}
    for row in _read(path, MAP_HEADER):
        kind, landmark_id = row[0], int(_floats(path, row[1:2])[0])
        x = np.array(_floats(path, row[2:]))
        if kind == "point":
            points[landmark_id] = x
        elif kind in ("line_start", "line_end"):
            s, e = lines.get(landmark_id, (x, x))
            lines[landmark_id] = (x, e) if kind == "line_start" else (s, x)
        else:
            raise LogFormatError(f"{path}: unknown landmark kind `{kind}`.")
    return points, lines
