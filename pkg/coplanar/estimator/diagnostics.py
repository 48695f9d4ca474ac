from __future__ import annotations

import csv
from pathlib import Path
from typing import IO, Any

from .solver import SolverStats

FIELDS = [
    "frame_id",
    "keyframes",
    "iterations",
    "initial_cost",
    "final_cost",
    "cost_prior",
    "cost_imu",
    "cost_point",
    "cost_line",
    "cost_coplanar_point",
    "cost_coplanar_line",
    "planes",
    "points",
    "lines",
    "diverged",
]


class DiagnosticsWriter:
    """
    Per-window solver records written as CSV rows.
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._file: IO[str] | None = None
        self._writer: Any = None

    def __enter__(self) -> DiagnosticsWriter:
        self._file = self.path.open("w", newline="")
        self._writer = csv.DictWriter(self._file, fieldnames=FIELDS)
        self._writer.writeheader()
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    def write(
        self,
        frame_id: int,
        keyframes: int,
        stats: SolverStats | None,
        planes: int,
        points: int,
        lines: int,
        diverged: bool = False,
    ) -> None:
        if self._writer is None:
            raise RuntimeError("Diagnostics writer is not open.")
        costs = stats.cost_by_kind if stats else {}
        prior = costs.get("prior", 0.0) + costs.get("marginal", 0.0)
        self._writer.writerow(
            {
                "frame_id": frame_id,
                "keyframes": keyframes,
                "iterations": stats.iterations if stats else 0,
                "initial_cost": stats.initial_cost if stats else "",
                "final_cost": stats.final_cost if stats else "",
                "cost_prior": prior,
                "cost_imu": costs.get("imu", 0.0),
                "cost_point": costs.get("point", 0.0),
                "cost_line": costs.get("line", 0.0),
                "cost_coplanar_point": costs.get("coplanar_point", 0.0),
                "cost_coplanar_line": costs.get("coplanar_line", 0.0),
                "planes": planes,
                "points": points,
                "lines": lines,
                "diverged": int(diverged),
            }
        )
