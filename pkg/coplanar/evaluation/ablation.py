"""
Ablation over pipelines and seeds: one simulated log per seed, every
pipeline run on it in a process pool, and a per-pipeline summary.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from coplanar.core.exceptions import CoplanarError, SolverDiverged
from coplanar.core.pipeline import Pipeline

from .pipeline import MetricsReport, RunConfig, run_pipeline, simulate

logger = logging.getLogger(__name__)

SUMMARY_METRICS = (
    "ape_translation_cm",
    "ape_rotation_deg",
    "rpe_translation_cm",
    "rpe_rotation_deg",
    "map_error_cm",
    "mesh_error_cm",
)


@dataclass
class RunOutcome:
    pipeline: str
    seed: int
    report: Optional[MetricsReport] = None
    error: str = ""
    diverged: bool = False


@dataclass
class AblationSummary:
    outcomes: list[RunOutcome] = field(default_factory=list)

    @property
    def failed(self) -> list[RunOutcome]:
        return [o for o in self.outcomes if o.report is None]

    @property
    def diverged(self) -> bool:
        return any(o.diverged for o in self.outcomes)

    def rows(self) -> list[dict[str, Any]]:
        """
        One row per pipeline with the mean of every metric over the
        successful runs, and the mean stage runtimes.
        """
        rows = []
        for pipeline in Pipeline.names():
            reports = [
                o.report
                for o in self.outcomes
                if o.pipeline == pipeline and o.report is not None
            ]
            runs = [o for o in self.outcomes if o.pipeline == pipeline]
            if not runs:
                continue
            row: dict[str, Any] = {
                "pipeline": pipeline,
                "runs": len(reports),
                "failed": len(runs) - len(reports),
            }
            for name in SUMMARY_METRICS:
                values = [getattr(r.metrics, name) for r in reports]
                row[name] = _mean([v for v in values if v is not None])
            stages = sorted({s for r in reports for s in r.timings_ms})
            for stage in stages:
                row[f"{stage}_ms"] = _mean(
                    [r.timings_ms[stage] for r in reports if stage in r.timings_ms]
                )
            rows.append(row)
        return rows

    def write(self, directory: str | Path) -> None:
        out = Path(directory)
        rows = self.rows()
        fields: list[str] = []
        for row in rows:
            fields.extend(k for k in row if k not in fields)
        with (out / "summary.csv").open("w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=fields)
            writer.writeheader()
            writer.writerows(rows)
        runs = [
            {
                "pipeline": o.pipeline,
                "seed": o.seed,
                "error": o.error,
                "report": o.report.to_dict() if o.report else None,
            }
            for o in self.outcomes
        ]
        with (out / "summary.json").open("w") as f:
            json.dump({"pipelines": rows, "runs": runs}, f, indent=2, sort_keys=True)
            f.write("\n")


def _mean(values: Sequence[float]) -> Optional[float]:
    if not values:
        return None
    value = float(np.mean(values))
    return value if math.isfinite(value) else None


def _run(config: RunConfig) -> RunOutcome:
    outcome = RunOutcome(str(config.pipeline), config.seed)
    try:
        outcome.report = run_pipeline(config)
    except SolverDiverged as e:
        outcome.error, outcome.diverged = str(e), True
    except CoplanarError as e:
        outcome.error = str(e)
    return outcome


def ablate(
    template: RunConfig,
    seeds: Iterable[int],
    pipelines: Sequence[Pipeline] = tuple(Pipeline),
    workers: Optional[int] = None,
) -> AblationSummary:
    """
    Simulate one log per seed under ``template.out_dir / logs`` and run
    every pipeline on each of them under ``template.out_dir / runs``.

    Args:
        template (RunConfig): Settings and output directory shared by all runs
        seeds (Iterable): Simulation seeds
        pipelines (Sequence, optional): Pipelines to compare. Defaults to all.
        workers (int, optional): Pool size. Defaults to the CPU count.

    Returns:
        AblationSummary: Outcomes in (seed, pipeline) order
    """
    root = template.out_dir
    jobs = []
    for seed in seeds:
        log_dir = root / "logs" / f"seed_{seed:03d}"
        simulate(template.conf, seed, log_dir)
        for pipeline in pipelines:
            run_dir = root / "runs" / f"{pipeline}_seed_{seed:03d}"
            jobs.append(
                replace(
                    template,
                    pipeline=pipeline,
                    seed=seed,
                    log_dir=log_dir,
                    out_dir=run_dir,
                )
            )
    logger.info("Ablation: %d runs on %s workers", len(jobs), workers or "all")
    with ProcessPoolExecutor(max_workers=workers) as executor:
        outcomes = list(executor.map(_run, jobs))
    for outcome in outcomes:
        if outcome.error:
            logger.warning(
                "%s seed %d failed: %s", outcome.pipeline, outcome.seed, outcome.error
            )
    summary = AblationSummary(outcomes)
    root.mkdir(parents=True, exist_ok=True)
    summary.write(root)
    return summary
