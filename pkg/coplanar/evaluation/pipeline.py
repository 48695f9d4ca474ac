"""
Run orchestration: simulate a log, stream it through the estimator, write
the run artifacts and score them against the ground truth.
"""
from __future__ import annotations

import csv
import json
import logging
from contextlib import nullcontext
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np

from coplanar.conf import AppSettings, load_config
from coplanar.core.exceptions import (
    EmptyMesh,
    EmptyOverlap,
    ImproperlyConfigured,
    LogFormatError,
    NoMatches,
)
from coplanar.core.pipeline import Pipeline
from coplanar.estimator.diagnostics import DiagnosticsWriter
from coplanar.estimator.estimator import Estimator
from coplanar.mesh.export import read_obj, write_obj, write_patches_csv
from coplanar.sim.camera import default_extrinsics
from coplanar.sim.io import (
    read_cloud,
    read_log,
    read_map,
    write_cloud,
    write_log,
    write_map,
    write_tum,
)
from coplanar.sim.measurements import MeasurementLog, generate_log
from coplanar.sim.scene import build_room_scene, ground_truth_cloud

from .metrics import (
    Trajectory,
    align_trajectories,
    ape_rmse,
    map_error,
    mesh_error,
    rpe,
    write_rpe_csv,
)

logger = logging.getLogger(__name__)

GT_CLOUD = "gt_cloud.csv"
EST_TRAJ = "est_traj.txt"
EST_MAP = "est_map.csv"
MESH = "mesh.obj"
REPORT = "report.json"
TIMINGS = "timings.csv"


@dataclass
class RunConfig:
    """
    Everything one estimator run needs. The pipeline decides which
    features are used, ``conf`` holds every threshold.
    """

    pipeline: Pipeline
    log_dir: Path
    out_dir: Path
    seed: int = 0
    conf: AppSettings = field(default_factory=AppSettings)
    dump_histograms: bool = False
    dump_diagnostics: bool = False

    def __post_init__(self) -> None:
        try:
            self.pipeline = Pipeline(self.pipeline)
        except ValueError:
            raise ImproperlyConfigured(
                f"Unknown pipeline `{self.pipeline}`, "
                f"expected one of {', '.join(Pipeline.names())}."
            )
        self.log_dir = Path(self.log_dir)
        self.out_dir = Path(self.out_dir)

    @classmethod
    def from_files(
        cls,
        pipeline: str | Pipeline,
        log_dir: str | Path,
        out_dir: str | Path,
        config: Optional[str | Path] = None,
        overrides: Optional[Mapping[str, Any]] = None,
        **kwargs: Any,
    ) -> RunConfig:
        """
        Build a run from an optional config file plus overrides. All
        settings are validated up front.

        Raises:
            ImproperlyConfigured: If the config file or a setting is invalid
        """
        values = load_config(config) if config else {}
        values.update({k.lower(): v for k, v in (overrides or {}).items()})
        conf = AppSettings(values)
        conf.check()
        for key in conf.unknown():
            logger.warning("Ignoring unknown setting `%s`.", key)
        return cls(
            Pipeline(pipeline), Path(log_dir), Path(out_dir), conf=conf, **kwargs
        )


@dataclass
class Metrics:
    ape_translation_cm: float
    ape_rotation_deg: float
    rpe_translation_cm: Optional[float] = None
    rpe_rotation_deg: Optional[float] = None
    map_error_cm: Optional[float] = None
    mesh_error_cm: Optional[float] = None


@dataclass
class MetricsReport:
    """
    Accuracy metrics, landmark counts and mean stage runtimes of one run.
    """

    pipeline: str
    seed: int
    metrics: Metrics
    frames: int = 0
    keyframes: int = 0
    points: int = 0
    lines: int = 0
    planes: int = 0
    patches: int = 0
    diverged_windows: int = 0
    timings_ms: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> MetricsReport:
        data = dict(data)
        data["metrics"] = Metrics(**data["metrics"])
        return cls(**data)

    def write_json(self, path: str | Path) -> None:
        with Path(path).open("w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def read_json(cls, path: str | Path) -> MetricsReport:
        with Path(path).open() as f:
            return cls.from_dict(json.load(f))


def simulate(conf: AppSettings, seed: int, directory: str | Path) -> Path:
    """
    Simulate the room scene and write its measurement log, with the dense
    ground truth surface cloud, to ``directory``.
    """
    scene = build_room_scene(seed, conf)
    log = generate_log(scene, conf, seed)
    out = write_log(log, directory)
    write_cloud(ground_truth_cloud(scene, conf.GT_CLOUD_SPACING), out / GT_CLOUD)
    return out


def ground_truth_trajectory(log: MeasurementLog) -> Trajectory:
    frames = sorted((t, f) for t, f in log.frames if f in log.gt_states)
    return Trajectory(
        np.array([t for t, _ in frames]), [log.gt_states[f].pose for _, f in frames]
    )


def evaluate(
    log: MeasurementLog,
    out_dir: str | Path,
    conf: AppSettings,
    seed: int = 0,
    cloud: Optional[np.ndarray] = None,
) -> Metrics:
    """
    Score the artifacts of a run directory. Map and mesh errors are measured
    after the trajectory alignment and left empty when they cannot be
    computed.

    Raises:
        LogFormatError: If the estimated trajectory is missing or malformed
        EmptyOverlap: If no estimated pose matches a ground truth stamp
    """
    out = Path(out_dir)
    est = Trajectory.from_tum(out / EST_TRAJ)
    gt = ground_truth_trajectory(log)
    tolerance = conf.ASSOCIATION_TOLERANCE
    trans, rot = ape_rmse(est, gt, tolerance)
    alignment, _ = align_trajectories(est, gt, tolerance)
    metrics = Metrics(trans, rot)

    try:
        series = rpe(est, gt, conf.RPE_DELTA, tolerance)
    except EmptyOverlap as e:
        logger.warning("No relative pose error: %s", e)
    else:
        write_rpe_csv(series, out / "rpe.csv")
        metrics.rpe_translation_cm = 100.0 * float(np.mean(series[:, 1]))
        metrics.rpe_rotation_deg = float(np.mean(series[:, 2]))

    if (out / EST_MAP).exists():
        points, lines = read_map(out / EST_MAP)
        try:
            metrics.map_error_cm = map_error(
                points, log.gt_points, lines, log.gt_lines, alignment
            )
        except NoMatches as e:
            logger.warning("No map error: %s", e)

    if cloud is not None and (out / MESH).exists():
        vertices, faces = read_obj(out / MESH)
        try:
            metrics.mesh_error_cm = mesh_error(
                vertices[faces], cloud, alignment, seed=seed, conf=conf
            )
        except EmptyMesh as e:
            logger.warning("No mesh error: %s", e)
    return metrics


def _write_timings(estimator: Estimator, path: Path) -> dict[str, float]:
    summary = estimator.timing_summary()
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["stage", "mean_ms", "max_ms", "calls"])
        for stage, (mean, peak) in summary.items():
            calls = len(estimator.timings[stage])
            writer.writerow([stage, f"{mean:.3f}", f"{peak:.3f}", calls])
    return {stage: round(mean, 3) for stage, (mean, _) in summary.items()}


def run_pipeline(config: RunConfig) -> MetricsReport:
    """
    Stream a measurement log through the estimator and write
    ``est_traj.txt``, ``est_map.csv``, ``mesh.obj``, ``mesh_patches.csv``,
    ``timings.csv``, ``rpe.csv`` and ``report.json`` to the output directory.

    Args:
        config (RunConfig): Run configuration

    Raises:
        LogFormatError: If the log cannot be read
        SolverDiverged: If too many consecutive windows diverged

    Returns:
        MetricsReport: The report also written to ``report.json``
    """
    conf = config.conf
    log = read_log(config.log_dir)
    if not log.frames:
        raise LogFormatError(f"Log `{config.log_dir}` has no frames.")
    first_time, first_id = log.frames[0]
    if first_id not in log.gt_states:
        raise LogFormatError(f"Log needs the ground truth state of frame {first_id}.")

    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    histogram_dir = None
    if config.dump_histograms:
        histogram_dir = out / "histograms"
        histogram_dir.mkdir(exist_ok=True)

    estimator = Estimator(default_extrinsics(), config.pipeline, conf, histogram_dir)
    window = estimator.window
    keyframes = 0
    diagnostics = (
        DiagnosticsWriter(out / "diagnostics.csv")
        if config.dump_diagnostics
        else nullcontext()
    )
    logger.info(
        "Running %s on %s (%d frames)", config.pipeline, config.log_dir, len(log.frames)
    )
    with diagnostics as writer:
        previous = None
        for timestamp, frame_id in log.frames:
            if previous is None:
                imu = log.imu[log.imu[:, 0] <= timestamp + 1e-9]
            else:
                imu = log.imu_between(previous, timestamp)
            result = estimator.process_frame(
                frame_id,
                timestamp,
                imu,
                log.points.get(frame_id, {}),
                log.lines.get(frame_id, {}),
                initial_state=log.gt_states[first_id] if previous is None else None,
            )
            previous = timestamp
            keyframes += int(result.is_keyframe)
            if writer is not None:
                writer.write(
                    frame_id,
                    len(window),
                    result.stats,
                    len(window.planes),
                    sum(1 for _ in window.optimizable_points()),
                    sum(1 for _ in window.optimizable_lines()),
                    diverged=result.diverged,
                )

    stamps, poses = estimator.estimated_trajectory()
    write_tum(out / EST_TRAJ, stamps, poses)
    points, lines = estimator.estimated_map()
    write_map(points, lines, out / EST_MAP)
    patches = estimator.mesh.patches()
    write_obj(patches, out / MESH)
    write_patches_csv(patches, out / "mesh_patches.csv")
    timings = _write_timings(estimator, out / TIMINGS)

    cloud_path = config.log_dir / GT_CLOUD
    cloud = read_cloud(cloud_path) if cloud_path.exists() else None
    report = MetricsReport(
        pipeline=str(config.pipeline),
        seed=config.seed,
        metrics=evaluate(log, out, conf, config.seed, cloud),
        frames=len(log.frames),
        keyframes=keyframes,
        points=len(points),
        lines=len(lines),
        planes=len(window.planes),
        patches=len(patches),
        diverged_windows=estimator.rolled_back,
        timings_ms=timings,
    )
    report.write_json(out / REPORT)
    logger.info(
        "%s: APE %.2f cm / %.3f deg, %d planes, %d patches",
        config.pipeline,
        report.metrics.ape_translation_cm,
        report.metrics.ape_rotation_deg,
        report.planes,
        report.patches,
    )
    return report
