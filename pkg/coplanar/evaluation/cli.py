"""
Command line interface::

    coplanar simulate --out logs/seed_000 --seed 0
    coplanar run --log logs/seed_000 --pipeline PLP --out runs/plp
    coplanar evaluate --log logs/seed_000 --out runs/plp
    coplanar ablate --seeds 10 --out ablation

Exit codes: 0 on success, 2 on configuration or log errors, 3 when the
solver diverged, 1 on any other estimator error.
"""
from __future__ import annotations

import argparse
import json
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

from coplanar.conf import AppSettings, load_config
from coplanar.core.exceptions import (
    CoplanarError,
    ImproperlyConfigured,
    LogFormatError,
    SolverDiverged,
)
from coplanar.core.pipeline import Pipeline
from coplanar.sim.io import read_cloud, read_log

from .ablation import ablate
from .pipeline import GT_CLOUD, RunConfig, evaluate, run_pipeline, simulate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _settings(args: argparse.Namespace) -> AppSettings:
    conf = AppSettings(load_config(args.config) if args.config else {})
    conf.check()
    for key in conf.unknown():
        logger.warning("Ignoring unknown setting `%s`.", key)
    return conf


def _simulate(args: argparse.Namespace) -> int:
    out = simulate(_settings(args), args.seed, args.out)
    logger.info("Simulated log written to %s", out)
    return EXIT_OK


def _run(args: argparse.Namespace) -> int:
    config = RunConfig.from_files(
        args.pipeline,
        args.log,
        args.out,
        config=args.config,
        seed=args.seed,
        dump_histograms=args.dump_histograms,
        dump_diagnostics=args.dump_diagnostics,
    )
    report = run_pipeline(config)
    print(json.dumps(asdict(report.metrics), indent=2, sort_keys=True))
    return EXIT_OK


def _evaluate(args: argparse.Namespace) -> int:
    conf = _settings(args)
    log = read_log(args.log)
    cloud_path = Path(args.log) / GT_CLOUD
    cloud = read_cloud(cloud_path) if cloud_path.exists() else None
    metrics = evaluate(log, args.out, conf, args.seed, cloud)
    text = json.dumps(asdict(metrics), indent=2, sort_keys=True)
    (Path(args.out) / "evaluation.json").write_text(text + "\n")
    print(text)
    return EXIT_OK


def _ablate(args: argparse.Namespace) -> int:
    template = RunConfig(
        Pipeline.PLP,
        log_dir=Path(args.out) / "logs",
        out_dir=Path(args.out),
        conf=_settings(args),
        dump_diagnostics=args.dump_diagnostics,
        dump_histograms=args.dump_histograms,
    )
    pipelines = [Pipeline(p) for p in args.pipeline or Pipeline.names()]
    seeds = range(args.seed, args.seed + args.seeds)
    summary = ablate(template, seeds, pipelines, workers=args.workers)
    for row in summary.rows():
        print(
            "{pipeline:>4}  APE {ape:>7} cm  map {map:>7} cm  mesh {mesh:>7} cm".format(
                pipeline=row["pipeline"],
                ape=_fmt(row["ape_translation_cm"]),
                map=_fmt(row["map_error_cm"]),
                mesh=_fmt(row["mesh_error_cm"]),
            )
        )
    if summary.diverged:
        return EXIT_DIVERGED
    return EXIT_FAILED if summary.failed else EXIT_OK


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.2f}"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Flat `key = value` settings file")
    common.add_argument("--seed", type=int, default=0, help="Random seed")
    common.add_argument("--out", required=True, help="Output directory")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")

    dumps = argparse.ArgumentParser(add_help=False)
    dumps.add_argument(
        "--dump-histograms",
        action="store_true",
        help="Write the plane detection histograms of every frame",
    )
    dumps.add_argument(
        "--dump-diagnostics",
        action="store_true",
        help="Write per-window solver records to diagnostics.csv",
    )

    parser = argparse.ArgumentParser(
        prog="coplanar",
        description="Sliding-window VIO with points, lines and planes.",
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    sim = verbs.add_parser("simulate", parents=[common], help="Simulate a room log")
    sim.set_defaults(handler=_simulate)

    run = verbs.add_parser("run", parents=[common, dumps], help="Run one pipeline")
    run.add_argument("--log", required=True, help="Measurement log directory")
    run.add_argument("--pipeline", choices=Pipeline.names(), default="PLP")
    run.set_defaults(handler=_run)

    ev = verbs.add_parser("evaluate", parents=[common], help="Score a run directory")
    ev.add_argument("--log", required=True, help="Measurement log directory")
    ev.set_defaults(handler=_evaluate)

    abl = verbs.add_parser(
        "ablate", parents=[common, dumps], help="Compare pipelines over seeds"
    )
    abl.add_argument("--seeds", type=int, default=10, help="Number of seeds")
    abl.add_argument(
        "--pipeline",
        action="append",
        choices=Pipeline.names(),
        help="Pipeline to include, repeatable. Defaults to all.",
    )
    abl.add_argument("--workers", type=int, default=None, help="Pool size")
    abl.set_defaults(handler=_ablate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )
    try:
        return int(args.handler(args))
    except (ImproperlyConfigured, LogFormatError) as e:
        logger.error("%s", e)
        return EXIT_CONFIG
    except SolverDiverged as e:
        logger.error("Solver diverged: %s", e)
        return EXIT_DIVERGED
    except CoplanarError as e:
        logger.error("%s", e)
        return EXIT_FAILED
