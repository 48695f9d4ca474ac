import json

import pytest

from coplanar.evaluation.cli import EXIT_CONFIG, EXIT_OK, build_parser, main
from coplanar.evaluation.pipeline import ground_truth_trajectory
from coplanar.sim.io import read_log, write_tum

SMALL = """\
# short noise-free sequence
duration = 2.0
camera_rate = 10.0
imu_rate = 100.0
sim_pixel_noise = 0.0
sim_imu_noise = False
gt_cloud_spacing = 0.5
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return path


def test_parser():
    args = build_parser().parse_args(
        ["ablate", "--out", "x", "--seeds", "2", "--pipeline", "P", "--pipeline", "PP"]
    )
    assert args.pipeline == ["P", "PP"]
    assert args.seeds == 2
    assert args.workers is None
    args = build_parser().parse_args(["run", "--log", "l", "--out", "o"])
    assert args.pipeline == "PLP"
    assert not args.dump_histograms
    with pytest.raises(SystemExit):
        build_parser().parse_args(
            ["run", "--log", "l", "--out", "o", "--pipeline", "X"]
        )


def test_simulate_and_evaluate(tmp_path, config, capsys):
    log_dir = tmp_path / "log"
    argv = ["--config", str(config), "--out", str(log_dir), "-q"]
    assert main(["simulate", *argv]) == EXIT_OK
    assert (log_dir / "imu.csv").exists()
    assert (log_dir / "gt_cloud.csv").exists()

    run_dir = tmp_path / "run"
    run_dir.mkdir()
    gt = ground_truth_trajectory(read_log(log_dir))
    write_tum(run_dir / "est_traj.txt", gt.stamps, gt.poses)
    capsys.readouterr()
    argv = ["evaluate", "--log", str(log_dir), "--out", str(run_dir)]
    assert main([*argv, "--config", str(config)]) == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed["ape_translation_cm"] < 1e-4
    saved = json.loads((run_dir / "evaluation.json").read_text())
    assert saved == printed


def test_bad_config(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("window_size 5\n")
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == 2
    path.write_text("window_size = 1\n")
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == 2
    missing = str(tmp_path / "missing.cfg")
    assert main(["simulate", "--config", missing, "--out", str(tmp_path)]) == 2


def test_missing_log(tmp_path):
    argv = ["run", "--log", str(tmp_path / "nowhere"), "--out", str(tmp_path / "o")]
    assert main(argv) == EXIT_CONFIG
