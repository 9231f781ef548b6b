import json

import numpy as np
import pytest

from fedpoison.analysis import BoundParams, asymptotic_gap, convergence_bound, read_metrics
from fedpoison.cli import build_parser, load_datasets, main, run_scenario
from fedpoison.config import CONFIG_FIELDS, parse_config
from fedpoison.datasets import write_synthetic_idx


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("idxdata")
    write_synthetic_idx(root, n_train=240, n_test=120, seed=31, side=8, n_classes=4)
    return root


def base_args(data_dir, out_dir, **extra):
    args = [
        "--data_root", str(data_dir),
        "--train_cap", "0",
        "--test_cap", "0",
        "--J", "3",
        "--T_L", "3",
        "--T_FL", "4",
        "--eta", "0.05",
        "--output_dir", str(out_dir),
    ]
    for key, value in extra.items():
        args += [f"--{key}", str(value)]
    return args


class TestHelp:
    def test_run_help_lists_every_config_key(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["run", "--help"])
        text = capsys.readouterr().out
        collapsed = "".join(text.split())  # undo argparse line wrapping
        for field in CONFIG_FIELDS:
            assert f"--{field.name}" in text
            assert str(field.default) in collapsed

    def test_subcommands_exist(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["--help"])
        text = capsys.readouterr().out
        for name in ("run", "sweep-j", "sweep-eavesdrop", "bound"):
            assert name in text


class TestRun:
    def test_run_writes_artifacts(self, data_dir, tmp_path):
        out = tmp_path / "out"
        code = main(["run", *base_args(data_dir, out)])
        assert code == 0
        assert (out / "metrics.csv").is_file()
        assert (out / "config.txt").is_file()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["rounds"] == 4
        rows = read_metrics(out / "metrics.csv")
        assert len(rows) == 4 * (3 + 1)  # 3 clients + global row, 4 rounds

    def test_config_snapshot_reparses_to_same_run(self, data_dir, tmp_path):
        out = tmp_path / "out"
        main(["run", *base_args(data_dir, out)])
        snap = parse_config(out / "config.txt")
        assert snap.J == 3 and snap.T_FL == 4

    def test_rerun_is_byte_identical(self, data_dir, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["run", *base_args(data_dir, out_a, attack="gae", gae_epochs="2",
                                gae_probes="1", gae_hidden="4", gae_embed="2")])
        main(["run", *base_args(data_dir, out_b, attack="gae", gae_epochs="2",
                                gae_probes="1", gae_hidden="4", gae_embed="2")])
        assert (out_a / "metrics.csv").read_bytes() == (out_b / "metrics.csv").read_bytes()
        assert (out_a / "summary.json").read_bytes() == (out_b / "summary.json").read_bytes()

    def test_missing_dataset_path_names_file(self, tmp_path, capsys):
        code = main(["run", "--data_root", str(tmp_path / "void"),
                     "--output_dir", str(tmp_path / "out")])
        assert code == 1
        assert "train-images-idx3-ubyte" in capsys.readouterr().err

    def test_invalid_config_exits_two(self, tmp_path, capsys):
        code = main(["run", "--J", "0", "--output_dir", str(tmp_path)])
        assert code == 2
        assert "J >= 1" in capsys.readouterr().err

    def test_defense_and_mp_attack_path(self, data_dir, tmp_path):
        out = tmp_path / "out"
        code = main(["run", *base_args(data_dir, out, attack="mp", defense="distance")])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["n_attackers"] == 1
        assert summary["attacker_flag_rate"] is not None

    def test_multi_krum_defense_path(self, data_dir, tmp_path):
        out = tmp_path / "out"
        code = main(["run", *base_args(data_dir, out, attack="mp",
                                       defense="multi_krum", krum_f="1", krum_m="1")])
        assert code == 0


class TestSweeps:
    def test_sweep_eavesdrop_writes_per_point_runs(self, data_dir, tmp_path):
        out = tmp_path / "sweep"
        code = main([
            "sweep-eavesdrop", *base_args(data_dir, out, attack="gae",
                                          gae_epochs="2", gae_probes="1",
                                          gae_hidden="4", gae_embed="2"),
            "--values", "2,3", "--seeds", "0,1",
        ])
        assert code == 0
        for count in (2, 3):
            for seed in (0, 1):
                assert (out / f"eavesdrop_{count}_seed_{seed}" / "summary.json").is_file()
        lines = (out / "sweep_summary.csv").read_text().splitlines()
        assert lines[0] == "eavesdrop_count,seed,final_global_accuracy"
        assert len(lines) == 5

    def test_sweep_j_scales_attackers(self, data_dir, tmp_path):
        out = tmp_path / "sweepj"
        code = main([
            "sweep-j", *base_args(data_dir, out, attack="mp"),
            "--values", "3,5", "--attacker-ratio", "0.4",
        ])
        assert code == 0
        for j, expected in ((3, 1), (5, 2)):
            summary = json.loads((out / f"J_{j}" / "summary.json").read_text())
            assert summary["n_attackers"] == expected
        assert (out / "sweep_summary.csv").is_file()


class TestBound:
    def test_bound_output_matches_library(self, capsys):
        code = main([
            "bound", "--initial-gap", "1.0", "--pl-constant", "0.1",
            "--learning-rate", "0.1", "--total-data", "400",
            "--attacker-data", "100", "--loss-cap", "2.0",
            "--stealth-radius", "0.5", "--rounds", "5",
        ])
        assert code == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "t,bound"
        params = BoundParams(1.0, 0.1, 0.1, 1.0, 400, 100, 2.0, 0.5)
        for line in out[1:7]:
            t, value = line.split(",")
            assert float(value) == pytest.approx(convergence_bound(params, int(t)))
        assert out[7].startswith("asymptotic_gap,")
        assert float(out[7].split(",")[1]) == pytest.approx(asymptotic_gap(params))

    def test_bound_writes_file(self, tmp_path, capsys):
        target = tmp_path / "bound.csv"
        code = main([
            "bound", "--initial-gap", "1.0", "--pl-constant", "0.1",
            "--learning-rate", "0.1", "--total-data", "400",
            "--attacker-data", "0", "--loss-cap", "2.0",
            "--rounds", "3", "--out", str(target),
        ])
        assert code == 0
        assert target.read_text().splitlines()[0] == "t,bound"


class TestLoadDatasets:
    def test_caps_apply(self, data_dir):
        config = parse_config(None, {
            "data_root": str(data_dir), "train_cap": "100", "test_cap": "50",
        })
        train, test = load_datasets(config)
        assert train.n_samples == 100 and test.n_samples == 50

    def test_class_counts_unified(self, data_dir):
        config = parse_config(None, {
            "data_root": str(data_dir), "train_cap": "0", "test_cap": "0",
        })
        train, test = load_datasets(config)
        assert train.n_classes == test.n_classes

    def test_run_scenario_returns_zero(self, data_dir, tmp_path):
        config = parse_config(None, {
            "data_root": str(data_dir), "train_cap": "0", "test_cap": "0",
            "J": "2", "T_L": "2", "T_FL": "2", "eta": "0.05",
            "output_dir": str(tmp_path / "o"),
        })
        assert run_scenario(config, quiet=True) == 0
