"""CLI tests driven through main(argv) with small configs."""

import json
import os

import numpy as np
import pytest

from ohmicnet.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, main
from ohmicnet.config import load_config

SMALL_CONFIG = """\
[regime]
kind = separated_s

[grid]
n_points = 40

[splits]
n_train = 24
n_valid = 12
n_test = 12

[network]
hidden = 16,8

[train]
iterations = 30
eval_every = 10
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A config, a generated dataset and a trained classifier checkpoint."""
    root = tmp_path_factory.mktemp("cli")
    config = root / "run.ini"
    config.write_text(SMALL_CONFIG)
    dataset = root / "small.ds"
    model = root / "small.ckpt"
    assert main(["--config", str(config), "generate", str(dataset)]) == EXIT_OK
    assert main(["--config", str(config), "train", str(dataset), str(model)]) == EXIT_OK
    return {"root": root, "config": str(config), "dataset": str(dataset),
            "model": str(model)}


class TestPrintConfig:
    def test_defaults_round_trip(self, capsys, tmp_path):
        assert main(["print-config"]) == EXIT_OK
        text = capsys.readouterr().out
        path = tmp_path / "defaults.ini"
        path.write_text(text)
        assert load_config(str(path)) == load_config(None)

    def test_help_mentions_env_var(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        assert "OHMICNET_OUT" in capsys.readouterr().out


class TestGenerate:
    def test_prints_summary_and_checksum(self, workspace, capsys, tmp_path):
        out = tmp_path / "again.ds"
        assert main(
            ["--config", workspace["config"], "generate", str(out)]
        ) == EXIT_OK
        text = capsys.readouterr().out
        assert "regime: separated_s" in text
        assert "examples: 48" in text
        assert "checksum:" in text

    def test_deterministic_bytes(self, workspace, tmp_path):
        out = tmp_path / "again.ds"
        assert main(
            ["--config", workspace["config"], "generate", str(out)]
        ) == EXIT_OK
        assert out.read_bytes() == open(workspace["dataset"], "rb").read()

    def test_seed_override_changes_bytes(self, workspace, tmp_path):
        out = tmp_path / "seeded.ds"
        assert main(
            ["--config", workspace["config"], "--seed", "99", "generate", str(out)]
        ) == EXIT_OK
        assert out.read_bytes() != open(workspace["dataset"], "rb").read()

    def test_csv_export(self, workspace, tmp_path, capsys):
        out = tmp_path / "x.ds"
        csv_path = tmp_path / "x.csv"
        assert main(
            ["--config", workspace["config"], "generate", str(out),
             "--csv", str(csv_path)]
        ) == EXIT_OK
        header = csv_path.read_text().splitlines()[0]
        assert header.startswith("split,index,class,s,eta,omega_c")

    def test_unknown_key_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.ini"
        bad.write_text("[grid]\nnum_points = 12\n")
        code = main(["--config", str(bad), "generate", str(tmp_path / "x.ds")])
        assert code == EXIT_CONFIG
        assert "num_points" in capsys.readouterr().err

    def test_unknown_section_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.ini"
        bad.write_text("[mesh]\nn_points = 12\n")
        code = main(["--config", str(bad), "generate", str(tmp_path / "x.ds")])
        assert code == EXIT_CONFIG
        assert "[mesh]" in capsys.readouterr().err

    def test_missing_config_exits_2(self, tmp_path, capsys):
        code = main(
            ["--config", str(tmp_path / "nope.ini"), "generate",
             str(tmp_path / "x.ds")]
        )
        assert code == EXIT_CONFIG


class TestTrain:
    def test_artifacts_exist(self, workspace):
        assert os.path.exists(workspace["model"])
        assert os.path.exists(workspace["model"] + ".history.csv")

    def test_history_header(self, workspace):
        lines = open(workspace["model"] + ".history.csv").read().splitlines()
        assert lines[0] == "iteration,train_loss,valid_loss,train_metric,valid_metric"
        assert lines[1].startswith("0,")

    def test_grid_mismatch_exits_3(self, workspace, tmp_path, capsys):
        other = tmp_path / "other.ini"
        other.write_text(SMALL_CONFIG.replace("n_points = 40", "n_points = 50"))
        code = main(
            ["--config", str(other), "train", workspace["dataset"],
             str(tmp_path / "m.ckpt")]
        )
        assert code == EXIT_DATA
        assert "grid" in capsys.readouterr().err

    def test_missing_dataset_exits_3(self, workspace, tmp_path):
        code = main(
            ["--config", workspace["config"], "train",
             str(tmp_path / "nope.ds"), str(tmp_path / "m.ckpt")]
        )
        assert code == EXIT_DATA


class TestEvaluate:
    def test_classification_report(self, workspace, tmp_path, capsys):
        code = main(
            ["--out", str(tmp_path), "evaluate", workspace["model"],
             workspace["dataset"], "--split", "test"]
        )
        assert code == EXIT_OK
        text = capsys.readouterr().out
        assert "accuracy:" in text
        payload = json.loads((tmp_path / "evaluation.json").read_text())
        assert payload["split"] == "test"
        assert np.array(payload["confusion"]).sum() == 12

    def test_out_env_var(self, workspace, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("OHMICNET_OUT", str(tmp_path))
        assert main(
            ["evaluate", workspace["model"], workspace["dataset"]]
        ) == EXIT_OK
        assert (tmp_path / "evaluation.json").exists()

    def test_corrupt_checkpoint_exits_3(self, workspace, tmp_path):
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(b"not a checkpoint")
        assert main(["evaluate", str(bad), workspace["dataset"]]) == EXIT_DATA

    def test_regression_flow(self, workspace, tmp_path, capsys):
        config = tmp_path / "reg.ini"
        config.write_text(
            SMALL_CONFIG.replace("hidden = 16,8", "hidden = 16,8\ntask = s_only")
        )
        model = tmp_path / "reg.ckpt"
        assert main(
            ["--config", str(config), "train", workspace["dataset"], str(model)]
        ) == EXIT_OK
        assert main(
            ["--out", str(tmp_path), "evaluate", str(model), workspace["dataset"]]
        ) == EXIT_OK
        text = capsys.readouterr().out
        assert "mse[s]:" in text
        payload = json.loads((tmp_path / "evaluation.json").read_text())
        assert "s" in payload["per_target_mse"]


def _write_trajectory(path, values):
    with open(path, "w") as fh:
        fh.write("t,value\n")
        for i, v in enumerate(values):
            fh.write(f"{i * 0.025},{v}\n")


class TestPredict:
    def test_valid_trajectory(self, workspace, tmp_path, capsys):
        traj = tmp_path / "traj.csv"
        _write_trajectory(traj, np.cos(np.linspace(0, 10, 40)))
        assert main(["predict", workspace["model"], str(traj)]) == EXIT_OK
        result = json.loads(capsys.readouterr().out)
        assert result["task"] == "classification"
        probs = result["probabilities"]
        assert sum(probs.values()) == pytest.approx(1.0)
        assert result["predicted_class"] in probs

    def test_all_zero_input_is_total(self, workspace, tmp_path, capsys):
        traj = tmp_path / "zero.csv"
        _write_trajectory(traj, np.zeros(40))
        assert main(["predict", workspace["model"], str(traj)]) == EXIT_OK
        result = json.loads(capsys.readouterr().out)
        assert all(np.isfinite(v) for v in result["probabilities"].values())

    def test_wrong_length_exits_3(self, workspace, tmp_path, capsys):
        traj = tmp_path / "short.csv"
        _write_trajectory(traj, np.zeros(39))
        assert main(["predict", workspace["model"], str(traj)]) == EXIT_DATA
        assert "model expects" in capsys.readouterr().err

    def test_bad_header_exits_3(self, workspace, tmp_path):
        traj = tmp_path / "bad.csv"
        traj.write_text("time,amplitude\n0,1\n")
        assert main(["predict", workspace["model"], str(traj)]) == EXIT_DATA

    def test_non_finite_exits_3(self, workspace, tmp_path):
        traj = tmp_path / "nan.csv"
        _write_trajectory(traj, [float("nan")] * 40)
        assert main(["predict", workspace["model"], str(traj)]) == EXIT_DATA


class TestReproduce:
    def test_unknown_identifier_lists_valid(self, capsys):
        assert main(["reproduce", "fig99"]) == EXIT_CONFIG
        err = capsys.readouterr().err
        for name in ("regimeA-class", "fig4-sweep-smoke", "fig7-largest"):
            assert name in err
