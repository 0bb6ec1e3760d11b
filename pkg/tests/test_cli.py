"""End-to-end tests for the matinfo command line."""

from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from matinfo import __version__
from matinfo.cli import main as cli_main
from matinfo.cli_helpers import exit_with_error, format_scalar, map_exception_to_exit_code
from matinfo.common.config import MatinfoSettings, limited_threads
from matinfo.common.constants import ExitCodes
from matinfo.common.errors import CheckpointFormatError, MissingClassError, SvdFailureError
from matinfo.core.collapse import simplex_etf
from matinfo.core.matrix_io import read_matrix, read_metrics_log, write_npy

SMALL_TRAIN = [
    "train", "--classes", "3", "--input-dim", "4", "--n-per-class", "20", "--noise", "0.5",
    "--hidden", "16,8", "--steps", "6", "--eval-interval", "3", "--batch-size", "16", "--seed", "3",
]


def _output(capsys) -> str:
    return capsys.readouterr().out.strip()


def test_no_args_shows_help(capsys):
    with pytest.raises(SystemExit) as exc:
        cli_main([])
    assert exc.value.code == ExitCodes.OK
    assert "usage: matinfo" in capsys.readouterr().out


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        cli_main(["--version"])
    assert exc.value.code == ExitCodes.OK
    assert capsys.readouterr().out.strip() == f"matinfo {__version__}"


def test_parse_failure_exits_with_usage_error():
    with pytest.raises(SystemExit) as exc:
        cli_main(["verify", "--suite", "bogus"])
    assert exc.value.code == ExitCodes.USAGE_ERROR


def test_cli_helpers(capsys):
    with pytest.raises(SystemExit) as exc:
        exit_with_error("boom", ExitCodes.DATA_INVARIANT_VIOLATION)
    assert exc.value.code == 3
    assert "Error: boom" in capsys.readouterr().err
    assert map_exception_to_exit_code(CheckpointFormatError("x")) == ExitCodes.USAGE_ERROR
    assert map_exception_to_exit_code(MissingClassError(4)) == ExitCodes.DATA_INVARIANT_VIOLATION
    assert map_exception_to_exit_code(SvdFailureError("x")) == ExitCodes.DATA_INVARIANT_VIOLATION
    assert map_exception_to_exit_code(RuntimeError("x")) is None
    assert format_scalar(-0.0) == "0.000000000000"
    assert format_scalar(-1e-15) == "0.000000000000"


def test_entropy_of_identity_gram(tmp_path, capsys):
    path = tmp_path / "identity.npy"
    write_npy(path, np.eye(10))
    cli_main(["entropy", str(path), "--as-gram"])
    assert _output(capsys) == "2.302585092994"


def test_entropy_from_csv_features(tmp_path, capsys):
    path = tmp_path / "features.csv"
    path.write_text("1,0\n0,1\n", encoding="utf-8")
    cli_main(["entropy", str(path)])
    assert _output(capsys) == format_scalar(np.log(2.0))


def test_mir_and_hdr_of_etf(tmp_path, capsys):
    path = tmp_path / "etf.npy"
    write_npy(path, simplex_etf(3, 3, seed=0).data)
    cli_main(["mir", str(path), str(path)])
    assert float(_output(capsys)) == pytest.approx(0.5, abs=1e-11)
    cli_main(["hdr", str(path), str(path)])
    assert _output(capsys) == "0.000000000000"


def test_erank_of_etf(tmp_path, capsys):
    path = tmp_path / "etf.npy"
    write_npy(path, simplex_etf(5, 8, seed=2).data)
    cli_main(["erank", str(path)])
    assert float(_output(capsys)) == pytest.approx(4.0, abs=1e-9)


def test_invalid_gram_exits_with_data_error(tmp_path, capsys):
    path = tmp_path / "bad.npy"
    write_npy(path, np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(SystemExit) as exc:
        cli_main(["entropy", str(path), "--as-gram"])
    assert exc.value.code == ExitCodes.DATA_INVARIANT_VIOLATION
    assert "entropy failed" in capsys.readouterr().err


def test_missing_file_exits_with_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli_main(["entropy", str(tmp_path / "missing.npy")])
    assert exc.value.code == ExitCodes.USAGE_ERROR


def test_etf_command_writes_equiangular_frame(tmp_path, capsys):
    out = tmp_path / "etf10.npy"
    cli_main(["etf", "--classes", "10", "--dim", "64", "--seed", "0", "--out", str(out)])
    assert "Wrote" in _output(capsys)
    means = read_matrix(out)
    assert means.shape == (64, 10)
    K = means.T @ means
    assert np.allclose(K[~np.eye(10, dtype=bool)], -1.0 / 9.0, atol=1e-10)


def test_etf_command_rejects_small_dimension(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli_main(["etf", "--classes", "6", "--dim", "4", "--out", str(tmp_path / "x.npy")])
    assert exc.value.code == ExitCodes.DATA_INVARIANT_VIOLATION


def _write_collapsed(tmp_path, classes: int):
    means = simplex_etf(10, 16, seed=1).data
    labels = np.repeat(np.arange(classes), 3)
    write_npy(tmp_path / "features.npy", means[:, labels])
    np.save(tmp_path / "labels.npy", labels)
    write_npy(tmp_path / "weights.npy", means)
    return [
        "nc-check",
        "--features", str(tmp_path / "features.npy"),
        "--labels", str(tmp_path / "labels.npy"),
        "--weights", str(tmp_path / "weights.npy"),
    ]


def test_nc_check_reports_json(tmp_path, capsys):
    cli_main(_write_collapsed(tmp_path, 10))
    report = json.loads(capsys.readouterr().out)
    assert report["nc1_residual"] <= 1e-9
    assert report["nc2_residual"] <= 1e-9
    assert report["nc3_residual"] <= 1e-9
    assert report["mir_target"] == pytest.approx(1 / 9 + 8 * np.log(8) / (9 * np.log(9)), abs=1e-12)
    assert report["mir_observed"] == pytest.approx(report["mir_target"], abs=1e-9)


def test_nc_check_missing_class_exits_with_data_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        cli_main(_write_collapsed(tmp_path, 9))
    assert exc.value.code == ExitCodes.DATA_INVARIANT_VIOLATION
    assert "9" in capsys.readouterr().err


@pytest.mark.parametrize("suite", ["nc", "lemmas", "gradients"])
def test_verify_suites_pass(suite, capsys):
    cli_main(["verify", "--suite", suite, "--instances", "3", "--seed", "0"])
    out = _output(capsys)
    assert f"suite {suite}: 3/3 instances passed" in out
    assert "FAIL" not in out
    if suite == "gradients":
        assert "max relative error:" in out


def test_train_rejects_cma_weight_above_one(capsys):
    with pytest.raises(SystemExit) as exc:
        cli_main(SMALL_TRAIN + ["--loss", "ce+cma", "--lambda", "1.5"])
    assert exc.value.code == ExitCodes.USAGE_ERROR
    assert "invalid training configuration" in capsys.readouterr().err


def test_train_writes_log_and_checkpoint(tmp_path, capsys):
    log_path = tmp_path / "run.jsonl"
    ckpt = tmp_path / "a.json"
    cli_main(SMALL_TRAIN + ["--loss", "ce+mi", "--lambda", "0.1", "--log", str(log_path), "--ckpt-out", str(ckpt)])
    out = _output(capsys).splitlines()
    assert [line.split(":")[0] for line in out] == ["step 6 train", "step 6 test"]
    records = read_metrics_log(log_path)
    assert [(r.step, r.split) for r in records] == [
        (0, "train"), (0, "test"), (3, "train"), (3, "test"), (6, "train"), (6, "test"),
    ]
    document = json.loads(ckpt.read_text(encoding="utf-8"))
    assert document["step"] == 6
    assert document["config"]["loss"] == {"kind": "ce+mi", "weight": 0.1}


def test_interpolate_writes_csv(tmp_path, capsys):
    first, second, out = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "curve.csv"
    cli_main(SMALL_TRAIN + ["--ckpt-out", str(first)])
    cli_main(SMALL_TRAIN + ["--data-seed", "11", "--ckpt-out", str(second)])
    capsys.readouterr()
    cli_main(["interpolate", "--ckpt-a", str(first), "--ckpt-b", str(second), "--steps", "20", "--out", str(out)])
    with open(out, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["omega", "accuracy", "mir", "hdr"]
    assert len(rows) == 22
    assert [row[0] for row in rows[1:]] == [f"{i / 20:.2f}" for i in range(21)]
    assert all(0.0 <= float(row[1]) <= 1.0 for row in rows[1:])


def test_interpolate_rejects_unreadable_checkpoint(tmp_path):
    bogus = tmp_path / "bogus.json"
    bogus.write_text("[]", encoding="utf-8")
    with pytest.raises(SystemExit) as exc:
        cli_main(["interpolate", "--ckpt-a", str(bogus), "--ckpt-b", str(bogus)])
    assert exc.value.code == ExitCodes.USAGE_ERROR


@pytest.mark.parametrize("raw, expected", [(None, 1), ("4", 4), ("zero", 1), ("-2", 1), (" 2 ", 2)])
def test_settings_thread_count(raw, expected):
    environ = {} if raw is None else {"MATINFO_THREADS": raw}
    assert MatinfoSettings(environ).threads() == expected


def test_limited_threads_yields_configured_count():
    with limited_threads(MatinfoSettings({"MATINFO_THREADS": "2"})) as threads:
        assert threads == 2


def test_directory_as_matrix_exits_with_usage_error(tmp_path, capsys):
    directory = tmp_path / "features.npy"
    directory.mkdir()
    with pytest.raises(SystemExit) as exc:
        cli_main(["entropy", str(directory)])
    assert exc.value.code == ExitCodes.USAGE_ERROR
    assert "cannot read" in capsys.readouterr().err


def test_train_log_into_directory_exits_with_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli_main(SMALL_TRAIN + ["--log", str(tmp_path)])
    assert exc.value.code == ExitCodes.USAGE_ERROR


def test_train_checkpoint_into_directory_exits_with_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli_main(SMALL_TRAIN + ["--ckpt-out", str(tmp_path)])
    assert exc.value.code == ExitCodes.USAGE_ERROR


def test_interpolate_output_into_directory_exits_with_usage_error(tmp_path, capsys):
    ckpt = tmp_path / "a.json"
    cli_main(SMALL_TRAIN + ["--ckpt-out", str(ckpt)])
    with pytest.raises(SystemExit) as exc:
        cli_main(["interpolate", "--ckpt-a", str(ckpt), "--ckpt-b", str(ckpt), "--steps", "2", "--out", str(tmp_path)])
    assert exc.value.code == ExitCodes.USAGE_ERROR
    assert "cannot write" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        cli_main(["interpolate", "--ckpt-a", str(tmp_path), "--ckpt-b", str(ckpt)])
    assert exc.value.code == ExitCodes.USAGE_ERROR


def test_train_accepts_bias_std(tmp_path):
    ckpt = tmp_path / "a.json"
    cli_main(SMALL_TRAIN + ["--bias-std", "0.25", "--ckpt-out", str(ckpt)])
    document = json.loads(ckpt.read_text(encoding="utf-8"))
    assert document["config"]["bias_std"] == 0.25


@pytest.mark.parametrize("argv, expected", [([], "DEBUG"), (["--log-level", "ERROR"], "ERROR")])
def test_log_level_resolution(monkeypatch, argv, expected):
    levels = []
    monkeypatch.setenv("MATINFO_LOG_LEVEL", "DEBUG")
    monkeypatch.setattr("matinfo.cli.configure_logging", levels.append)
    cli_main(argv + ["verify", "--suite", "nc", "--instances", "1"])
    assert levels == [expected]


def test_settings_log_level():
    assert MatinfoSettings({}).log_level() is None
    assert MatinfoSettings({"MATINFO_LOG_LEVEL": "info"}).log_level() == "info"
