"""CLI subcommands, exit codes, artifacts and reproducibility."""

import json

import numpy as np
import pytest

from conftest import small_run_config, tiny_config

from cellshare.cli import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    EXIT_RUNTIME,
    SEED_ENV_VAR,
    SUMMARY_HEADER,
    main,
)
from cellshare.config import dump_config
from cellshare.metrics import read_csv

RUN_FILES = ("metrics.csv", "sinr_samples.csv", "sumrate.csv",
             "overhead.csv", "run.json")


@pytest.fixture(autouse=True)
def _clean_seed_env(monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)


def _config_file(tmp_path, cfg, name="run.conf"):
    path = tmp_path / name
    path.write_text(dump_config(cfg))
    return str(path)


def test_missing_config_exits_io(tmp_path, capsys):
    code = main(["train", "--config", str(tmp_path / "nope.conf"),
                 "--out", str(tmp_path / "out")])
    assert code == EXIT_IO
    assert "nope.conf" in capsys.readouterr().err


def test_print_config_round_trips(tmp_path, capsys):
    assert main(["print-config"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "[network]" in text and "cells = 2" in text
    path = tmp_path / "defaults.conf"
    path.write_text(text)
    assert main(["print-config", "--config", str(path)]) == EXIT_OK
    assert capsys.readouterr().out == text


def test_train_writes_all_artifacts(tmp_path):
    conf = _config_file(tmp_path, small_run_config())
    out = tmp_path / "run"
    code = main(["train", "--config", conf, "--framework", "share-nothing",
                 "--seed", "3", "--out", str(out)])
    assert code == EXIT_OK
    for name in RUN_FILES:
        assert (out / name).is_file()
    info = json.loads((out / "run.json").read_text())
    assert info["status"] == "ok"
    assert info["framework"] == "share-nothing"
    assert info["seed"] == 3
    assert info["seed_env_override"] is False
    assert info["scalars_shared_total"] == 0
    assert info["final_epsilon"] == pytest.approx(0.99 ** 2)
    assert info["config"]["network"]["cells"] == 2
    header, rows = read_csv(str(out / "sumrate.csv"))
    assert header == ["episode", "sum_rate"]
    assert len(rows) == 2


def test_repeat_runs_are_byte_identical(tmp_path):
    conf = _config_file(tmp_path, small_run_config())
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        code = main(["train", "--config", conf, "--framework", "smart",
                     "--seed", "5", "--out", str(out), "--single-thread"])
        assert code == EXIT_OK
    for name in RUN_FILES:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_env_variable_overrides_seed(tmp_path, monkeypatch):
    conf = _config_file(tmp_path, small_run_config())
    monkeypatch.setenv(SEED_ENV_VAR, "7")
    out = tmp_path / "run"
    code = main(["train", "--config", conf, "--framework", "share-nothing",
                 "--seed", "0", "--out", str(out)])
    assert code == EXIT_OK
    info = json.loads((out / "run.json").read_text())
    assert info["seed"] == 7
    assert info["seed_env_override"] is True

    monkeypatch.setenv(SEED_ENV_VAR, "not-a-seed")
    assert main(["train", "--config", conf, "--out",
                 str(tmp_path / "bad")]) == EXIT_CONFIG


def test_training_fault_exits_runtime_with_partial_artifacts(tmp_path,
                                                             capsys):
    cfg = small_run_config(learning_rate=1e15)
    conf = _config_file(tmp_path, cfg)
    out = tmp_path / "run"
    with np.errstate(over="ignore", invalid="ignore"):
        code = main(["train", "--config", conf, "--framework",
                     "share-nothing", "--seed", "12", "--out", str(out)])
    assert code == EXIT_RUNTIME
    assert "aborted" in capsys.readouterr().err
    info = json.loads((out / "run.json").read_text())
    assert info["status"].startswith("aborted")
    assert (out / "metrics.csv").is_file()


def test_ccdf_fractions(tmp_path):
    samples = tmp_path / "sinr_samples.csv"
    samples.write_text("episode,cell,ue,sinr_db\n"
                       "0,0,0,4.2\n0,0,1,6\n0,1,0,7\n")
    out = tmp_path / "ccdf.csv"
    assert main(["ccdf", "--in", str(samples), "--out", str(out)]) == EXIT_OK
    header, rows = read_csv(str(out))
    assert header == ["threshold_db", "fraction"]
    assert rows[0] == ["4", "1"]
    assert ["5", "0.666666666667"] in rows
    assert rows[-1] == ["7", "0"]


def test_ccdf_rejects_malformed_rows(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("episode,cell,ue,sinr_db\n0,0,0,4.2\n0,0,1\n")
    code = main(["ccdf", "--in", str(bad), "--out",
                 str(tmp_path / "out.csv")])
    assert code == EXIT_IO
    assert "row 3" in capsys.readouterr().err
    missing = main(["ccdf", "--in", str(tmp_path / "absent.csv"),
                    "--out", str(tmp_path / "out.csv")])
    assert missing == EXIT_IO


def test_compare_writes_summary_and_run_dirs(tmp_path):
    conf = _config_file(tmp_path, small_run_config())
    out = tmp_path / "sweep"
    code = main(["compare", "--config", conf, "--frameworks",
                 "share-nothing,crdu", "--seeds", "1", "--out", str(out)])
    assert code == EXIT_OK
    header, rows = read_csv(str(out / "summary.csv"))
    assert header == list(SUMMARY_HEADER)
    # one seed row plus mean/std aggregates per framework
    assert len(rows) == 2 * 3
    seed_rows = [r for r in rows if r[-1] == "ok"]
    assert {r[0] for r in seed_rows} == {"share-nothing", "crdu"}
    nothing = next(r for r in seed_rows if r[0] == "share-nothing")
    assert nothing[4] == "0"  # no overhead scalars
    aggregates = [r for r in rows if r[-1] == "aggregate"]
    assert {(r[0], r[1]) for r in aggregates} == \
        {("share-nothing", "mean"), ("share-nothing", "std"),
         ("crdu", "mean"), ("crdu", "std")}
    assert (out / "share-nothing" / "seed0" / "run.json").is_file()
    assert (out / "crdu" / "seed0" / "metrics.csv").is_file()


def test_compare_rejects_unknown_framework(tmp_path, capsys):
    code = main(["compare", "--frameworks", "smart,bogus",
                 "--out", str(tmp_path / "sweep")])
    assert code == EXIT_CONFIG
    assert "bogus" in capsys.readouterr().err


def test_oracle_search_snapshot(tmp_path):
    conf = _config_file(tmp_path, tiny_config())
    out = tmp_path / "oracle.csv"
    code = main(["oracle", "--config", conf, "--seed", "4",
                 "--out", str(out)])
    assert code == EXIT_OK
    header, rows = read_csv(str(out))
    assert header == ["seed", "sum_rate",
                      "power_dbm_c0u0", "beam_c0u0",
                      "power_dbm_c1u0", "beam_c1u0"]
    assert len(rows) == 1
    assert rows[0][0] == "4"
    assert float(rows[0][1]) > 0.0
    assert int(rows[0][3]) in (0, 1)
