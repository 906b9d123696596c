import csv
import json
import subprocess
import sys

import pytest

from dynsample.cli import SUMMARY_COLUMNS, main

CONFIG = {"steps": 8, "batch_size": 8, "seed": 1,
          "environment": {"n_samples": 120, "eta1": 0.2, "eta2": 0.01}}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(CONFIG))
    return path


def test_run_writes_outputs(config_file, tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--config", str(config_file), "--out", str(out)]) == 0
    assert {p.name for p in out.iterdir()} == {"metrics.csv", "config.json", "estimator_final.json"}


def test_run_seed_override(config_file, tmp_path):
    main(["run", "--config", str(config_file), "--out", str(tmp_path / "a"), "--seed", "7"])
    assert json.loads((tmp_path / "a" / "config.json").read_text())["seed"] == 7


def test_sweep_and_compare(config_file, tmp_path):
    root = tmp_path / "sw"
    assert main(["sweep", "--config", str(config_file), "--strategies", "thompson,random,dapo",
                 "--seeds", "2", "--out", str(root)]) == 0
    with open(root / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6
    assert tuple(rows[0]) == SUMMARY_COLUMNS
    assert {r["strategy"] for r in rows} == {"thompson", "random", "dapo"}

    dest = tmp_path / "cmp.csv"
    runs = [str(root / "thompson" / "seed_0"), str(root / "dapo" / "seed_1")]
    assert main(["compare", "--runs", *runs, "--out", str(dest)]) == 0
    with open(dest) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["strategy"] for r in rows] == ["thompson", "dapo"]
    assert int(rows[1]["final_cumulative_rollouts"]) >= int(rows[0]["final_cumulative_rollouts"])


def test_bad_config_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"batch_size": 500, "n_samples": 100}))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) != 0
    assert "batch_size" in capsys.readouterr().err
    assert not (tmp_path / "x").exists()


def test_unknown_strategy_in_sweep(config_file, tmp_path):
    assert main(["sweep", "--config", str(config_file), "--strategies", "ucb",
                 "--out", str(tmp_path / "s")]) != 0


def test_module_entry_point_byte_identical(config_file, tmp_path):
    for name in ("a", "b"):
        subprocess.run([sys.executable, "-m", "dynsample.cli", "run", "--config", str(config_file),
                        "--out", str(tmp_path / name)], check=True)
    assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()
