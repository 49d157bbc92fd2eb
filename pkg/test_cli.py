"""End-to-end tests of the covertslot command line on tiny manifests"""

import csv
import json

import pytest
import yaml
from click.testing import CliRunner

from conftest import EXPERIMENTS_DIR
from src import __version__
from src.cli import DETECT_HEADER, SWEEP_HEADER, achieved_series, cli
from src.experiment_workflow import SIMULATE_HEADER

TINY_AWGN = {
    "name": "tiny_awgn",
    "channel": {"kind": "awgn", "sigma_b2": 0.25, "sigma_w2": 1.0},
    "n_list": [1000],
    "slot_rule": {"rule": "fixed", "L": 10},
    "trials": 20,
    "tv_trials": 0,
    "max_codewords": 16,
}


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def _rows(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert f"covertslot v{__version__}" in result.output


def test_bounds(runner, tmp_path):
    result = runner.invoke(cli, ["bounds", str(EXPERIMENTS_DIR / "dmc_desk.yaml"), "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "dmc_desk_bounds.json").read_text())
    assert report["capacity"]["upper"] > report["capacity"]["lower"] > 0
    (point,) = report["points"]
    assert point["status"] == "ok"
    assert point["n"] == 10_000 and point["L"] == 100
    assert point["log_M"] > 0


def test_bounds_reports_infeasible_points(runner, tmp_path):
    args = ["bounds", str(EXPERIMENTS_DIR / "dmc_desk.yaml"), "--n", "16", "--n", "10000", "--out", str(tmp_path)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.output
    points = json.loads((tmp_path / "dmc_desk_bounds.json").read_text())["points"]
    assert [p["status"] for p in points] == ["infeasible", "ok"]
    assert "1 infeasible" in result.output


def test_simulate(runner, write_manifest, tmp_path):
    result = runner.invoke(cli, ["simulate", str(write_manifest(TINY_AWGN))])
    assert result.exit_code == 0, result.output
    rows = _rows(tmp_path / "results" / "tiny_awgn_simulate.csv")
    assert rows[0] == SIMULATE_HEADER
    assert len(rows) == 2
    assert rows[1][SIMULATE_HEADER.index("status")] == "ok"
    assert rows[1][SIMULATE_HEADER.index("tv_reference")] == "pinsker_bound"


def test_detect(runner, write_manifest, tmp_path):
    manifest = write_manifest(
        {
            "name": "tiny_detect",
            "channel": {"kind": "bsc", "bob_crossover": 0.05, "willie_crossover": 0.1},
            "n_list": [200],
            "slot_rule": {"rule": "polynomial", "kappa": 1.0},
            "trials": 500,
            "detect_codewords": 32,
        }
    )
    result = runner.invoke(cli, ["detect", str(manifest)])
    assert result.exit_code == 0, result.output
    rows = _rows(tmp_path / "results" / "tiny_detect_detect.csv")
    assert rows[0] == DETECT_HEADER
    branches = {row[DETECT_HEADER.index("branch")]: row for row in rows[1:]}
    assert set(branches) == {"above", "below"}
    total = DETECT_HEADER.index("sum")
    assert float(branches["above"][total]) < float(branches["below"][total])


def test_detect_single_slot(runner, write_manifest, tmp_path):
    manifest = write_manifest({**TINY_AWGN, "name": "one_slot", "slot_rule": {"rule": "fixed", "L": 1}})
    result = runner.invoke(cli, ["detect", str(manifest)])
    assert result.exit_code == 0, result.output
    rows = _rows(tmp_path / "results" / "one_slot_detect.csv")
    assert all(row[-1].startswith("infeasible") for row in rows[1:])


def _column(rows, name):
    index = rows[0].index(name)
    return [row[index] for row in rows[1:]]


def test_sweep(runner, write_manifest, tmp_path):
    result = runner.invoke(cli, ["sweep", str(write_manifest({**TINY_AWGN, "name": "tiny_sweep"}))])
    assert result.exit_code == 0, result.output
    rows = _rows(tmp_path / "results" / "tiny_sweep_sweep.csv")
    assert rows[0] == SWEEP_HEADER
    reliable = _column(rows, "reliable")
    assert (tmp_path / "results" / "tiny_sweep_sweep.svg").exists() == ("true" in reliable)


def test_sweep_leaves_unreliable_points_off_the_chart(runner, write_manifest, tmp_path, monkeypatch):
    monkeypatch.setattr("src.experiment_workflow.RELIABILITY_TARGET", 0.0)
    result = runner.invoke(cli, ["sweep", str(write_manifest({**TINY_AWGN, "name": "tiny_sweep"}))])
    assert result.exit_code == 0, result.output
    rows = _rows(tmp_path / "results" / "tiny_sweep_sweep.csv")
    assert _column(rows, "status") == ["ok"]
    assert _column(rows, "reliable") == ["false"]
    assert not (tmp_path / "results" / "tiny_sweep_sweep.svg").exists()


class TestAchievedSeries:
    LINES = {"lower_bound": 1.414, "upper_bound": 2.0, "target": 1.0}

    def _row(self, n, status="ok", reliable=True, throughput=0.9):
        return {"n": n, "status": status, "reliable": reliable, "normalized_throughput": throughput}

    def test_keeps_reliable_points_only(self):
        rows = [
            self._row(100, reliable=False, throughput=1.9),
            self._row(16, status="infeasible: n=16 too small", reliable=None, throughput=None),
            self._row(1000, throughput=0.8),
            self._row(10_000, throughput=0.95),
        ]
        series = achieved_series(rows, self.LINES)
        assert series.n == [1000, 10_000]
        assert series.achieved == [0.8, 0.95]
        assert (series.lower, series.upper, series.target) == (1.414, 2.0, 1.0)

    def test_nothing_to_draw(self):
        assert achieved_series([self._row(100, reliable=False)], self.LINES) is None
        assert achieved_series([self._row(100)], {}) is None


@pytest.mark.slow
def test_default_awgn_sweep_approaches_target(runner, write_manifest, tmp_path):
    shipped = yaml.safe_load((EXPERIMENTS_DIR / "awgn_sweep.yaml").read_text())
    manifest = write_manifest({**shipped, "output_dir": str(tmp_path / "results"), "max_codewords": 16})
    result = runner.invoke(cli, ["sweep", str(manifest)])
    assert result.exit_code == 0, result.output
    rows = _rows(tmp_path / "results" / "awgn_sweep_sweep.csv")[1:]
    column = {name: i for i, name in enumerate(SWEEP_HEADER)}
    ok = [row for row in rows if row[column["status"]] == "ok"]
    assert ok
    for row in ok:
        assert float(row[column["normalized_throughput"]]) <= float(row[column["upper_bound"]])
    largest = max(ok, key=lambda row: int(row[column["n"]]))
    assert int(largest[column["n"]]) == 10_000
    assert largest[column["reliable"]] == "true"
    target = float(largest[column["target"]])
    assert float(largest[column["normalized_throughput"]]) == pytest.approx(target, rel=0.1)


def test_simulate_is_reproducible(runner, write_manifest, tmp_path):
    manifest = write_manifest({**TINY_AWGN, "name": "repeat", "tv_trials": 200, "master_seed": 11})
    for out in ("first", "second"):
        result = runner.invoke(cli, ["simulate", str(manifest), "--out", str(tmp_path / out)])
        assert result.exit_code == 0, result.output

    def data_columns(out):
        rows = _rows(tmp_path / out / "repeat_simulate.csv")
        keep = [i for i, name in enumerate(rows[0]) if name != "runtime_s"]
        return [[row[i] for i in keep] for row in rows]

    first = data_columns("first")
    assert len(first) == 2
    assert first == data_columns("second")


class TestOracleCheck:
    @pytest.fixture
    def grid(self, write_manifest):
        return write_manifest(
            {
                "name": "tiny_oracle",
                "channel": {"kind": "bsc", "bob_crossover": 0.1, "willie_crossover": 0.1},
                "n_list": [1],
                "oracle": {
                    "n_max": 2,
                    "L_max": 2,
                    "alphas": [0.3, 0.6],
                    "channels": 3,
                    "codebooks": 2,
                    "tests_per_instance": 5,
                    "tv_trials": 0,
                },
            }
        )

    def test_passes(self, runner, grid, tmp_path):
        result = runner.invoke(cli, ["oracle-check", str(grid)])
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "results" / "tiny_oracle_oracle.json").read_text())
        assert report["passed"]
        assert {c["name"] for c in report["checks"]} == {
            "slot_kl_dominance",
            "pinsker",
            "slot_convexity",
            "hypothesis_testing",
        }

    def test_shrunken_bound_fails(self, runner, grid, tmp_path):
        result = runner.invoke(cli, ["oracle-check", str(grid), "--bound-scale", "0.01"])
        assert result.exit_code == 1
        report = json.loads((tmp_path / "results" / "tiny_oracle_oracle.json").read_text())
        dominance = next(c for c in report["checks"] if c["name"] == "slot_kl_dominance")
        assert dominance["failures"] > 0
        assert dominance["worst_margin"] < 0


def test_invalid_manifest(runner, write_manifest):
    manifest = write_manifest({**TINY_AWGN, "surprise": True})
    result = runner.invoke(cli, ["simulate", str(manifest)])
    assert result.exit_code == 1
    assert "❌" in result.output
