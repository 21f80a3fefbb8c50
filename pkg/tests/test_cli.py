import json
import subprocess
import sys

import pytest

from knapdep.cli import main
from knapdep.core import loads_instance


def cli(*argv):
    return main(list(argv))


def run_pipe(argv, stdin_text=""):
    return subprocess.run(
        [sys.executable, "-m", "knapdep.cli", *argv],
        input=stdin_text,
        capture_output=True,
        text=True,
    )


@pytest.fixture
def instance_file(tmp_path, capsys):
    path = tmp_path / "inst.json"
    assert cli("gen", "--n", "6", "--k", "2", "--seed", "3", "--out", str(path)) == 0
    capsys.readouterr()
    return path


class TestGen:
    def test_empty_instance(self, capsys):
        assert cli("gen", "--family", "uniform", "--n", "0", "--seed", "1") == 0
        out = capsys.readouterr().out
        inst = loads_instance(out)
        assert inst.num_items == 0

    def test_deterministic_bytes(self, capsys):
        cli("gen", "--n", "5", "--seed", "1")
        first = capsys.readouterr().out
        cli("gen", "--n", "5", "--seed", "1")
        assert capsys.readouterr().out == first

    def test_staircase_prefix_files(self, tmp_path, capsys):
        base = tmp_path / "stair"
        assert cli(
            "gen", "--family", "staircase", "--theta", "4", "--alpha", "1",
            "--capacity", "1", "--eps", "0.5", "--dlo", "2", "--t", "10",
            "--levels", "3", "--out", str(base),
        ) == 0
        capsys.readouterr()
        files = sorted(tmp_path.glob("stair_prefix*.json"))
        assert len(files) == 3
        sizes = [loads_instance(p.read_text()).num_items for p in files]
        assert sizes == [2, 4, 6]

    def test_staircase_single_level_to_stdout(self, capsys):
        assert cli(
            "gen", "--family", "staircase", "--theta", "4", "--alpha", "1",
            "--capacity", "1", "--dlo", "2", "--t", "10", "--levels", "2",
            "--level", "1",
        ) == 0
        inst = loads_instance(capsys.readouterr().out)
        assert inst.num_items == 1

    def test_unknown_flag_exits_2(self):
        result = run_pipe(["gen", "--bogus"])
        assert result.returncode == 2
        assert "usage" in result.stderr


class TestValidate:
    def test_valid_instance(self, instance_file, capsys):
        assert cli("validate", "--input", str(instance_file), "--strict") == 0
        report = json.loads(capsys.readouterr().out)
        assert report["ok"] is True

    def test_strict_violation_exits_1(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        data = {
            "horizon": 10,
            "knapsacks": [
                {"capacity": 10.0, "theta": 4.0, "duration_lo": 1,
                 "duration_hi": 4, "size_cap": 10.0}
            ],
            "items": [
                {"id": 0, "arrival": 1, "options": [
                    {"eligible": True, "size": 2.0, "value": 1.0,
                     "start": 1, "duration": 2}  # density 0.25
                ]}
            ],
        }
        path.write_text(json.dumps(data))
        assert cli("validate", "--input", str(path)) == 0  # lax: warning only
        capsys.readouterr()
        assert cli("validate", "--input", str(path), "--strict") == 1

    def test_unreadable_file_exits_1(self, capsys):
        assert cli("validate", "--input", "/nonexistent/x.json") == 1
        assert "/nonexistent/x.json" in capsys.readouterr().err


class TestRunOpt:
    def test_run_single_item_profit(self, tmp_path, capsys):
        path = tmp_path / "one.json"
        data = {
            "horizon": 10,
            "knapsacks": [
                {"capacity": 10.0, "theta": 4.0, "duration_lo": 1,
                 "duration_hi": 4, "size_cap": 10.0}
            ],
            "items": [
                {"id": 0, "arrival": 1, "options": [
                    {"eligible": True, "size": 1.0, "value": 7.0,
                     "start": 1, "duration": 2}
                ]}
            ],
        }
        path.write_text(json.dumps(data))
        assert cli("run", "--input", str(path)) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["profit"] == 7.0

    def test_opt_methods_agree(self, instance_file, capsys):
        assert cli("opt", "--input", str(instance_file)) == 0
        exact = json.loads(capsys.readouterr().out)
        assert cli("opt", "--input", str(instance_file), "--method", "bruteforce") == 0
        brute = json.loads(capsys.readouterr().out)
        assert exact["objective"] == brute["objective"]
        assert exact["proof"] == "exact"

    def test_pipe_gen_run_and_opt(self):
        gen = run_pipe(["gen", "--n", "5", "--seed", "2"])
        assert gen.returncode == 0
        ran = run_pipe(["run"], stdin_text=gen.stdout)
        assert ran.returncode == 0
        profit = json.loads(ran.stdout)["profit"]
        opt = run_pipe(["opt"], stdin_text=gen.stdout)
        assert opt.returncode == 0
        objective = json.loads(opt.stdout)["objective"]
        assert profit <= objective + 1e-9


class TestBenchTune:
    def make_suite(self, tmp_path, capsys, n=8, count=3):
        suite_dir = tmp_path / "suite"
        suite_dir.mkdir(exist_ok=True)
        paths = []
        for seed in range(count):
            p = suite_dir / f"s{seed}.json"
            assert cli(
                "gen", "--n", str(n), "--seed", str(seed), "--out", str(p)
            ) == 0
            paths.append(p)
        capsys.readouterr()
        return paths

    def test_bench_matches_per_instance_opt(self, tmp_path, capsys):
        paths = self.make_suite(tmp_path, capsys)
        assert cli("bench", "--input", str(tmp_path / "suite"), "--out", str(tmp_path / "rep")) == 0
        capsys.readouterr()
        report = json.loads((tmp_path / "rep.json").read_text())
        opts = {}
        for p in paths:
            assert cli("opt", "--input", str(p)) == 0
            opts[p.name] = json.loads(capsys.readouterr().out)["objective"]
        for row in report["rows"]:
            assert row["opt"] == opts[row["instance_id"]]
            assert row["opt_tag"] == "exact"
        csv_text = (tmp_path / "rep.csv").read_text()
        assert csv_text.splitlines()[0] == (
            "instance_id,n_items,alg,opt,opt_tag,ratio,infinite,error"
        )

    def test_bench_stdout_json(self, tmp_path, capsys):
        self.make_suite(tmp_path, capsys, count=2)
        assert cli("bench", "--input", str(tmp_path / "suite")) == 0
        data = json.loads(capsys.readouterr().out)
        assert "empirical_cr" in data and len(data["rows"]) == 2

    def test_bench_reproducible_bytes(self, tmp_path, capsys):
        self.make_suite(tmp_path, capsys, count=2)
        cli("bench", "--input", str(tmp_path / "suite"), "--out", str(tmp_path / "a"))
        cli("bench", "--input", str(tmp_path / "suite"), "--out", str(tmp_path / "b"))
        capsys.readouterr()
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_bench_config_file(self, tmp_path, capsys):
        paths = self.make_suite(tmp_path, capsys, count=2)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "instances": [str(p) for p in paths],
            "threshold": {"kind": "exponential", "gamma": "auto"},
            "exact_cutoff": 12,
        }))
        assert cli("bench", "--config", str(cfg)) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["config"]["exact_cutoff"] == 12

    def test_tune_outputs(self, tmp_path, capsys):
        self.make_suite(tmp_path, capsys, count=2)
        assert cli(
            "tune", "--input", str(tmp_path / "suite"), "--grid-points", "5",
            "--out", str(tmp_path / "tuned"),
        ) == 0
        data = json.loads((tmp_path / "tuned.json").read_text())
        assert data["method"] == "band-constrained-grid-search"
        for gamma, (lo, hi) in zip(data["gammas"], data["bands"]):
            assert lo <= gamma <= hi
        curve = (tmp_path / "tuned.curve.csv").read_text()
        assert curve.startswith("multiplier,mean_profit\n")

    def test_missing_input_usage_error(self):
        result = run_pipe(["bench"])
        assert result.returncode == 2
