import csv

import pytest

from fedmarket import cli
from fedmarket.config import resolve_path
from fedmarket.records import InvariantViolation, read_manifest, read_run_record

SMALL_BENCH = """\
[experiment]
seeds = [1]

[experiment.bench]
mechanisms = ["circuit", "opt_price"]
num_agents = 20
trials = 1
"""


def run(*argv):
    return cli.main(list(argv))


def rows(path):
    return list(csv.DictReader(path.open()))


def test_simulate_outputs(tmp_path):
    assert run("simulate", "--config", "paper_mnist_like", "--out", str(tmp_path)) == 0
    record = read_run_record(tmp_path / "run_seed0.json")
    assert len(record.rounds) == 6
    assert len(rows(tmp_path / "trajectory_seed0.csv")) == 18
    assert read_manifest(tmp_path / "manifest.json")["command"] == "simulate"


def test_simulate_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run("simulate", "--config", "paper_mnist_like", "--seed", "42", "--out", str(tmp_path / d)) == 0
    for name in ("trajectory_seed42.csv", "run_seed42.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_validation_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[mechanism]\nnum_clients = 1\nnum_rounds = 2\n")
    assert run("simulate", "--config", str(bad), "--out", str(tmp_path / "o")) == 1
    err = capsys.readouterr().err
    assert "mechanism.num_clients" in err and "bad.toml:2" in err


def test_missing_section_is_validation_error(tmp_path):
    assert run("sweep-bids", "--config", "bench_circuit", "--out", str(tmp_path)) == 1


def test_io_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run("simulate", "--config", "paper_mnist_like", "--out", str(blocker)) == 2
    assert run("simulate", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path)) == 2


def test_internal_exit_code(tmp_path, monkeypatch):
    def broken(*_):
        raise InvariantViolation("boom")

    monkeypatch.setitem(cli.COMMANDS, "simulate", broken)
    assert run("simulate", "--config", "paper_mnist_like", "--out", str(tmp_path)) == 3


def test_bad_parallel(tmp_path):
    assert run("simulate", "--config", "paper_mnist_like", "--out", str(tmp_path), "--parallel", "0") == 1


def test_sweep_identity_matches_simulate(tmp_path):
    cfg = tmp_path / "s.toml"
    base = resolve_path("paper_mnist_like").read_text()
    cfg.write_text(base.replace("grid = [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0]", "grid = [0.5]"))
    assert run("sweep-bids", "--config", str(cfg), "--out", str(tmp_path / "sw")) == 0
    assert run("simulate", "--config", str(cfg), "--out", str(tmp_path / "sim")) == 0
    (point,) = [r for r in rows(tmp_path / "sw" / "sweep_seed0.csv") if r["row_type"] == "point"]
    sim = read_run_record(tmp_path / "sim" / "run_seed0.json")
    assert point["cumulative_utility"] == f"{sim.cumulative_utilities[1]:.9f}"


def test_sweep_reference_grid(tmp_path):
    assert run("sweep-bids", "--config", "paper_mnist_like", "--out", str(tmp_path)) == 0
    table = rows(tmp_path / "sweep_seed0.csv")
    assert table[0]["row_type"] == "deviator" and table[0]["valuation"] == "0.5"
    points = table[1:]
    assert [float(r["bid"]) for r in points] == [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0]
    assert points[0]["wins"] == "0" and points[0]["total_transfer"] == "0.000000000"


def test_bench_single_trial_and_oracle(tmp_path):
    cfg = tmp_path / "b.toml"
    cfg.write_text(SMALL_BENCH)
    assert run("bench-competitive", "--config", str(cfg), "--out", str(tmp_path)) == 0
    summary = {r["mechanism"]: r for r in rows(tmp_path / "bench_summary_seed1.csv")}
    assert summary["circuit"]["trials"] == "1"
    assert summary["opt_price"]["ratio_of_means"] == "1.0"


def test_robustness_command(tmp_path):
    assert run("eval-robustness", "--config", "robustness", "--out", str(tmp_path)) == 0
    errors = [float(r["max_error"]) for r in rows(tmp_path / "robustness_seed0.csv")]
    assert errors[:3] == [0.0, 0.0, 0.0]
    assert errors[-1] == pytest.approx(0.4)


def test_market_command(tmp_path):
    assert run("market", "--config", "market", "--out", str(tmp_path)) == 0
    assert all(r["feasible"] == "1" for r in rows(tmp_path / "market_seed0.csv"))


def test_parallel_matches_serial(tmp_path):
    cfg = tmp_path / "p.toml"
    cfg.write_text(resolve_path("paper_mnist_like").read_text().replace("seeds = [0]", "seeds = [0, 1, 2]"))
    assert run("simulate", "--config", str(cfg), "--out", str(tmp_path / "s")) == 0
    assert run("simulate", "--config", str(cfg), "--out", str(tmp_path / "p"), "--parallel", "2") == 0
    for seed in (0, 1, 2):
        name = f"trajectory_seed{seed}.csv"
        assert (tmp_path / "s" / name).read_bytes() == (tmp_path / "p" / name).read_bytes()
