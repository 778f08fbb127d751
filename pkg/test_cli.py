#!/usr/bin/env python3
"""
Tests for the ergolab command line: exit codes, config files and manifests
"""

import json

import pandas as pd
import pytest

import ergolab.main as cli
from ergolab.config import MANIFEST_NAME, RunConfig, parse_config_text, resolve_config, write_manifest
from ergolab.errors import ConfigurationError
from ergolab.simulations.reports import ExperimentReport

SMALL = ["--p1", "n^5", "--p2", "2*n^5", "--M", "2", "--horizon", "4", "--f", "list:3",
         "--samples", "8", "--omega-per-point", "4", "--budget", "1000000", "--workers", "1"]


def test_llt_run_writes_results(tmp_path):
    code = cli.run(["llt", "--llt-n", "100,400", "--out", str(tmp_path)])
    assert code == cli.EXIT_OK
    for name in ("llt.json", "llt.csv", "llt_levels_n100.csv", "llt_levels_n400.csv", MANIFEST_NAME, "timing.json"):
        assert (tmp_path / name).exists()
    levels = pd.read_csv(tmp_path / "llt_levels_n100.csv", dtype={"mass_numerator": str, "mass_denominator": str})
    assert levels["x"].tolist() == list(range(-100, 101))
    assert levels["mass"].sum() == pytest.approx(1.0)
    assert levels["mass_numerator"].iloc[0] == "1"
    assert levels["mass_denominator"].iloc[0] == str(4 ** 100)


def test_triple_with_every_index_flipped(tmp_path):
    argv = ["triple", *SMALL, "--f", "all", "--n-from", "M", "--n-to", "M+3", "--out", str(tmp_path)]
    assert cli.run(argv) == cli.EXIT_OK
    assert (tmp_path / "triple.json").exists()


def test_low_degree_is_a_config_error(tmp_path, capsys):
    config = tmp_path / "run.cfg"
    config.write_text("p1=n^4\n")
    code = cli.run(["certify", "--config", str(config), "--out", str(tmp_path / "out")])
    assert code == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert f"{config}:1:4:" in err
    assert "degree 4 < 5" in err


def test_low_degree_flag_is_a_config_error(tmp_path):
    assert cli.run(["certify", "--p1", "n^4", "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_unknown_key_reports_position(tmp_path, capsys):
    config = tmp_path / "run.cfg"
    config.write_text("horizon=4\n\nbogus=1\n")
    assert cli.run(["certify", "--config", str(config), "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert f"{config}:3:1: unknown key 'bogus'" in capsys.readouterr().err


def test_bad_flag_value(tmp_path):
    assert cli.run(["certify", "--horizon", "abc", "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_usage_error_exits_64():
    with pytest.raises(SystemExit) as exit_info:
        cli.run(["no-such-experiment"])
    assert exit_info.value.code == cli.EXIT_CONFIG


def test_budget_exit_code(tmp_path):
    argv = ["triple", *SMALL, "--budget", "1000", "--out", str(tmp_path)]
    assert cli.run(argv) == cli.EXIT_BUDGET
    with open(tmp_path / "triple.json") as f:
        partial = json.load(f)
    assert not partial["passed"]
    assert partial["summary"]["error"] == "BudgetExceededError"
    assert partial["notes"][0].startswith("partial report:")
    assert (tmp_path / MANIFEST_NAME).exists()


def test_manifest_records_the_resolved_start(tmp_path):
    argv = ["certify", "--p1", "n^5", "--p2", "2*n^5", "--horizon", "4", "--f", "list:3", "--samples", "4",
            "--omega-per-point", "2", "--budget", "1000000", "--out", str(tmp_path)]
    assert cli.run(argv) == cli.EXIT_OK
    lines = (tmp_path / MANIFEST_NAME).read_text().splitlines()
    assert "M=2" in lines
    with open(tmp_path / "certify.json") as f:
        assert json.load(f)["config"]["M"] == 2


def test_failed_check_exit_code(tmp_path, monkeypatch):
    def failing(command, run, system):
        report = ExperimentReport(experiment=command, config=system.config.to_dict())
        report.add_check("forced", False)
        return report

    monkeypatch.setattr(cli, "run_experiment", failing)
    assert cli.run(["certify", *SMALL, "--out", str(tmp_path)]) == cli.EXIT_CHECK_FAILED


def test_manifest_reproduces_the_run(tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    assert cli.run(["certify", *SMALL, "--out", str(first)]) == cli.EXIT_OK
    manifest = str(first / MANIFEST_NAME)
    assert cli.run(["certify", "--config", manifest, "--out", str(second)]) == cli.EXIT_OK
    assert (first / "certify.json").read_bytes() == (second / "certify.json").read_bytes()
    assert (first / MANIFEST_NAME).read_text() == (second / MANIFEST_NAME).read_text()


def test_parse_config_text():
    values = parse_config_text("# comment\np1=n^5\nhorizon=4  # inline\neta=full\nM=\n")
    assert values["p1"] == ("n^5", 2, 4)
    assert values["horizon"][0] == 4
    assert values["eta"][0] is None
    assert values["M"][0] is None
    with pytest.raises(ConfigurationError) as malformed:
        parse_config_text("horizon=4\np1 n^5\n", "run.cfg")
    assert malformed.value.diagnostic().startswith("run.cfg:2:1: malformed line")
    with pytest.raises(ConfigurationError):
        parse_config_text("horizon=four\n")


def test_manifest_is_sorted(tmp_path):
    path = write_manifest(RunConfig(), str(tmp_path))
    with open(path) as f:
        keys = [line.split("=", 1)[0] for line in f.read().splitlines()]
    assert keys == sorted(keys)
    assert "p1" in keys and "conjugacy_trials" in keys


def test_resolve_n_expressions():
    run, system = resolve_config(overrides={"M": 2, "horizon": 4, "f": "list:3", "budget": 10**6})
    assert run.resolve_n(system, "M+H-1") == 5
    assert run.resolve_list(system, "M, M+1,M+3") == [2, 3, 5]
    with pytest.raises(ConfigurationError):
        run.resolve_n(system, "M/3")


def test_cli_overrides_win_over_file(tmp_path):
    values = parse_config_text("horizon=7\nseed=1\n", "run.cfg")
    run, system = resolve_config(values, {"horizon": 4, "seed": None}, "run.cfg")
    assert system.horizon == 4
    assert run.system.seed == 1
