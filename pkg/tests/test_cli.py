import json

import pytest
from click.testing import CliRunner

from resequencer import synth
from resequencer.cli import _parse_k_values, main
from resequencer.scenario_io import save_events, save_scenario


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def scenario_dir(tmp_path):
    scenario = synth.generate_synthetic(
        24, seed=11, lanes=3, per_lane_capacity=4, total_capacity=12, cars_per_day=8
    )
    save_scenario(scenario.catalog, scenario.config, tmp_path / "s")
    save_events(scenario.events, tmp_path / "s" / "events.jsonl")
    return tmp_path / "s"


def test_parse_k_values():
    assert _parse_k_values("0..5") == [0, 1, 2, 3, 4, 5]
    assert _parse_k_values("3") == [3]
    assert _parse_k_values("0,2,4") == [0, 2, 4]


def test_generate_then_validate(runner, tmp_path):
    out = tmp_path / "gen"
    result = runner.invoke(
        main, ["generate", "--out", str(out), "--cars", "12", "--seed", "7"]
    )
    assert result.exit_code == 0, result.output
    assert (out / "orders.json").exists()
    assert (out / "events.jsonl").exists()
    check = runner.invoke(main, ["validate", "--scenario", str(out)])
    assert check.exit_code == 0
    assert "ok:" in check.output


def test_validate_broken_scenario_exits_1(runner, scenario_dir):
    orders = (scenario_dir / "orders.json").read_text()
    (scenario_dir / "orders.json").write_text(
        orders.replace('"blend_number": 2', '"blend_number": 1')
    )
    result = runner.invoke(main, ["validate", "--scenario", str(scenario_dir)])
    assert result.exit_code == 1
    assert "blend_number" in result.output


def test_validate_missing_scenario_exits_2(runner, tmp_path):
    result = runner.invoke(main, ["validate", "--scenario", str(tmp_path / "nope")])
    assert result.exit_code == 2


def test_replay_writes_reports_and_decision_log(runner, scenario_dir, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(
        main,
        [
            "replay",
            "--scenario", str(scenario_dir),
            "--events", str(scenario_dir / "events.jsonl"),
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["cars"] == 24
    assert (out / "report.json").exists()
    assert (out / "report.csv").exists()
    assert (out / "decision_log.jsonl").exists()


def test_sweep_emits_per_k_files(runner, scenario_dir, tmp_path):
    out = tmp_path / "sweep"
    result = runner.invoke(
        main,
        [
            "sweep",
            "--scenario", str(scenario_dir),
            "--events", str(scenario_dir / "events.jsonl"),
            "--k", "0..2",
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    for k in range(3):
        assert (out / f"report_k{k}.json").exists()
    assert (out / "report.csv").exists()


def test_sweep_can_synthesize_its_own_input(runner, tmp_path):
    result = runner.invoke(
        main, ["sweep", "--cars", "30", "--seed", "5", "--k", "0,1"]
    )
    assert result.exit_code == 0, result.output
    assert "k=0:" in result.output and "k=1:" in result.output


def test_compare_runs_and_reports(runner, scenario_dir, tmp_path):
    other = synth.generate_synthetic(
        24, seed=12, lanes=3, per_lane_capacity=4, total_capacity=12, cars_per_day=8
    )
    save_events(other.events, tmp_path / "new_events.jsonl")
    out = tmp_path / "cmp"
    result = runner.invoke(
        main,
        [
            "compare",
            "--scenario", str(scenario_dir),
            "--events-old", str(scenario_dir / "events.jsonl"),
            "--events-new", str(tmp_path / "new_events.jsonl"),
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    summary = json.loads(result.output)
    assert "improvement" in summary
    assert (out / "report.json").exists()


def test_unknown_flag_is_usage_error(runner):
    result = runner.invoke(main, ["replay", "--bogus", "x"])
    assert result.exit_code == 2
    assert "No such option" in result.output


def test_serve_with_missing_scenario_exits_2(runner, tmp_path):
    result = runner.invoke(main, ["serve", "--scenario", str(tmp_path / "missing")])
    assert result.exit_code == 2
