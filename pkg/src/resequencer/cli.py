"""Command line client around the core package.

Exit codes: 0 on success, 1 on validation failure, 2 on I/O error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import harness, scenario_io, synth
from .controller import Strategy
from .errors import IoError, ParseError, ValidationFailed

EXIT_VALIDATION = 1
EXIT_IO = 2


def _parse_k_values(text: str) -> list[int]:
    """Accept '0..5', '3', or '0,2,4'."""
    if ".." in text:
        low, high = text.split("..", 1)
        return list(range(int(low), int(high) + 1))
    return [int(part) for part in text.split(",") if part != ""]


def _fail(code: int, message: str) -> None:
    click.echo(message, err=True)
    sys.exit(code)


def _load_scenario(scenario: str):
    try:
        return scenario_io.load_scenario(scenario)
    except IoError as exc:
        _fail(EXIT_IO, str(exc))
    except (ParseError, ValidationFailed) as exc:
        _fail(EXIT_VALIDATION, str(exc))


def _load_events(path: str):
    try:
        return scenario_io.load_events(path)
    except IoError as exc:
        _fail(EXIT_IO, str(exc))
    except ParseError as exc:
        _fail(EXIT_VALIDATION, str(exc))


@click.group()
def main() -> None:
    """Body buffer resequencing toolkit."""


@main.command()
@click.option("--scenario", required=True, type=click.Path(), help="Scenario directory.")
def validate(scenario: str) -> None:
    """Validate a scenario directory; list every violation."""
    try:
        catalog, _ = scenario_io.load_scenario(scenario)
    except IoError as exc:
        _fail(EXIT_IO, str(exc))
    except ParseError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except ValidationFailed as exc:
        for violation in exc.violations:
            click.echo(violation, err=True)
        sys.exit(EXIT_VALIDATION)
    click.echo(f"ok: {len(catalog.orders)} orders, {len(catalog.constraints)} constraints")


@main.command()
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@click.option("--cars", default=5000, show_default=True)
@click.option("--colors", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--shuffle", default=0.5, show_default=True, help="Blend shuffle strength.")
@click.option("--open-lanes", is_flag=True,
              help="Let the controller pick lanes instead of the plant.")
def generate(out: str, cars: int, colors: int, seed: int, shuffle: float,
             open_lanes: bool) -> None:
    """Generate a synthetic scenario and event stream."""
    scenario = synth.generate_synthetic(
        cars, colors, blend_shuffle_strength=shuffle, seed=seed,
        plant_controls_lanes=not open_lanes,
    )
    try:
        scenario_io.save_scenario(scenario.catalog, scenario.config, out)
        scenario_io.save_events(scenario.events, Path(out) / "events.jsonl")
    except IoError as exc:
        _fail(EXIT_IO, str(exc))
    click.echo(f"wrote scenario {scenario.catalog.scenario_id!r} to {out}")


@main.command()
@click.option("--scenario", required=True, type=click.Path())
@click.option("--events", required=True, type=click.Path())
@click.option("--strategy", default=None, help="Override the configured strategy kind.")
@click.option("--k", default=None, type=int, help="Override the configured k.")
@click.option("--out", default=None, type=click.Path(), help="Report directory.")
@click.option("--format", "formats", default="json,csv", show_default=True)
def replay(scenario: str, events: str, strategy: str | None, k: int | None,
           out: str | None, formats: str) -> None:
    """Replay an event log and report the leaving sequence quality."""
    catalog, config = _load_scenario(scenario)
    records = _load_events(events)
    if strategy is not None:
        config.strategy = strategy
    if k is not None:
        config.k = k
    override = None
    if strategy is not None or k is not None:
        override = Strategy(kind=config.strategy, k=config.k)
    result = harness.replay(records, catalog, config, strategy=override)
    outcome = None
    if result.leaving:
        from . import paintshop

        outcome = paintshop.aabs(result.colors, config.paintshop)
    report = harness.KpiReport.for_sequence(
        result.colors, result.blends, assessed=outcome,
        scenario_id=catalog.scenario_id, label="leaving",
    )
    click.echo(json.dumps(report.to_dict(), indent=2))
    if result.skipped:
        click.echo(f"skipped {result.skipped} inconsistent events", err=True)
    if out:
        try:
            harness.report_emit(report, out, formats=tuple(formats.split(",")))
            scenario_io.dump_decision_log(result.decision_log, Path(out) / "decision_log.jsonl")
        except IoError as exc:
            _fail(EXIT_IO, str(exc))


@main.command()
@click.option("--scenario", default=None, type=click.Path(),
              help="Scenario directory; omit to synthesize one from --seed.")
@click.option("--events", default=None, type=click.Path(),
              help="Event log; omit to synthesize a stream from --seed.")
@click.option("--k", "k_text", default="0..5", show_default=True)
@click.option("--cars", default=5000, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--out", default=None, type=click.Path())
@click.option("--format", "formats", default="json,csv", show_default=True)
def sweep(scenario: str | None, events: str | None, k_text: str, cars: int,
          seed: int, out: str | None, formats: str) -> None:
    """Measure leaving-sequence quality across a range of k values."""
    k_values = _parse_k_values(k_text)
    if events is not None:
        if scenario is None:
            _fail(EXIT_VALIDATION, "--events needs --scenario")
        catalog, config = _load_scenario(scenario)
        records = _load_events(events)
    else:
        generated = synth.generate_synthetic(cars, seed=seed)
        catalog, config, records = generated.catalog, generated.config, generated.events
        if scenario is not None:
            _, overrides = _load_scenario(scenario)
            config.paintshop = overrides.paintshop
    points = harness.k_sweep(records, catalog, config, k_values)
    for k in sorted(points):
        point = points[k]
        click.echo(
            f"k={k}: abs={float(point.average_batch_size):.3f} "
            f"aabs={float(point.aabs):.3f} cars={point.cars}"
        )
    if out:
        try:
            harness.report_emit(points, out, formats=tuple(formats.split(",")))
            for k, point in sorted(points.items()):
                harness.report_emit(point, out, formats=("json",), stem=f"report_k{k}")
        except IoError as exc:
            _fail(EXIT_IO, str(exc))


@main.command()
@click.option("--scenario", required=True, type=click.Path())
@click.option("--events-old", required=True, type=click.Path())
@click.option("--events-new", required=True, type=click.Path())
@click.option("--out", default=None, type=click.Path())
@click.option("--format", "formats", default="json,csv", show_default=True)
@click.option("--old-substitution", is_flag=True,
              help="Replay the old period with substitution enabled too.")
def compare(scenario: str, events_old: str, events_new: str, out: str | None,
            formats: str, old_substitution: bool) -> None:
    """Compare two observation periods (before/after deployment)."""
    catalog, config = _load_scenario(scenario)
    old_records = _load_events(events_old)
    new_records = _load_events(events_new)
    comparison = harness.period_compare(
        old_records, new_records, catalog, config,
        old_substitution_enabled=old_substitution,
    )
    summary = {
        "old_aabs_leaving": comparison.old.aabs_leaving,
        "new_aabs_leaving": comparison.new.aabs_leaving,
        "improvement": comparison.improvement,
    }
    click.echo(json.dumps(summary, indent=2))
    if out:
        try:
            harness.report_emit(comparison, out, formats=tuple(formats.split(",")))
        except IoError as exc:
            _fail(EXIT_IO, str(exc))


@main.command()
@click.option("--scenario", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=None, type=int,
              help="Defaults to the PORT environment variable or 8000.")
@click.option("--log", "log_path", default=None, type=click.Path(),
              help="Decision log file (JSONL).")
def serve(scenario: str, host: str, port: int | None, log_path: str | None) -> None:
    """Run the decision API for a scenario."""
    import uvicorn

    from .service.app import create_app

    try:
        app = create_app(scenario, log_path)
    except IoError as exc:
        _fail(EXIT_IO, str(exc))
    except (ParseError, ValidationFailed) as exc:
        _fail(EXIT_VALIDATION, str(exc))
    uvicorn.run(app, host=host, port=port or int(os.environ.get("PORT", "8000")))


if __name__ == "__main__":
    main()
