"""Replay, experiments, and period reporting on top of the session driver.

``replay`` reenacts an event log deterministically, tolerating noisy entries.
``k_sweep`` reruns one input stream under the last-k color strategy for a
range of k values (k = 0 disables substitution entirely: every car keeps its
preassigned order).  ``period_compare`` reproduces the before/after analysis:
daily assessed batch sizes, changeover totals, sortedness worsening factors,
and the planned-date index-width regression.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import metrics, paintshop
from .controller import Strategy
from .domain import ScenarioCatalog
from .errors import IoError
from .metrics import KpiReport
from .scenario_io import RunConfig
from .session import ENQUEUE_REQUEST, Emission, EventRecord, Session


@dataclass
class ReplayResult:
    leaving: list[Emission]
    decision_log: list[dict]
    skipped: int

    @property
    def colors(self) -> list[str]:
        return [e.color for e in self.leaving]

    @property
    def blends(self) -> list[int]:
        return [e.blend_number for e in self.leaving]


def replay(
    events: Sequence[EventRecord],
    catalog: ScenarioCatalog,
    config: RunConfig,
    *,
    strategy: Strategy | None = None,
    substitution_enabled: bool = True,
) -> ReplayResult:
    """Drive the controller through a recorded event stream.

    Inconsistent events (noise in real logs) are recorded in the decision log
    and skipped; the replay continues.
    """
    session = Session(
        catalog,
        config.make_buffer(),
        strategy or config.make_strategy(),
        substitution_enabled=substitution_enabled,
        preassigned=config.preassigned,
        virtual_step_default=config.virtual_step_default,
    )
    for event in events:
        session.handle_or_skip(event)
    return ReplayResult(
        leaving=list(session.emissions),
        decision_log=list(session.decision_log),
        skipped=session.skipped,
    )


@dataclass
class SweepPoint:
    """Measures of the leaving sequence for one value of k."""

    k: int
    cars: int
    average_batch_size: Fraction
    batch_length_histogram: dict[int, int]
    color_window_histogram: dict[int, int]
    aabs: Fraction

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "cars": self.cars,
            "average_batch_size": float(self.average_batch_size),
            "batch_length_histogram": {
                str(k): v for k, v in sorted(self.batch_length_histogram.items())
            },
            "color_window_histogram": {
                str(k): v for k, v in sorted(self.color_window_histogram.items())
            },
            "assessed_average_batch_size": float(self.aabs),
        }


def k_sweep(
    events: Sequence[EventRecord],
    catalog: ScenarioCatalog,
    config: RunConfig,
    k_values: Sequence[int],
    *,
    color_window: int = 50,
) -> dict[int, SweepPoint]:
    """Replay the same stream for each k and measure the leaving sequences."""
    results: dict[int, SweepPoint] = {}
    for k in k_values:
        if k < 0:
            raise ValueError("k values must be non-negative")
        if k == 0:
            result = replay(events, catalog, config, substitution_enabled=False)
        else:
            result = replay(events, catalog, config, strategy=Strategy.last_k_equal(k))
        colors = result.colors
        stats = metrics.batch_stats(colors)
        histogram = (
            metrics.color_differentiation(colors, color_window)
            if len(colors) >= color_window
            else {}
        )
        results[k] = SweepPoint(
            k=k,
            cars=len(colors),
            average_batch_size=stats.average_batch_size,
            batch_length_histogram=stats.batch_length_histogram,
            color_window_histogram=histogram,
            aabs=paintshop.aabs(colors, config.paintshop),
        )
    return results


# --- period comparison ---

SORTEDNESS_MEASURES = ("lds", "expected", "median")


def _day_of(timestamp: int, shift: int) -> int:
    return (timestamp - shift) // 86400


def _sortedness_values(blends: Sequence[int]) -> dict[str, float]:
    profile = metrics.sortedness(blends)
    return {
        "lds": float(profile.lds),
        "expected": float(profile.expected_length),
        "median": float(profile.median_length),
    }


@dataclass
class DayComparison:
    """One calendar day; a side is None when no car entered/left that day."""

    day: int
    entering: KpiReport | None
    leaving: KpiReport | None
    worsening: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "day": self.day,
            "entering": self.entering.to_dict() if self.entering else None,
            "leaving": self.leaving.to_dict() if self.leaving else None,
            "worsening": self.worsening,
        }


@dataclass
class PeriodReport:
    """Per-day measures and aggregates for one observation period."""

    label: str
    days: list[DayComparison]
    aabs_entering: dict[str, float | None]
    aabs_leaving: dict[str, float | None]
    worsening: dict[str, dict[str, dict[str, float | None]]]
    cpc: dict[str, float | int]
    index_width: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "days": [d.to_dict() for d in self.days],
            "aabs_entering": self.aabs_entering,
            "aabs_leaving": self.aabs_leaving,
            "worsening": self.worsening,
            "cpc": self.cpc,
            "index_width": self.index_width,
        }


@dataclass
class PeriodComparison:
    old: PeriodReport
    new: PeriodReport
    improvement: dict[str, float | None]

    def to_dict(self) -> dict[str, Any]:
        return {
            "old": self.old.to_dict(),
            "new": self.new.to_dict(),
            "improvement": self.improvement,
        }


def _summary_dict(samples: Sequence[float]) -> dict[str, float | None]:
    if not samples:
        return {"mean": None, "std": None, "sem": None, "n": 0}
    stats = metrics.summary_stats(samples)
    return {"mean": stats.mean, "std": stats.std, "sem": stats.sem, "n": len(samples)}


def _entering_sequence(
    events: Sequence[EventRecord],
    catalog: ScenarioCatalog,
    config: RunConfig,
    realized: dict[str, str],
) -> list[tuple[int, str]]:
    """(timestamp, order_id) for each body entering the buffer.

    The entering pairing comes from the scenario's preassignment when present,
    falling back to the order each car eventually realized.
    """
    pairs: list[tuple[int, str]] = []
    for event in events:
        if event.kind != ENQUEUE_REQUEST or not event.car_id:
            continue
        order_id = config.preassigned.get(event.car_id) or realized.get(event.car_id)
        if order_id is not None:
            pairs.append((event.timestamp, order_id))
    return pairs


def analyze_period(
    label: str,
    events: Sequence[EventRecord],
    catalog: ScenarioCatalog,
    config: RunConfig,
    *,
    strategy: Strategy | None = None,
    substitution_enabled: bool = True,
) -> PeriodReport:
    """Replay one period and compute its daily and aggregate measures."""
    result = replay(
        events, catalog, config, strategy=strategy, substitution_enabled=substitution_enabled
    )
    orders = catalog.order_map()
    realized = {e.car_id: e.order_id for e in result.leaving}
    entering = _entering_sequence(events, catalog, config, realized)
    shift = config.day_boundary_shift

    entering_by_day: dict[int, list[str]] = {}
    for timestamp, order_id in entering:
        entering_by_day.setdefault(_day_of(timestamp, shift), []).append(order_id)
    leaving_by_day: dict[int, list[Emission]] = {}
    for emission in result.leaving:
        leaving_by_day.setdefault(_day_of(emission.left_at, shift), []).append(emission)

    days: list[DayComparison] = []
    aabs_in: list[float] = []
    aabs_out: list[float] = []
    worsening_samples: dict[str, dict[str, list[float]]] = {
        row: {m: [] for m in SORTEDNESS_MEASURES}
        for row in ("input", "paint_lane_1", "paint_lane_2")
    }
    cpc_totals = {"entering_cars": 0, "entering_changeovers": 0,
                  "leaving_cars": 0, "leaving_changeovers": 0}

    for day in sorted(set(entering_by_day) | set(leaving_by_day)):
        order_ids = entering_by_day.get(day, [])
        emissions = leaving_by_day.get(day, [])
        report_in = report_out = None
        outcome_out = None
        blends_in: list[int] = []
        blends_out: list[int] = []

        if order_ids:
            colors_in = [orders[oid].color.ident for oid in order_ids]
            blends_in = [orders[oid].blend_number for oid in order_ids]
            outcome_in = paintshop.simulate(colors_in, config.paintshop)
            report_in = KpiReport.for_sequence(
                colors_in, blends_in, assessed=outcome_in.aabs,
                scenario_id=catalog.scenario_id, label=f"{label} entering day {day}",
            )
            aabs_in.append(float(outcome_in.aabs))
            cpc_totals["entering_cars"] += len(colors_in)
            cpc_totals["entering_changeovers"] += metrics.color_changeovers(colors_in)
        if emissions:
            colors_out = [e.color for e in emissions]
            blends_out = [e.blend_number for e in emissions]
            outcome_out = paintshop.simulate(colors_out, config.paintshop)
            report_out = KpiReport.for_sequence(
                colors_out, blends_out, assessed=outcome_out.aabs,
                scenario_id=catalog.scenario_id, label=f"{label} leaving day {day}",
            )
            aabs_out.append(float(outcome_out.aabs))
            cpc_totals["leaving_cars"] += len(colors_out)
            cpc_totals["leaving_changeovers"] += metrics.color_changeovers(colors_out)

        day_worsening: dict[str, dict[str, float]] = {}
        if blends_in and outcome_out is not None:
            sortedness_in = _sortedness_values(blends_in)
            rows: list[tuple[str, Sequence[int]]] = [("input", blends_out)]
            for lane_number, indices in enumerate(
                outcome_out.per_lane_input_indices, start=1
            ):
                if lane_number > 2:
                    break
                rows.append((f"paint_lane_{lane_number}", [blends_out[i] for i in indices]))
            for row, blends in rows:
                if not blends:
                    continue
                values = _sortedness_values(blends)
                factors = {
                    m: metrics.worsening_factor(sortedness_in[m], values[m])
                    for m in SORTEDNESS_MEASURES
                    if sortedness_in[m] > 0
                }
                day_worsening[row] = factors
                for m, value in factors.items():
                    worsening_samples[row][m].append(value)
        days.append(
            DayComparison(day=day, entering=report_in, leaving=report_out, worsening=day_worsening)
        )

    # index widths per planned date, positions in the whole period's sequences
    widths_in: list[float] = []
    widths_out: list[float] = []
    by_date_in: dict[int, list[int]] = {}
    for position, (_, order_id) in enumerate(entering):
        by_date_in.setdefault(orders[order_id].planned_date, []).append(position)
    by_date_out: dict[int, list[int]] = {}
    for position, emission in enumerate(result.leaving):
        by_date_out.setdefault(orders[emission.order_id].planned_date, []).append(position)
    for planned_date in sorted(set(by_date_in) & set(by_date_out)):
        widths_in.append(metrics.index_width(by_date_in[planned_date]))
        widths_out.append(metrics.index_width(by_date_out[planned_date]))
    index_report: dict[str, Any] = {
        "groups": len(widths_in),
        "entering": widths_in,
        "leaving": widths_out,
    }
    try:
        slope, intercept = metrics.deming_regression(widths_in, widths_out)
        index_report["slope"] = slope
        index_report["intercept"] = intercept
        index_report["pearson"] = metrics.pearson_correlation(widths_in, widths_out)
    except Exception as exc:  # degenerate group structure stays reportable
        index_report["regression_error"] = str(exc)

    cpc_report: dict[str, float | int] = dict(cpc_totals)
    if cpc_totals["entering_cars"]:
        cpc_report["entering_cpc"] = float(
            metrics.cpc_from_counts(
                cpc_totals["entering_cars"], cpc_totals["entering_changeovers"]
            )
        )
    if cpc_totals["leaving_cars"]:
        cpc_report["leaving_cpc"] = float(
            metrics.cpc_from_counts(
                cpc_totals["leaving_cars"], cpc_totals["leaving_changeovers"]
            )
        )

    return PeriodReport(
        label=label,
        days=days,
        aabs_entering=_summary_dict(aabs_in),
        aabs_leaving=_summary_dict(aabs_out),
        worsening={
            row: {m: _summary_dict(samples[m]) for m in SORTEDNESS_MEASURES}
            for row, samples in worsening_samples.items()
        },
        cpc=cpc_report,
        index_width=index_report,
    )


def period_compare(
    events_old: Sequence[EventRecord],
    events_new: Sequence[EventRecord],
    catalog: ScenarioCatalog,
    config: RunConfig,
    *,
    old_substitution_enabled: bool = False,
) -> PeriodComparison:
    """Before/after comparison; the old period defaults to no substitution."""
    old = analyze_period(
        "P_old", events_old, catalog, config,
        substitution_enabled=old_substitution_enabled,
    )
    new = analyze_period("P_new", events_new, catalog, config)
    improvement: dict[str, float | None] = {}
    old_mean = old.aabs_leaving.get("mean")
    new_mean = new.aabs_leaving.get("mean")
    if old_mean and new_mean:
        gain = (new_mean - old_mean) / old_mean
        improvement["aabs_leaving_gain"] = gain
        improvement["implied_changeover_reduction"] = (
            metrics.changeover_reduction_from_batch_gain(gain)
        )
    old_cpc = old.cpc.get("leaving_cpc")
    new_cpc = new.cpc.get("leaving_cpc")
    if old_cpc and new_cpc is not None:
        improvement["cpc_leaving_reduction"] = (old_cpc - new_cpc) / old_cpc
    return PeriodComparison(old=old, new=new, improvement=improvement)


# --- report emission ---

def _jsonable(report: Any) -> Any:
    if hasattr(report, "to_dict"):
        return report.to_dict()
    if isinstance(report, dict):
        return {str(k): _jsonable(v) for k, v in report.items()}
    if isinstance(report, (list, tuple)):
        return [_jsonable(v) for v in report]
    if isinstance(report, Fraction):
        return float(report)
    return report


def _csv_rows(report: Any) -> list[dict[str, Any]]:
    if isinstance(report, PeriodComparison):
        return _csv_rows(report.old) + _csv_rows(report.new)
    if isinstance(report, PeriodReport):
        rows = []
        for day in report.days:
            for side, kpi in (("entering", day.entering), ("leaving", day.leaving)):
                if kpi is None:
                    continue
                row = {"label": report.label, "day": day.day, "side": side}
                row.update(kpi.to_dict())
                rows.append(row)
        return rows
    if isinstance(report, dict) and report and all(
        isinstance(v, SweepPoint) for v in report.values()
    ):
        return [point.to_dict() for _, point in sorted(report.items())]
    if isinstance(report, KpiReport):
        return [report.to_dict()]
    if isinstance(report, ReplayResult):
        return [e.to_dict() for e in report.leaving]
    return [{"value": json.dumps(_jsonable(report))}]


def report_emit(report: Any, out_dir: str | Path, *, formats: Sequence[str] = ("json", "csv"),
                stem: str = "report") -> list[Path]:
    """Write a report as JSON and/or CSV with stable field order."""
    directory = Path(out_dir)
    written: list[Path] = []
    try:
        directory.mkdir(parents=True, exist_ok=True)
        if "json" in formats:
            path = directory / f"{stem}.json"
            path.write_text(
                json.dumps(_jsonable(report), indent=2, sort_keys=False) + "\n",
                encoding="utf-8",
            )
            written.append(path)
        if "csv" in formats:
            rows = _csv_rows(report)
            path = directory / f"{stem}.csv"
            with open(path, "w", encoding="utf-8", newline="") as handle:
                if rows:
                    fields: list[str] = []
                    for row in rows:
                        for key in row:
                            if key not in fields:
                                fields.append(key)
                    writer = csv.DictWriter(handle, fieldnames=fields)
                    writer.writeheader()
                    for row in rows:
                        writer.writerow(
                            {k: json.dumps(v) if isinstance(v, (dict, list)) else v
                             for k, v in row.items() if k in fields}
                        )
            written.append(path)
    except OSError as exc:
        raise IoError(f"cannot write report to {directory}: {exc}") from exc
    return written
