"""Scenario and event-log file formats.

A scenario directory holds ``orders.json``, ``constraints.json`` and an
optional ``config.json``.  Event logs are JSON Lines, one event per line;
decision logs (event plus response) are accepted transparently wherever an
event log is expected.  Unknown keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable

from .controller import Strategy
from .domain import (
    ColorId,
    Order,
    ScenarioCatalog,
    day_from_iso,
    day_to_iso,
    timestamp_from_iso,
    timestamp_to_iso,
    validate_catalog,
)
from .errors import IoError, ParseError, ValidationFailed
from .lanes import LaneBuffer
from .paintshop import PaintShopConfig
from .session import EventRecord

ORDER_KEYS = {
    "order_id",
    "body_type",
    "color",
    "blend_number",
    "due_date",
    "planned_date",
    "features",
}
CONSTRAINT_KEYS = {"id", "weight", "cnf", "kind"}
CONFIG_KEYS = {
    "scenario_id",
    "lanes",
    "per_lane_capacity",
    "total_capacity",
    "strategy",
    "k",
    "paintshop",
    "day_boundary_shift",
    "virtual_step_default",
    "colors",
    "body_types",
    "preassigned",
}


@dataclass
class RunConfig:
    """Geometry, strategy, and analysis settings for one scenario."""

    scenario_id: str = ""
    lanes: int = 13
    per_lane_capacity: int = 12
    total_capacity: int = 148
    strategy: str = "last_k_equal"
    k: int = 3
    paintshop: PaintShopConfig = field(default_factory=PaintShopConfig)
    day_boundary_shift: int = 0
    virtual_step_default: int = 60
    preassigned: dict[str, str] = field(default_factory=dict)

    def make_buffer(self) -> LaneBuffer:
        return LaneBuffer(self.lanes, self.per_lane_capacity, self.total_capacity)

    def make_strategy(self) -> Strategy:
        return Strategy(kind=self.strategy, k=self.k)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "scenario_id": self.scenario_id,
            "lanes": self.lanes,
            "per_lane_capacity": self.per_lane_capacity,
            "total_capacity": self.total_capacity,
            "strategy": self.strategy,
            "k": self.k,
            "paintshop": self.paintshop.to_dict(),
            "day_boundary_shift": self.day_boundary_shift,
            "virtual_step_default": self.virtual_step_default,
        }
        if self.preassigned:
            data["preassigned"] = dict(sorted(self.preassigned.items()))
        return data


def _load_json(path: Path) -> Any:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", line=exc.lineno) from exc


def _parse_order(data: dict, index: int, colors: dict[str, ColorId]) -> Order:
    if not isinstance(data, dict):
        raise ValidationFailed([f"orders[{index}]: expected an object"])
    unknown = set(data) - ORDER_KEYS
    if unknown:
        raise ValidationFailed([f"orders[{index}]: unknown keys {sorted(unknown)}"])
    missing = ORDER_KEYS - set(data)
    if missing:
        raise ValidationFailed([f"orders[{index}]: missing keys {sorted(missing)}"])
    ident = str(data["color"])
    color = colors.get(ident) or ColorId(ident)
    try:
        return Order(
            order_id=str(data["order_id"]),
            body_type=str(data["body_type"]),
            color=color,
            blend_number=int(data["blend_number"]),
            due_date=day_from_iso(data["due_date"]),
            planned_date=day_from_iso(data["planned_date"]),
            features=frozenset(str(f) for f in data["features"]),
        )
    except (TypeError, ValueError) as exc:
        raise ValidationFailed([f"orders[{index}]: {exc}"]) from exc


def _parse_constraint(data: dict, index: int):
    from .constraints import CnfLiteral, Constraint, TimeRule, WindowRule

    if not isinstance(data, dict):
        raise ValidationFailed([f"constraints[{index}]: expected an object"])
    unknown = set(data) - CONSTRAINT_KEYS
    if unknown:
        raise ValidationFailed([f"constraints[{index}]: unknown keys {sorted(unknown)}"])
    try:
        clauses = tuple(
            tuple(
                CnfLiteral(feature=str(lit["feature"]), negated=bool(lit.get("neg", False)))
                for lit in clause
            )
            for clause in data.get("cnf", [])
        )
        kind = data["kind"]
        if "window" in kind:
            spec = kind["window"]
            rule = WindowRule(max_matches=int(spec["m"]), window_size=int(spec["n"]))
        elif "time" in kind:
            spec = kind["time"]
            rule = TimeRule(
                max_matches=int(spec["m"]),
                period=int(spec["t_seconds"]),
                anchor=timestamp_from_iso(spec["s"]),
            )
        else:
            raise ValueError(f"unknown rule kind {sorted(kind)}")
        return Constraint(
            constraint_id=str(data["id"]),
            weight=Fraction(str(data["weight"])),
            formula=clauses,
            rule=rule,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationFailed([f"constraints[{index}]: {exc}"]) from exc


def load_config(path: Path) -> RunConfig:
    data = _load_json(path)
    if not isinstance(data, dict):
        raise ValidationFailed([f"{path}: expected an object"])
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ValidationFailed([f"{path}: unknown keys {sorted(unknown)}"])
    config = RunConfig()
    paintshop = data.get("paintshop")
    if paintshop is not None:
        try:
            config.paintshop = PaintShopConfig.from_dict(paintshop)
        except (TypeError, ValueError) as exc:
            raise ValidationFailed([f"{path}: paintshop: {exc}"]) from exc
    for key in (
        "scenario_id",
        "lanes",
        "per_lane_capacity",
        "total_capacity",
        "strategy",
        "k",
        "day_boundary_shift",
        "virtual_step_default",
    ):
        if key in data:
            setattr(config, key, data[key])
    if "preassigned" in data:
        config.preassigned = {str(k): str(v) for k, v in data["preassigned"].items()}
    return config


def load_scenario(scenario_dir: str | Path) -> tuple[ScenarioCatalog, RunConfig]:
    """Load and validate a scenario directory.

    Raises :class:`ValidationFailed` when the catalog violates its invariants
    and :class:`ParseError` on malformed JSON.
    """
    directory = Path(scenario_dir)
    orders_path = directory / "orders.json"
    constraints_path = directory / "constraints.json"
    config_path = directory / "config.json"

    config = load_config(config_path) if config_path.exists() else RunConfig()
    if not config.scenario_id:
        config.scenario_id = directory.name

    raw_config = _load_json(config_path) if config_path.exists() else {}
    declared_colors = tuple(
        ColorId(ident, name) for ident, name in sorted(raw_config.get("colors", {}).items())
    )
    declared_types = frozenset(raw_config.get("body_types", []))

    color_map = {c.ident: c for c in declared_colors}
    orders_data = _load_json(orders_path)
    if not isinstance(orders_data, list):
        raise ValidationFailed([f"{orders_path}: expected an array"])
    orders = tuple(_parse_order(o, i, color_map) for i, o in enumerate(orders_data))

    constraints: tuple = ()
    if constraints_path.exists():
        constraints_data = _load_json(constraints_path)
        if not isinstance(constraints_data, list):
            raise ValidationFailed([f"{constraints_path}: expected an array"])
        constraints = tuple(
            _parse_constraint(c, i) for i, c in enumerate(constraints_data)
        )

    if not declared_colors:
        seen: dict[str, ColorId] = {}
        for order in orders:
            seen.setdefault(order.color.ident, order.color)
        declared_colors = tuple(seen[k] for k in sorted(seen))
    catalog = ScenarioCatalog(
        orders=orders,
        constraints=constraints,
        colors=declared_colors,
        body_types=declared_types or frozenset(o.body_type for o in orders),
        scenario_id=config.scenario_id,
    )
    violations = validate_catalog(catalog)
    if violations:
        raise ValidationFailed(violations)
    return catalog, config


def save_scenario(
    catalog: ScenarioCatalog, config: RunConfig, scenario_dir: str | Path
) -> None:
    directory = Path(scenario_dir)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        orders = [
            {
                "order_id": o.order_id,
                "body_type": o.body_type,
                "color": o.color.ident,
                "blend_number": o.blend_number,
                "due_date": day_to_iso(o.due_date),
                "planned_date": day_to_iso(o.planned_date),
                "features": sorted(o.features),
            }
            for o in catalog.orders
        ]
        (directory / "orders.json").write_text(
            json.dumps(orders, indent=2) + "\n", encoding="utf-8"
        )
        constraints = []
        from .constraints import WindowRule

        for c in catalog.constraints:
            if isinstance(c.rule, WindowRule):
                kind = {"window": {"m": c.rule.max_matches, "n": c.rule.window_size}}
            else:
                kind = {
                    "time": {
                        "m": c.rule.max_matches,
                        "t_seconds": c.rule.period,
                        "s": timestamp_to_iso(c.rule.anchor),
                    }
                }
            constraints.append(
                {
                    "id": c.constraint_id,
                    "weight": str(c.weight),
                    "cnf": [
                        [{"feature": lit.feature, "neg": lit.negated} for lit in clause]
                        for clause in c.formula
                    ],
                    "kind": kind,
                }
            )
        (directory / "constraints.json").write_text(
            json.dumps(constraints, indent=2) + "\n", encoding="utf-8"
        )
        config_data = config.to_dict()
        config_data["colors"] = {c.ident: c.display_name for c in catalog.colors}
        config_data["body_types"] = sorted(catalog.body_types)
        (directory / "config.json").write_text(
            json.dumps(config_data, indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise IoError(f"cannot write scenario to {directory}: {exc}") from exc


def load_events(path: str | Path) -> list[EventRecord]:
    """Read a JSONL event log; decision-log lines are unwrapped transparently."""
    events: list[EventRecord] = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    for number, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc.msg}", line=number) from exc
        if "event" in data:
            data = data["event"]
        try:
            events.append(EventRecord.from_dict(data))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: {exc}", line=number) from exc
    return events


def save_events(events: Iterable[EventRecord], path: str | Path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as handle:
            for event in events:
                handle.write(json.dumps(event.to_dict(), separators=(",", ":")) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def dump_decision_log(entries: Iterable[dict], path: str | Path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as handle:
            for entry in entries:
                handle.write(json.dumps(entry, separators=(",", ":")) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def decision_log_bytes(entries: Iterable[dict]) -> bytes:
    return "".join(
        json.dumps(entry, separators=(",", ":")) + "\n" for entry in entries
    ).encode("utf-8")
