"""Core vocabulary types shared by every module.

Calendar dates are stored as days since the Unix epoch and instants as
integer seconds since the Unix epoch, so all window arithmetic is exact.
Every type here is immutable after construction and safe to share between
concurrent tasks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .constraints import Constraint

Timestamp = int  # seconds since the Unix epoch
Duration = int   # seconds
Day = int        # days since the Unix epoch

_EPOCH_ORDINAL = date(1970, 1, 1).toordinal()


def day_from_iso(text: str) -> Day:
    return date.fromisoformat(text).toordinal() - _EPOCH_ORDINAL


def day_to_iso(day: Day) -> str:
    return date.fromordinal(day + _EPOCH_ORDINAL).isoformat()


def timestamp_from_iso(text: str) -> Timestamp:
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    parsed = datetime.fromisoformat(text)
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return int(parsed.timestamp())


def timestamp_to_iso(ts: Timestamp) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class ColorId:
    """Opaque paint color identifier; display name does not affect equality."""

    ident: str
    display_name: str = field(default="", compare=False)

    def __str__(self) -> str:
        return self.ident


@dataclass(frozen=True)
class Order:
    """A logical build request: the car someone ordered, not a physical body.

    ``blend_number`` is the order's position in the originally planned build
    sequence and is unique within a scenario; downstream logistics assume the
    plant roughly follows that order.
    """

    order_id: str
    body_type: str
    color: ColorId
    blend_number: int
    due_date: Day
    planned_date: Day
    features: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.blend_number < 1:
            raise ValueError(f"order {self.order_id}: blend_number must be >= 1")


@dataclass(frozen=True)
class CarBody:
    """A physical partially built car waiting in (or entering) the buffer.

    ``entered_at`` is set exactly once, when the body is enqueued.  A body may
    only ever realize an order with the same body type.
    """

    car_id: str
    body_type: str
    entered_at: Timestamp
    assigned_order: str | None = None


@dataclass(frozen=True)
class ScenarioCatalog:
    """Everything a scenario declares: orders, constraints, colors, body types.

    ``colors`` and ``body_types`` may be empty, in which case they are treated
    as open sets (derived from the orders themselves).
    """

    orders: tuple[Order, ...] = ()
    constraints: tuple["Constraint", ...] = ()
    colors: tuple[ColorId, ...] = ()
    body_types: frozenset[str] = frozenset()
    scenario_id: str = ""

    def color_map(self) -> dict[str, ColorId]:
        return {c.ident: c for c in self.colors}

    def order_map(self) -> dict[str, Order]:
        return {o.order_id: o for o in self.orders}


def validate_catalog(catalog: ScenarioCatalog) -> list[str]:
    """Check catalog-level invariants; violations are data, not failures.

    Returns one message per violation, each naming the offending entity.  An
    empty report means every invariant holds.  Constraints whose formulas
    reference features no current order carries are legitimate and do not
    produce violations.
    """
    from .constraints import TimeRule, WindowRule

    violations: list[str] = []

    seen_ids: dict[str, str] = {}
    by_blend: dict[int, list[str]] = {}
    known_colors = {c.ident for c in catalog.colors}
    for order in catalog.orders:
        if order.order_id in seen_ids:
            violations.append(f"duplicate order_id {order.order_id!r}")
        seen_ids[order.order_id] = order.order_id
        by_blend.setdefault(order.blend_number, []).append(order.order_id)
        if known_colors and order.color.ident not in known_colors:
            violations.append(
                f"order {order.order_id!r}: color {order.color.ident!r} not in color catalog"
            )
        if catalog.body_types and order.body_type not in catalog.body_types:
            violations.append(
                f"order {order.order_id!r}: body_type {order.body_type!r} not in catalog"
            )
    for blend, owners in sorted(by_blend.items()):
        if len(owners) > 1:
            violations.append(
                f"duplicate blend_number {blend}: " + ", ".join(sorted(owners))
            )

    seen_constraints: set[str] = set()
    for constraint in catalog.constraints:
        cid = constraint.constraint_id
        if cid in seen_constraints:
            violations.append(f"duplicate constraint id {cid!r}")
        seen_constraints.add(cid)
        if constraint.weight < 0:
            violations.append(f"constraint {cid!r}: negative weight")
        for clause in constraint.formula:
            if len(clause) == 0:
                violations.append(f"constraint {cid!r}: empty clause is unsatisfiable")
        rule = constraint.rule
        if isinstance(rule, WindowRule):
            if rule.max_matches < 1 or rule.window_size < 1:
                violations.append(f"constraint {cid!r}: window rule terms must be >= 1")
            elif rule.max_matches > rule.window_size:
                violations.append(
                    f"constraint {cid!r}: window rule allows more matches than its window holds"
                )
        elif isinstance(rule, TimeRule):
            if rule.max_matches < 1:
                violations.append(f"constraint {cid!r}: time rule max_matches must be >= 1")
            if rule.period <= 0:
                violations.append(f"constraint {cid!r}: time rule period must be positive")
    return violations
