"""Weighted production rules and their violation arithmetic.

A constraint guards a CNF formula over feature identifiers and carries one of
two rule kinds:

* a window rule ``max_matches : window_size`` -- at most ``max_matches``
  matching orders may appear in any ``window_size`` consecutive emitted
  orders;
* a time rule ``max_matches : period : anchor`` -- at most ``max_matches``
  matching orders may leave the buffer inside any half-open time window
  ``[anchor + i*period, anchor + (i+1)*period)``.

Emitting an order violates a constraint when the order matches its formula
and the emissions that already left (its predecessors only, never the order
itself) exhaust the rule's allowance.  Weights are exact rationals so that
candidate comparisons are never subject to float noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import AbstractSet, Iterable, Iterator, Sequence

from .domain import ColorId, Duration, Order, Timestamp
from .errors import InconsistentEvent


@dataclass(frozen=True)
class CnfLiteral:
    feature: str
    negated: bool = False


Clause = tuple[CnfLiteral, ...]
Cnf = tuple[Clause, ...]


@dataclass(frozen=True)
class WindowRule:
    max_matches: int
    window_size: int


@dataclass(frozen=True)
class TimeRule:
    max_matches: int
    period: Duration
    anchor: Timestamp

    def window_bounds(self, at: Timestamp) -> tuple[Timestamp, Timestamp]:
        """Bounds of the half-open window containing ``at``."""
        index = (at - self.anchor) // self.period
        start = self.anchor + index * self.period
        return start, start + self.period


@dataclass(frozen=True)
class Constraint:
    constraint_id: str
    weight: Fraction
    formula: Cnf
    rule: WindowRule | TimeRule

    def __post_init__(self) -> None:
        if self.weight < 0:
            raise ValueError(f"constraint {self.constraint_id}: weight must be >= 0")
        if isinstance(self.rule, WindowRule):
            if self.rule.max_matches < 1 or self.rule.window_size < 1:
                raise ValueError(f"constraint {self.constraint_id}: window terms must be >= 1")
            if self.rule.max_matches > self.rule.window_size:
                raise ValueError(
                    f"constraint {self.constraint_id}: unsatisfiable window rule "
                    f"{self.rule.max_matches}:{self.rule.window_size}"
                )
        else:
            if self.rule.period <= 0:
                raise ValueError(f"constraint {self.constraint_id}: period must be positive")
            if self.rule.max_matches < 1:
                raise ValueError(f"constraint {self.constraint_id}: max_matches must be >= 1")


def matches(features: AbstractSet[str], formula: Cnf) -> bool:
    """True iff every clause holds a satisfied literal.

    A positive literal is satisfied when its feature is present, a negated one
    when it is absent.  The empty formula matches every order.
    """
    for clause in formula:
        for literal in clause:
            present = literal.feature in features
            if present != literal.negated:
                break
        else:
            return False
    return True


def constraints_of(order: Order, constraints: Iterable[Constraint]) -> frozenset[str]:
    """Identifiers of the constraints whose formula the order's features satisfy."""
    return frozenset(
        c.constraint_id for c in constraints if matches(order.features, c.formula)
    )


@dataclass(frozen=True)
class EmissionRecord:
    order_id: str
    color: ColorId
    blend_number: int
    matched_constraint_ids: frozenset[str]
    left_at: Timestamp


class EmissionHistory:
    """The orders that already left the buffer, newest first.

    Internally records are held oldest-first.  When retention parameters are
    supplied, records that can no longer influence any rule are pruned: only
    the newest ``window_keep`` records plus everything inside the current time
    window of every time rule are retained.  Queries must not predate the
    newest emission once pruning is active.
    """

    def __init__(
        self,
        records: Iterable[EmissionRecord] = (),
        *,
        window_keep: int | None = None,
        time_rules: Sequence[TimeRule] = (),
    ):
        self._records: list[EmissionRecord] = list(records)
        self._window_keep = window_keep
        self._time_rules = tuple(time_rules)
        for earlier, later in zip(self._records, self._records[1:]):
            if later.left_at < earlier.left_at:
                raise InconsistentEvent("emission history timestamps must be non-decreasing")

    @classmethod
    def for_constraints(cls, constraints: Iterable[Constraint]) -> "EmissionHistory":
        """History with the tightest retention that stays exact for these rules."""
        window_keep = 0
        time_rules = []
        for c in constraints:
            if isinstance(c.rule, WindowRule):
                window_keep = max(window_keep, c.rule.window_size - 1)
            else:
                time_rules.append(c.rule)
        return cls(window_keep=window_keep, time_rules=time_rules)

    def __len__(self) -> int:
        return len(self._records)

    def newest_first(self) -> Iterator[EmissionRecord]:
        return reversed(self._records)

    @property
    def latest_time(self) -> Timestamp | None:
        return self._records[-1].left_at if self._records else None

    def record(self, record: EmissionRecord) -> None:
        if self._records and record.left_at < self._records[-1].left_at:
            raise InconsistentEvent(
                f"emission at {record.left_at} predates newest history entry "
                f"at {self._records[-1].left_at}"
            )
        self._records.append(record)
        self._prune()

    def count_recent_matching(self, constraint_id: str, limit: int) -> int:
        """Matching records among the newest ``limit`` entries."""
        count = 0
        for i, rec in enumerate(self.newest_first()):
            if i >= limit:
                break
            if constraint_id in rec.matched_constraint_ids:
                count += 1
        return count

    def count_window_matching(
        self, constraint_id: str, start: Timestamp, end: Timestamp
    ) -> int:
        """Matching records with ``start <= left_at < end``."""
        count = 0
        for rec in self.newest_first():
            if rec.left_at < start:
                break
            if rec.left_at < end and constraint_id in rec.matched_constraint_ids:
                count += 1
        return count

    def fork(self) -> "EmissionHistory":
        copy = EmissionHistory.__new__(EmissionHistory)
        copy._records = list(self._records)
        copy._window_keep = self._window_keep
        copy._time_rules = self._time_rules
        return copy

    def _prune(self) -> None:
        if self._window_keep is None:
            return
        keep_from = max(0, len(self._records) - self._window_keep)
        if self._time_rules and keep_from > 0:
            newest = self._records[-1].left_at
            horizon = min(rule.window_bounds(newest)[0] for rule in self._time_rules)
            while keep_from > 0 and self._records[keep_from - 1].left_at >= horizon:
                keep_from -= 1
        if keep_from > 0:
            del self._records[:keep_from]


class ViolationEvaluator:
    """Per-decision cache: whether each constraint is currently saturated.

    Whether emitting one more matching order violates a constraint depends
    only on the history and the emission instant, not on which order it is,
    so the flag is computed once per constraint and shared by all candidates
    of one decision.
    """

    def __init__(
        self,
        constraints: Sequence[Constraint],
        history: EmissionHistory,
        at: Timestamp,
    ):
        self._constraints = {c.constraint_id: c for c in constraints}
        self._history = history
        self._at = at
        self._flags: dict[str, bool] = {}
        self._totals: dict[frozenset[str], Fraction] = {}

    def is_violated(self, constraint_id: str) -> bool:
        flag = self._flags.get(constraint_id)
        if flag is None:
            constraint = self._constraints[constraint_id]
            rule = constraint.rule
            if isinstance(rule, WindowRule):
                count = self._history.count_recent_matching(
                    constraint_id, rule.window_size - 1
                )
            else:
                start, end = rule.window_bounds(self._at)
                count = self._history.count_window_matching(constraint_id, start, end)
            flag = count >= rule.max_matches
            self._flags[constraint_id] = flag
        return flag

    def total(self, matched_ids: frozenset[str]) -> Fraction:
        cached = self._totals.get(matched_ids)
        if cached is None:
            cached = sum(
                (
                    self._constraints[cid].weight
                    for cid in matched_ids
                    if cid in self._constraints and self.is_violated(cid)
                ),
                Fraction(0),
            )
            self._totals[matched_ids] = cached
        return cached


def _constraints_from(catalog) -> Sequence[Constraint]:
    return getattr(catalog, "constraints", catalog)


def violation_weight(
    order: Order,
    at: Timestamp,
    history: EmissionHistory,
    catalog,
) -> Fraction:
    """Total weight of the constraints emitting ``order`` at ``at`` would violate."""
    constraints = _constraints_from(catalog)
    matched = constraints_of(order, constraints)
    return ViolationEvaluator(constraints, history, at).total(matched)


def sequence_violation_total(
    sequence: Iterable[tuple[Order, Timestamp]],
    catalog,
    *,
    initial_history: EmissionHistory | None = None,
) -> Fraction:
    """Violations accumulated by emitting a whole sequence, earliest first.

    Each element is scored against the history formed by its predecessors
    (plus ``initial_history`` when given), then appended to that history.
    """
    constraints = _constraints_from(catalog)
    history = initial_history.fork() if initial_history is not None else EmissionHistory()
    total = Fraction(0)
    for order, at in sequence:
        matched = constraints_of(order, constraints)
        total += ViolationEvaluator(constraints, history, at).total(matched)
        history.record(
            EmissionRecord(
                order_id=order.order_id,
                color=order.color,
                blend_number=order.blend_number,
                matched_constraint_ids=matched,
                left_at=at,
            )
        )
    return total
