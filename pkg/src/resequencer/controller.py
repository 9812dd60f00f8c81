"""Decision logic for the three buffer events: substitution, dequeue, enqueue.

Order selection is one lexicographic minimization over the compatible pool:

1. fewest constraint violations at the decision instant,
2. earliest due date,
3. a strategy-dependent color preference (the default keeps only orders
   whose color is among the ``k`` most recently emitted distinct colors,
   and skips itself when no candidate qualifies),
4. smallest blend number, which is unique and therefore decides.

Dequeue selection runs that chain once per eligible head, then once more
across the per-head winners; enqueue selection simulates fully draining the
buffer for every candidate lane and compares the resulting virtual sequences.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .constraints import (
    Constraint,
    EmissionHistory,
    EmissionRecord,
    ViolationEvaluator,
    constraints_of,
)
from .domain import CarBody, ColorId, Order, ScenarioCatalog, Timestamp
from .errors import (
    NoAvailableLane,
    NoCompatibleOrder,
    NoEligibleHead,
    StaleDecision,
)
from .lanes import LaneBuffer
from .metrics import lds_abs_ratio

STRATEGY_KINDS = ("none", "popularity", "last_k_recency", "last_k_ranked", "last_k_equal")


@dataclass(frozen=True)
class Strategy:
    """Color-preference policy used in step 3 of the selection chain.

    ``none`` applies no color preference (equivalent to k = 0); the three
    ``last_k_*`` variants differ in how they rank the k most recent colors
    and everything else; ``popularity`` prefers the color most frequent among
    the still-unassigned compatible orders.
    """

    kind: str = "last_k_equal"
    k: int = 3

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind.startswith("last_k") and self.k < 1:
            raise ValueError(f"strategy {self.kind!r} needs k >= 1")
        if self.kind in ("none", "popularity") and self.k != 0:
            object.__setattr__(self, "k", 0)

    @classmethod
    def none(cls) -> "Strategy":
        return cls(kind="none", k=0)

    @classmethod
    def popularity(cls) -> "Strategy":
        return cls(kind="popularity", k=0)

    @classmethod
    def last_k_equal(cls, k: int = 3) -> "Strategy":
        return cls(kind="last_k_equal", k=k)

    @classmethod
    def last_k_recency(cls, k: int = 3) -> "Strategy":
        return cls(kind="last_k_recency", k=k)

    @classmethod
    def last_k_ranked(cls, k: int = 3) -> "Strategy":
        return cls(kind="last_k_ranked", k=k)


DEFAULT_STRATEGY = Strategy.last_k_equal(3)

ColorKey = Callable[[ColorId], tuple]


def color_priority(
    strategy: Strategy,
    recent_colors: Sequence[ColorId],
    color_counts: Mapping[ColorId, int],
) -> ColorKey:
    """Key function ranking a candidate's color; lower tuples are preferred."""
    if strategy.kind == "none":
        return lambda color: (0, 0, 0)
    if strategy.kind == "popularity":
        return lambda color: (-color_counts.get(color, 0), 0, 0)
    recent_rank = {c: i for i, c in enumerate(recent_colors[: strategy.k])}
    if strategy.kind == "last_k_equal":
        return lambda color: (0 if color in recent_rank else 1, 0, 0)
    if strategy.kind == "last_k_ranked":
        k = strategy.k
        return lambda color: (recent_rank.get(color, k), 0, 0)
    # last_k_recency: recency rank inside the last k, popularity beyond them
    def key(color: ColorId) -> tuple:
        rank = recent_rank.get(color)
        if rank is None:
            return (1, -color_counts.get(color, 0), 0)
        return (0, rank, 0)

    return key


class _Bucket:
    """Orders sharing (body type, matched constraints, color), sorted by (due, blend)."""

    __slots__ = ("matched_ids", "color", "entries")

    def __init__(self, matched_ids: frozenset[str], color: ColorId):
        self.matched_ids = matched_ids
        self.color = color
        self.entries: list[Order] = []


class OrderPool:
    """The unassigned orders, indexed for fast lexicographic selection.

    A fork shares the immutable bucket lists and overlays its own consumed
    set and head cursors, so virtual simulations can consume orders cheaply
    and roll back by discarding the fork.
    """

    def __init__(self, orders: Iterable[Order], constraints: Sequence[Constraint]):
        self._orders: dict[str, Order] = {}
        self._matched: dict[str, frozenset[str]] = {}
        buckets: dict[tuple[str, frozenset[str], ColorId], _Bucket] = {}
        for order in orders:
            if order.order_id in self._orders:
                raise ValueError(f"duplicate order_id {order.order_id!r}")
            self._orders[order.order_id] = order
            matched = constraints_of(order, constraints)
            self._matched[order.order_id] = matched
            key = (order.body_type, matched, order.color)
            bucket = buckets.get(key)
            if bucket is None:
                bucket = buckets[key] = _Bucket(matched, order.color)
            bucket.entries.append(order)
        self._buckets: list[_Bucket] = []
        self._by_type: dict[str, list[int]] = {}
        for (body_type, _, _), bucket in sorted(
            buckets.items(), key=lambda kv: (kv[0][0], sorted(kv[0][1]), kv[0][2].ident)
        ):
            bucket.entries.sort(key=lambda o: (o.due_date, o.blend_number))
            self._by_type.setdefault(body_type, []).append(len(self._buckets))
            self._buckets.append(bucket)
        self._heads: list[int] = [0] * len(self._buckets)
        self._consumed: set[str] = set()
        self._base_consumed: "OrderPool | None" = None
        self._counts: dict[str, Counter] = {
            body_type: Counter(
                self._buckets[i].color
                for i in indices
                for _ in self._buckets[i].entries
            )
            for body_type, indices in self._by_type.items()
        }
        self._available = len(self._orders)

    # --- queries ---

    def __len__(self) -> int:
        return self._available

    def __contains__(self, order_id: str) -> bool:
        return order_id in self._orders and not self._is_consumed(order_id)

    def get(self, order_id: str) -> Order | None:
        order = self._orders.get(order_id)
        if order is None or self._is_consumed(order_id):
            return None
        return order

    def matched_ids(self, order: Order) -> frozenset[str]:
        return self._matched.get(order.order_id, frozenset())

    def color_counts(self, body_type: str) -> Mapping[ColorId, int]:
        return self._counts.get(body_type, {})

    def compatible_available(self, body_type: str) -> bool:
        return any(
            self._bucket_head(i) is not None for i in self._by_type.get(body_type, ())
        )

    def best(
        self,
        body_type: str,
        violation_total: Callable[[frozenset[str]], Fraction],
        color_key: ColorKey,
    ) -> Order | None:
        """Chain-minimal compatible order, or None when none is available."""
        best_key = None
        best_order = None
        for index in self._by_type.get(body_type, ()):
            head = self._bucket_head(index)
            if head is None:
                continue
            bucket = self._buckets[index]
            key = (
                violation_total(bucket.matched_ids),
                head.due_date,
                color_key(bucket.color),
                head.blend_number,
            )
            if best_key is None or key < best_key:
                best_key = key
                best_order = head
        return best_order

    # --- mutation ---

    def consume(self, order_id: str) -> Order:
        order = self._orders.get(order_id)
        if order is None or self._is_consumed(order_id):
            raise StaleDecision(f"order {order_id!r} is not available")
        self._consumed.add(order_id)
        self._available -= 1
        counts = self._counts.get(order.body_type)
        if counts is not None:
            counts[order.color] -= 1
            if counts[order.color] <= 0:
                del counts[order.color]
        return order

    def fork(self) -> "OrderPool":
        twin = OrderPool.__new__(OrderPool)
        twin._orders = self._orders
        twin._matched = self._matched
        twin._buckets = self._buckets
        twin._by_type = self._by_type
        twin._heads = list(self._heads)
        twin._consumed = set()
        twin._base_consumed = self
        twin._counts = {bt: Counter(c) for bt, c in self._counts.items()}
        twin._available = self._available
        return twin

    def _is_consumed(self, order_id: str) -> bool:
        if order_id in self._consumed:
            return True
        base = self._base_consumed
        while base is not None:
            if order_id in base._consumed:
                return True
            base = base._base_consumed
        return False

    def _bucket_head(self, index: int) -> Order | None:
        entries = self._buckets[index].entries
        head = self._heads[index]
        while head < len(entries) and self._is_consumed(entries[head].order_id):
            head += 1
        self._heads[index] = head
        return entries[head] if head < len(entries) else None


@dataclass
class DequeueDecision:
    lane: int
    car_id: str
    order: Order


class ControllerState:
    """Mutable decision state: buffer, pool, history, recent colors, clock.

    Exactly one decision mutates the state at a time; forks are independent
    and used for the virtual lane simulations.
    """

    def __init__(
        self,
        catalog: ScenarioCatalog,
        buffer: LaneBuffer,
        *,
        virtual_step_default: int = 60,
    ):
        self.catalog = catalog
        self.buffer = buffer
        self.pool = OrderPool(catalog.orders, catalog.constraints)
        self.history = EmissionHistory.for_constraints(catalog.constraints)
        self.recent_colors: list[ColorId] = []
        self.cars: dict[str, CarBody] = {}
        self.now: Timestamp = 0
        self.version = 0
        self.virtual_step_default = virtual_step_default
        self._departures: deque[Timestamp] = deque(maxlen=20)

    def evaluator(self) -> ViolationEvaluator:
        return ViolationEvaluator(self.catalog.constraints, self.history, self.now)

    def departure_interval(self) -> int:
        """Mean inter-departure time over the recent real emissions."""
        if len(self._departures) < 2:
            return self.virtual_step_default
        span = self._departures[-1] - self._departures[0]
        return max(1, span // (len(self._departures) - 1))

    def note_recent_color(self, color: ColorId) -> None:
        try:
            self.recent_colors.remove(color)
        except ValueError:
            pass
        self.recent_colors.insert(0, color)

    def fork(self) -> "ControllerState":
        twin = ControllerState.__new__(ControllerState)
        twin.catalog = self.catalog
        twin.buffer = self.buffer.snapshot()
        twin.pool = self.pool.fork()
        twin.history = self.history.fork()
        twin.recent_colors = list(self.recent_colors)
        twin.cars = dict(self.cars)
        twin.now = self.now
        twin.version = self.version
        twin.virtual_step_default = self.virtual_step_default
        twin._departures = deque(self._departures, maxlen=20)
        return twin


def assign_order(car: CarBody, state: ControllerState, strategy: Strategy) -> Order:
    """Select and reserve the order the car should realize.

    The order is removed from the pool and bound to the car; record the
    emission with :func:`commit_emission` once the car actually leaves.
    """
    order = _select_for(car.body_type, state, strategy, state.evaluator())
    if order is None:
        raise NoCompatibleOrder(f"no unassigned order matches body type {car.body_type!r}")
    state.pool.consume(order.order_id)
    if car.car_id in state.cars:
        state.cars[car.car_id] = replace(state.cars[car.car_id], assigned_order=order.order_id)
    return order


def _select_for(
    body_type: str,
    state: ControllerState,
    strategy: Strategy,
    evaluator: ViolationEvaluator,
) -> Order | None:
    key = color_priority(strategy, state.recent_colors, state.pool.color_counts(body_type))
    return state.pool.best(body_type, evaluator.total, key)


def choose_dequeue(
    state: ControllerState,
    strategy: Strategy,
    eligible_lanes: Iterable[int] | None = None,
    *,
    ignore_blocks: bool = False,
) -> DequeueDecision:
    """Pick which head should leave next and the order it should realize.

    Every eligible head is paired with its would-be order (nothing is
    committed); the winner orders then compete through the same selection
    chain.  Among heads tied on the same winning order, the car that entered
    earliest leaves first.
    """
    heads = state.buffer.heads(ignore_blocks=ignore_blocks)
    if eligible_lanes is not None:
        allowed = set(eligible_lanes)
        heads = [(lane, car) for lane, car in heads if lane in allowed]
    if not heads:
        raise NoEligibleHead("no lane offers an eligible head")

    evaluator = state.evaluator()
    winners: list[tuple[int, CarBody, Order]] = []
    for lane, car_id in heads:
        car = state.cars.get(car_id)
        if car is None:
            raise StaleDecision(f"buffered car {car_id!r} is unknown to the controller")
        order = _select_for(car.body_type, state, strategy, evaluator)
        if order is not None:
            winners.append((lane, car, order))
    if not winners:
        raise NoCompatibleOrder("no unassigned order matches any eligible head")

    def order_key(order: Order) -> tuple:
        key = color_priority(
            strategy, state.recent_colors, state.pool.color_counts(order.body_type)
        )
        return (
            evaluator.total(state.pool.matched_ids(order)),
            order.due_date,
            key(order.color),
            order.blend_number,
        )

    best_order = min((order for _, _, order in winners), key=order_key)
    contenders = [
        (lane, car) for lane, car, order in winners if order.order_id == best_order.order_id
    ]
    lane, car = min(contenders, key=lambda lc: (lc[1].entered_at, lc[0]))
    return DequeueDecision(lane=lane, car_id=car.car_id, order=best_order)


def commit_emission(state: ControllerState, car_id: str, order: Order) -> None:
    """Apply a substitution decision: the car leaves realizing the order."""
    car = state.cars.get(car_id)
    if car is None:
        raise StaleDecision(f"car {car_id!r} is not in the buffer")
    lane = state.buffer.lane_of(car_id)
    if lane is None or state.buffer.peek(lane) != car_id:
        raise StaleDecision(f"car {car_id!r} is no longer at the head of a lane")
    if order.order_id in state.pool:
        state.pool.consume(order.order_id)
    elif car.assigned_order != order.order_id:
        raise StaleDecision(f"order {order.order_id!r} was consumed by another decision")
    state.buffer.dequeue(lane, ignore_block=True)
    del state.cars[car_id]
    state.history.record(
        EmissionRecord(
            order_id=order.order_id,
            color=order.color,
            blend_number=order.blend_number,
            matched_constraint_ids=state.pool.matched_ids(order),
            left_at=state.now,
        )
    )
    state.note_recent_color(order.color)
    state._departures.append(state.now)
    state.version += 1


def virtual_drain(
    state: ControllerState,
    strategy: Strategy,
    *,
    step: int | None = None,
) -> tuple[list[tuple[Order, Timestamp]], Fraction]:
    """Drain a forked state completely, returning the sequence and its violations.

    Head blocks are ignored (they are transient operator state); each virtual
    emission advances the clock by the recent inter-departure interval.  The
    caller must pass a fork; the drain consumes its pool and buffer.
    """
    interval = step if step is not None else state.departure_interval()
    sequence: list[tuple[Order, Timestamp]] = []
    total = Fraction(0)
    base_now = state.now
    steps = 0
    while state.buffer.occupancy:
        steps += 1
        state.now = base_now + steps * interval
        try:
            decision = choose_dequeue(state, strategy, ignore_blocks=True)
        except (NoEligibleHead, NoCompatibleOrder):
            break
        matched = state.pool.matched_ids(decision.order)
        total += state.evaluator().total(matched)
        commit_emission(state, decision.car_id, decision.order)
        sequence.append((decision.order, state.now))
    return sequence, total


def choose_enqueue_lane(
    car: CarBody,
    state: ControllerState,
    strategy: Strategy,
    available_lanes: Iterable[int] | None = None,
) -> int:
    """Pick the lane whose full virtual drain promises the best sequence.

    For every available lane the car is virtually enqueued and the buffer
    virtually drained; lanes are compared by total constraint violations of
    the drained sequence, then by its sortedness-to-batching ratio, then by
    index.  A single available lane is returned without simulation.
    """
    lanes = state.buffer.available_lanes()
    if available_lanes is not None:
        allowed = set(available_lanes)
        lanes = [lane for lane in lanes if lane in allowed]
    if not lanes:
        raise NoAvailableLane("no unlocked, non-full lane accepts the car")
    if len(lanes) == 1:
        return lanes[0]

    interval = state.departure_interval()
    best: tuple[Fraction, Fraction, int] | None = None
    for lane in lanes:
        fork = state.fork()
        fork.buffer.enqueue(car.car_id, lane)
        fork.cars[car.car_id] = car
        sequence, violations = virtual_drain(fork, strategy, step=interval)
        if sequence:
            colors = [order.color for order, _ in sequence]
            blends = [order.blend_number for order, _ in sequence]
            ratio = lds_abs_ratio(colors, blends)
        else:
            ratio = Fraction(0)
        key = (violations, ratio, lane)
        if best is None or key < best:
            best = key
    return best[2]
