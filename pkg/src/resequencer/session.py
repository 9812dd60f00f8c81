"""Event records and the session driver shared by replay and the service.

A session owns one controller state and applies events to it one at a time.
Every request/response pair is appended to the decision log before the
response is handed back, so a log written by the live service can be fed
straight back into :func:`resequencer.harness.replay`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from .controller import (
    ControllerState,
    Strategy,
    choose_dequeue,
    choose_enqueue_lane,
    commit_emission,
)
from .domain import CarBody, Order, ScenarioCatalog, Timestamp
from .errors import InconsistentEvent, NoEligibleHead, ResequencerError
from .lanes import LaneBuffer

ENQUEUE_REQUEST = "enqueue_request"
DEQUEUE_REQUEST = "dequeue_request"
EMISSION_OBSERVED = "emission_observed"
LANE_LOCK_CHANGED = "lane_lock_changed"

EVENT_KINDS = (ENQUEUE_REQUEST, DEQUEUE_REQUEST, EMISSION_OBSERVED, LANE_LOCK_CHANGED)


@dataclass(frozen=True)
class EventRecord:
    """One buffer event, as relayed by the plant or synthesized."""

    kind: str
    timestamp: Timestamp
    car_id: str | None = None
    body_type: str | None = None
    available_lanes: tuple[int, ...] | None = None
    eligible_heads: tuple[int, ...] | None = None
    order_id: str | None = None
    lane: int | None = None
    locked: bool | None = None

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"kind": self.kind, "timestamp": self.timestamp}
        if self.kind == ENQUEUE_REQUEST:
            data["car_id"] = self.car_id
            data["body_type"] = self.body_type
            if self.available_lanes is not None:
                data["available_lanes"] = list(self.available_lanes)
        elif self.kind == DEQUEUE_REQUEST:
            if self.eligible_heads is not None:
                data["eligible_heads"] = list(self.eligible_heads)
        elif self.kind == EMISSION_OBSERVED:
            data["car_id"] = self.car_id
            data["order_id"] = self.order_id
        else:
            data["lane"] = self.lane
            data["locked"] = self.locked
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EventRecord":
        known = {
            "kind",
            "timestamp",
            "car_id",
            "body_type",
            "available_lanes",
            "eligible_heads",
            "order_id",
            "lane",
            "locked",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown event keys: {sorted(unknown)}")
        lanes = data.get("available_lanes")
        heads = data.get("eligible_heads")
        return cls(
            kind=data["kind"],
            timestamp=int(data["timestamp"]),
            car_id=data.get("car_id"),
            body_type=data.get("body_type"),
            available_lanes=tuple(lanes) if lanes is not None else None,
            eligible_heads=tuple(heads) if heads is not None else None,
            order_id=data.get("order_id"),
            lane=data.get("lane"),
            locked=data.get("locked"),
        )


@dataclass(frozen=True)
class Emission:
    """One car leaving the buffer with the order it realizes."""

    car_id: str
    order_id: str
    color: str
    blend_number: int
    left_at: Timestamp

    def to_dict(self) -> dict[str, Any]:
        return {
            "car_id": self.car_id,
            "order_id": self.order_id,
            "color": self.color,
            "blend_number": self.blend_number,
            "left_at": self.left_at,
        }


class Session:
    """Applies events to a controller state, recording every decision.

    With ``substitution_enabled=False`` the session reenacts buffer movements
    without reassigning orders: each leaving car keeps the order it is
    preassigned to (``preassigned`` maps car ids to order ids).
    """

    def __init__(
        self,
        catalog: ScenarioCatalog,
        buffer: LaneBuffer,
        strategy: Strategy,
        *,
        substitution_enabled: bool = True,
        preassigned: dict[str, str] | None = None,
        virtual_step_default: int = 60,
        log_sink: Callable[[dict], None] | None = None,
    ):
        self.state = ControllerState(
            catalog, buffer, virtual_step_default=virtual_step_default
        )
        self.strategy = strategy
        self.substitution_enabled = substitution_enabled
        self.preassigned = dict(preassigned or {})
        self.decision_log: list[dict] = []
        self.emissions: list[Emission] = []
        self.skipped = 0
        self._orders = catalog.order_map()
        self._log_sink = log_sink

    def handle(self, event: EventRecord) -> dict[str, Any]:
        """Apply one event; the request/response pair is logged either way.

        Raises the underlying error after logging it, so callers choose
        whether to skip (replay) or surface it (service).
        """
        try:
            response = self._apply(event)
        except ResequencerError as exc:
            response = {
                "status": "error",
                "error": type(exc).__name__,
                "detail": str(exc),
            }
            self._log(event, response)
            raise
        self._log(event, response)
        return response

    def handle_or_skip(self, event: EventRecord) -> dict[str, Any] | None:
        """Apply one event, tolerating noise: errors are logged and skipped."""
        try:
            return self.handle(event)
        except ResequencerError:
            self.skipped += 1
            return None

    # --- event application ---

    def _apply(self, event: EventRecord) -> dict[str, Any]:
        if event.timestamp < self.state.now:
            raise InconsistentEvent(
                f"event at {event.timestamp} predates controller clock {self.state.now}"
            )
        self.state.now = event.timestamp
        if event.kind == ENQUEUE_REQUEST:
            return self._apply_enqueue(event)
        if event.kind == DEQUEUE_REQUEST:
            return self._apply_dequeue(event)
        if event.kind == EMISSION_OBSERVED:
            return self._apply_emission(event)
        return self._apply_lock(event)

    def _apply_enqueue(self, event: EventRecord) -> dict[str, Any]:
        if not event.car_id or not event.body_type:
            raise InconsistentEvent("enqueue_request needs car_id and body_type")
        if event.car_id in self.state.cars:
            raise InconsistentEvent(f"car {event.car_id!r} is already buffered")
        car = CarBody(
            car_id=event.car_id, body_type=event.body_type, entered_at=event.timestamp
        )
        lane = choose_enqueue_lane(car, self.state, self.strategy, event.available_lanes)
        self.state.buffer.enqueue(car.car_id, lane)
        self.state.cars[car.car_id] = car
        self.state.version += 1
        return {
            "status": "ok",
            "decision": "enqueue",
            "lane": lane,
            "state_version": self.state.version,
        }

    def _apply_dequeue(self, event: EventRecord) -> dict[str, Any]:
        if self.substitution_enabled:
            decision = choose_dequeue(self.state, self.strategy, event.eligible_heads)
            order = decision.order
            car_id = decision.car_id
            lane = decision.lane
        else:
            lane, car_id, order = self._passthrough_head(event)
        commit_emission(self.state, car_id, order)
        emission = Emission(
            car_id=car_id,
            order_id=order.order_id,
            color=order.color.ident,
            blend_number=order.blend_number,
            left_at=event.timestamp,
        )
        self.emissions.append(emission)
        return {
            "status": "ok",
            "decision": "dequeue",
            "lane": lane,
            "car_id": car_id,
            "order_id": order.order_id,
            "color": order.color.ident,
            "blend_number": order.blend_number,
            "state_version": self.state.version,
        }

    def _passthrough_head(self, event: EventRecord) -> tuple[int, str, Order]:
        heads = self.state.buffer.heads()
        if event.eligible_heads is not None:
            allowed = set(event.eligible_heads)
            heads = [(lane, car) for lane, car in heads if lane in allowed]
        if not heads:
            raise NoEligibleHead("no lane offers an eligible head")
        lane, car_id = min(
            heads, key=lambda lc: (self.state.cars[lc[1]].entered_at, lc[0])
        )
        order_id = self.preassigned.get(car_id)
        if order_id is None:
            raise InconsistentEvent(f"car {car_id!r} has no preassigned order")
        order = self._orders.get(order_id)
        if order is None:
            raise InconsistentEvent(f"preassigned order {order_id!r} is not in the catalog")
        return lane, car_id, order

    def _apply_emission(self, event: EventRecord) -> dict[str, Any]:
        if not event.car_id or not event.order_id:
            raise InconsistentEvent("emission_observed needs car_id and order_id")
        car = self.state.cars.get(event.car_id)
        if car is None:
            raise InconsistentEvent(f"car {event.car_id!r} is not in the buffer")
        order = self._orders.get(event.order_id)
        if order is None:
            raise InconsistentEvent(f"order {event.order_id!r} is not in the catalog")
        if order.body_type != car.body_type:
            raise InconsistentEvent(
                f"order {order.order_id!r} body type does not match car {car.car_id!r}"
            )
        commit_emission(self.state, event.car_id, order)
        self.emissions.append(
            Emission(
                car_id=event.car_id,
                order_id=order.order_id,
                color=order.color.ident,
                blend_number=order.blend_number,
                left_at=event.timestamp,
            )
        )
        return {
            "status": "ok",
            "decision": "emission",
            "car_id": event.car_id,
            "order_id": order.order_id,
            "state_version": self.state.version,
        }

    def _apply_lock(self, event: EventRecord) -> dict[str, Any]:
        if event.lane is None or event.locked is None:
            raise InconsistentEvent("lane_lock_changed needs lane and locked")
        try:
            self.state.buffer.set_lock(event.lane, event.locked)
        except IndexError as exc:
            raise InconsistentEvent(str(exc)) from exc
        self.state.version += 1
        return {
            "status": "ok",
            "decision": "lock",
            "lane": event.lane,
            "locked": event.locked,
            "state_version": self.state.version,
        }

    def _log(self, event: EventRecord, response: dict[str, Any]) -> None:
        entry = {"seq": len(self.decision_log), "event": event.to_dict(), "response": response}
        self.decision_log.append(entry)
        if self._log_sink is not None:
            self._log_sink(entry)

    # --- views ---

    def status(self) -> dict[str, Any]:
        buffer = self.state.buffer
        return {
            "occupancy": buffer.occupancy,
            "pool_size": len(self.state.pool),
            "lane_sizes": buffer.lane_sizes(),
            "locked_lanes": sorted(buffer.locked_lanes),
            "blocked_heads": sorted(buffer.blocked_heads),
            "recent_colors": [c.ident for c in self.state.recent_colors],
            "strategy": self.strategy.kind,
            "k": self.strategy.k,
            "emissions": len(self.emissions),
            "state_version": self.state.version,
        }
