"""HTTP integration surface: the three decision endpoints plus plant events.

The plant relays its buffer events here; each decision endpoint forwards to
the controller through a single shared session, strictly one request at a
time, and appends the request/response pair to a JSONL decision log that
``resequencer replay`` accepts unchanged.  A substitution query is logged as
a single-head dequeue request so the written log stays replayable.
"""

from __future__ import annotations

import os
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from ..errors import ResequencerError
from ..scenario_io import load_scenario
from ..session import (
    DEQUEUE_REQUEST,
    EMISSION_OBSERVED,
    ENQUEUE_REQUEST,
    LANE_LOCK_CHANGED,
    EventRecord,
    Session,
)
from . import schemas

_CONFLICTS = (
    "StaleDecision",
    "InconsistentEvent",
    "NoEligibleHead",
    "NoAvailableLane",
    "NoCompatibleOrder",
    "LaneFull",
    "LaneLocked",
    "BufferFull",
    "LaneEmpty",
    "HeadBlocked",
)


class ServiceState:
    """One loaded scenario, its session, and the request serialization lock."""

    def __init__(self, session: Session, log_path: Path | None):
        self.session = session
        self.lock = threading.Lock()
        self.log_path = log_path

    @classmethod
    def from_scenario(
        cls, scenario_dir: str | Path, log_path: str | Path | None = None
    ) -> "ServiceState":
        catalog, config = load_scenario(scenario_dir)
        sink = None
        path = Path(log_path) if log_path else None
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text("", encoding="utf-8")

            def sink(entry: dict) -> None:
                import json

                with open(path, "a", encoding="utf-8") as handle:
                    handle.write(json.dumps(entry, separators=(",", ":")) + "\n")

        session = Session(
            catalog,
            config.make_buffer(),
            config.make_strategy(),
            preassigned=config.preassigned,
            virtual_step_default=config.virtual_step_default,
            log_sink=sink,
        )
        return cls(session, path)


def create_app(
    scenario_dir: str | Path | None = None,
    log_path: str | Path | None = None,
) -> FastAPI:
    """Build the service; without a scenario the endpoints answer 503."""
    app = FastAPI(title="resequencer", version="0.1.0")
    scenario_dir = scenario_dir or os.environ.get("SCENARIO_DIR")
    app.state.service = (
        ServiceState.from_scenario(scenario_dir, log_path) if scenario_dir else None
    )

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400, content={"error": "MalformedRequest", "detail": str(exc)}
        )

    def service() -> ServiceState:
        return app.state.service

    def run(event: EventRecord) -> dict:
        state = service()
        with state.lock:
            return state.session.handle(event)

    def conflict(exc: ResequencerError) -> JSONResponse:
        name = type(exc).__name__
        status = 409 if name in _CONFLICTS else 500
        return JSONResponse(status_code=status, content={"error": name, "detail": str(exc)})

    def unavailable() -> JSONResponse:
        return JSONResponse(
            status_code=503,
            content={"error": "NotLoaded", "detail": "no scenario is loaded"},
        )

    @app.post("/enqueue", response_model=schemas.EnqueueResponse)
    def enqueue(query: schemas.EnqueueQuery):
        if service() is None:
            return unavailable()
        event = EventRecord(
            kind=ENQUEUE_REQUEST,
            timestamp=query.timestamp,
            car_id=query.car_id,
            body_type=query.body_type,
            available_lanes=tuple(query.available_lanes)
            if query.available_lanes is not None
            else None,
        )
        try:
            response = run(event)
        except ResequencerError as exc:
            return conflict(exc)
        return {"lane": response["lane"], "state_version": response["state_version"]}

    @app.post("/dequeue", response_model=schemas.DequeueResponse)
    def dequeue(query: schemas.DequeueQuery):
        if service() is None:
            return unavailable()
        event = EventRecord(
            kind=DEQUEUE_REQUEST,
            timestamp=query.timestamp,
            eligible_heads=tuple(query.eligible_heads)
            if query.eligible_heads is not None
            else None,
        )
        try:
            response = run(event)
        except ResequencerError as exc:
            return conflict(exc)
        return {
            "lane": response["lane"],
            "car_id": response["car_id"],
            "order_id": response["order_id"],
            "color": response["color"],
            "blend_number": response["blend_number"],
            "state_version": response["state_version"],
        }

    @app.post("/substitute", response_model=schemas.SubstituteResponse)
    def substitute(query: schemas.SubstituteQuery):
        """Assign the order that the named car realizes as it leaves.

        The car must be at the head of its lane; the decision is logged as a
        single-head dequeue request so the decision log stays replayable.
        """
        state = service()
        if state is None:
            return unavailable()
        with state.lock:
            lane = state.session.state.buffer.lane_of(query.car_id)
            if lane is None or state.session.state.buffer.peek(lane) != query.car_id:
                return JSONResponse(
                    status_code=409,
                    content={
                        "error": "StaleDecision",
                        "detail": f"car {query.car_id!r} is not at the head of a lane",
                    },
                )
            event = EventRecord(
                kind=DEQUEUE_REQUEST, timestamp=query.timestamp, eligible_heads=(lane,)
            )
            try:
                response = state.session.handle(event)
            except ResequencerError as exc:
                return conflict(exc)
        return {
            "car_id": response["car_id"],
            "order_id": response["order_id"],
            "color": response["color"],
            "blend_number": response["blend_number"],
            "state_version": response["state_version"],
        }

    @app.post("/event", response_model=schemas.EventResponse)
    def plant_event(event: schemas.LaneLockEvent | schemas.EmissionObservedEvent):
        if service() is None:
            return unavailable()
        if event.kind == LANE_LOCK_CHANGED:
            record = EventRecord(
                kind=LANE_LOCK_CHANGED,
                timestamp=event.timestamp,
                lane=event.lane,
                locked=event.locked,
            )
        else:
            record = EventRecord(
                kind=EMISSION_OBSERVED,
                timestamp=event.timestamp,
                car_id=event.car_id,
                order_id=event.order_id,
            )
        try:
            response = run(record)
        except ResequencerError as exc:
            return conflict(exc)
        return {"status": response["status"], "state_version": response["state_version"]}

    @app.get("/status", response_model=schemas.StatusResponse)
    def status():
        state = service()
        if state is None:
            return unavailable()
        with state.lock:
            return state.session.status()

    return app


app = create_app()
