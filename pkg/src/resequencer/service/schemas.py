"""Pydantic request/response models for the decision API."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class EnqueueQuery(BaseModel):
    car_id: str
    body_type: str
    timestamp: int
    available_lanes: Optional[list[int]] = None


class DequeueQuery(BaseModel):
    timestamp: int
    eligible_heads: Optional[list[int]] = None


class SubstituteQuery(BaseModel):
    car_id: str
    timestamp: int


class LaneLockEvent(BaseModel):
    kind: Literal["lane_lock_changed"]
    timestamp: int
    lane: int
    locked: bool


class EmissionObservedEvent(BaseModel):
    kind: Literal["emission_observed"]
    timestamp: int
    car_id: str
    order_id: str


class EnqueueResponse(BaseModel):
    lane: int
    state_version: int


class DequeueResponse(BaseModel):
    lane: int
    car_id: str
    order_id: str
    color: str
    blend_number: int
    state_version: int


class SubstituteResponse(BaseModel):
    car_id: str
    order_id: str
    color: str
    blend_number: int
    state_version: int


class EventResponse(BaseModel):
    status: str
    state_version: int


class StatusResponse(BaseModel):
    occupancy: int
    pool_size: int
    lane_sizes: list[int]
    locked_lanes: list[int]
    blocked_heads: list[int]
    recent_colors: list[str]
    strategy: str
    k: int
    emissions: int
    state_version: int


class ErrorResponse(BaseModel):
    error: str
    detail: str = Field(default="")
