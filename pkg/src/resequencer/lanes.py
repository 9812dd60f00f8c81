"""Parallel-FIFO lane bank with per-lane capacities, locks, and head blocks."""

from __future__ import annotations

from collections import deque

from .errors import BufferFull, HeadBlocked, LaneEmpty, LaneFull, LaneLocked


class LaneBuffer:
    """A bank of parallel FIFO lanes.

    Cars enter at a lane's tail and leave from its head.  Locked lanes accept
    no enqueues; blocked heads yield no dequeues.  Both the per-lane capacity
    and the total capacity are enforced simultaneously.  A LaneBuffer is a
    single-writer value: callers serialize mutations, snapshots are safe to
    read or mutate independently.
    """

    def __init__(self, lane_count: int, per_lane_capacity: int, total_capacity: int):
        if lane_count < 1:
            raise ValueError("lane_count must be >= 1")
        if per_lane_capacity < 1 or total_capacity < 1:
            raise ValueError("capacities must be >= 1")
        self.per_lane_capacity = per_lane_capacity
        self.total_capacity = total_capacity
        self._lanes: list[deque[str]] = [deque() for _ in range(lane_count)]
        self.locked_lanes: set[int] = set()
        self.blocked_heads: set[int] = set()
        self._position: dict[str, int] = {}

    # --- geometry and inspection ---

    @property
    def lane_count(self) -> int:
        return len(self._lanes)

    @property
    def occupancy(self) -> int:
        return len(self._position)

    def lane(self, index: int) -> tuple[str, ...]:
        self._check_index(index)
        return tuple(self._lanes[index])

    def lane_sizes(self) -> list[int]:
        return [len(lane) for lane in self._lanes]

    def lane_of(self, car_id: str) -> int | None:
        return self._position.get(car_id)

    def __contains__(self, car_id: str) -> bool:
        return car_id in self._position

    def peek(self, index: int) -> str | None:
        self._check_index(index)
        lane = self._lanes[index]
        return lane[0] if lane else None

    def heads(self, *, ignore_blocks: bool = False) -> list[tuple[int, str]]:
        """(lane, head car) for non-empty lanes, ascending lane order.

        Blocked heads are omitted unless ``ignore_blocks`` is set.
        """
        out = []
        for i, lane in enumerate(self._lanes):
            if lane and (ignore_blocks or i not in self.blocked_heads):
                out.append((i, lane[0]))
        return out

    def available_lanes(self) -> list[int]:
        """Lanes that can accept an enqueue right now."""
        if self.occupancy >= self.total_capacity:
            return []
        return [
            i
            for i, lane in enumerate(self._lanes)
            if i not in self.locked_lanes and len(lane) < self.per_lane_capacity
        ]

    # --- mutation ---

    def enqueue(self, car_id: str, lane: int) -> None:
        self._check_index(lane)
        if lane in self.locked_lanes:
            raise LaneLocked(lane)
        if len(self._lanes[lane]) >= self.per_lane_capacity:
            raise LaneFull(lane)
        if self.occupancy >= self.total_capacity:
            raise BufferFull(lane)
        if car_id in self._position:
            raise ValueError(f"car {car_id!r} already buffered")
        self._lanes[lane].append(car_id)
        self._position[car_id] = lane

    def dequeue(self, lane: int, *, ignore_block: bool = False) -> str:
        self._check_index(lane)
        if not self._lanes[lane]:
            raise LaneEmpty(lane)
        if lane in self.blocked_heads and not ignore_block:
            raise HeadBlocked(lane)
        car_id = self._lanes[lane].popleft()
        del self._position[car_id]
        return car_id

    def set_lock(self, lane: int, locked: bool) -> None:
        self._check_index(lane)
        if locked:
            self.locked_lanes.add(lane)
        else:
            self.locked_lanes.discard(lane)

    def set_head_block(self, lane: int, blocked: bool) -> None:
        self._check_index(lane)
        if blocked:
            self.blocked_heads.add(lane)
        else:
            self.blocked_heads.discard(lane)

    def snapshot(self) -> "LaneBuffer":
        """Independent copy; mutating it never affects the original."""
        copy = LaneBuffer.__new__(LaneBuffer)
        copy.per_lane_capacity = self.per_lane_capacity
        copy.total_capacity = self.total_capacity
        copy._lanes = [deque(lane) for lane in self._lanes]
        copy.locked_lanes = set(self.locked_lanes)
        copy.blocked_heads = set(self.blocked_heads)
        copy._position = dict(self._position)
        return copy

    def _check_index(self, lane: int) -> None:
        if not 0 <= lane < len(self._lanes):
            raise IndexError(f"lane {lane} out of range")


def new_buffer(lane_count: int, per_lane_capacity: int, total_capacity: int) -> LaneBuffer:
    return LaneBuffer(lane_count, per_lane_capacity, total_capacity)
