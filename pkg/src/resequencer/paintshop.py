"""Stand-in simulator for the paint shop's internal buffers and lane split.

The real facility runs sealer and primer stations separated by small buffers,
then splits cars over parallel paint lanes; its control code is undocumented
legacy software.  This module implements a declared stand-in policy with the
same qualitative behavior: inputs showing few colors per window come out in
long per-lane color batches.

Stand-in policy:

* Sealer and its buffer preserve order (pure delay), so they are modeled as
  pass-throughs.
* Primer-buffer enqueue is color-affine: a car joins a non-full lane whose
  tail already has its color, otherwise the non-full lane with the most free
  slots, ties to the lowest index.  A car is only forced out (painted) when
  every lane is full.
* Paint lanes keep batches alive: a paint lane whose current color is still
  available at some primer head keeps pulling (the matching head with the
  longest same-color prefix); when no lane can continue, the lane with the
  fewest painted cars starts a new batch from the head with the longest
  same-color prefix.  All ties go to the lowest index.
* Repainting sends a painted car through the primer buffer once more with
  probability ``repaint_rate`` (seeded), keeping its color.

The assessed average batch size of an input is the batch size this policy
would realize on the paint lanes, measured after the buffers drain.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Sequence

from .metrics import batch_stats


@dataclass(frozen=True)
class PaintShopConfig:
    primer_lanes: int = 6
    primer_per_lane_capacity: int = 8
    sealer_buffer_lanes: int = 4
    paint_lane_count: int = 2
    repaint_rate: float = 0.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.primer_lanes < 1 or self.paint_lane_count < 1:
            raise ValueError("primer_lanes and paint_lane_count must be >= 1")
        if not 0 <= self.repaint_rate < 1:
            raise ValueError("repaint_rate must lie in [0, 1)")

    @classmethod
    def from_dict(cls, data: dict) -> "PaintShopConfig":
        return cls(**{k: data[k] for k in data})

    def to_dict(self) -> dict:
        return {
            "primer_lanes": self.primer_lanes,
            "primer_per_lane_capacity": self.primer_per_lane_capacity,
            "sealer_buffer_lanes": self.sealer_buffer_lanes,
            "paint_lane_count": self.paint_lane_count,
            "repaint_rate": self.repaint_rate,
            "rng_seed": self.rng_seed,
        }


@dataclass
class PaintOutcome:
    """Painting order per paint lane, plus the resulting batch measure.

    ``per_lane_input_indices`` maps each painted car back to its position in
    the input sequence (repainted cars appear twice).
    """

    per_lane_sequences: list[list[Hashable]]
    per_lane_input_indices: list[list[int]]
    aabs: Fraction
    batch_count: int
    total_painted: int


class _Primer:
    def __init__(self, lanes: int, capacity: int):
        self.capacity = capacity
        self.lanes: list[deque[tuple[int, Hashable]]] = [deque() for _ in range(lanes)]

    def can_accept(self) -> bool:
        return any(len(lane) < self.capacity for lane in self.lanes)

    def enqueue(self, item: tuple[int, Hashable]) -> None:
        color = item[1]
        for lane in self.lanes:
            if lane and lane[-1][1] == color and len(lane) < self.capacity:
                lane.append(item)
                return
        open_lanes = [i for i, lane in enumerate(self.lanes) if len(lane) < self.capacity]
        if not open_lanes:
            raise RuntimeError("primer buffer full")
        target = min(open_lanes, key=lambda i: (len(self.lanes[i]), i))
        self.lanes[target].append(item)

    def occupied(self) -> bool:
        return any(self.lanes)

    def prefix_length(self, lane_index: int) -> int:
        lane = self.lanes[lane_index]
        if not lane:
            return 0
        color = lane[0][1]
        length = 0
        for _, c in lane:
            if c != color:
                break
            length += 1
        return length

    def heads(self) -> list[tuple[int, Hashable]]:
        return [(i, lane[0][1]) for i, lane in enumerate(self.lanes) if lane]


def simulate(seq: Sequence[Hashable], config: PaintShopConfig | None = None) -> PaintOutcome:
    """Run one input sequence through the stand-in paint shop."""
    config = config or PaintShopConfig()
    rng = random.Random(config.rng_seed) if config.repaint_rate > 0 else None
    primer = _Primer(config.primer_lanes, config.primer_per_lane_capacity)

    painted: list[list[Hashable]] = [[] for _ in range(config.paint_lane_count)]
    origins: list[list[int]] = [[] for _ in range(config.paint_lane_count)]
    current: list[Hashable | None] = [None] * config.paint_lane_count
    repaint_queue: deque[tuple[int, Hashable]] = deque()
    repainted: set[int] = set()

    def pull_one() -> None:
        heads = primer.heads()
        head_colors = {color for _, color in heads}
        continuing = [
            p for p in range(config.paint_lane_count) if current[p] in head_colors
        ]
        if continuing:
            paint_lane = min(continuing, key=lambda p: (len(painted[p]), p))
            candidates = [i for i, color in heads if color == current[paint_lane]]
        else:
            paint_lane = min(
                range(config.paint_lane_count), key=lambda p: (len(painted[p]), p)
            )
            candidates = [i for i, _ in heads]
        source = min(candidates, key=lambda i: (-primer.prefix_length(i), i))
        index, color = primer.lanes[source].popleft()
        painted[paint_lane].append(color)
        origins[paint_lane].append(index)
        current[paint_lane] = color
        if rng is not None and index not in repainted and rng.random() < config.repaint_rate:
            repainted.add(index)
            repaint_queue.append((index, color))

    def feed(item: tuple[int, Hashable]) -> None:
        while not primer.can_accept():
            pull_one()
        primer.enqueue(item)
        while repaint_queue and primer.can_accept():
            primer.enqueue(repaint_queue.popleft())

    for position, color in enumerate(seq):
        feed((position, color))
    while primer.occupied() or repaint_queue:
        if repaint_queue and primer.can_accept():
            primer.enqueue(repaint_queue.popleft())
            continue
        pull_one()

    total = sum(len(lane) for lane in painted)
    batches = sum(batch_stats(lane).batch_count for lane in painted)
    return PaintOutcome(
        per_lane_sequences=painted,
        per_lane_input_indices=origins,
        aabs=Fraction(total, batches) if batches else Fraction(0),
        batch_count=batches,
        total_painted=total,
    )


def aabs(seq: Sequence[Hashable], config: PaintShopConfig | None = None) -> Fraction:
    """Assessed average batch size of a sequence entering the paint shop."""
    return simulate(seq, config).aabs
