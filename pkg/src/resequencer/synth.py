"""Synthetic scenario and event-stream generation for desk-scale experiments.

The generator builds a planned order book (unique blend numbers, daily due
cohorts, colors drawn from a popularity distribution), then reenacts the
plant: bodies arrive roughly in planned order but perturbed by adjacent
swaps, the plant assigns arrival lanes and decides which head leaves next,
and the controller is only consulted through the resulting event stream.
``plant_controls_lanes=False`` instead leaves the lane choice to the
controller by offering every available lane on each enqueue.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .domain import ColorId, Order, ScenarioCatalog
from .lanes import LaneBuffer
from .scenario_io import RunConfig
from .session import DEQUEUE_REQUEST, ENQUEUE_REQUEST, EventRecord

_COLOR_NAMES = (
    "Frozen White", "Absolute Black", "Magnetic Grey", "Moondust Silver",
    "Race Red", "Blazer Blue", "Chrome Blue", "Agate Black", "Fantastic Red",
    "Solar Silver", "Sedona Orange", "Grey Matter", "Mean Green",
    "Desert Island Blue", "Cactus Grey", "Diffused Silver", "Bursting Green",
    "Velocity Blue", "Iced Blueberry", "Carbonized Grey",
)


@dataclass
class SyntheticScenario:
    events: list[EventRecord]
    catalog: ScenarioCatalog
    config: RunConfig


def rank_frequencies(n_colors: int) -> list[float]:
    """Popularity weights proportional to 1/rank: a few favorites, a long tail."""
    weights = [1.0 / rank for rank in range(1, n_colors + 1)]
    total = sum(weights)
    return [w / total for w in weights]


def generate_synthetic(
    n_cars: int,
    n_colors: int = 20,
    color_distribution: list[float] | None = None,
    blend_shuffle_strength: float = 0.5,
    seed: int = 0,
    *,
    body_types: tuple[str, ...] = ("limousine",),
    lanes: int = 13,
    per_lane_capacity: int = 12,
    total_capacity: int = 148,
    cars_per_day: int = 250,
    cycle_seconds: int = 60,
    fill_fraction: float = 0.8,
    start_timestamp: int = 1_672_560_000,  # 2023-01-01 08:00:00 UTC
    start_day_offset: int = 7,
    plant_controls_lanes: bool = True,
) -> SyntheticScenario:
    """Deterministic scenario plus event stream for the given seed."""
    if n_colors < 2:
        raise ValueError("n_colors must be >= 2")
    if n_cars < 1:
        raise ValueError("n_cars must be >= 1")
    distribution = color_distribution or rank_frequencies(n_colors)
    if len(distribution) != n_colors:
        raise ValueError("color_distribution length must equal n_colors")
    rng = random.Random(seed)

    colors = tuple(
        ColorId(f"C{i + 1:02d}", _COLOR_NAMES[i % len(_COLOR_NAMES)])
        for i in range(n_colors)
    )
    base_day = start_timestamp // 86400 + start_day_offset
    orders = []
    for blend in range(1, n_cars + 1):
        day = base_day + (blend - 1) // cars_per_day
        orders.append(
            Order(
                order_id=f"ord-{blend:06d}",
                body_type=body_types[(blend - 1) % len(body_types)],
                color=rng.choices(colors, weights=distribution)[0],
                blend_number=blend,
                due_date=day,
                planned_date=day,
                features=frozenset(
                    feature
                    for feature, rate in (("SUNROOF", 0.25), ("TOW_HITCH", 0.1), ("TWO_TONE", 0.05))
                    if rng.random() < rate
                ),
            )
        )

    # bodies arrive in planned order perturbed by adjacent swaps
    arrival = list(range(n_cars))
    for _ in range(int(blend_shuffle_strength * n_cars)):
        i = rng.randrange(n_cars - 1)
        arrival[i], arrival[i + 1] = arrival[i + 1], arrival[i]

    preassigned: dict[str, str] = {}
    cars: list[tuple[str, Order]] = []
    for position, order_index in enumerate(arrival):
        car_id = f"car-{position:06d}"
        order = orders[order_index]
        preassigned[car_id] = order.order_id
        cars.append((car_id, order))

    # reenact the plant's own buffer movements
    plant = LaneBuffer(lanes, per_lane_capacity, total_capacity)
    entered: dict[str, int] = {}
    events: list[EventRecord] = []
    clock = start_timestamp
    target = max(1, min(int(total_capacity * fill_fraction), total_capacity))
    next_car = 0

    def plant_enqueue() -> None:
        nonlocal next_car, clock
        car_id, order = cars[next_car]
        next_car += 1
        open_lanes = plant.available_lanes()
        lane = min(open_lanes, key=lambda i: (len(plant.lane(i)), i))
        if plant_controls_lanes:
            offered: tuple[int, ...] | None = (lane,)
        else:
            offered = None
        events.append(
            EventRecord(
                kind=ENQUEUE_REQUEST,
                timestamp=clock,
                car_id=car_id,
                body_type=order.body_type,
                available_lanes=offered,
            )
        )
        plant.enqueue(car_id, lane)
        entered[car_id] = clock
        clock += cycle_seconds

    def plant_dequeue() -> None:
        nonlocal clock
        heads = plant.heads()
        lane, car_id = min(heads, key=lambda lc: (entered[lc[1]], lc[0]))
        # with controller-chosen lanes the replica cannot know real head
        # positions, so the stream leaves the head choice open
        chosen: tuple[int, ...] | None = (lane,) if plant_controls_lanes else None
        events.append(
            EventRecord(kind=DEQUEUE_REQUEST, timestamp=clock, eligible_heads=chosen)
        )
        plant.dequeue(lane)
        clock += cycle_seconds

    while next_car < n_cars:
        if plant.occupancy < target and plant.available_lanes():
            plant_enqueue()
        else:
            plant_dequeue()
    while plant.occupancy:
        plant_dequeue()

    catalog = ScenarioCatalog(
        orders=tuple(orders),
        constraints=(),
        colors=colors,
        body_types=frozenset(body_types),
        scenario_id=f"synthetic-{seed}",
    )
    config = RunConfig(
        scenario_id=catalog.scenario_id,
        lanes=lanes,
        per_lane_capacity=per_lane_capacity,
        total_capacity=total_capacity,
        preassigned=preassigned,
    )
    return SyntheticScenario(events=events, catalog=catalog, config=config)
