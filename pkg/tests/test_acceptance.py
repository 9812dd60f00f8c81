"""Acceptance gate: the golden, oracle, trend, and end-to-end checks.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion.
"""

import itertools
import random
from contextlib import contextmanager
from fractions import Fraction

from fastapi.testclient import TestClient

from resequencer import harness, metrics, paintshop, synth
from resequencer.constraints import (
    CnfLiteral,
    Constraint,
    EmissionHistory,
    EmissionRecord,
    TimeRule,
    WindowRule,
    matches,
    violation_weight,
)
from resequencer.domain import ColorId, Order, timestamp_from_iso
from resequencer.scenario_io import (
    decision_log_bytes,
    load_events,
    load_scenario,
    save_events,
    save_scenario,
)
from resequencer.service.app import create_app
from resequencer.session import ENQUEUE_REQUEST


@contextmanager
def criterion(number, title):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number:>2}: FAIL - {title}")
        raise
    print(f"ACCEPTANCE {number:>2}: PASS - {title}")


def order_with(features=(), order_id="q", blend=1):
    return Order(
        order_id=order_id,
        body_type="limousine",
        color=ColorId("C1"),
        blend_number=blend,
        due_date=19000,
        planned_date=19000,
        features=frozenset(features),
    )


def test_criterion_1_worked_batch_examples():
    with criterion(1, "worked example: ABS 9/7 and assessed batch size 3"):
        stats = metrics.batch_stats(list("RBRRGBGGR"))
        assert stats.average_batch_size == Fraction(9, 7)
        outcome = paintshop.simulate(list("RGGBGRRBR"))  # worked example, painting order
        assert outcome.total_painted == 9
        assert outcome.batch_count == 3
        assert outcome.aabs == Fraction(3)
        batch_sizes = sorted(
            length
            for lane in outcome.per_lane_sequences
            for length, cars in metrics.batch_stats(lane).batch_length_histogram.items()
            for _ in range(cars // length)
        )
        assert batch_sizes == [2, 3, 4]


def test_criterion_2_sortedness_worked_example():
    with criterion(2, "worked example: decreasing-subsequence profile of 4,1,3,5,2"):
        stats = metrics.sortedness([4, 1, 3, 5, 2])
        assert stats.per_element == (1, 2, 2, 1, 3)
        assert stats.lds == 3
        assert stats.per_element[2] == 2  # subsequence 4,3 ends at element 3
        assert stats.per_element[4] == 3  # subsequence 4,3,2 ends at element 2


def _merges(lanes):
    lanes = tuple(lane for lane in lanes if lane)
    if not lanes:
        yield ()
        return
    for i, lane in enumerate(lanes):
        head, rest = lane[0], lane[1:]
        remaining = lanes[:i] + ((rest,) if rest else ()) + lanes[i + 1 :]
        for tail in _merges(remaining):
            yield (head,) + tail


def test_criterion_3_three_lanes_cannot_sort_four():
    with criterion(3, "no 3-lane strategy sorts 4,3,2,1; best output LDS is 2"):
        values = [4, 3, 2, 1]
        outputs = set()
        for assignment in itertools.product(range(3), repeat=4):
            lanes = [[] for _ in range(3)]
            for value, lane in zip(values, assignment):
                lanes[lane].append(value)
            outputs.update(_merges(tuple(tuple(lane) for lane in lanes)))
        best = min(metrics.lds_fast(list(out)) for out in outputs)
        assert best == 2
        assert (2, 1, 3, 4) in outputs
        assert (1, 2, 3, 4) not in outputs


def test_criterion_4_lds_oracle_equivalence():
    with criterion(4, "patience LDS equals quadratic DP on 1000 permutations"):
        rng = random.Random(1234)
        for _ in range(1000):
            length = rng.randint(1, 200)
            seq = rng.sample(range(10 * length), length)
            assert metrics.lds_fast(seq) == metrics.sortedness(seq).lds


FEATURES = ["A", "B", "C", "D", "E"]


def _naive_violation_weight(query, at, emissions, constraints):
    total = Fraction(0)
    for c in constraints:
        if not matches(query.features, c.formula):
            continue
        if isinstance(c.rule, WindowRule):
            newest_first = list(reversed(emissions))[: c.rule.window_size - 1]
            count = sum(1 for feats, _ in newest_first if matches(feats, c.formula))
        else:
            span = (at - c.rule.anchor) // c.rule.period
            start = c.rule.anchor + span * c.rule.period
            count = sum(
                1
                for feats, left_at in emissions
                if start <= left_at < start + c.rule.period and matches(feats, c.formula)
            )
        if count >= c.rule.max_matches:
            total += c.weight
    return total


def test_criterion_5_constraint_oracle_equivalence():
    with criterion(5, "violation weights match a full-rescan oracle on 500 scenarios"):
        rng = random.Random(20230501)
        for _ in range(500):
            constraints = []
            for index in range(rng.randint(1, 5)):
                formula = tuple(
                    tuple(
                        CnfLiteral(rng.choice(FEATURES), rng.random() < 0.2)
                        for _ in range(rng.randint(1, 2))
                    )
                    for _ in range(rng.randint(0, 2))
                )
                weight = Fraction(rng.randint(0, 6), rng.choice([1, 2, 4]))
                if rng.random() < 0.5:
                    m = rng.randint(1, 4)
                    rule = WindowRule(m, rng.randint(m, 10))
                else:
                    rule = TimeRule(
                        rng.randint(1, 4), rng.choice([60, 600, 3600]), rng.randint(0, 400)
                    )
                constraints.append(Constraint(f"c{index}", weight, formula, rule))
            pruned = EmissionHistory.for_constraints(constraints)
            unpruned = EmissionHistory()
            emissions = []
            at = rng.randint(0, 1000)
            for i in range(rng.randint(0, 50)):
                feats = frozenset(f for f in FEATURES if rng.random() < 0.4)
                at += rng.randint(0, 120)
                matched = frozenset(
                    c.constraint_id for c in constraints if matches(feats, c.formula)
                )
                record = EmissionRecord(f"e{i}", ColorId("C1"), i + 1, matched, at)
                pruned.record(record)
                unpruned.record(record)
                emissions.append((feats, at))
            query = order_with(frozenset(f for f in FEATURES if rng.random() < 0.4))
            query_at = at + rng.randint(0, 200)
            expected = _naive_violation_weight(query, query_at, emissions, constraints)
            assert violation_weight(query, query_at, unpruned, constraints) == expected
            assert violation_weight(query, query_at, pruned, constraints) == expected


def test_criterion_6_time_window_semantics():
    with criterion(6, "5-per-24h rule: violation inside a window, none across windows"):
        anchor = timestamp_from_iso("2023-05-06T06:00:00Z")
        day = 86400
        rule = Constraint(
            "c", Fraction(1), ((CnfLiteral("A"),),), TimeRule(5, day, anchor)
        )
        query = order_with({"A"})

        inside = EmissionHistory()
        for i in range(6):
            inside.record(
                EmissionRecord(f"w{i}", ColorId("C1"), i + 1, frozenset({"c"}), anchor + (i + 1) * 3600)
            )
        assert violation_weight(query, anchor + 20 * 3600, inside, [rule]) == Fraction(1)

        boundary = EmissionHistory()
        third_window = anchor + 2 * day
        stamps = [third_window - 3 * 3600 + i * 3600 for i in range(3)]
        stamps += [third_window + i * 3600 for i in range(3)]
        for i, left_at in enumerate(stamps):
            boundary.record(
                EmissionRecord(f"b{i}", ColorId("C1"), i + 1, frozenset({"c"}), left_at)
            )
        assert violation_weight(query, third_window + 5 * 3600, boundary, [rule]) == 0


# exact values pinned from the first independent sweep run (seed 42)
SWEEP_EXPECTED = {
    0: (Fraction(625, 551), Fraction(2500, 1507), 0),
    1: (Fraction(5000, 379), Fraction(5000, 413), 3764),
    2: (Fraction(5000, 467), Fraction(2500, 203), 3874),
    3: (Fraction(2500, 277), Fraction(5000, 463), 4043),
    4: (Fraction(500, 61), Fraction(5000, 499), 4173),
    5: (Fraction(5000, 759), Fraction(5000, 627), 4073),
}


def _run_sweep():
    scenario = synth.generate_synthetic(5000, n_colors=20, seed=42)
    return harness.k_sweep(scenario.events, scenario.catalog, scenario.config, range(6))


def test_criterion_7_k_sweep_trends():
    with criterion(7, "k-sweep trends on the seeded 5000-car corpus"):
        points = _run_sweep()
        # (a) batch size after substitution shrinks as k grows
        abs_values = [points[k].average_batch_size for k in range(1, 6)]
        assert all(a >= b for a, b in zip(abs_values, abs_values[1:]))
        # (b) assessed batch size at k=3 beats no-substitution by at least 15%
        assert points[3].aabs >= Fraction(115, 100) * points[0].aabs
        # (c) more 50-car windows hold at most 6 colors at k=3
        def low_mass(point):
            return sum(v for colors, v in point.color_window_histogram.items() if colors <= 6)

        assert low_mass(points[3]) > low_mass(points[0])
        # cross-check against the pinned first run and a second full run
        for k, (abs_value, aabs_value, mass) in SWEEP_EXPECTED.items():
            assert points[k].average_batch_size == abs_value
            assert points[k].aabs == aabs_value
            assert low_mass(points[k]) == mass
        second = _run_sweep()
        for k in range(6):
            assert second[k].to_dict() == points[k].to_dict()


def test_criterion_8_changeover_arithmetic():
    with criterion(8, "changeovers-per-car and batch-gain conversion arithmetic"):
        assert round(float(metrics.cpc_from_counts(13610, 2968)), 3) == 0.218
        assert round(metrics.changeover_reduction_from_batch_gain(0.3), 2) == 0.23


def test_criterion_9_regression_sanity():
    with criterion(9, "orthogonal regression: identity line and noisy recovery"):
        xs = [1.0, 2.0, 3.0, 7.0]
        slope, intercept = metrics.deming_regression(xs, xs)
        assert abs(slope - 1.0) <= 1e-12
        assert abs(intercept) <= 1e-12
        rng = random.Random(2024)
        noisy_x, noisy_y = [], []
        for _ in range(200):
            true_x = rng.uniform(0, 100)
            noisy_x.append(true_x + rng.gauss(0, 1))
            noisy_y.append(0.9 * true_x + 20 + rng.gauss(0, 1))
        slope, _ = metrics.deming_regression(noisy_x, noisy_y)
        assert abs(slope - 0.9) <= 0.05


def test_criterion_10_replay_determinism():
    with criterion(10, "replaying a 2000-event log twice is byte-identical"):
        scenario = synth.generate_synthetic(1000, seed=4242)
        assert len(scenario.events) == 2000
        runs = []
        for _ in range(2):
            result = harness.replay(scenario.events, scenario.catalog, scenario.config)
            report = metrics.KpiReport.for_sequence(
                result.colors,
                result.blends,
                assessed=paintshop.aabs(result.colors, scenario.config.paintshop),
                scenario_id=scenario.catalog.scenario_id,
                label="leaving",
            )
            runs.append((decision_log_bytes(result.decision_log), report.to_dict()))
        assert runs[0][0] == runs[1][0]
        assert runs[0][1] == runs[1][1]


def test_criterion_11_service_self_consistency(tmp_path):
    with criterion(11, "a served session's decision log replays to the same sequence"):
        scenario = synth.generate_synthetic(
            40, seed=99, lanes=4, per_lane_capacity=5, total_capacity=20, cars_per_day=10
        )
        scenario_dir = tmp_path / "scenario"
        save_scenario(scenario.catalog, scenario.config, scenario_dir)
        save_events(scenario.events, scenario_dir / "events.jsonl")
        log_path = tmp_path / "decision_log.jsonl"
        app = create_app(scenario_dir, log_path=log_path)
        served = []
        with TestClient(app) as client:
            for event in scenario.events:
                if event.kind == ENQUEUE_REQUEST:
                    response = client.post(
                        "/enqueue",
                        json={
                            "car_id": event.car_id,
                            "body_type": event.body_type,
                            "timestamp": event.timestamp,
                            "available_lanes": list(event.available_lanes)
                            if event.available_lanes is not None
                            else None,
                        },
                    )
                else:
                    response = client.post(
                        "/dequeue",
                        json={
                            "timestamp": event.timestamp,
                            "eligible_heads": list(event.eligible_heads)
                            if event.eligible_heads is not None
                            else None,
                        },
                    )
                assert response.status_code == 200, response.text
                payload = response.json()
                if "order_id" in payload:
                    served.append((payload["car_id"], payload["order_id"]))
        catalog, config = load_scenario(scenario_dir)
        replayed = harness.replay(load_events(log_path), catalog, config)
        assert [(e.car_id, e.order_id) for e in replayed.leaving] == served
