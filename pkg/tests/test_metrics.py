import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resequencer import metrics
from resequencer.errors import (
    DegenerateInput,
    DuplicateBlendNumber,
    EmptySequence,
    SequenceTooShort,
    ZeroBaseline,
)

WORKED_COLORS = list("RBRRGBGGR")


class TestBatchStats:
    def test_worked_example(self):
        stats = metrics.batch_stats(WORKED_COLORS)
        assert stats.average_batch_size == Fraction(9, 7)
        assert stats.batch_count == 7

    def test_single_batch(self):
        stats = metrics.batch_stats(["R", "R", "R"])
        assert stats.average_batch_size == Fraction(3)
        assert stats.batch_count == 1

    def test_empty(self):
        stats = metrics.batch_stats([])
        assert stats.average_batch_size == 0
        assert stats.batch_count == 0

    def test_histogram_counts_cars(self):
        stats = metrics.batch_stats(WORKED_COLORS)
        assert stats.batch_length_histogram == {1: 5, 2: 4}
        assert sum(stats.batch_length_histogram.values()) == 9

    @given(st.lists(st.sampled_from("RGBYW"), max_size=60))
    @settings(max_examples=200, deadline=None)
    def test_identity_abs_times_batches(self, seq):
        stats = metrics.batch_stats(seq)
        assert stats.average_batch_size * stats.batch_count == len(seq)
        assert sum(stats.batch_length_histogram.values()) == len(seq)


class TestChangeovers:
    def test_worked_example(self):
        assert metrics.color_changeovers(WORKED_COLORS) == 6

    def test_table_arithmetic(self):
        value = metrics.cpc_from_counts(13610, 2968)
        assert round(float(value), 3) == 0.218

    def test_single_color(self):
        assert metrics.cpc(["R"] * 10) == 0

    def test_empty_errors(self):
        with pytest.raises(EmptySequence):
            metrics.cpc([])

    @given(st.lists(st.sampled_from("RGB"), min_size=1, max_size=50))
    @settings(max_examples=100, deadline=None)
    def test_cpc_identity(self, seq):
        stats = metrics.batch_stats(seq)
        assert metrics.cpc(seq) == Fraction(stats.batch_count - 1, len(seq))

    def test_batch_gain_conversion(self):
        assert round(metrics.changeover_reduction_from_batch_gain(0.3), 2) == 0.23


class TestColorDifferentiation:
    def test_uniform_window(self):
        assert metrics.color_differentiation(["R"] * 50, 50) == {1: 1}

    def test_two_blocks(self):
        assert metrics.color_differentiation(["R"] * 25 + ["B"] * 25, 50) == {2: 1}

    def test_alternating_enumerated(self):
        seq = ["R", "B"] * 26
        # oracle: enumerate the three windows directly
        expected = {}
        for start in range(len(seq) - 50 + 1):
            distinct = len(set(seq[start : start + 50]))
            expected[distinct] = expected.get(distinct, 0) + 1
        assert expected == {2: 3}
        assert metrics.color_differentiation(seq, 50) == expected

    def test_too_short(self):
        with pytest.raises(SequenceTooShort):
            metrics.color_differentiation(["R"] * 49, 50)


class TestSortedness:
    def test_worked_example(self):
        stats = metrics.sortedness([4, 1, 3, 5, 2])
        assert stats.per_element == (1, 2, 2, 1, 3)
        assert stats.lds == 3
        assert stats.expected_length == Fraction(9, 5)
        assert stats.median_length == 2

    def test_increasing(self):
        stats = metrics.sortedness([1, 2, 3, 4])
        assert (stats.lds, stats.expected_length, stats.median_length) == (1, 1, 1)

    def test_decreasing(self):
        assert metrics.sortedness([4, 3, 2, 1]).lds == 4

    def test_duplicates_rejected(self):
        with pytest.raises(DuplicateBlendNumber):
            metrics.sortedness([1, 1])
        with pytest.raises(DuplicateBlendNumber):
            metrics.lds_fast([2, 2])

    def test_fast_matches_profile_on_examples(self):
        for seq in ([4, 1, 3, 5, 2], [1, 2, 3], [4, 3, 2, 1], []):
            assert metrics.lds_fast(seq) == metrics.sortedness(seq).lds

    def test_fast_matches_quadratic_oracle(self):
        rng = random.Random(3)
        for _ in range(200):
            seq = rng.sample(range(1000), rng.randint(0, 60))
            assert metrics.lds_fast(seq) == metrics.sortedness(seq).lds


class TestLdsAbsRatio:
    def test_single_car(self):
        assert metrics.lds_abs_ratio(["R"], [5]) == 1

    def test_uniform_colors(self):
        n = 6
        assert metrics.lds_abs_ratio(["R"] * n, list(range(1, n + 1))) == Fraction(1, n)

    def test_worked_composition(self):
        ratio = metrics.lds_abs_ratio(WORKED_COLORS, [4, 1, 3, 5, 2, 6, 7, 8, 9])
        assert ratio == Fraction(3) / Fraction(9, 7) == Fraction(7, 3)

    def test_empty_errors(self):
        with pytest.raises(EmptySequence):
            metrics.lds_abs_ratio([], [])


class TestIndexWidth:
    def test_singleton(self):
        assert metrics.index_width([10]) == 0

    def test_two_points(self):
        assert metrics.index_width([0, 10]) == 5

    def test_five_points(self):
        assert metrics.index_width([1, 2, 3, 4, 5]) == pytest.approx(math.sqrt(2))

    def test_translation_invariance(self):
        base = [3, 8, 1, 14]
        shifted = [x + 1000 for x in base]
        assert metrics.index_width(base) == pytest.approx(metrics.index_width(shifted))


class TestWorsening:
    def test_unchanged(self):
        assert metrics.worsening_factor(4.0, 4.0) == 1.0

    def test_reported_cell(self):
        assert metrics.worsening_factor(100.0, 107.0) == pytest.approx(1.07)

    def test_growth(self):
        assert metrics.worsening_factor(2.0, 3.0) == 1.5

    def test_zero_baseline(self):
        with pytest.raises(ZeroBaseline):
            metrics.worsening_factor(0.0, 1.0)


class TestRegression:
    def test_identity_line(self):
        x = [1.0, 2.0, 3.0, 4.0]
        slope, intercept = metrics.deming_regression(x, x)
        assert abs(slope - 1.0) < 1e-12
        assert abs(intercept) < 1e-12
        assert metrics.pearson_correlation(x, x) == pytest.approx(1.0)

    def test_affine_line(self):
        x = [0.0, 1.0, 2.0, 5.0]
        y = [2 * v + 1 for v in x]
        slope, intercept = metrics.deming_regression(x, y)
        assert slope == pytest.approx(2.0, abs=1e-12)
        assert intercept == pytest.approx(1.0, abs=1e-12)

    def test_inversion_symmetry(self):
        x = [0.0, 1.0, 2.0, 5.0, 9.0]
        y = [3 * v - 2 for v in x]
        slope, _ = metrics.deming_regression(x, y)
        inverse_slope, _ = metrics.deming_regression(y, x)
        assert abs(slope * inverse_slope - 1.0) < 1e-9

    def test_recovers_noisy_generating_line(self):
        rng = random.Random(2024)
        xs, ys = [], []
        for _ in range(200):
            true_x = rng.uniform(0, 100)
            xs.append(true_x + rng.gauss(0, 1))
            ys.append(0.9 * true_x + 20 + rng.gauss(0, 1))
        slope, _ = metrics.deming_regression(xs, ys)
        assert 0.85 <= slope <= 0.95

    def test_degenerate_inputs(self):
        with pytest.raises(DegenerateInput):
            metrics.deming_regression([1.0, 2.0], [1.0, 2.0])
        with pytest.raises(DegenerateInput):
            metrics.deming_regression([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(DegenerateInput):
            metrics.pearson_correlation([1.0, 2.0, 3.0], [5.0, 5.0, 5.0])


class TestSummaryStats:
    def test_constant(self):
        stats = metrics.summary_stats([5, 5, 5])
        assert (stats.mean, stats.std, stats.sem) == (5, 0, 0)

    def test_two_samples(self):
        stats = metrics.summary_stats([4, 6])
        assert stats.mean == 5
        assert stats.std == pytest.approx(math.sqrt(2))
        assert stats.sem == pytest.approx(1.0)

    def test_single_sample_flags_spread(self):
        stats = metrics.summary_stats([7])
        assert stats.mean == 7
        assert stats.std is None and stats.sem is None


def test_kpi_report_round_trip_fields():
    report = metrics.KpiReport.for_sequence(WORKED_COLORS, [4, 1, 3, 5, 2, 6, 7, 8, 9])
    data = report.to_dict()
    assert data["cars"] == 9
    assert data["batch_count"] == 7
    assert data["lds"] == 3
