"""Sequence-quality measures used for both optimization and evaluation.

Batch measures work on any sequence of hashable color values.  Sortedness
measures work on sequences of pairwise-distinct blend numbers.  Ratios are
kept as exact :class:`fractions.Fraction` values wherever they feed back into
decision tie-breaking; spread and regression measures are floats.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Sequence

from .errors import (
    DegenerateInput,
    DuplicateBlendNumber,
    EmptySequence,
    InsufficientSamples,
    SequenceTooShort,
    ZeroBaseline,
)


@dataclass(frozen=True)
class BatchStats:
    """Maximal same-color run statistics of one color sequence.

    ``batch_length_histogram`` maps a run length to the number of cars painted
    in runs of that length, so its values sum to the sequence length.
    """

    batch_count: int
    average_batch_size: Fraction
    batch_length_histogram: dict[int, int] = field(default_factory=dict)


def batch_stats(seq: Sequence[Hashable]) -> BatchStats:
    """Count maximal same-color runs; an empty sequence has average 0 by convention."""
    if not seq:
        return BatchStats(batch_count=0, average_batch_size=Fraction(0))
    histogram: dict[int, int] = {}
    batch_count = 0
    run_length = 1
    for previous, current in zip(seq, seq[1:]):
        if current == previous:
            run_length += 1
        else:
            batch_count += 1
            histogram[run_length] = histogram.get(run_length, 0) + run_length
            run_length = 1
    batch_count += 1
    histogram[run_length] = histogram.get(run_length, 0) + run_length
    return BatchStats(
        batch_count=batch_count,
        average_batch_size=Fraction(len(seq), batch_count),
        batch_length_histogram=histogram,
    )


def color_changeovers(seq: Sequence[Hashable]) -> int:
    """Number of adjacent same-position color changes (batch count minus one)."""
    if len(seq) < 2:
        return 0
    return sum(1 for a, b in zip(seq, seq[1:]) if a != b)


def cpc(seq: Sequence[Hashable]) -> Fraction:
    """Changeovers per car."""
    if not seq:
        raise EmptySequence("cpc is undefined for an empty sequence")
    return Fraction(color_changeovers(seq), len(seq))


def cpc_from_counts(total_cars: int, changeovers: int) -> Fraction:
    if total_cars <= 0:
        raise EmptySequence("cpc needs at least one car")
    return Fraction(changeovers, total_cars)


def changeover_reduction_from_batch_gain(gain: float) -> float:
    """Convert a relative batch-size gain into the implied changeover reduction.

    A batch-size improvement of ``gain`` (e.g. 0.3 for +30%) multiplies the
    batch count, hence the changeovers, by ``1/(1+gain)``.
    """
    if gain <= -1:
        raise ZeroBaseline("batch-size gain must exceed -100%")
    return 1.0 - 1.0 / (1.0 + gain)


def color_differentiation(seq: Sequence[Hashable], window: int = 50) -> dict[int, int]:
    """Distinct-color counts over every contiguous window, sliding by one car.

    Returns a histogram mapping the number of distinct colors in a window to
    the number of windows showing it.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(seq) < window:
        raise SequenceTooShort(f"need at least {window} cars, got {len(seq)}")
    counts: dict[Hashable, int] = {}
    histogram: dict[int, int] = {}
    for i, color in enumerate(seq):
        counts[color] = counts.get(color, 0) + 1
        if i >= window:
            leaving = seq[i - window]
            remaining = counts[leaving] - 1
            if remaining:
                counts[leaving] = remaining
            else:
                del counts[leaving]
        if i >= window - 1:
            distinct = len(counts)
            histogram[distinct] = histogram.get(distinct, 0) + 1
    return histogram


@dataclass(frozen=True)
class SortednessStats:
    """Decreasing-subsequence profile of a blend-number sequence.

    ``per_element`` holds, for each element, the length of the longest
    strictly decreasing subsequence ending with that element; ``lds`` is its
    maximum, the number of lanes a parallel-FIFO bank would need to sort the
    sequence perfectly.
    """

    lds: int
    per_element: tuple[int, ...]
    expected_length: Fraction
    median_length: Fraction


def _check_distinct(seq: Sequence[int]) -> None:
    if len(set(seq)) != len(seq):
        raise DuplicateBlendNumber("blend numbers must be pairwise distinct")


def sortedness(seq: Sequence[int]) -> SortednessStats:
    """Quadratic profile of all longest decreasing subsequence endings."""
    _check_distinct(seq)
    if not seq:
        return SortednessStats(0, (), Fraction(0), Fraction(0))
    per_element: list[int] = []
    for i, value in enumerate(seq):
        best = 0
        for j in range(i):
            if seq[j] > value and per_element[j] > best:
                best = per_element[j]
        per_element.append(best + 1)
    ordered = sorted(per_element)
    n = len(ordered)
    if n % 2:
        median = Fraction(ordered[n // 2])
    else:
        median = Fraction(ordered[n // 2 - 1] + ordered[n // 2], 2)
    return SortednessStats(
        lds=max(per_element),
        per_element=tuple(per_element),
        expected_length=Fraction(sum(per_element), n),
        median_length=median,
    )


def lds_fast(seq: Sequence[int]) -> int:
    """Length of the longest strictly decreasing subsequence, O(n log n).

    Patience piles over negated values; agrees with ``sortedness(seq).lds``.
    """
    _check_distinct(seq)
    piles: list[int] = []
    for value in seq:
        negated = -value
        index = bisect_left(piles, negated)
        if index == len(piles):
            piles.append(negated)
        else:
            piles[index] = negated
    return len(piles)


def lds_abs_ratio(colors: Sequence[Hashable], blends: Sequence[int]) -> Fraction:
    """Sortedness-to-batching trade-off of one output sequence; lower is better."""
    if not colors or not blends:
        raise EmptySequence("ratio needs a non-empty sequence")
    if len(colors) != len(blends):
        raise ValueError("colors and blends must have equal length")
    return Fraction(lds_fast(blends)) / batch_stats(colors).average_batch_size


def index_width(positions: Sequence[int]) -> float:
    """Population standard deviation of the sequence indices of one group."""
    if not positions:
        raise EmptySequence("index_width needs at least one position")
    n = len(positions)
    mean = Fraction(sum(positions), n)
    variance = sum((Fraction(p) - mean) ** 2 for p in positions) / n
    return math.sqrt(variance)


def worsening_factor(entering_value: float, leaving_value: float) -> float:
    """How much a measure degraded through the buffer (leaving over entering)."""
    if entering_value <= 0:
        raise ZeroBaseline("entering value must be positive")
    return leaving_value / entering_value


def pearson_correlation(x: Sequence[float], y: Sequence[float]) -> float:
    if len(x) != len(y) or len(x) < 3:
        raise DegenerateInput("need equal-length samples, at least 3 points")
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    if sxx == 0 or syy == 0:
        raise DegenerateInput("zero variance")
    return sxy / math.sqrt(sxx * syy)


def deming_regression(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Orthogonal (errors-in-both-variables, variance ratio 1) line fit.

    Returns ``(slope, intercept)`` minimizing summed perpendicular distances.
    """
    if len(x) != len(y) or len(x) < 3:
        raise DegenerateInput("need equal-length samples, at least 3 points")
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    if sxx == 0 or syy == 0:
        raise DegenerateInput("zero variance")
    if sxy == 0:
        raise DegenerateInput("no covariance; orthogonal slope undefined")
    slope = (syy - sxx + math.sqrt((syy - sxx) ** 2 + 4 * sxy * sxy)) / (2 * sxy)
    return slope, my - slope * mx


@dataclass(frozen=True)
class SummaryStats:
    """Mean with sample standard deviation and its standard error.

    ``std`` and ``sem`` are None when fewer than two samples exist.
    """

    mean: float
    std: float | None
    sem: float | None


def summary_stats(samples: Sequence[float]) -> SummaryStats:
    if not samples:
        raise InsufficientSamples("need at least one sample")
    n = len(samples)
    mean = sum(samples) / n
    if n < 2:
        return SummaryStats(mean=mean, std=None, sem=None)
    variance = sum((s - mean) ** 2 for s in samples) / (n - 1)
    std = math.sqrt(variance)
    return SummaryStats(mean=mean, std=std, sem=std / math.sqrt(n))


@dataclass
class KpiReport:
    """Quality measures of one sequence, with provenance for reporting."""

    scenario_id: str = ""
    label: str = ""
    k: int | None = None
    cars: int = 0
    batch_count: int = 0
    average_batch_size: float = 0.0
    changeovers: int = 0
    changeovers_per_car: float | None = None
    lds: int | None = None
    expected_lds_length: float | None = None
    median_lds_length: float | None = None
    assessed_average_batch_size: float | None = None

    @classmethod
    def for_sequence(
        cls,
        colors: Sequence[Hashable],
        blends: Sequence[int] | None = None,
        *,
        assessed: Fraction | None = None,
        scenario_id: str = "",
        label: str = "",
        k: int | None = None,
    ) -> "KpiReport":
        stats = batch_stats(colors)
        report = cls(
            scenario_id=scenario_id,
            label=label,
            k=k,
            cars=len(colors),
            batch_count=stats.batch_count,
            average_batch_size=float(stats.average_batch_size),
            changeovers=color_changeovers(colors),
            changeovers_per_car=float(cpc(colors)) if colors else None,
            assessed_average_batch_size=float(assessed) if assessed is not None else None,
        )
        if blends:
            profile = sortedness(blends)
            report.lds = profile.lds
            report.expected_lds_length = float(profile.expected_length)
            report.median_lds_length = float(profile.median_length)
        return report

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "label": self.label,
            "k": self.k,
            "cars": self.cars,
            "batch_count": self.batch_count,
            "average_batch_size": self.average_batch_size,
            "changeovers": self.changeovers,
            "changeovers_per_car": self.changeovers_per_car,
            "lds": self.lds,
            "expected_lds_length": self.expected_lds_length,
            "median_lds_length": self.median_lds_length,
            "assessed_average_batch_size": self.assessed_average_batch_size,
        }
