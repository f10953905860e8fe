"""Accuracy/fairness trade space and Pareto down-select.

Both objectives are minimized: total FNMR for accuracy, and the measure
value for fairness (``1 - FDR`` for FDR, whose fair end is 1).
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from itertools import groupby
from typing import Union

from .audit import EmptyDatasetError, IncalculableError, score
from .metrics import Measure, RiskWeight
from .model import AlgorithmRecord, Dataset


class Efficiency(str, Enum):
    EFFICIENT = "efficient"
    WEAKLY_EFFICIENT = "weakly_efficient"
    DOMINATED = "dominated"


def total_fnmr(r: AlgorithmRecord) -> float:
    """Overall FNMR of one algorithm.

    Group FNMRs are weighted by the record's mated-comparison counts; a
    record without counts falls back to the plain mean over groups.
    """
    fnmr = r.rates.fnmr
    if r.mated_counts is None:
        return math.fsum(fnmr.values()) / len(fnmr)
    total = sum(r.mated_counts.values())
    return math.fsum(r.mated_counts[g] * fnmr[g] for g in fnmr) / total


def classify(points: Sequence[tuple[float, float]]) -> list[Efficiency]:
    """Label each ``(accuracy, fairness)`` point, both minimized.

    efficient: nothing else is <= in both coordinates and < in one.
    weakly_efficient: not efficient, but nothing is < in both.
    dominated: everything else.

    Runs in O(n log n): after sorting by the first coordinate, a point is
    beaten only by the lowest second coordinate seen at a strictly smaller
    first coordinate, or by a lower second coordinate at the same first.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if not pts:
        raise ValueError("classify needs at least one point")
    for i, (x, y) in enumerate(pts):
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"point {i} has a non-finite objective: {(x, y)}")

    order = sorted(range(len(pts)), key=lambda i: pts[i])
    labels: list[Efficiency] = [Efficiency.DOMINATED] * len(pts)
    best_before = math.inf  # lowest y among strictly smaller x
    for _, idx in groupby(order, key=lambda i: pts[i][0]):
        idx = list(idx)
        group_min = pts[idx[0]][1]
        for i in idx:
            y = pts[i][1]
            if y == group_min and best_before > y:
                labels[i] = Efficiency.EFFICIENT
            elif best_before >= y:
                labels[i] = Efficiency.WEAKLY_EFFICIENT
        best_before = min(best_before, group_min)
    return labels


def strictly_best(points: Sequence[tuple[float, float]]) -> list[bool]:
    """Literal reading of the two-condition definition: a point qualifies
    only if it is strictly lower than every other point in both coordinates.
    At most one point can qualify; kept as a diagnostic."""
    pts = [(float(x), float(y)) for x, y in points]
    return [
        all(x < ox and y < oy for j, (ox, oy) in enumerate(pts) if j != i)
        for i, (x, y) in enumerate(pts)
    ]


@dataclass(frozen=True)
class ParetoPoint:
    algorithm: str
    objective_accuracy: float
    objective_fairness: float
    measure_value: float
    classification: Efficiency
    strictly_best: bool = False


@dataclass(frozen=True)
class TradeSpace:
    measure: Measure
    alpha: float
    points: tuple[ParetoPoint, ...]
    excluded: tuple[str, ...] = ()

    @property
    def frontier(self) -> list[ParetoPoint]:
        """Efficient points by ascending accuracy objective, then fairness, then name."""
        eff = [p for p in self.points if p.classification is Efficiency.EFFICIENT]
        return sorted(eff, key=lambda p: (p.objective_accuracy, p.objective_fairness, p.algorithm))

    @property
    def weakly_efficient(self) -> list[ParetoPoint]:
        return [p for p in self.points if p.classification is Efficiency.WEAKLY_EFFICIENT]

    @property
    def retained_fraction(self) -> float:
        return len(self.frontier) / len(self.points)

    @property
    def eliminated_fraction(self) -> float:
        return 1.0 - self.retained_fraction

    def inset(self, max_fnmr: float) -> list[ParetoPoint]:
        """Points whose total FNMR is below ``max_fnmr``, classification unchanged."""
        return [p for p in self.points if p.objective_accuracy < max_fnmr]


def trade_space(
    d: Dataset, measure: Union[Measure, str] = Measure.GARBE, alpha: Union[RiskWeight, float] = 0.5
) -> TradeSpace:
    """Classify every calculable record by (total FNMR, fairness objective).

    Incalculable records are dropped with a warning.

    Raises:
        EmptyDatasetError: ``d`` has no records.
        IncalculableError: no record is calculable.
    """
    if len(d) == 0:
        raise EmptyDatasetError("dataset has no algorithm records")
    measure = Measure(measure)
    rows = score(d, measure, alpha)
    excluded = tuple(r.name for r in rows if not r.calculable)
    if excluded:
        warnings.warn(
            f"{len(excluded)} record(s) incalculable under {measure.label} and excluded: {list(excluded)}",
            stacklevel=2,
        )
    kept = [(d[r.name], r.result.value) for r in rows if r.calculable]
    if not kept:
        raise IncalculableError(f"{measure.label} is incalculable for every record")
    objectives = [
        (total_fnmr(rec), 1.0 - v if measure.higher_is_fairer else v) for rec, v in kept
    ]
    labels = classify(objectives)
    strict = strictly_best(objectives)
    points = tuple(
        ParetoPoint(rec.name, acc, fair, v, lab, s)
        for (rec, v), (acc, fair), lab, s in zip(kept, objectives, labels, strict)
    )
    a = alpha.alpha if isinstance(alpha, RiskWeight) else float(alpha)
    return TradeSpace(measure, a, points, excluded)


def frontier(
    d: Dataset, measure: Union[Measure, str] = Measure.GARBE, alpha: Union[RiskWeight, float] = 0.5
) -> list[ParetoPoint]:
    """Pareto-efficient algorithms sorted by ascending total FNMR."""
    return trade_space(d, measure, alpha).frontier
