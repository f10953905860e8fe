"""Summative fairness measures over per-group error rates.

Each measure splits into an FMR-side term and an FNMR-side term that do
not depend on the risk weight; the weight is only applied when the two are
aggregated. This lets a sweep over many weights reuse one decomposition.

=========  ===========================  =====================  ===========
measure    terms                        aggregate              fair value
=========  ===========================  =====================  ===========
FDR        max - min of FMR / FNMR      1 - (a*A + (1-a)*B)    1
IR         max / min of FMR / FNMR      A**a * B**(1-a)        1
GARBE      corrected Gini of FMR/FNMR   a*A + (1-a)*B          0
=========  ===========================  =====================  ===========
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Union

from .model import GroupRates


class Measure(str, Enum):
    FDR = "fdr"
    IR = "ir"
    GARBE = "garbe"

    @property
    def label(self) -> str:
        return self.name

    @property
    def bounds(self) -> tuple[float, float]:
        """Analytic range of the measure; ``inf`` marks an open upper end."""
        return _BOUNDS[self]

    @property
    def higher_is_fairer(self) -> bool:
        return self is Measure.FDR


_BOUNDS = {
    Measure.FDR: (0.0, 1.0),
    Measure.IR: (1.0, math.inf),
    Measure.GARBE: (0.0, 1.0),
}


class ZeroRateError(ValueError):
    """The inequity rate is undefined because a group's minimum rate is 0."""

    def __init__(self, side: str, groups: Sequence[str]):
        self.side = side
        self.groups = tuple(groups)
        super().__init__(
            f"IR incalculable: minimum {side.upper()} is 0 for group(s) {list(self.groups)}"
        )


@dataclass(frozen=True)
class RiskWeight:
    """Weight on the FMR-side term; the FNMR side always gets ``1 - alpha``."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (0.0 <= a <= 1.0):
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def beta(self) -> float:
        return 1.0 - self.alpha


Weight = Union[RiskWeight, float]


def _weight(w: Weight) -> RiskWeight:
    return w if isinstance(w, RiskWeight) else RiskWeight(w)


@dataclass(frozen=True)
class MeasureResult:
    measure: Measure
    alpha: RiskWeight
    value: float
    term_a: float
    term_b: float
    contribution_a: float


def gini(values: Sequence[float]) -> float:
    """Small-sample corrected Gini coefficient.

    Computes ``n/(n-1) * sum_ij |x_i - x_j| / (2 n^2 mean(x))`` through the
    sorted-rank identity ``sum_ij |x_i - x_j| = 2 sum_i (2i - n - 1) x_(i)``,
    which reduces it to ``sum_i (2i - n - 1) x_(i) / ((n - 1) sum(x))``. The
    correction makes a one-hot vector score exactly 1 for any ``n``.

    A list with no dispersion, including all zeros, returns 0.

    Gini values depend on how observations are grouped: merging groups can
    hide dispersion (see :func:`merge_counts`), so report the grouping and
    group sizes alongside any Gini-based figure.

    Raises:
        ValueError: fewer than 2 values, or a negative or non-finite value.
    """
    xs = [float(v) for v in values]
    n = len(xs)
    if n < 2:
        raise ValueError(f"gini needs at least 2 values, got {n}")
    for v in xs:
        if not math.isfinite(v) or v < 0.0:
            raise ValueError(f"gini is defined for finite non-negative values, got {v!r}")
    xs.sort()
    if xs[0] == xs[-1]:
        return 0.0
    weighted = math.fsum((2 * i - n - 1) * x for i, x in enumerate(xs, start=1))
    g = weighted / ((n - 1) * math.fsum(xs))
    return min(max(g, 0.0), 1.0)


def merge_counts(counts: Sequence[float], partition: Sequence[Sequence[int]]) -> list[float]:
    """Sum ``counts`` within each part of ``partition``.

    Useful for showing how regrouping changes a Gini value, e.g.
    ``gini([5, 5, 10]) == 0.25`` but ``gini(merge_counts([5, 5, 10],
    [[0, 1], [2]])) == gini([10, 10]) == 0``.
    """
    n = len(counts)
    seen: set[int] = set()
    for part in partition:
        for i in part:
            if not 0 <= i < n:
                raise ValueError(f"partition index {i} out of range for {n} counts")
            if i in seen:
                raise ValueError(f"partition index {i} appears more than once")
            seen.add(i)
    if len(seen) != n:
        raise ValueError(f"partition leaves indices {sorted(set(range(n)) - seen)} unassigned")
    return [math.fsum(counts[i] for i in part) for part in partition]


# -- decomposition -------------------------------------------------------------


def fdr_terms(rates: GroupRates) -> tuple[float, float]:
    # max |x_i - x_j| over pairs is max - min
    fmr, fnmr = rates.fmr_values(), rates.fnmr_values()
    return max(fmr) - min(fmr), max(fnmr) - min(fnmr)


def ir_terms(rates: GroupRates) -> tuple[float, float]:
    terms = []
    for side, m in (("fmr", rates.fmr), ("fnmr", rates.fnmr)):
        lo = min(m.values())
        if lo == 0.0:
            raise ZeroRateError(side, [g for g, v in m.items() if v == 0.0])
        terms.append(max(m.values()) / lo)
    return terms[0], terms[1]


def garbe_terms(rates: GroupRates) -> tuple[float, float]:
    return gini(rates.fmr_values()), gini(rates.fnmr_values())


def decompose(measure: Union[Measure, str], rates: GroupRates) -> tuple[float, float]:
    """Return the weight-free ``(term_a, term_b)`` pair for ``measure``."""
    measure = Measure(measure)
    if measure is Measure.FDR:
        return fdr_terms(rates)
    if measure is Measure.IR:
        return ir_terms(rates)
    return garbe_terms(rates)


def _share(x: float, y: float) -> float:
    total = x + y
    if total <= 0.0:
        return 0.0
    return min(max(x / total, 0.0), 1.0)


def aggregate(measure: Union[Measure, str], term_a: float, term_b: float, w: Weight) -> MeasureResult:
    """Combine precomputed terms under risk weight ``w``.

    The relative contribution of the FMR side is the alpha-weighted share of
    the aggregated differential. For FDR that is the share of the deducted
    quantity ``1 - value``; for IR the weights multiply exponents, so shares
    are taken of ``alpha*ln(A)`` and ``(1-alpha)*ln(B)``. A zero total gives 0.
    """
    measure = Measure(measure)
    w = _weight(w)
    a, b = w.alpha, w.beta
    if measure is Measure.IR:
        value = term_a**a * term_b**b
        contribution = _share(a * math.log(term_a), b * math.log(term_b))
    else:
        weighted = a * term_a + b * term_b
        contribution = _share(a * term_a, b * term_b)
        # clamp rounding drift of a few ulps at the ends of [0, 1]
        if measure is Measure.FDR:
            value = min(max(1.0 - weighted, 0.0), 1.0)
        else:
            value = min(max(weighted, 0.0), 1.0)
    return MeasureResult(measure, w, value, term_a, term_b, contribution)


def evaluate(measure: Union[Measure, str], rates: GroupRates, w: Weight) -> MeasureResult:
    return aggregate(measure, *decompose(measure, rates), w)


def fdr(rates: GroupRates, w: Weight) -> MeasureResult:
    """Fairness Discrepancy Rate: 1 is fair, 0 maximally unfair."""
    return evaluate(Measure.FDR, rates, w)


def inequity_rate(rates: GroupRates, w: Weight) -> MeasureResult:
    """Inequity Rate: 1 is fair, unbounded above.

    Raises:
        ZeroRateError: some group has FMR = 0 or FNMR = 0.
    """
    return evaluate(Measure.IR, rates, w)


def garbe(rates: GroupRates, w: Weight) -> MeasureResult:
    """Gini Aggregation Rate for Biometric Equitability: 0 is fair, 1 maximally unfair."""
    return evaluate(Measure.GARBE, rates, w)
