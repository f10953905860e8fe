"""Dataset-level analysis of the fairness measures.

Covers risk-weight sweeps with distribution statistics, the weight at which
the FMR-side term starts to dominate, histograms, and the FFMC scorecard.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Optional, Union

import numpy as np

from .metrics import Measure, MeasureResult, RiskWeight, ZeroRateError, aggregate, decompose
from .model import Dataset, GroupRates

DEFAULT_BAND = (0.2, 0.8)
DEFAULT_STEP = 0.01
STATISTICS = ("median", "mean")


class EmptyDatasetError(ValueError):
    pass


class IncalculableError(ValueError):
    """No record in the dataset can be evaluated under the requested measure."""


def alpha_grid(start: float = 0.0, stop: float = 1.0, step: float = DEFAULT_STEP) -> tuple[float, ...]:
    """Inclusive, strictly increasing grid ``start, start+step, ..., stop``.

    Points are computed in decimal arithmetic so ``0:1:0.01`` yields the
    literal values 0.0, 0.01, ..., 0.99, 1.0.
    """
    try:
        lo, hi, st = (Decimal(str(x)) for x in (start, stop, step))
    except InvalidOperation:
        raise ValueError(f"bad grid {start!r}:{stop!r}:{step!r}") from None
    if not (0 <= lo <= hi <= 1):
        raise ValueError(f"grid must satisfy 0 <= start <= stop <= 1, got {start}:{stop}")
    if st <= 0:
        raise ValueError(f"grid step must be positive, got {step}")
    points = []
    k = 0
    while lo + k * st <= hi:
        points.append(float(lo + k * st))
        k += 1
    if points[-1] != float(hi):
        points.append(float(hi))
    return tuple(points)


def parse_grid(spec: str) -> tuple[float, ...]:
    """Parse ``"start:stop:step"`` (endpoints inclusive), e.g. ``"0:1:0.5"``."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid spec {spec!r} is not of the form start:stop:step")
    return alpha_grid(*parts)


def _check_grid(grid: Sequence[float]) -> tuple[float, ...]:
    alphas = tuple(float(a) for a in grid)
    if not alphas:
        raise ValueError("alpha grid is empty")
    for a in alphas:
        RiskWeight(a)
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alpha grid must be strictly increasing")
    return alphas


def _require_records(d: Dataset) -> None:
    if len(d) == 0:
        raise EmptyDatasetError("dataset has no algorithm records")


@dataclass(frozen=True)
class ScoreRow:
    name: str
    result: Optional[MeasureResult]
    error: Optional[str] = None

    @property
    def calculable(self) -> bool:
        return self.result is not None


def score(d: Dataset, measure: Union[Measure, str], alpha: Union[RiskWeight, float]) -> list[ScoreRow]:
    """Evaluate ``measure`` on every record; incalculable records carry the reason."""
    _require_records(d)
    measure = Measure(measure)
    rows = []
    for r in d:
        try:
            terms = decompose(measure, r.rates)
        except ZeroRateError as e:
            rows.append(ScoreRow(r.name, None, str(e)))
            continue
        rows.append(ScoreRow(r.name, aggregate(measure, *terms, alpha)))
    return rows


@dataclass(frozen=True)
class SweepResult:
    """Measure values over a dataset for a grid of risk weights.

    ``values`` and ``contributions`` are ``records x alphas`` arrays with NaN
    where ``calculable`` is False; every statistic skips those cells.
    """

    measure: Measure
    alphas: tuple[float, ...]
    names: tuple[str, ...]
    term_a: np.ndarray
    term_b: np.ndarray
    values: np.ndarray
    contributions: np.ndarray
    calculable: np.ndarray
    errors: dict = field(default_factory=dict)

    def _stat(self, arr: np.ndarray, fn) -> np.ndarray:
        return np.array([fn(arr[self.calculable[:, j], j]) for j in range(len(self.alphas))])

    @property
    def value_min(self) -> np.ndarray:
        return self._stat(self.values, np.min)

    @property
    def value_max(self) -> np.ndarray:
        return self._stat(self.values, np.max)

    @property
    def value_mean(self) -> np.ndarray:
        return self._stat(self.values, np.mean)

    @property
    def value_median(self) -> np.ndarray:
        return self._stat(self.values, np.median)

    @property
    def value_p5(self) -> np.ndarray:
        return self._stat(self.values, lambda x: np.percentile(x, 5))

    @property
    def value_p95(self) -> np.ndarray:
        return self._stat(self.values, lambda x: np.percentile(x, 95))

    @property
    def contribution_mean(self) -> np.ndarray:
        return self._stat(self.contributions, np.mean)

    @property
    def contribution_median(self) -> np.ndarray:
        return self._stat(self.contributions, np.median)

    def contribution_stat(self, statistic: str) -> np.ndarray:
        if statistic == "median":
            return self.contribution_median
        if statistic == "mean":
            return self.contribution_mean
        raise ValueError(f"unknown statistic {statistic!r}; expected one of {STATISTICS}")

    def column(self, alpha: float) -> np.ndarray:
        """Calculable values at one grid weight."""
        j = self.alphas.index(float(alpha))
        return self.values[self.calculable[:, j], j]

    def crossover(self, statistic: str = "median", level: float = 0.5) -> Optional[float]:
        """Smallest grid weight at which the contribution statistic reaches ``level``."""
        curve = self.contribution_stat(statistic)
        hits = np.nonzero(curve >= level)[0]
        return self.alphas[int(hits[0])] if hits.size else None

    def argmax(self) -> tuple[str, float, float]:
        """``(record name, alpha, value)`` of the largest value in the sweep."""
        masked = np.where(self.calculable, self.values, -np.inf)
        i, j = np.unravel_index(int(np.argmax(masked)), masked.shape)
        return self.names[i], self.alphas[j], float(self.values[i, j])

    def statistics_rows(self) -> list[dict]:
        cols = {
            "min": self.value_min,
            "max": self.value_max,
            "mean": self.value_mean,
            "median": self.value_median,
            "p5": self.value_p5,
            "p95": self.value_p95,
            "contribution_mean": self.contribution_mean,
            "contribution_median": self.contribution_median,
        }
        n_calc = self.calculable.sum(axis=0)
        rows = []
        for j, a in enumerate(self.alphas):
            row = {"alpha": a, "n": int(n_calc[j])}
            row.update({k: float(v[j]) for k, v in cols.items()})
            rows.append(row)
        return rows


def sweep(d: Dataset, measure: Union[Measure, str], grid: Optional[Sequence[float]] = None) -> SweepResult:
    """Evaluate ``measure`` for every (record, alpha) cell.

    Records the inequity rate cannot handle (zero minimum rate) are marked
    incalculable instead of aborting the sweep.

    Raises:
        EmptyDatasetError: ``d`` has no records.
        IncalculableError: no record is calculable at all.
    """
    _require_records(d)
    measure = Measure(measure)
    alphas = _check_grid(alpha_grid() if grid is None else grid)
    n, m = len(d), len(alphas)
    values = np.full((n, m), np.nan)
    contributions = np.full((n, m), np.nan)
    term_a = np.full(n, np.nan)
    term_b = np.full(n, np.nan)
    ok = np.zeros(n, dtype=bool)
    errors = {}
    weights = [RiskWeight(a) for a in alphas]
    for i, r in enumerate(d):
        try:
            ta, tb = decompose(measure, r.rates)
        except ZeroRateError as e:
            errors[r.name] = str(e)
            continue
        ok[i] = True
        term_a[i], term_b[i] = ta, tb
        for j, w in enumerate(weights):
            res = aggregate(measure, ta, tb, w)
            values[i, j] = res.value
            contributions[i, j] = res.contribution_a
    if not ok.any():
        raise IncalculableError(f"{measure.label} is incalculable for every record")
    calculable = np.repeat(ok[:, None], m, axis=1)
    return SweepResult(measure, alphas, tuple(d.names), term_a, term_b, values, contributions, calculable, errors)


def crossover_alpha(
    d: Dataset,
    measure: Union[Measure, str],
    statistic: str = "median",
    level: float = 0.5,
    step: float = DEFAULT_STEP,
) -> Optional[float]:
    """Smallest alpha on a ``0:1:step`` grid where the chosen statistic of the
    FMR-side contribution reaches ``level``; None if it never does."""
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}; expected one of {STATISTICS}")
    return sweep(d, measure, alpha_grid(0.0, 1.0, step)).crossover(statistic, level)


@dataclass(frozen=True)
class Histogram:
    measure: Measure
    alpha: float
    edges: np.ndarray
    counts: np.ndarray
    n_incalculable: int = 0

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def distribution(
    d: Dataset, measure: Union[Measure, str], alpha: Union[RiskWeight, float] = 0.5, bins: int = 20
) -> Histogram:
    """Equal-width histogram of measure values over the observed range.

    When every calculable value is identical there is nothing to bin and
    a single degenerate bin ``[v, v]`` holds them all.
    """
    if int(bins) < 1:
        raise ValueError(f"bins must be a positive integer, got {bins}")
    measure = Measure(measure)
    rows = score(d, measure, alpha)
    vals = np.array([r.result.value for r in rows if r.calculable])
    if vals.size == 0:
        raise IncalculableError(f"{measure.label} is incalculable for every record")
    a = alpha.alpha if isinstance(alpha, RiskWeight) else float(alpha)
    lo, hi = float(vals.min()), float(vals.max())
    if lo == hi:
        return Histogram(measure, a, np.array([lo, hi]), np.array([vals.size]), len(rows) - vals.size)
    counts, edges = np.histogram(vals, bins=int(bins), range=(lo, hi))
    return Histogram(measure, a, edges, counts, len(rows) - vals.size)


# -- FFMC scorecard --------------------------------------------------------------


def zero_probe() -> GroupRates:
    """Synthetic record with one zero-FNMR group and one zero-FMR group."""
    return GroupRates(
        fmr={"probe-a": 1e-4, "probe-b": 0.0, "probe-c": 3e-5},
        fnmr={"probe-a": 0.0, "probe-b": 0.03, "probe-c": 0.02},
    )


@dataclass(frozen=True)
class FFMCReport:
    measure: Measure
    ffmc1: bool
    crossover: Optional[float]
    band: tuple[float, float]
    ffmc2: bool
    bounds: tuple[float, float]
    ffmc3: bool
    probe_outcome: str
    notes: str = ""

    @property
    def verdicts(self) -> tuple[bool, bool, bool]:
        return self.ffmc1, self.ffmc2, self.ffmc3

    @property
    def bounds_text(self) -> str:
        lo, hi = self.bounds
        return "unbounded" if math.isinf(hi) else f"[{lo:g}, {hi:g}]"

    def to_dict(self) -> dict:
        return {
            "measure": self.measure.label,
            "ffmc1": self.ffmc1,
            "crossover_alpha": self.crossover,
            "band": list(self.band),
            "ffmc2": self.ffmc2,
            "bounds": self.bounds_text,
            "ffmc3": self.ffmc3,
            "probe_outcome": self.probe_outcome,
            "notes": self.notes,
        }


def ffmc_audit(
    d: Dataset,
    measure: Union[Measure, str],
    band: tuple[float, float] = DEFAULT_BAND,
    level: float = 0.5,
    grid: Optional[Sequence[float]] = None,
    sweep_result: Optional[SweepResult] = None,
) -> FFMCReport:
    """Score ``measure`` against the three functional fairness criteria.

    FFMC.1 passes when the median FMR-side contribution reaches ``level``
    at a weight inside ``band``. FFMC.2 passes when the measure has finite
    analytic bounds; it is a property of the measure, not of ``d``. FFMC.3
    passes when the measure evaluates on :func:`zero_probe`.
    """
    _require_records(d)
    measure = Measure(measure)
    notes = []
    if sweep_result is None:
        try:
            sweep_result = sweep(d, measure, grid)
        except IncalculableError as e:
            notes.append(str(e))
    crossing = sweep_result.crossover("median", level) if sweep_result is not None else None
    if sweep_result is not None and sweep_result.errors:
        notes.append(f"{len(sweep_result.errors)} record(s) incalculable and excluded")
    ffmc1 = crossing is not None and band[0] <= crossing <= band[1]
    if crossing is None:
        notes.append(f"median contribution never reaches {level}")

    lo, hi = measure.bounds
    ffmc2 = math.isfinite(lo) and math.isfinite(hi)

    try:
        res = aggregate(measure, *decompose(measure, zero_probe()), 0.5)
        ffmc3, probe = True, f"calculable (value {res.value:.6g} at alpha 0.5)"
    except ZeroRateError as e:
        ffmc3, probe = False, str(e)
    return FFMCReport(measure, ffmc1, crossing, tuple(band), ffmc2, (lo, hi), ffmc3, probe, "; ".join(notes))
