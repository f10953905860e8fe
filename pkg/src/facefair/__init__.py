"""Demographic fairness auditing for face recognition error rates."""

__version__ = "0.1.0"

from .audit import (
    FFMCReport,
    Histogram,
    SweepResult,
    alpha_grid,
    crossover_alpha,
    distribution,
    ffmc_audit,
    parse_grid,
    score,
    sweep,
)
from .metrics import (
    Measure,
    MeasureResult,
    RiskWeight,
    ZeroRateError,
    evaluate,
    fdr,
    garbe,
    gini,
    inequity_rate,
    merge_counts,
)
from .model import (
    AlgorithmRecord,
    Dataset,
    GroupRates,
    ParseError,
    ValidationReport,
    parse_long_csv,
    parse_wide_csv,
    validate,
)
from .pareto import Efficiency, ParetoPoint, classify, frontier, total_fnmr, trade_space

__all__ = [
    "AlgorithmRecord", "Dataset", "Efficiency", "FFMCReport", "GroupRates", "Histogram",
    "Measure", "MeasureResult", "ParetoPoint", "ParseError", "RiskWeight", "SweepResult",
    "ValidationReport", "ZeroRateError", "alpha_grid", "classify", "crossover_alpha",
    "distribution", "evaluate", "fdr", "ffmc_audit", "frontier", "garbe", "gini",
    "inequity_rate", "merge_counts", "parse_grid", "parse_long_csv", "parse_wide_csv",
    "score", "sweep", "total_fnmr", "trade_space", "validate",
]
