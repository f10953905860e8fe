"""Tables, text renderings, plots and the full audit bundle."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .audit import (
    FFMCReport, Histogram, ScoreRow, SweepResult, alpha_grid, distribution, ffmc_audit, score, sweep,
)
from .metrics import Measure
from .model import Dataset, ValidationReport, validate
from .pareto import TradeSpace, trade_space

SCORE_COLUMNS = ("algorithm", "value", "term_a", "term_b", "contribution_a", "calculable", "note")
SWEEP_COLUMNS = (
    "alpha", "n", "min", "max", "mean", "median", "p5", "p95",
    "contribution_mean", "contribution_median",
)
PARETO_COLUMNS = (
    "algorithm", "total_fnmr", "fairness_objective", "measure_value", "classification", "strictly_best",
)


def num(x) -> str:
    """Shortest text that parses back to the same float; blank for missing."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return out.getvalue()


def score_table(rows: Sequence[ScoreRow]) -> str:
    body = []
    for r in rows:
        if r.calculable:
            res = r.result
            body.append([r.name, num(res.value), num(res.term_a), num(res.term_b),
                         num(res.contribution_a), "true", ""])
        else:
            body.append([r.name, "", "", "", "", "false", r.error or "incalculable"])
    return _csv(SCORE_COLUMNS, body)


def sweep_table(s: SweepResult) -> str:
    return _csv(SWEEP_COLUMNS, [[num(row[c]) if c != "n" else row[c] for c in SWEEP_COLUMNS]
                                for row in s.statistics_rows()])


def sweep_matrix_table(s: SweepResult) -> str:
    """Per-record values, one column per alpha."""
    header = ["algorithm", *(f"alpha={a!r}" for a in s.alphas)]
    rows = [[name, *(num(v) for v in s.values[i])] for i, name in enumerate(s.names)]
    return _csv(header, rows)


def pareto_table(ts: TradeSpace, points=None) -> str:
    pts = ts.points if points is None else points
    return _csv(PARETO_COLUMNS, [
        [p.algorithm, num(p.objective_accuracy), num(p.objective_fairness), num(p.measure_value),
         p.classification.value, str(p.strictly_best).lower()]
        for p in pts
    ])


def ffmc_table(reports: Sequence[FFMCReport]) -> str:
    return _csv(
        ("measure", "ffmc1", "crossover_alpha", "ffmc2", "bounds", "ffmc3", "probe_outcome"),
        [[r.measure.label, _pf(r.ffmc1), num(r.crossover), _pf(r.ffmc2), r.bounds_text,
          _pf(r.ffmc3), r.probe_outcome] for r in reports],
    )


def validation_table(v: ValidationReport) -> str:
    rows = [[c.code, _pf(c.passed), c.detail, ";".join(c.offenders)] for c in v.criteria]
    rows += [["warning", "", w, ""] for w in v.warnings]
    return _csv(("criterion", "status", "detail", "offenders"), rows)


def _pf(ok: bool) -> str:
    return "pass" if ok else "fail"


def read_table(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


# -- human-readable text -----------------------------------------------------


def render_validation(v: ValidationReport) -> str:
    lines = [f"records: {v.record_count}"]
    for c in v.criteria:
        line = f"  {c.code}  {_pf(c.passed):4}  {c.description}"
        if c.detail:
            line += f"  -- {c.detail}"
        lines.append(line)
    for w in v.warnings:
        lines.append(f"  warning: {w}")
    lines.append("structural criteria: " + ("PASS" if v.ok else "FAIL"))
    return "\n".join(lines) + "\n"


def render_scores(rows: Sequence[ScoreRow], measure: Measure, alpha: float) -> str:
    width = max([len(r.name) for r in rows] + [9])
    lines = [f"{measure.label} at alpha={alpha:g}",
             f"{'algorithm':<{width}}  {'value':>12}  {'term_a':>12}  {'term_b':>12}  {'contrib_a':>9}"]
    for r in rows:
        if r.calculable:
            m = r.result
            lines.append(f"{r.name:<{width}}  {m.value:>12.6g}  {m.term_a:>12.6g}  "
                         f"{m.term_b:>12.6g}  {m.contribution_a:>9.4f}")
        else:
            lines.append(f"{r.name:<{width}}  INCALCULABLE: {r.error}")
    return "\n".join(lines) + "\n"


def render_ffmc(reports: Sequence[FFMCReport]) -> str:
    mark = {True: "pass", False: "fail"}
    head = f"{'criterion':<10}" + "".join(f"{r.measure.label:>8}" for r in reports)
    lines = [head]
    for k, name in enumerate(("FFMC.1", "FFMC.2", "FFMC.3")):
        lines.append(f"{name:<10}" + "".join(f"{mark[r.verdicts[k]]:>8}" for r in reports))
    lines.append("")
    for r in reports:
        cross = "never" if r.crossover is None else f"{r.crossover:g}"
        lines.append(f"{r.measure.label}: crossover alpha* = {cross} (band {r.band[0]:g}-{r.band[1]:g}); "
                     f"bounds {r.bounds_text}; zero probe: {r.probe_outcome}")
        if r.notes:
            lines.append(f"  note: {r.notes}")
    return "\n".join(lines) + "\n"


def render_pareto(ts: TradeSpace, inset_fnmr: Optional[float] = None) -> str:
    front = ts.frontier
    lines = [
        f"{ts.measure.label} (alpha={ts.alpha:g}) vs total FNMR: {len(front)} efficient of "
        f"{len(ts.points)} ({100 * ts.eliminated_fraction:.1f}% eliminated), "
        f"{len(ts.weakly_efficient)} weakly efficient",
    ]
    if ts.excluded:
        lines.append(f"excluded as incalculable: {', '.join(ts.excluded)}")
    for p in front:
        lines.append(f"  {p.algorithm:<32} total_fnmr={p.objective_accuracy:.6g}  "
                     f"{ts.measure.label}={p.measure_value:.6g}")
    if inset_fnmr is not None:
        ins = ts.inset(inset_fnmr)
        eff = [p for p in ins if p.classification.value == "efficient"]
        lines.append(f"inset total FNMR < {inset_fnmr:g}: {len(ins)} point(s), {len(eff)} efficient")
    return "\n".join(lines) + "\n"


def render_sweep(s: SweepResult) -> str:
    lines = [f"{s.measure.label} sweep over {len(s.alphas)} alpha values, {int(s.calculable[:, 0].sum())} "
             f"calculable record(s)"]
    for stat in ("median", "mean"):
        c = s.crossover(stat)
        lines.append(f"  {stat} contribution_a reaches 0.5 at alpha = {'never' if c is None else f'{c:g}'}")
    name, a, v = s.argmax()
    lines.append(f"  sweep maximum {v:.6g} ({name}, alpha={a:g})")
    return "\n".join(lines) + "\n"


# -- plots -----------------------------------------------------------------------


def _pyplot(timestamps: bool):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "facefair"
    return plt


def _save(fig, path: str, timestamps: bool) -> str:
    meta = {"Creator": f"facefair {__version__}"}
    if not timestamps:
        meta["Date"] = None
    fig.savefig(path, format="svg", metadata=meta)
    return path


def _value_limits(measure: Measure):
    return (0.0, 1.0) if math.isfinite(measure.bounds[1]) else None


def plot_measure_panels(s: SweepResult, hist: Histogram, out_dir: str, timestamps: bool = True) -> list[str]:
    """Four SVGs per measure: value histogram, term magnitudes, value range
    per alpha, and FMR-side contribution per alpha."""
    plt = _pyplot(timestamps)
    label = s.measure.label
    stem = os.path.join(out_dir, s.measure.value)
    paths = []

    fig, ax = plt.subplots(figsize=(6, 4))
    widths = max(float(hist.edges[-1] - hist.edges[0]) / max(len(hist.counts), 1), 1e-9)
    ax.bar(hist.edges[:-1], hist.counts, width=widths if len(hist.counts) > 1 else 0.01,
           align="edge", color="#4c72b0", edgecolor="white")
    ax.set_xlabel(f"{label} (alpha = {hist.alpha:g})")
    ax.set_ylabel("algorithms")
    ax.set_title(f"A. {label} distribution")
    lim = _value_limits(s.measure)
    if lim:
        ax.set_xlim(*lim)
    paths.append(_save(fig, f"{stem}_A_distribution.svg", timestamps))
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ok = np.isfinite(s.term_a)
    ax.boxplot([s.term_a[ok], s.term_b[ok]])
    ax.set_xticks([1, 2], ["term A (FMR)", "term B (FNMR)"])
    if s.measure is not Measure.GARBE:
        ax.set_yscale("log")
    else:
        ax.set_ylim(0.0, 1.0)
    ax.set_title(f"B. {label} term magnitudes")
    paths.append(_save(fig, f"{stem}_B_terms.svg", timestamps))
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.fill_between(s.alphas, s.value_min, s.value_max, color="#c6dbef", label="min-max")
    ax.fill_between(s.alphas, s.value_p5, s.value_p95, color="#6baed6", label="5th-95th pct")
    ax.plot(s.alphas, s.value_median, color="#08306b", label="median")
    ax.set_xlim(0.0, 1.0)
    if lim:
        ax.set_ylim(*lim)
    else:
        ax.set_yscale("log")
    ax.set_xlabel("alpha")
    ax.set_ylabel(label)
    ax.set_title(f"C. {label} range by alpha")
    ax.legend(loc="best")
    paths.append(_save(fig, f"{stem}_C_range.svg", timestamps))
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(s.alphas, s.contribution_median, label="median")
    ax.plot(s.alphas, s.contribution_mean, label="mean", linestyle="--")
    ax.axhline(0.5, color="grey", linewidth=0.8)
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("alpha")
    ax.set_ylabel("relative contribution of FMR term")
    ax.set_title(f"D. {label} FMR-term contribution")
    ax.legend(loc="best")
    paths.append(_save(fig, f"{stem}_D_contribution.svg", timestamps))
    plt.close(fig)
    return paths


def plot_pareto(ts: TradeSpace, out_dir: str, inset_fnmr: Optional[float] = None,
                timestamps: bool = True) -> list[str]:
    plt = _pyplot(timestamps)
    paths = []
    views = [("pareto.svg", ts.points)]
    if inset_fnmr is not None:
        views.append(("pareto_inset.svg", tuple(ts.inset(inset_fnmr))))
    for fname, pts in views:
        fig, ax = plt.subplots(figsize=(7, 5))
        ax.scatter([p.objective_accuracy for p in pts], [p.objective_fairness for p in pts],
                   s=12, color="#7f7f7f")
        front = [p for p in ts.frontier if p in pts]
        ax.plot([p.objective_accuracy for p in front], [p.objective_fairness for p in front],
                color="red", marker="o", markersize=4)
        for p in front:
            ax.annotate(p.algorithm, (p.objective_accuracy, p.objective_fairness), fontsize=6,
                        xytext=(3, 3), textcoords="offset points")
        ax.set_xlabel("total FNMR")
        fair = f"1 - {ts.measure.label}" if ts.measure.higher_is_fairer else ts.measure.label
        ax.set_ylabel(f"{fair} (alpha = {ts.alpha:g})")
        if math.isfinite(ts.measure.bounds[1]):
            ax.set_ylim(0.0, 1.0)
        ax.set_xlim(left=0.0)
        ax.set_title(f"Pareto frontier: {len(ts.frontier)} of {len(ts.points)} efficient")
        paths.append(_save(fig, os.path.join(out_dir, fname), timestamps))
        plt.close(fig)
    return paths


# -- full bundle -------------------------------------------------------------------


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class AuditReport:
    dataset: Dataset
    validation: ValidationReport
    alpha: float
    grid: tuple[float, ...]
    scores: dict
    sweeps: dict
    ffmc: list
    pareto: Optional[TradeSpace]
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "provenance": self.provenance,
            "dataset": {
                "record_count": len(self.dataset),
                "groups": list(self.dataset.groups),
                "validation": self.validation.to_dict(),
            },
            "alpha": self.alpha,
            "measures": {},
            "ffmc": [r.to_dict() for r in self.ffmc],
        }
        for m, rows in self.scores.items():
            calc = [r.result.value for r in rows if r.calculable]
            s = self.sweeps[m]
            name, a_max, v_max = s.argmax()
            out["measures"][m.value] = {
                "at_alpha": {
                    "n_calculable": len(calc),
                    "min": min(calc),
                    "max": max(calc),
                    "median": float(np.median(calc)),
                    "incalculable": [r.name for r in rows if not r.calculable],
                },
                "crossover_median": s.crossover("median"),
                "crossover_mean": s.crossover("mean"),
                "sweep_max": {"value": v_max, "algorithm": name, "alpha": a_max},
            }
        if self.pareto is not None:
            ts = self.pareto
            out["pareto"] = {
                "measure": ts.measure.label,
                "alpha": ts.alpha,
                "total": len(ts.points),
                "efficient": [p.algorithm for p in ts.frontier],
                "weakly_efficient": [p.algorithm for p in ts.weakly_efficient],
                "eliminated_fraction": ts.eliminated_fraction,
                "excluded": list(ts.excluded),
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def render(self) -> str:
        parts = ["# Fairness audit", "", render_validation(self.validation)]
        for m, rows in self.scores.items():
            parts.append(render_scores(rows, m, self.alpha))
            parts.append(render_sweep(self.sweeps[m]))
        parts.append(render_ffmc(self.ffmc))
        if self.pareto is not None:
            parts.append(render_pareto(self.pareto, self.provenance.get("parameters", {}).get("inset_fnmr")))
        parts.append("Gini-based figures depend on the grouping: groups "
                     f"{list(self.dataset.groups)}.\n")
        return "\n".join(parts)


def build_report(
    d: Dataset,
    alpha: float = 0.5,
    grid: Optional[Sequence[float]] = None,
    pareto_measure: Measure = Measure.GARBE,
    band=(0.2, 0.8),
    provenance: Optional[dict] = None,
) -> AuditReport:
    grid = tuple(alpha_grid() if grid is None else grid)
    v = validate(d)
    scores, sweeps, ffmc = {}, {}, []
    for m in Measure:
        scores[m] = score(d, m, alpha)
        sweeps[m] = sweep(d, m, grid)
        ffmc.append(ffmc_audit(d, m, band=band, sweep_result=sweeps[m]))
    ts = trade_space(d, pareto_measure, alpha)
    return AuditReport(d, v, alpha, grid, scores, sweeps, ffmc, ts, provenance or {})


def provenance_block(input_bytes: bytes, parameters: dict, timestamps: bool = True) -> dict:
    block = {
        "input_sha256": digest(input_bytes),
        "tool": "facefair",
        "version": __version__,
        "parameters": parameters,
    }
    if timestamps:
        block["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return block


def write_report_bundle(report: AuditReport, out_dir: str, bins: int = 20, inset_fnmr=None,
                        timestamps: bool = True, plots: bool = True) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def put(name: str, text: str):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        written.append(path)

    put("report.json", report.to_json())
    put("report.txt", report.render())
    put("validation.csv", validation_table(report.validation))
    put("ffmc.csv", ffmc_table(report.ffmc))
    for m, rows in report.scores.items():
        put(f"score_{m.value}.csv", score_table(rows))
        put(f"sweep_{m.value}.csv", sweep_table(report.sweeps[m]))
        put(f"sweep_{m.value}_values.csv", sweep_matrix_table(report.sweeps[m]))
    if report.pareto is not None:
        put("pareto.csv", pareto_table(report.pareto))
    if plots:
        for m in report.scores:
            hist = distribution(report.dataset, m, report.alpha, bins)
            written += plot_measure_panels(report.sweeps[m], hist, out_dir, timestamps)
        if report.pareto is not None:
            written += plot_pareto(report.pareto, out_dir, inset_fnmr, timestamps)
    return written
