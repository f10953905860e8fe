"""``facefair`` command line: validate | score | sweep | ffmc | pareto | report.

Exit codes: 0 success, 1 validation failure (or empty dataset), 2 parse
error or unreadable input, 3 measure incalculable, 4 bad arguments.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from typing import Optional, Sequence

from . import __version__
from . import report as rep
from .audit import DEFAULT_BAND, EmptyDatasetError, IncalculableError, distribution, ffmc_audit, parse_grid, score, sweep
from .metrics import Measure, RiskWeight
from .model import Dataset, FmrScale, ParseError, parse_long_csv, parse_weights_csv, parse_wide_csv, validate
from .pareto import trade_space

log = logging.getLogger("facefair")

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_INCALCULABLE, EXIT_USAGE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _alpha(text: str) -> float:
    try:
        return RiskWeight(float(text)).alpha
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"--alpha {text!r}: {e}") from None


def _grid(text: str):
    try:
        return parse_grid(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"--grid {text!r}: {e}") from None


def _band(text: str):
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--band {text!r} is not of the form lo:hi") from None
    if not 0.0 <= lo <= hi <= 1.0:
        raise argparse.ArgumentTypeError(f"--band {text!r} must satisfy 0 <= lo <= hi <= 1")
    return lo, hi


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("input", help="rates CSV (wide or long layout)")
    common.add_argument("--format", choices=("wide", "long"), default="wide", dest="fmt")
    common.add_argument("--fmr-scale", choices=[s.value for s in FmrScale], default="linear",
                        help="whether wide-layout FMR cells are probabilities or log10 values")
    common.add_argument("--header-map", metavar="PATH",
                        help="JSON object mapping raw wide-layout row labels to fmr:<group>/fnmr:<group>")
    common.add_argument("--weights", metavar="PATH",
                        help="group,count CSV of mated-comparison counts applied to every record")
    common.add_argument("--out", metavar="DIR", help="write outputs into DIR instead of stdout")
    common.add_argument("--emit", action="append", choices=("table", "report", "plots"),
                        help="output kind; repeatable")
    common.add_argument("--no-timestamps", action="store_true",
                        help="omit wall-clock times from reports and plot metadata")

    measure = _Parser(add_help=False)
    measure.add_argument("--measure", choices=[m.value for m in Measure], default="garbe")
    measure.add_argument("--alpha", type=_alpha, default=0.5)

    grid = _Parser(add_help=False)
    grid.add_argument("--grid", type=_grid, default=parse_grid("0:1:0.01"), help="start:stop:step, inclusive")

    p = _Parser(prog="facefair", description="Demographic fairness audit of face recognition error rates.")
    p.add_argument("--version", action="version", version=f"facefair {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", parents=[common], help="check the data criteria")
    v.add_argument("--min-records", type=int, default=1)

    sub.add_parser("score", parents=[common, measure], help="per-algorithm measure table")

    s = sub.add_parser("sweep", parents=[common, grid], help="statistics over a grid of alpha values")
    s.add_argument("--measure", choices=[m.value for m in Measure], default="garbe")
    s.add_argument("--alpha", type=_alpha, default=0.5, help="alpha for the distribution plot")
    s.add_argument("--bins", type=int, default=20)

    f = sub.add_parser("ffmc", parents=[common, grid], help="FFMC scorecard for all measures")
    f.add_argument("--band", type=_band, default=DEFAULT_BAND, help="FFMC.1 pass band lo:hi")

    pa = sub.add_parser("pareto", parents=[common, measure], help="accuracy/fairness frontier")
    pa.add_argument("--inset-fnmr", type=_positive_float, default=None,
                    help="also report the view with total FNMR below this value")

    r = sub.add_parser("report", parents=[common, measure, grid], help="full audit bundle")
    r.add_argument("--band", type=_band, default=DEFAULT_BAND)
    r.add_argument("--bins", type=int, default=20)
    r.add_argument("--inset-fnmr", type=_positive_float, default=None)
    return p


def _read_bytes(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror or e}") from None


def load(args) -> tuple[Dataset, bytes]:
    raw = _read_bytes(args.input)
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"{args.input}: not UTF-8 ({e})") from None
    label_map = None
    if args.header_map:
        try:
            label_map = json.loads(_read_bytes(args.header_map).decode("utf-8"))
        except ValueError as e:
            raise ParseError(f"{args.header_map}: invalid JSON header map ({e})") from None
        if not isinstance(label_map, dict):
            raise ParseError(f"{args.header_map}: header map must be a JSON object")
    try:
        if args.fmt == "wide":
            d = parse_wide_csv(text, args.fmr_scale, label_map)
        else:
            if args.fmr_scale != "linear":
                raise UsageError("--fmr-scale log10 applies to the wide layout only")
            d = parse_long_csv(text)
    except ParseError as e:
        raise ParseError(f"{args.input}: {e}") from None
    if args.weights:
        try:
            counts = parse_weights_csv(_read_bytes(args.weights).decode("utf-8"))
        except ParseError as e:
            raise ParseError(f"{args.weights}: {e}") from None
        try:
            d = d.with_mated_counts(counts)
        except ValueError as e:
            raise ParseError(f"{args.weights}: {e}") from None
    return d, raw


def _emits(args, default: str) -> set[str]:
    return set(args.emit or [default])


def _write(args, name: str, text: str) -> None:
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _need_out(args) -> str:
    if not args.out:
        raise UsageError("--emit plots requires --out DIR")
    os.makedirs(args.out, exist_ok=True)
    return args.out


def cmd_validate(args) -> int:
    d, _ = load(args)
    v = validate(d, min_records=args.min_records)
    emits = _emits(args, "report")
    if "report" in emits:
        _write(args, "validation.txt", rep.render_validation(v))
    if "table" in emits:
        _write(args, "validation.csv", rep.validation_table(v))
    return EXIT_OK if v.ok else EXIT_INVALID


def cmd_score(args) -> int:
    d, _ = load(args)
    m = Measure(args.measure)
    rows = score(d, m, args.alpha)
    emits = _emits(args, "table")
    if "table" in emits:
        _write(args, f"score_{m.value}.csv", rep.score_table(rows))
    if "report" in emits:
        _write(args, f"score_{m.value}.txt", rep.render_scores(rows, m, args.alpha))
    if not any(r.calculable for r in rows):
        print(f"error: {m.label} is incalculable for every record", file=sys.stderr)
        return EXIT_INCALCULABLE
    return EXIT_OK


def cmd_sweep(args) -> int:
    d, _ = load(args)
    m = Measure(args.measure)
    s = sweep(d, m, args.grid)
    emits = _emits(args, "table")
    if "table" in emits:
        _write(args, f"sweep_{m.value}.csv", rep.sweep_table(s))
        if args.out:
            _write(args, f"sweep_{m.value}_values.csv", rep.sweep_matrix_table(s))
    if "report" in emits:
        _write(args, f"sweep_{m.value}.txt", rep.render_sweep(s))
    if "plots" in emits:
        out = _need_out(args)
        hist = distribution(d, m, args.alpha, args.bins)
        rep.plot_measure_panels(s, hist, out, timestamps=not args.no_timestamps)
    return EXIT_OK


def cmd_ffmc(args) -> int:
    d, _ = load(args)
    if len(d) == 0:
        raise EmptyDatasetError(f"{args.input}: dataset has no algorithm records")
    reports = [ffmc_audit(d, m, band=args.band, grid=args.grid) for m in Measure]
    emits = _emits(args, "report")
    if "report" in emits:
        _write(args, "ffmc.txt", rep.render_ffmc(reports))
    if "table" in emits:
        _write(args, "ffmc.csv", rep.ffmc_table(reports))
    return EXIT_OK


def cmd_pareto(args) -> int:
    d, _ = load(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ts = trade_space(d, args.measure, args.alpha)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    emits = _emits(args, "table")
    if "table" in emits:
        _write(args, "pareto.csv", rep.pareto_table(ts))
        if args.inset_fnmr is not None and args.out:
            _write(args, "pareto_inset.csv", rep.pareto_table(ts, ts.inset(args.inset_fnmr)))
    if "report" in emits:
        _write(args, "pareto.txt", rep.render_pareto(ts, args.inset_fnmr))
    if "plots" in emits:
        rep.plot_pareto(ts, _need_out(args), args.inset_fnmr, timestamps=not args.no_timestamps)
    return EXIT_OK


def cmd_report(args) -> int:
    if not args.out:
        raise UsageError("report requires --out DIR")
    d, raw = load(args)
    params = {
        "input": os.path.basename(args.input),
        "format": args.fmt,
        "fmr_scale": args.fmr_scale,
        "weights": os.path.basename(args.weights) if args.weights else None,
        "alpha": args.alpha,
        "grid": [args.grid[0], args.grid[-1], len(args.grid)],
        "pareto_measure": args.measure,
        "band": list(args.band),
        "inset_fnmr": args.inset_fnmr,
    }
    prov = rep.provenance_block(raw, params, timestamps=not args.no_timestamps)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = rep.build_report(d, args.alpha, args.grid, Measure(args.measure), args.band, prov)
    plots = args.emit is None or "plots" in args.emit
    rep.write_report_bundle(report, args.out, args.bins, args.inset_fnmr,
                            timestamps=not args.no_timestamps, plots=plots)
    sys.stdout.write(report.render())
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "score": cmd_score,
    "sweep": cmd_sweep,
    "ffmc": cmd_ffmc,
    "pareto": cmd_pareto,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except EmptyDatasetError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except IncalculableError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INCALCULABLE
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
