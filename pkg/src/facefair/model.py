"""Domain types for disaggregated error rates, CSV ingestion and data checks.

Two CSV layouts are understood:

* wide: row 1 holds algorithm names (the first cell labels the label
  column and is ignored); every following row is labelled ``fmr:<group>``
  or ``fnmr:<group>`` in the first column and carries one rate per
  algorithm.
* long: header ``algorithm,group,fmr,fnmr[,mated_count]``, one row per
  (algorithm, group) pair.
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Optional, TextIO, Union

DemographicGroup = str

FMR_PREFIX = "fmr:"
FNMR_PREFIX = "fnmr:"
LONG_HEADER = ("algorithm", "group", "fmr", "fnmr")


class FmrScale(str, Enum):
    LINEAR = "linear"
    LOG10 = "log10"


class ParseError(ValueError):
    """Malformed input file. ``row`` and ``column`` are 1-based when known."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[int] = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


def _check_rate(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0.0 or value > 1.0:
        raise ValueError(f"{what} = {value!r} is not a probability in [0, 1]")
    return value


@dataclass(frozen=True)
class GroupRates:
    """FMR and FNMR per demographic group at one operating threshold.

    Both maps must share the same group labels (at least two of them) and
    every rate must be a finite probability. Group order is kept as given.
    """

    fmr: Mapping[DemographicGroup, float]
    fnmr: Mapping[DemographicGroup, float]

    def __post_init__(self):
        fmr = {str(k): _check_rate(v, f"FMR[{k}]") for k, v in dict(self.fmr).items()}
        fnmr = {str(k): _check_rate(v, f"FNMR[{k}]") for k, v in dict(self.fnmr).items()}
        if any(not g for g in fmr) or any(not g for g in fnmr):
            raise ValueError("group labels must be non-empty")
        if set(fmr) != set(fnmr):
            only_fmr = sorted(set(fmr) - set(fnmr))
            only_fnmr = sorted(set(fnmr) - set(fmr))
            raise ValueError(
                f"FMR and FNMR group sets differ (FMR only: {only_fmr}, FNMR only: {only_fnmr})"
            )
        if len(fmr) < 2:
            raise ValueError(f"at least 2 demographic groups are required, got {len(fmr)}")
        # keep FNMR in FMR's group order so the arrays line up
        fnmr = {g: fnmr[g] for g in fmr}
        object.__setattr__(self, "fmr", MappingProxyType(fmr))
        object.__setattr__(self, "fnmr", MappingProxyType(fnmr))

    @property
    def groups(self) -> tuple[DemographicGroup, ...]:
        return tuple(self.fmr)

    def fmr_values(self) -> list[float]:
        return list(self.fmr.values())

    def fnmr_values(self) -> list[float]:
        return list(self.fnmr.values())

    def zero_rate_groups(self) -> dict[str, list[DemographicGroup]]:
        return {
            "fmr": [g for g, v in self.fmr.items() if v == 0.0],
            "fnmr": [g for g, v in self.fnmr.items() if v == 0.0],
        }


@dataclass(frozen=True)
class AlgorithmRecord:
    name: str
    rates: GroupRates
    threshold_note: Optional[str] = None
    mated_counts: Optional[Mapping[DemographicGroup, int]] = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("algorithm name must be non-empty")
        if self.mated_counts is not None:
            counts = {}
            for g, c in dict(self.mated_counts).items():
                if isinstance(c, float) and not c.is_integer():
                    raise ValueError(f"{self.name}: mated count for {g!r} is not an integer: {c!r}")
                c = int(c)
                if c < 1:
                    raise ValueError(f"{self.name}: mated count for {g!r} must be >= 1, got {c}")
                counts[str(g)] = c
            if set(counts) != set(self.rates.groups):
                raise ValueError(
                    f"{self.name}: mated-count groups {sorted(counts)} do not match "
                    f"rate groups {sorted(self.rates.groups)}"
                )
            object.__setattr__(self, "mated_counts", MappingProxyType(counts))

    @property
    def groups(self) -> tuple[DemographicGroup, ...]:
        return self.rates.groups


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of algorithm records with unique names.

    Group-set agreement across records is *not* enforced here so that
    :func:`validate` can report it (criterion C.4); both parsers only ever
    produce datasets whose records agree.
    """

    records: tuple[AlgorithmRecord, ...] = field(default_factory=tuple)

    def __post_init__(self):
        records = tuple(self.records)
        seen = set()
        for r in records:
            if r.name in seen:
                raise ValueError(f"duplicate algorithm name {r.name!r}")
            seen.add(r.name)
        object.__setattr__(self, "records", records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, key: Union[int, str]) -> AlgorithmRecord:
        if isinstance(key, str):
            for r in self.records:
                if r.name == key:
                    return r
            raise KeyError(key)
        return self.records[key]

    @property
    def names(self) -> list[str]:
        return [r.name for r in self.records]

    @property
    def groups(self) -> tuple[DemographicGroup, ...]:
        """Group labels of the first record (empty for an empty dataset)."""
        return self.records[0].groups if self.records else ()

    def with_mated_counts(self, counts: Mapping[DemographicGroup, int]) -> "Dataset":
        """Attach one global set of mated counts to every record lacking its own."""
        return Dataset(
            tuple(
                r
                if r.mated_counts is not None
                else AlgorithmRecord(r.name, r.rates, r.threshold_note, counts)
                for r in self.records
            )
        )


def _read_rows(text: Union[str, TextIO]) -> list[list[str]]:
    if not isinstance(text, str):
        text = text.read()
    if text.startswith("﻿"):
        text = text[1:]
    rows = list(csv.reader(io.StringIO(text)))
    # row numbers are kept by the callers via enumerate; only drop trailing blanks
    while rows and not any(c.strip() for c in rows[-1]):
        rows.pop()
    return rows


def _parse_number(cell: str, row: int, column: int, allow_neg_inf: bool = False) -> float:
    s = cell.strip()
    try:
        value = float(s)
    except ValueError:
        raise ParseError(f"non-numeric cell {cell!r}", row, column) from None
    if math.isnan(value) or (math.isinf(value) and not (allow_neg_inf and value < 0)):
        raise ParseError(f"non-finite cell {cell!r}", row, column)
    return value


def _rate(value: float, what: str, row: int, column: int) -> float:
    if not (0.0 <= value <= 1.0):
        raise ParseError(f"{what} {value!r} is outside [0, 1]", row, column)
    return value


def parse_wide_csv(
    text: Union[str, TextIO],
    fmr_scale: Union[FmrScale, str] = FmrScale.LINEAR,
    label_map: Optional[Mapping[str, str]] = None,
) -> Dataset:
    """Parse the one-column-per-algorithm layout.

    Args:
        text: CSV content or an open text stream.
        fmr_scale: ``"linear"`` if FMR cells are probabilities, ``"log10"``
            if they hold log10(FMR); each log10 cell ``v`` is stored as
            ``10**v``. FNMR cells are always linear.
        label_map: optional translation of raw row labels (first column) to
            the canonical ``fmr:<group>`` / ``fnmr:<group>`` form, for files
            whose labels follow another convention. Unmapped labels are
            used as-is.

    Raises:
        ParseError: ragged rows, non-numeric cells, duplicate algorithm
            names or row labels, rates outside [0, 1], fewer than 2 groups,
            or a group present on only one of the FMR/FNMR sides.
    """
    scale = FmrScale(fmr_scale)
    label_map = dict(label_map or {})
    rows = _read_rows(text)
    if not rows:
        raise ParseError("empty input")
    header = rows[0]
    width = len(header)
    names = [c.strip() for c in header[1:]]
    for j, name in enumerate(names, start=2):
        if not name:
            raise ParseError("empty algorithm name", 1, j)
        if names.index(name) != j - 2:
            raise ParseError(f"duplicate algorithm name {name!r}", 1, j)

    fmr: dict[str, list[float]] = {}
    fnmr: dict[str, list[float]] = {}
    for i, row in enumerate(rows[1:], start=2):
        if not any(c.strip() for c in row):
            continue
        if len(row) != width:
            raise ParseError(f"ragged row: expected {width} cells, found {len(row)}", i)
        raw = row[0].strip()
        label = label_map.get(raw, raw)
        low = label.lower()
        if low.startswith(FMR_PREFIX):
            side, group, is_fmr = fmr, label[len(FMR_PREFIX):].strip(), True
        elif low.startswith(FNMR_PREFIX):
            side, group, is_fmr = fnmr, label[len(FNMR_PREFIX):].strip(), False
        else:
            raise ParseError(
                f"row label {raw!r} is neither '{FMR_PREFIX}<group>' nor '{FNMR_PREFIX}<group>'", i, 1
            )
        if not group:
            raise ParseError(f"row label {raw!r} has an empty group name", i, 1)
        if group in side:
            raise ParseError(f"duplicate row for {label!r}", i, 1)
        values = []
        for j, cell in enumerate(row[1:], start=2):
            if is_fmr and scale is FmrScale.LOG10:
                v = 10.0 ** _parse_number(cell, i, j, allow_neg_inf=True)
                values.append(_rate(v, "converted FMR", i, j))
            else:
                v = _parse_number(cell, i, j)
                values.append(_rate(v, "FMR" if is_fmr else "FNMR", i, j))
        side[group] = values

    if set(fmr) != set(fnmr):
        missing = sorted(set(fmr) ^ set(fnmr))
        raise ParseError(f"groups lacking either an FMR or an FNMR row: {missing}")
    if len(fmr) < 2:
        raise ParseError(f"at least 2 demographic groups are required, found {len(fmr)}")

    records = []
    for k, name in enumerate(names):
        rates = GroupRates({g: v[k] for g, v in fmr.items()}, {g: fnmr[g][k] for g in fmr})
        records.append(AlgorithmRecord(name, rates))
    return Dataset(tuple(records))


def parse_long_csv(text: Union[str, TextIO]) -> Dataset:
    """Parse the tidy ``algorithm,group,fmr,fnmr[,mated_count]`` layout.

    Every algorithm must have a row for every group seen anywhere in the
    file. Algorithm and group order follow first appearance.
    """
    rows = _read_rows(text)
    if not rows:
        raise ParseError("empty input")
    header = [c.strip().lower() for c in rows[0]]
    missing = [c for c in LONG_HEADER if c not in header]
    if missing:
        raise ParseError(f"header lacks column(s) {missing}", 1)
    idx = {c: header.index(c) for c in header}
    has_counts = "mated_count" in idx

    cells: dict[tuple[str, str], tuple[float, float, Optional[int]]] = {}
    algorithms: list[str] = []
    groups: list[str] = []
    for i, row in enumerate(rows[1:], start=2):
        if not any(c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"ragged row: expected {len(header)} cells, found {len(row)}", i)
        algo = row[idx["algorithm"]].strip()
        group = row[idx["group"]].strip()
        if not algo or not group:
            raise ParseError("empty algorithm or group name", i)
        if (algo, group) in cells:
            raise ParseError(f"duplicate row for ({algo!r}, {group!r})", i)
        c_fmr, c_fnmr = idx["fmr"] + 1, idx["fnmr"] + 1
        f = _rate(_parse_number(row[c_fmr - 1], i, c_fmr), "FMR", i, c_fmr)
        n = _rate(_parse_number(row[c_fnmr - 1], i, c_fnmr), "FNMR", i, c_fnmr)
        count = None
        if has_counts and row[idx["mated_count"]].strip():
            c_col = idx["mated_count"] + 1
            raw = _parse_number(row[c_col - 1], i, c_col)
            if not raw.is_integer() or raw < 1:
                raise ParseError(f"mated_count {row[c_col - 1]!r} is not a positive integer", i, c_col)
            count = int(raw)
        cells[(algo, group)] = (f, n, count)
        if algo not in algorithms:
            algorithms.append(algo)
        if group not in groups:
            groups.append(group)

    if len(groups) < 2 and algorithms:
        raise ParseError(f"at least 2 demographic groups are required, found {len(groups)}")
    records = []
    for algo in algorithms:
        absent = [g for g in groups if (algo, g) not in cells]
        if absent:
            raise ParseError(f"algorithm {algo!r} has no row for group(s) {absent}")
        fmr = {g: cells[(algo, g)][0] for g in groups}
        fnmr = {g: cells[(algo, g)][1] for g in groups}
        counts = [cells[(algo, g)][2] for g in groups]
        if all(c is None for c in counts):
            mated = None
        elif any(c is None for c in counts):
            raise ParseError(f"algorithm {algo!r} has mated_count for some groups but not all")
        else:
            mated = dict(zip(groups, counts))
        records.append(AlgorithmRecord(algo, GroupRates(fmr, fnmr), mated_counts=mated))
    return Dataset(tuple(records))


def parse_weights_csv(text: Union[str, TextIO]) -> dict[DemographicGroup, int]:
    """Read a ``group,count`` sidecar of mated-comparison counts."""
    rows = _read_rows(text)
    if not rows:
        raise ParseError("empty weights file")
    header = [c.strip().lower() for c in rows[0]]
    if header[:2] != ["group", "count"]:
        raise ParseError("weights header must be 'group,count'", 1)
    counts: dict[str, int] = {}
    for i, row in enumerate(rows[1:], start=2):
        if not any(c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"ragged row: expected {len(header)} cells, found {len(row)}", i)
        group = row[0].strip()
        if group in counts:
            raise ParseError(f"duplicate group {group!r}", i, 1)
        value = _parse_number(row[1], i, 2)
        if not value.is_integer() or value < 1:
            raise ParseError(f"count {row[1]!r} is not a positive integer", i, 2)
        counts[group] = int(value)
    return counts


def load_dataset(
    path,
    fmt: str = "wide",
    fmr_scale: Union[FmrScale, str] = FmrScale.LINEAR,
    label_map: Optional[Mapping[str, str]] = None,
) -> Dataset:
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    if fmt == "wide":
        return parse_wide_csv(text, fmr_scale, label_map)
    if fmt == "long":
        if FmrScale(fmr_scale) is not FmrScale.LINEAR:
            raise ValueError("the long layout stores linear FMR only")
        return parse_long_csv(text)
    raise ValueError(f"unknown format {fmt!r}")


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_wide_csv(d: Dataset) -> str:
    """Write ``d`` in the wide layout with linear rates at full precision."""
    groups = d.groups
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["metric", *d.names])
    for g in groups:
        w.writerow([f"{FMR_PREFIX}{g}", *(_fmt(r.rates.fmr[g]) for r in d)])
    for g in groups:
        w.writerow([f"{FNMR_PREFIX}{g}", *(_fmt(r.rates.fnmr[g]) for r in d)])
    return out.getvalue()


def serialize_long_csv(d: Dataset) -> str:
    with_counts = any(r.mated_counts is not None for r in d)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow([*LONG_HEADER, "mated_count"] if with_counts else list(LONG_HEADER))
    for r in d:
        for g in r.groups:
            row = [r.name, g, _fmt(r.rates.fmr[g]), _fmt(r.rates.fnmr[g])]
            if with_counts:
                row.append("" if r.mated_counts is None else str(r.mated_counts[g]))
            w.writerow(row)
    return out.getvalue()


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class CriterionResult:
    code: str
    description: str
    passed: bool
    detail: str = ""
    offenders: tuple[str, ...] = ()


@dataclass(frozen=True)
class ValidationReport:
    criteria: tuple[CriterionResult, ...]
    record_count: int
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.criteria)

    def __getitem__(self, code: str) -> CriterionResult:
        for c in self.criteria:
            if c.code == code:
                return c
        raise KeyError(code)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "record_count": self.record_count,
            "criteria": [
                {
                    "code": c.code,
                    "description": c.description,
                    "passed": c.passed,
                    "detail": c.detail,
                    "offenders": list(c.offenders),
                }
                for c in self.criteria
            ],
            "warnings": list(self.warnings),
        }


def _side_ok(rates: Mapping[str, float]) -> bool:
    return all(isinstance(v, float) and math.isfinite(v) and 0.0 <= v <= 1.0 for v in rates.values())


def validate(d: Dataset, min_records: int = 1) -> ValidationReport:
    """Check ``d`` against the data criteria C.1 to C.5. Never raises.

    C.5 ("a representative number of algorithms") passes when the record
    count reaches ``min_records``; what counts as representative is the
    caller's call. Groups with a zero FMR or FNMR produce a warning because
    the inequity rate cannot be computed for that record.
    """
    records = list(d.records)
    bad_fmr = [r.name for r in records if not r.rates.fmr or not _side_ok(r.rates.fmr)]
    bad_fnmr = [r.name for r in records if not r.rates.fnmr or not _side_ok(r.rates.fnmr)]
    # one GroupRates per record is one threshold; a record without rates has none
    no_threshold = [r.name for r in records if not isinstance(r.rates, GroupRates)]

    c4_offenders: list[str] = []
    c4_detail = ""
    too_few = [r.name for r in records if len(r.groups) < 2]
    if too_few:
        c4_offenders.extend(too_few)
        c4_detail = f"fewer than 2 groups: {too_few}"
    if records:
        ref = records[0]
        mismatched = [r for r in records[1:] if set(r.groups) != set(ref.groups)]
        if mismatched:
            pairs = "; ".join(
                f"{ref.name!r} groups {sorted(ref.groups)} vs {r.name!r} groups {sorted(r.groups)}"
                for r in mismatched
            )
            c4_offenders.extend([ref.name] + [r.name for r in mismatched])
            c4_detail = (c4_detail + "; " if c4_detail else "") + f"group sets differ: {pairs}"

    criteria = (
        CriterionResult("C.1", "false match rates", not bad_fmr,
                        f"invalid FMR in {bad_fmr}" if bad_fmr else "", tuple(bad_fmr)),
        CriterionResult("C.2", "false non-match rates", not bad_fnmr,
                        f"invalid FNMR in {bad_fnmr}" if bad_fnmr else "", tuple(bad_fnmr)),
        CriterionResult("C.3", "C.1 and C.2 at a single threshold per algorithm", not no_threshold,
                        "", tuple(no_threshold)),
        CriterionResult("C.4", "C.1 and C.2 disaggregated by demographic group", not c4_offenders,
                        c4_detail, tuple(dict.fromkeys(c4_offenders))),
        CriterionResult("C.5", "C.1-C.4 across a representative number of algorithms",
                        len(records) >= min_records,
                        f"{len(records)} algorithm(s); required >= {min_records}"),
    )

    warnings = []
    for r in records:
        zeros = r.rates.zero_rate_groups()
        if zeros["fmr"] or zeros["fnmr"]:
            parts = []
            if zeros["fmr"]:
                parts.append(f"FMR = 0 for {zeros['fmr']}")
            if zeros["fnmr"]:
                parts.append(f"FNMR = 0 for {zeros['fnmr']}")
            warnings.append(f"{r.name}: IR incalculable for this record ({'; '.join(parts)})")
    return ValidationReport(criteria, len(records), tuple(warnings))
