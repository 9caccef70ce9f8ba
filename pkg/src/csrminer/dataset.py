"""Record schema, CSV ingestion, cleaning, scaling and splitting.

One record is one CSR-month. The CSV contract (UTF-8, comma separated,
header required) is::

    agent_id,date,training,product_id,customer_service,business_needs,acw_seconds,adherence,attendance,aux

with date as mm/01/yyyy, training in {0,1}, quality columns as scores in
[1, 5], and adherence/aux accepted either as fractions ("0.96") or
percent strings ("96%"). Empty fields are missing values; cleaning
deletes those records rather than imputing.

The 8-attribute feature space is ordered agent, date, training, product,
acw, adherence, aux, attendance (see ATTRIBUTES). After-call work time,
adherence and auxiliary are min-max scaled per product because the same
raw value can be short for one product and long for another; the other
attributes are scaled on global ranges, and the date maps to months
since the earliest observed month over the observed span. Agent and
product ids are scaled as ordinal numerics even though they are nominal;
that mirrors the source methodology and is deliberately kept.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass, field, fields as dataclass_fields
from datetime import date as _date
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from csrminer.scoring import EvaluationKind, PerformanceCategory, categorize

log = logging.getLogger(__name__)

ATTRIBUTES = (
    "agent",
    "date",
    "training",
    "product",
    "acw",
    "adherence",
    "aux",
    "attendance",
)

ATTRIBUTE_DISPLAY = {
    "agent": "Agent",
    "date": "Date",
    "training": "Training",
    "product": "Product",
    "acw": "ACW",
    "adherence": "Adherence",
    "aux": "Aux",
    "attendance": "Attendance",
}

CSV_HEADER = (
    "agent_id",
    "date",
    "training",
    "product_id",
    "customer_service",
    "business_needs",
    "acw_seconds",
    "adherence",
    "attendance",
    "aux",
)

# Rejection reasons, in the order they are checked per record.
REASON_MISSING = "MissingValue"
REASON_TARGET_RANGE = "TargetOutOfRange"
REASON_NEGATIVE_TIME = "NegativeTimeManagement"
REASON_SMALL_CLASS = "ClassTooSmall"

DEFAULT_MIN_CLASS_SIZE = 50


class DatasetError(ValueError):
    pass


class SchemaMismatch(DatasetError):
    pass


class MalformedRow(DatasetError):
    def __init__(self, row: int, column: str, message: str):
        super().__init__(f"row {row}, column {column}: {message}")
        self.row = row
        self.column = column


class EmptyDataset(DatasetError):
    pass


class BadRatios(DatasetError):
    pass


@dataclass(frozen=True)
class EvaluationRecord:
    """One CSR-month row of the Table-2-shaped dataset.

    Fields may be None when the source CSV had an empty cell; such
    records survive loading and are removed by clean(). Out-of-range
    values (negative time management, quality scores outside [1, 5])
    likewise load fine and are exactly what cleaning removes.
    """

    agent_id: int | None
    date: _date | None
    training: bool | None
    product_id: int | None
    customer_service: float | None
    business_needs: float | None
    acw_seconds: float | None
    adherence: float | None
    attendance: float | None
    aux: float | None

    def quality(self, kind: EvaluationKind) -> float | None:
        if kind is EvaluationKind.CUSTOMER_SERVICE:
            return self.customer_service
        return self.business_needs

    def has_missing(self) -> bool:
        return any(
            getattr(self, f.name) is None for f in dataclass_fields(self)
        )


@dataclass(frozen=True)
class ScalingParams:
    """Min-max parameters fitted by fit_scaling().

    per_product maps product_id -> {"acw"|"adherence"|"aux": (min, max)}.
    global_ranges holds (min, max) for agent, product, attendance plus
    fallback ranges for the per-product attributes (used for products
    unseen at fit time). Degenerate ranges (max == min) map to 0.5.
    """

    per_product: dict
    global_ranges: dict
    date_origin: _date
    date_span_months: int

    def to_dict(self) -> dict:
        return {
            "per_product": {
                str(pid): {a: list(rng) for a, rng in attrs.items()}
                for pid, attrs in sorted(self.per_product.items())
            },
            "global_ranges": {a: list(rng) for a, rng in sorted(self.global_ranges.items())},
            "date_origin": self.date_origin.strftime("%m/01/%Y"),
            "date_span_months": self.date_span_months,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingParams":
        return cls(
            per_product={
                int(pid): {a: tuple(rng) for a, rng in attrs.items()}
                for pid, attrs in d["per_product"].items()
            },
            global_ranges={a: tuple(rng) for a, rng in d["global_ranges"].items()},
            date_origin=_parse_date(d["date_origin"]),
            date_span_months=int(d["date_span_months"]),
        )

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class CleanDataset:
    """Cleaned, categorized and scaled data ready for model training.

    features holds the all-data-scaled matrix (rows align with labels);
    records keeps the retained raw records so that evaluation protocols
    can refit scaling on their own training portion (the leakage-safe
    default). class_census counts records per label key.
    """

    records: tuple[EvaluationRecord, ...]
    labels: tuple[str, ...]
    features: np.ndarray
    scaling: ScalingParams
    target_kind: EvaluationKind
    split_met: bool
    class_census: dict

    def __post_init__(self):
        if len(self.records) != len(self.labels):
            raise DatasetError("records and labels length mismatch")
        if self.features.shape[0] != len(self.labels):
            raise DatasetError("feature row count does not match labels")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def class_names(self) -> tuple[str, ...]:
        from csrminer.scoring import CATEGORY_KEY_ORDER

        return tuple(k for k in CATEGORY_KEY_ORDER if k in self.class_census)


# ---------------------------------------------------------------------------
# CSV ingestion / emission


def _parse_date(text: str) -> _date:
    parts = text.split("/")
    if len(parts) != 3 or parts[1] != "01":
        raise ValueError(f"date must be mm/01/yyyy, got {text!r}")
    mm, _, yyyy = parts
    if len(mm) != 2 or len(yyyy) != 4:
        raise ValueError(f"date must be mm/01/yyyy, got {text!r}")
    month = int(mm)
    year = int(yyyy)
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range in {text!r}")
    return _date(year, month, 1)


def _parse_fraction_or_percent(text: str) -> float:
    if text.endswith("%"):
        return float(text[:-1]) / 100.0
    return float(text)


def _parse_training(text: str) -> bool:
    if text == "0":
        return False
    if text == "1":
        return True
    raise ValueError(f"training must be 0 or 1, got {text!r}")


_PARSERS = {
    "agent_id": int,
    "date": _parse_date,
    "training": _parse_training,
    "product_id": int,
    "customer_service": float,
    "business_needs": float,
    "acw_seconds": float,
    "adherence": _parse_fraction_or_percent,
    "attendance": float,
    "aux": _parse_fraction_or_percent,
}


def load_csv(path) -> list[EvaluationRecord]:
    """Load Table-2-shaped records; empty cells become None.

    Raises SchemaMismatch on a wrong header and MalformedRow (with the
    1-based data row number and column name) on unparseable content.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch("file is empty, expected a header row") from None
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise SchemaMismatch(
                f"header {header!r} does not match {','.join(CSV_HEADER)}"
            )
        records = []
        for rownum, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise MalformedRow(rownum, "*", f"expected {len(CSV_HEADER)} fields, got {len(row)}")
            values = {}
            for col, raw in zip(CSV_HEADER, row):
                raw = raw.strip()
                if raw == "":
                    values[col] = None
                    continue
                try:
                    values[col] = _PARSERS[col](raw)
                except (ValueError, TypeError) as exc:
                    raise MalformedRow(rownum, col, str(exc)) from None
            records.append(EvaluationRecord(**values))
    return records


def _format_field(col: str, value) -> str:
    if value is None:
        return ""
    if col == "date":
        return value.strftime("%m/01/%Y")
    if col == "training":
        return "1" if value else "0"
    if col in ("customer_service", "business_needs", "adherence", "aux"):
        return f"{value:.4f}"
    if col in ("agent_id", "product_id"):
        return str(int(value))
    # acw_seconds / attendance: integers in spirit, emit without decimals
    if float(value) == int(value):
        return str(int(value))
    return f"{value:.4f}"


def write_csv(records: Iterable[EvaluationRecord], path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow(
                [_format_field(c, getattr(rec, _FIELD_BY_COL[c])) for c in CSV_HEADER]
            )


_FIELD_BY_COL = {c: c for c in CSV_HEADER}


def write_rejection_log(log_entries: Sequence[tuple[int, str]], path) -> None:
    """Emit the rejection log as CSV with header row,reason.

    Row numbers are 1-based positions in the cleaned input list, which
    for data loaded via load_csv equal the 1-based data row numbers of
    the source file.
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "reason"])
        for row, reason in log_entries:
            writer.writerow([row, reason])


# ---------------------------------------------------------------------------
# Cleaning


def _record_rejection(rec: EvaluationRecord, target_kind: EvaluationKind) -> str | None:
    if rec.has_missing():
        return REASON_MISSING
    q = rec.quality(target_kind)
    if not 1.0 <= q <= 5.0:
        return REASON_TARGET_RANGE
    for v in (rec.acw_seconds, rec.adherence, rec.aux, rec.attendance):
        if v < 0:
            return REASON_NEGATIVE_TIME
    return None


def clean(
    records: Sequence[EvaluationRecord],
    target_kind: EvaluationKind,
    split_met: bool = False,
    min_class_size: int = DEFAULT_MIN_CLASS_SIZE,
) -> tuple[list[EvaluationRecord], list[tuple[int, str]]]:
    """Apply the cleaning rules; returns (retained, rejection log).

    Per record, in order: missing values, target quality score outside
    [1, 5], any negative time-management value. Surviving records are
    categorized on the target and whole classes with fewer than
    min_class_size members are dropped. The log holds one (row, reason)
    entry per removal, rows 1-based in input order; retained + rejected
    always partition the input.
    """
    rejections: list[tuple[int, str]] = []
    survivors: list[tuple[int, EvaluationRecord, str]] = []
    for rownum, rec in enumerate(records, start=1):
        reason = _record_rejection(rec, target_kind)
        if reason is not None:
            rejections.append((rownum, reason))
            continue
        label = categorize(rec.quality(target_kind), split_met=split_met).key
        survivors.append((rownum, rec, label))

    census = Counter(label for _, _, label in survivors)
    small = {label for label, count in census.items() if count < min_class_size}
    retained = []
    for rownum, rec, label in survivors:
        if label in small:
            rejections.append((rownum, REASON_SMALL_CLASS))
        else:
            retained.append(rec)
    rejections.sort(key=lambda e: e[0])
    return retained, rejections


# ---------------------------------------------------------------------------
# Scaling


_PER_PRODUCT_ATTRS = ("acw", "adherence", "aux")

_RAW_GETTERS = {
    "agent": lambda r: float(r.agent_id),
    "product": lambda r: float(r.product_id),
    "acw": lambda r: float(r.acw_seconds),
    "adherence": lambda r: float(r.adherence),
    "aux": lambda r: float(r.aux),
    "attendance": lambda r: float(r.attendance),
}


def _months_between(origin: _date, d: _date) -> int:
    return (d.year - origin.year) * 12 + (d.month - origin.month)


def fit_scaling(records: Sequence[EvaluationRecord]) -> ScalingParams:
    """Compute min-max ranges: per-product for acw/adherence/aux, global
    for agent, product and attendance, plus the observed month span."""
    records = list(records)
    if not records:
        raise EmptyDataset("cannot fit scaling on an empty dataset")

    per_product: dict = {}
    for rec in records:
        attrs = per_product.setdefault(rec.product_id, {a: [np.inf, -np.inf] for a in _PER_PRODUCT_ATTRS})
        for a in _PER_PRODUCT_ATTRS:
            v = _RAW_GETTERS[a](rec)
            if v < attrs[a][0]:
                attrs[a][0] = v
            if v > attrs[a][1]:
                attrs[a][1] = v
    per_product = {
        pid: {a: (lo, hi) for a, (lo, hi) in attrs.items()}
        for pid, attrs in per_product.items()
    }

    global_ranges = {}
    for a in ("agent", "product", "attendance") + _PER_PRODUCT_ATTRS:
        vals = [_RAW_GETTERS[a](r) for r in records]
        global_ranges[a] = (min(vals), max(vals))

    months = [r.date for r in records]
    origin = min(months)
    span = _months_between(origin, max(months))
    params = ScalingParams(
        per_product=per_product,
        global_ranges=global_ranges,
        date_origin=origin,
        date_span_months=span,
    )
    for pid, attrs in per_product.items():
        for a, (lo, hi) in attrs.items():
            if lo == hi:
                log.debug("degenerate %s range for product %s (min == max == %s)", a, pid, lo)
    return params


def _scale(value: float, lo: float, hi: float) -> float:
    if hi == lo:
        return 0.5
    x = (value - lo) / (hi - lo)
    if x < 0.0:
        log.debug("clamping %-.6g below fitted range [%s, %s]", value, lo, hi)
        return 0.0
    if x > 1.0:
        log.debug("clamping %-.6g above fitted range [%s, %s]", value, lo, hi)
        return 1.0
    return x


def apply_scaling(record: EvaluationRecord, params: ScalingParams) -> np.ndarray:
    """Scale one record into the 8-attribute [0, 1] feature vector.

    A product unseen at fit time falls back to the global ranges for the
    per-product attributes (with a warning); values outside the fitted
    range clamp to the interval ends.
    """
    product_attrs = params.per_product.get(record.product_id)
    if product_attrs is None:
        log.warning(
            "product %s unseen at scaling fit time; using global ranges",
            record.product_id,
        )
        product_attrs = {a: params.global_ranges[a] for a in _PER_PRODUCT_ATTRS}

    out = np.empty(len(ATTRIBUTES))
    for i, a in enumerate(ATTRIBUTES):
        if a == "date":
            m = _months_between(params.date_origin, record.date)
            if params.date_span_months == 0:
                out[i] = 0.5
            else:
                out[i] = _scale(float(m), 0.0, float(params.date_span_months))
        elif a == "training":
            out[i] = 1.0 if record.training else 0.0
        elif a in _PER_PRODUCT_ATTRS:
            lo, hi = product_attrs[a]
            out[i] = _scale(_RAW_GETTERS[a](record), lo, hi)
        else:
            lo, hi = params.global_ranges[a]
            out[i] = _scale(_RAW_GETTERS[a](record), lo, hi)
    return out


def apply_scaling_many(
    records: Sequence[EvaluationRecord], params: ScalingParams
) -> np.ndarray:
    return np.array([apply_scaling(r, params) for r in records])


# ---------------------------------------------------------------------------
# Splitting


def _half_up_share(n: int, ratio: Fraction) -> int:
    q = n * ratio
    return int(q + Fraction(1, 2)) if q >= 0 else 0


def split_sizes(n: int, ratios: Sequence[float]) -> tuple[int, ...]:
    """Part sizes for an n-record split: each but the last share rounds
    half-up, the last takes the remainder (14671 -> 7336/3668/3667)."""
    fracs = [Fraction(r).limit_denominator(10**9) for r in ratios]
    if any(f < 0 for f in fracs) or sum(fracs) != 1:
        raise BadRatios(f"ratios must be nonnegative and sum to 1, got {ratios}")
    sizes = []
    remaining = n
    for f in fracs[:-1]:
        s = min(_half_up_share(n, f), remaining)
        sizes.append(s)
        remaining -= s
    sizes.append(remaining)
    return tuple(sizes)


def split_indices(
    n: int, ratios: Sequence[float] = (0.50, 0.25, 0.25), seed: int = 0
) -> tuple[np.ndarray, ...]:
    """Seeded uniform partition of range(n) into len(ratios) index arrays."""
    sizes = split_sizes(n, ratios)
    perm = np.random.default_rng(seed).permutation(n)
    parts = []
    at = 0
    for s in sizes:
        parts.append(np.sort(perm[at : at + s]))
        at += s
    return tuple(parts)


def split(dataset: CleanDataset, ratios=(0.50, 0.25, 0.25), seed: int = 0):
    """Partition a CleanDataset into (train, test, validation) index arrays.

    Deterministic given seed; sizes depend only on (n, ratios).
    """
    if len(dataset) == 0:
        raise EmptyDataset("cannot split an empty dataset")
    return split_indices(len(dataset), ratios, seed)


# ---------------------------------------------------------------------------
# Assembly


def build_dataset(
    records: Sequence[EvaluationRecord],
    target_kind: EvaluationKind,
    split_met: bool = False,
    min_class_size: int = DEFAULT_MIN_CLASS_SIZE,
) -> tuple[CleanDataset, list[tuple[int, str]]]:
    """clean + categorize + fit/apply all-data scaling in one step."""
    retained, rejections = clean(
        records, target_kind, split_met=split_met, min_class_size=min_class_size
    )
    if not retained:
        raise EmptyDataset("no records survived cleaning")
    labels = tuple(
        categorize(r.quality(target_kind), split_met=split_met).key for r in retained
    )
    scaling = fit_scaling(retained)
    features = apply_scaling_many(retained, scaling)
    ds = CleanDataset(
        records=tuple(retained),
        labels=labels,
        features=features,
        scaling=scaling,
        target_kind=target_kind,
        split_met=split_met,
        class_census=dict(Counter(labels)),
    )
    return ds, rejections
