"""CSV ingestion: parse, validate, deduplicate and partition raw fund transactions.

This is the IO edge of the pipeline. Everything downstream works on clean
in-memory records, so all rejection accounting happens here and nothing is
ever dropped silently: every discarded row is counted, given a reason, and
(via the CLI) written to a rejection sidecar for audit.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from pathlib import Path
from typing import BinaryIO, Iterable, TextIO

from .errors import InputError

CSV_COLUMNS = (
    "customer_id",
    "fund_id",
    "sub_fund_id",
    "date",
    "direction",
    "amount",
    "shares_value",
    "customer_type",
)

REASON_MISSING = "missing field"
REASON_UNPARSABLE = "unparsable value"
REASON_NEGATIVE = "negative amount"
REASON_DUPLICATE = "duplicate"
REASON_ZERO_REDEMPTION = "zero redemption"


class Direction(str, Enum):
    SUBSCRIPTION = "SUB"
    REDEMPTION = "RED"
    EXCHANGE_IN = "EXIN"
    EXCHANGE_OUT = "EXOUT"


class CustomerType(str, Enum):
    INDIVIDUAL = "Individual"
    CORPORATE = "Corporate"
    JOINT = "Joint"


@dataclass(frozen=True)
class RawTransactionRecord:
    """One subscription/redemption/exchange event for a customer in a fund.

    Invariants enforced at parse time:
    - amount >= 0, and strictly > 0 for redemptions
    - date is a real calendar date
    - customer_id, fund_id and customer_type are present
    """

    customer_id: str
    fund_id: str
    sub_fund_id: str | None
    date: date
    direction: Direction
    amount: float
    shares_value: float | None
    customer_type: CustomerType


@dataclass
class CleaningReport:
    """Row accounting for one parse: read = accepted + rejected, always."""

    records_read: int = 0
    records_accepted: int = 0
    records_rejected: int = 0
    rejected_by_reason: dict[str, int] = field(default_factory=dict)
    duplicates_removed: int = 0
    # (1-based physical line number, reason) for the rejection sidecar
    rejections: list[tuple[int, str]] = field(default_factory=list)

    def reject(self, line_number: int, reason: str) -> None:
        self.records_rejected += 1
        self.rejected_by_reason[reason] = self.rejected_by_reason.get(reason, 0) + 1
        self.rejections.append((line_number, reason))


_CUSTOMER_TYPES = {t.value.lower(): t for t in CustomerType}
_DIRECTIONS = {d.value: d for d in Direction}


def _parse_row(row: list[str]) -> RawTransactionRecord | str:
    """Parse one CSV row; returns a record or a rejection reason."""
    if len(row) != len(CSV_COLUMNS):
        return REASON_UNPARSABLE
    customer_id, fund_id, sub_fund_id, date_s, direction_s, amount_s, shares_s, ctype_s = (
        v.strip() for v in row
    )
    if not customer_id or not fund_id or not date_s or not direction_s or not amount_s or not ctype_s:
        return REASON_MISSING

    direction = _DIRECTIONS.get(direction_s.upper())
    if direction is None:
        return REASON_UNPARSABLE
    ctype = _CUSTOMER_TYPES.get(ctype_s.lower())
    if ctype is None:
        return REASON_UNPARSABLE
    try:
        when = date.fromisoformat(date_s)
    except ValueError:
        return REASON_UNPARSABLE
    try:
        amount = float(amount_s)
    except ValueError:
        return REASON_UNPARSABLE
    if amount != amount:  # NaN
        return REASON_UNPARSABLE
    if amount < 0:
        return REASON_NEGATIVE
    if direction is Direction.REDEMPTION and amount == 0:
        return REASON_ZERO_REDEMPTION

    shares_value: float | None = None
    if shares_s:
        try:
            shares_value = float(shares_s)
        except ValueError:
            return REASON_UNPARSABLE
        if shares_value != shares_value:
            return REASON_UNPARSABLE
        if shares_value < 0:
            return REASON_NEGATIVE

    return RawTransactionRecord(
        customer_id=customer_id,
        fund_id=fund_id,
        sub_fund_id=sub_fund_id or None,
        date=when,
        direction=direction,
        amount=amount,
        shares_value=shares_value,
        customer_type=ctype,
    )


def parse_transactions(
    source: BinaryIO | bytes | TextIO,
) -> tuple[list[RawTransactionRecord], CleaningReport]:
    """Parse a transaction CSV stream into validated records plus a report.

    The header row must carry exactly the documented column names. Malformed
    rows are counted per reason and parsing continues; only an unreadable
    source or a wrong header is fatal. Byte-identical repeats of an earlier
    row are rejected as duplicates. Row order is preserved.
    """
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)) or (
        hasattr(source, "read") and isinstance(source.read(0), bytes)
    ):
        try:
            text: TextIO = io.TextIOWrapper(source, encoding="utf-8", newline="")
        except Exception as exc:  # pragma: no cover - defensive
            raise InputError(f"unreadable source: {exc}") from exc
    else:
        text = source

    reader = csv.reader(text)
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("empty input: missing header row")
    except UnicodeDecodeError as exc:
        raise InputError(f"source is not valid UTF-8: {exc}") from exc
    if tuple(h.strip() for h in header) != CSV_COLUMNS:
        raise InputError(
            f"bad header: expected {','.join(CSV_COLUMNS)}, got {','.join(header)}"
        )

    records: list[RawTransactionRecord] = []
    report = CleaningReport()
    seen_rows: set[tuple[str, ...]] = set()
    line_number = 1
    try:
        for row in reader:
            line_number += 1
            if not row:
                continue  # blank trailing lines are not data
            report.records_read += 1
            key = tuple(row)
            if key in seen_rows:
                report.reject(line_number, REASON_DUPLICATE)
                report.duplicates_removed += 1
                continue
            seen_rows.add(key)
            parsed = _parse_row(row)
            if isinstance(parsed, str):
                report.reject(line_number, parsed)
                continue
            report.records_accepted += 1
            records.append(parsed)
    except UnicodeDecodeError as exc:
        raise InputError(f"source is not valid UTF-8: {exc}") from exc
    return records, report


def load_transactions(path: str | Path) -> tuple[list[RawTransactionRecord], CleaningReport]:
    """Parse a transaction CSV file from disk."""
    try:
        handle = open(path, "rb")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    with handle:
        return parse_transactions(handle)


def clean_mapping_errors(
    records: Iterable[RawTransactionRecord],
) -> tuple[list[RawTransactionRecord], int]:
    """Collapse copies of the same transaction that arrived via system snapshots.

    Two records are copies when (customer_id, fund_id, date, direction, amount)
    coincide; the first occurrence wins. Output is sorted by
    (customer_id, fund_id, date), stable within a key, so downstream bucketing
    sees each customer's history in order.
    """
    seen: set[tuple[str, str, date, Direction, float]] = set()
    kept: list[RawTransactionRecord] = []
    removed = 0
    for rec in records:
        key = (rec.customer_id, rec.fund_id, rec.date, rec.direction, rec.amount)
        if key in seen:
            removed += 1
            continue
        seen.add(key)
        kept.append(rec)
    kept.sort(key=lambda r: (r.customer_id, r.fund_id, r.date))
    return kept, removed


def partition_by_customer_type(
    records: Iterable[RawTransactionRecord],
    joint_as: CustomerType = CustomerType.INDIVIDUAL,
) -> dict[CustomerType, list[RawTransactionRecord]]:
    """Split records into Individual and Corporate analysis groups.

    Joint holders behave like individuals and default into that group;
    `joint_as` overrides the grouping.
    """
    if joint_as is CustomerType.JOINT:
        raise InputError("joint_as must be Individual or Corporate")
    out: dict[CustomerType, list[RawTransactionRecord]] = {
        CustomerType.INDIVIDUAL: [],
        CustomerType.CORPORATE: [],
    }
    for rec in records:
        bucket = joint_as if rec.customer_type is CustomerType.JOINT else rec.customer_type
        out[bucket].append(rec)
    return out


def format_amount(value: float) -> str:
    return f"{value:.2f}"


def write_transactions_csv(
    records: Iterable[RawTransactionRecord], destination: str | Path | TextIO
) -> None:
    """Write records in the canonical input CSV format (the gen/ingest wire format)."""
    own = isinstance(destination, (str, Path))
    out: TextIO = open(destination, "w", newline="") if own else destination  # type: ignore[arg-type]
    try:
        writer = csv.writer(out)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.customer_id,
                    r.fund_id,
                    r.sub_fund_id or "",
                    r.date.isoformat(),
                    r.direction.value,
                    format_amount(r.amount),
                    format_amount(r.shares_value) if r.shares_value is not None else "",
                    r.customer_type.value,
                ]
            )
    finally:
        if own:
            out.close()


def write_rejection_sidecar(report: CleaningReport, destination: str | Path | TextIO) -> None:
    """Write the (line_number, reason) audit sidecar for rejected rows."""
    own = isinstance(destination, (str, Path))
    out: TextIO = open(destination, "w", newline="") if own else destination  # type: ignore[arg-type]
    try:
        writer = csv.writer(out)
        writer.writerow(["line_number", "reason"])
        for line_number, reason in report.rejections:
            writer.writerow([line_number, reason])
    finally:
        if own:
            out.close()
