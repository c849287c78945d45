"""Period aggregation and the suspicion parameters delta1 and delta2.

Transactions are bucketed per customer x fund into calendar periods at a
chosen granularity, producing (alpha, beta, theta) totals:

    alpha  money subscribed into the fund during the period (SUB + EXIN)
    beta   money redeemed out of the fund during the period (RED + EXOUT)
    theta  value of the customer's shares as of the period's end

From those, two ratios in [0, 1]:

    delta1  how closely money that came in went straight back out.
            Simple form: min(alpha, beta) / max(alpha, beta) within one
            period. Lookback form: the redemption of period j is compared
            against the largest subscription seen in periods [j-k, j],
            because the in-leg of a wash often lands a few periods earlier.
    delta2  the redemption as a fraction of holdings; near 1 means a
            near-total withdrawal.

Zero conventions: a period with no redemption signals nothing (both ratios
are 0), and an all-zero subscription window yields delta1 = 0. A redemption
exceeding recorded holdings clamps delta2 to 1 and flags the point as a
data-quality suspect.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, timedelta
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .errors import InputError
from .ingest import Direction, RawTransactionRecord


class PeriodGranularity(str, Enum):
    DAY = "Day"
    WEEK = "Week"
    MONTH = "Month"
    QUARTER = "Quarter"
    HALF_YEAR = "HalfYear"
    YEAR = "Year"


@dataclass(frozen=True)
class PeriodAggregate:
    """Per customer x fund x period transaction totals at one granularity."""

    customer_id: str
    fund_id: str
    granularity: PeriodGranularity
    period_index: int
    alpha: float
    beta: float
    theta: float

    @property
    def key(self) -> str:
        return f"{self.customer_id}|{self.fund_id}|{self.granularity.value}|{self.period_index}"


@dataclass(frozen=True)
class DeltaPoint:
    """The (delta1, delta2) feature pair for one aggregate."""

    aggregate: PeriodAggregate
    delta1: float
    delta2: float
    lookback_k: int
    data_quality_flag: bool  # set when delta2 was clamped

    @property
    def point_id(self) -> str:
        return self.aggregate.key


def period_index(day: date, granularity: PeriodGranularity) -> int:
    """Ordinal of the period containing `day` on a global timeline.

    Later dates never map to smaller indices, and consecutive periods get
    consecutive integers, which makes lookback windows plain index ranges.
    Weeks are ISO weeks; the other granularities use calendar boundaries.
    """
    if granularity is PeriodGranularity.DAY:
        return day.toordinal()
    if granularity is PeriodGranularity.WEEK:
        # ordinal of the week's Monday; Mondays are == 1 (mod 7) proleptically
        return (day.toordinal() - (day.isoweekday() - 1)) // 7
    if granularity is PeriodGranularity.MONTH:
        return day.year * 12 + day.month - 1
    if granularity is PeriodGranularity.QUARTER:
        return day.year * 4 + (day.month - 1) // 3
    if granularity is PeriodGranularity.HALF_YEAR:
        return day.year * 2 + (day.month - 1) // 6
    return day.year


def period_bounds(index: int, granularity: PeriodGranularity) -> tuple[date, date]:
    """Inclusive (first_day, last_day) of the period with this index."""
    if granularity is PeriodGranularity.DAY:
        d = date.fromordinal(index)
        return d, d
    if granularity is PeriodGranularity.WEEK:
        monday = date.fromordinal(index * 7 + 1)
        return monday, monday + timedelta(days=6)
    if granularity is PeriodGranularity.MONTH:
        start = date(index // 12, index % 12 + 1, 1)
        return start, _month_end(start.year, start.month)
    if granularity is PeriodGranularity.QUARTER:
        year, q = index // 4, index % 4
        start = date(year, q * 3 + 1, 1)
        return start, _month_end(year, q * 3 + 3)
    if granularity is PeriodGranularity.HALF_YEAR:
        year, h = index // 2, index % 2
        start = date(year, h * 6 + 1, 1)
        return start, _month_end(year, h * 6 + 6)
    return date(index, 1, 1), date(index, 12, 31)


def period_label(index: int, granularity: PeriodGranularity) -> str:
    """Human-readable period name, e.g. 2000-W30, 2000-07, 2000-Q3."""
    if granularity is PeriodGranularity.DAY:
        return date.fromordinal(index).isoformat()
    if granularity is PeriodGranularity.WEEK:
        monday = date.fromordinal(index * 7 + 1)
        iso = monday.isocalendar()
        return f"{iso[0]}-W{iso[1]:02d}"
    if granularity is PeriodGranularity.MONTH:
        return f"{index // 12}-{index % 12 + 1:02d}"
    if granularity is PeriodGranularity.QUARTER:
        return f"{index // 4}-Q{index % 4 + 1}"
    if granularity is PeriodGranularity.HALF_YEAR:
        return f"{index // 2}-H{index % 2 + 1}"
    return str(index)


def _month_end(year: int, month: int) -> date:
    if month == 12:
        return date(year, 12, 31)
    return date(year, month + 1, 1) - timedelta(days=1)


_INFLOW = (Direction.SUBSCRIPTION, Direction.EXCHANGE_IN)


def bucketize(
    records: Iterable[RawTransactionRecord], granularity: PeriodGranularity
) -> list[PeriodAggregate]:
    """Aggregate transactions per (customer, fund, period) at one granularity.

    Exchange legs count as flows: EXIN adds to alpha, EXOUT to beta. theta is
    taken from the shares_value of the latest record dated at or before the
    period's end (ties on date resolved by input order); a (customer, fund)
    series with no shares_value known by then gets theta = 0, which downstream
    clamps and flags rather than hiding.
    """
    flows: dict[tuple[str, str], dict[int, list[float]]] = {}
    shares: dict[tuple[str, str], list[tuple[date, int, float]]] = {}
    for order, rec in enumerate(records):
        key = (rec.customer_id, rec.fund_id)
        idx = period_index(rec.date, granularity)
        per = flows.setdefault(key, {})
        cell = per.get(idx)
        if cell is None:
            cell = per[idx] = [0.0, 0.0]
        if rec.direction in _INFLOW:
            cell[0] += rec.amount
        else:
            cell[1] += rec.amount
        if rec.shares_value is not None:
            shares.setdefault(key, []).append((rec.date, order, rec.shares_value))

    aggregates: list[PeriodAggregate] = []
    for key in sorted(flows):
        customer_id, fund_id = key
        timeline = sorted(shares.get(key, ()))
        pos = 0
        theta = 0.0
        for idx in sorted(flows[key]):
            _, period_end = period_bounds(idx, granularity)
            while pos < len(timeline) and timeline[pos][0] <= period_end:
                theta = timeline[pos][2]
                pos += 1
            alpha, beta = flows[key][idx]
            aggregates.append(
                PeriodAggregate(
                    customer_id=customer_id,
                    fund_id=fund_id,
                    granularity=granularity,
                    period_index=idx,
                    alpha=alpha,
                    beta=beta,
                    theta=theta,
                )
            )
    return aggregates


def delta1_simple(alpha: float, beta: float) -> float:
    """Within-period in/out closeness ratio; 0 when either side is absent."""
    if alpha <= 0.0 or beta <= 0.0:
        return 0.0
    return alpha / beta if alpha <= beta else beta / alpha


def delta1_lookback(
    aggregates: Sequence[PeriodAggregate], j: int, k: int
) -> float:
    """Lookback in/out ratio at period j over one customer x fund series.

    The redemption total of period j is compared against the maximum
    subscription total across periods [j-k, j]; missing periods contribute
    zero and the window clamps at the start of the series.
    """
    if k < 1:
        raise InputError("lookback k must be >= 1; use delta1_simple for k = 0")
    beta_j = 0.0
    alpha_max = 0.0
    for agg in aggregates:
        if agg.period_index > j:
            break
        if agg.period_index == j:
            beta_j = agg.beta
        if j - k <= agg.period_index <= j and agg.alpha > alpha_max:
            alpha_max = agg.alpha
    return delta1_simple(alpha_max, beta_j)


def delta2(beta: float, theta: float) -> tuple[float, bool]:
    """Redemption as a fraction of holdings, clamped to 1 and flagged if above.

    Returns (value, clamped). A zero-redemption period yields (0, False); a
    positive redemption against unknown or zero holdings yields (1, True),
    marking the point as a data-quality suspect rather than dropping it.
    """
    if beta <= 0.0:
        return 0.0, False
    if theta <= 0.0:
        return 1.0, True
    ratio = beta / theta
    if ratio > 1.0:
        return 1.0, True
    return ratio, False


def compute_points(aggregates: Sequence[PeriodAggregate], k: int) -> list[DeltaPoint]:
    """Compute one DeltaPoint per aggregate at the lookback depth k.

    k = 0 selects the within-period ratio; k >= 1 the lookback form. All
    aggregates must share one granularity. Deterministic: same inputs give
    identical outputs.
    """
    if k < 0:
        raise InputError("lookback k must be >= 0")
    granularities = {a.granularity for a in aggregates}
    if len(granularities) > 1:
        raise InputError(f"aggregates span multiple granularities: {sorted(g.value for g in granularities)}")

    series: dict[tuple[str, str], list[PeriodAggregate]] = {}
    for agg in aggregates:
        series.setdefault((agg.customer_id, agg.fund_id), []).append(agg)
    for group in series.values():
        group.sort(key=lambda a: a.period_index)

    points: list[DeltaPoint] = []
    for agg in aggregates:
        if k >= 1:
            d1 = delta1_lookback(series[(agg.customer_id, agg.fund_id)], agg.period_index, k)
        else:
            d1 = delta1_simple(agg.alpha, agg.beta)
        d2, clamped = delta2(agg.beta, agg.theta)
        points.append(
            DeltaPoint(
                aggregate=agg,
                delta1=d1,
                delta2=d2,
                lookback_k=k,
                data_quality_flag=clamped,
            )
        )
    return points


def display_round(value: float, digits: int = 2) -> float:
    """Presentation rounding (half-even). Never feeds back into computation."""
    return round(value, digits)


POINT_CSV_COLUMNS = (
    "customer_id",
    "fund_id",
    "granularity",
    "period_index",
    "alpha",
    "beta",
    "theta",
    "delta1",
    "delta2",
    "lookback_k",
    "flag",
)


def write_points_csv(
    points: Iterable[DeltaPoint],
    destination: str | Path | TextIO,
    screened: set[str] | None = None,
) -> None:
    """Export points in the clustering input format, full float precision.

    When `screened` is given (a set of point_ids), a trailing boolean column
    records the screening verdict for each point.
    """
    own = isinstance(destination, (str, Path))
    out: TextIO = open(destination, "w", newline="") if own else destination  # type: ignore[arg-type]
    try:
        writer = csv.writer(out)
        header = list(POINT_CSV_COLUMNS)
        if screened is not None:
            header.append("screened")
        writer.writerow(header)
        for p in points:
            a = p.aggregate
            row = [
                a.customer_id,
                a.fund_id,
                a.granularity.value,
                a.period_index,
                repr(a.alpha),
                repr(a.beta),
                repr(a.theta),
                repr(p.delta1),
                repr(p.delta2),
                p.lookback_k,
                "true" if p.data_quality_flag else "false",
            ]
            if screened is not None:
                row.append("true" if p.point_id in screened else "false")
            writer.writerow(row)
    finally:
        if own:
            out.close()


def read_points_csv(
    source: str | Path | TextIO,
) -> tuple[list[DeltaPoint], set[str] | None]:
    """Read a points CSV back; returns (points, screened_ids or None)."""
    own = isinstance(source, (str, Path))
    handle: TextIO = open(source, "r", newline="") if own else source  # type: ignore[arg-type]
    try:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise InputError("empty points file")
        base = list(POINT_CSV_COLUMNS)
        has_screened = header == base + ["screened"]
        if not has_screened and header != base:
            raise InputError(f"bad points header: {','.join(header)}")
        points: list[DeltaPoint] = []
        screened: set[str] = set()
        for row in reader:
            if not row:
                continue
            agg = PeriodAggregate(
                customer_id=row[0],
                fund_id=row[1],
                granularity=PeriodGranularity(row[2]),
                period_index=int(row[3]),
                alpha=float(row[4]),
                beta=float(row[5]),
                theta=float(row[6]),
            )
            point = DeltaPoint(
                aggregate=agg,
                delta1=float(row[7]),
                delta2=float(row[8]),
                lookback_k=int(row[9]),
                data_quality_flag=row[10] == "true",
            )
            points.append(point)
            if has_screened and row[11] == "true":
                screened.add(point.point_id)
        return points, (screened if has_screened else None)
    finally:
        if own:
            handle.close()
