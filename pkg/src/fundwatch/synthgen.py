"""Synthetic fund-transaction populations with ground-truth laundering injections.

Background customers subscribe at lognormal amounts and occasionally redeem a
small fraction of their holdings, so their in/out and drawdown ratios stay
low. Two benign minorities keep the dataset from being trivially separable:
"heavy redeemers" make larger withdrawals far from any subscription, and
"rebalancers" subscribe and then pull back a moderate share of it within a
few days, which populates the screening region below the injected corner.
Holdings are updated with every flow, so the shares value stamped on each
record stays coherent with the subscription/redemption history.

Two injected patterns carry ground truth:

    RapidInOut         a large subscription followed within a few days by a
                       redemption of 90-99% of it.
    ExchangeRoundTrip  a same-day redeem-everything/reinvest pair across two
                       sub-funds of the same fund; looks maximally suspicious
                       until an analyst marks it as an exchange.

Generation is fully deterministic under the population seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, timedelta
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .ingest import CustomerType, Direction, RawTransactionRecord


class PatternKind(str, Enum):
    RAPID_IN_OUT = "RapidInOut"
    EXCHANGE_ROUND_TRIP = "ExchangeRoundTrip"


@dataclass(frozen=True)
class InjectionSpec:
    kind: PatternKind
    count: int


@dataclass(frozen=True)
class PopulationSpec:
    n_customers: int
    n_funds: int = 3
    start: date = date(2000, 1, 1)
    end: date = date(2000, 12, 31)
    mean_subscriptions: float = 5.0  # per customer over the whole range
    mean_redemptions: float = 2.0
    amount_mu: float = 6.0  # ln-space location/scale of subscription amounts
    amount_sigma: float = 1.0
    initial_holdings_mu: float = 8.5
    initial_holdings_sigma: float = 0.8
    heavy_redeemer_fraction: float = 0.05
    rebalancer_fraction: float = 0.04
    injections: tuple[InjectionSpec, ...] = ()
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_customers < 0:
            raise ConfigurationError("n_customers must be >= 0")
        if self.n_funds < 1:
            raise ConfigurationError("n_funds must be >= 1")
        if self.end < self.start:
            raise ConfigurationError("date range is reversed")
        total = sum(i.count for i in self.injections)
        if total > self.n_customers:
            raise ConfigurationError(
                f"{total} injections exceed {self.n_customers} customers"
            )


@dataclass(frozen=True)
class InjectedPattern:
    kind: PatternKind
    dates: tuple[date, ...]  # the affected days, earliest first


@dataclass
class GroundTruth:
    entries: dict[str, InjectedPattern] = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            cust: {"kind": pat.kind.value, "dates": [d.isoformat() for d in pat.dates]}
            for cust, pat in sorted(self.entries.items())
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        doc = json.loads(text)
        entries = {
            cust: InjectedPattern(
                kind=PatternKind(item["kind"]),
                dates=tuple(date.fromisoformat(d) for d in item["dates"]),
            )
            for cust, item in doc.items()
        }
        return cls(entries=entries)


# background events within this many days of an injection are suppressed, so
# the injected window's lookback max is the injected subscription itself
_QUIET_DAYS = 10
_MIN_INJECT_AMOUNT = 500.0


def generate(spec: PopulationSpec) -> tuple[list[RawTransactionRecord], GroundTruth]:
    """Generate a population and its injection ground truth, deterministically."""
    rng = np.random.default_rng(spec.rng_seed)
    span = (spec.end - spec.start).days + 1
    funds = [f"F{i + 1:02d}" for i in range(spec.n_funds)]
    truth = GroundTruth()

    total_injected = sum(i.count for i in spec.injections)
    if total_injected and span < 2 * _QUIET_DAYS + 10:
        raise ConfigurationError("date range too short to place injections")
    injected_kind: dict[int, PatternKind] = {}
    if total_injected:
        chosen = rng.choice(spec.n_customers, size=total_injected, replace=False)
        at = 0
        for inj in spec.injections:
            for idx in chosen[at : at + inj.count]:
                injected_kind[int(idx)] = inj.kind
            at += inj.count

    type_draw = rng.random(spec.n_customers) if spec.n_customers else np.empty(0)
    records: list[RawTransactionRecord] = []

    for ci in range(spec.n_customers):
        customer_id = f"C{ci + 1:05d}"
        fund = funds[int(rng.integers(len(funds)))]
        if type_draw[ci] < 0.70:
            ctype = CustomerType.INDIVIDUAL
        elif type_draw[ci] < 0.95:
            ctype = CustomerType.CORPORATE
        else:
            ctype = CustomerType.JOINT
        holdings = float(rng.lognormal(spec.initial_holdings_mu, spec.initial_holdings_sigma))
        heavy = bool(rng.random() < spec.heavy_redeemer_fraction)
        kind = injected_kind.get(ci)

        n_subs = int(rng.poisson(spec.mean_subscriptions))
        sub_days = rng.integers(0, span, size=n_subs)
        sub_amounts = rng.lognormal(spec.amount_mu, spec.amount_sigma, size=n_subs)
        n_reds = 0 if kind is PatternKind.EXCHANGE_ROUND_TRIP else int(
            rng.poisson(spec.mean_redemptions)
        )
        red_days = rng.integers(0, span, size=n_reds)
        if heavy:
            red_fracs = rng.uniform(0.25, 0.45, size=n_reds)
        else:
            red_fracs = rng.uniform(0.01, 0.15, size=n_reds)

        # (day_offset, tie_order, op, payload, pair_slot)
        events: list[tuple[int, int, str, float, int]] = []
        for d, a in zip(sub_days, sub_amounts):
            events.append((int(d), 0, "sub", float(a), -1))
        for d, f in zip(red_days, red_fracs):
            events.append((int(d), 0, "red", float(f), -1))

        # a subscription/redemption pair linked by a slot; moderate out_frac is
        # the benign rebalancer shape, 0.90+ is the injected rapid-in-out
        def plan_pair(day: int, size_ratio: float, out_frac: float, gap: int, slot: int) -> None:
            events.append((day, 1, "pair_sub", size_ratio, slot))
            events.append((day + gap, 2, "pair_red", out_frac, slot))

        rebalancer = kind is None and bool(rng.random() < spec.rebalancer_fraction)
        next_slot = 0
        if rebalancer and span > 8:
            n_pairs = 1 + int(rng.random() < 0.3)
            for _ in range(n_pairs):
                plan_pair(
                    int(rng.integers(0, span - 5)),
                    float(rng.uniform(1.0, 2.5)),
                    float(rng.uniform(0.35, 0.75)),
                    int(rng.integers(0, 4)),
                    next_slot,
                )
                next_slot += 1

        inject_day = -1
        inject_dates: tuple[date, ...] = ()
        if kind is PatternKind.RAPID_IN_OUT:
            inject_day = int(rng.integers(_QUIET_DAYS, span - _QUIET_DAYS))
            size_ratio = float(rng.uniform(0.8, 2.5))
            out_frac = float(rng.uniform(0.90, 0.99))
            gap = int(rng.integers(0, 4))
            events = [e for e in events if abs(e[0] - inject_day) > _QUIET_DAYS]
            plan_pair(inject_day, size_ratio, out_frac, gap, next_slot)
            next_slot += 1
            inject_dates = (
                spec.start + timedelta(days=inject_day),
                spec.start + timedelta(days=inject_day + gap),
            )
        elif kind is PatternKind.EXCHANGE_ROUND_TRIP:
            inject_day = int(rng.integers(_QUIET_DAYS, span - _QUIET_DAYS))
            out_frac = float(rng.uniform(0.90, 1.0))
            events = [e for e in events if abs(e[0] - inject_day) > _QUIET_DAYS]
            events.append((inject_day, 1, "ex_out", out_frac, -1))
            events.append((inject_day, 2, "ex_in", 0.0, -1))
            inject_dates = (spec.start + timedelta(days=inject_day),)

        if kind is not None:
            truth.entries[customer_id] = InjectedPattern(kind=kind, dates=inject_dates)

        events.sort(key=lambda e: (e[0], e[1]))
        pair_amounts: dict[int, float] = {}  # slot -> the pair's subscription S
        exchange_amount = 0.0
        for day_offset, _, op, payload, slot in events:
            when = spec.start + timedelta(days=day_offset)
            if op == "sub":
                amount = round(payload, 2)
                if amount <= 0:
                    continue
                holdings += amount
                records.append(_rec(customer_id, fund, "S1", when, Direction.SUBSCRIPTION, amount, holdings, ctype))
            elif op == "red":
                amount = round(payload * holdings, 2)
                if amount <= 0:
                    continue
                holdings = max(holdings - amount, 0.0)
                records.append(_rec(customer_id, fund, "S1", when, Direction.REDEMPTION, amount, holdings, ctype))
            elif op == "pair_sub":
                amount = round(max(payload * holdings, _MIN_INJECT_AMOUNT), 2)
                pair_amounts[slot] = amount
                holdings += amount
                records.append(_rec(customer_id, fund, "S1", when, Direction.SUBSCRIPTION, amount, holdings, ctype))
            elif op == "pair_red":
                amount = round(min(payload * pair_amounts.get(slot, 0.0), holdings), 2)
                if amount <= 0:
                    continue
                holdings -= amount
                records.append(_rec(customer_id, fund, "S1", when, Direction.REDEMPTION, amount, holdings, ctype))
            elif op == "ex_out":
                amount = round(max(payload * holdings, _MIN_INJECT_AMOUNT), 2)
                holdings = max(holdings, amount)  # guard against an emptied position
                exchange_amount = amount
                holdings -= amount
                records.append(_rec(customer_id, fund, "S1", when, Direction.EXCHANGE_OUT, amount, holdings, ctype))
            else:  # ex_in
                amount = exchange_amount
                holdings += amount
                records.append(_rec(customer_id, fund, "S2", when, Direction.EXCHANGE_IN, amount, holdings, ctype))

    return records, truth


def _rec(
    customer_id: str,
    fund_id: str,
    sub_fund: str,
    when: date,
    direction: Direction,
    amount: float,
    holdings: float,
    ctype: CustomerType,
) -> RawTransactionRecord:
    return RawTransactionRecord(
        customer_id=customer_id,
        fund_id=fund_id,
        sub_fund_id=f"{fund_id}-{sub_fund}",
        date=when,
        direction=direction,
        amount=amount,
        shares_value=round(holdings, 2),
        customer_type=ctype,
    )


def write_ground_truth(truth: GroundTruth, path: str | Path) -> None:
    Path(path).write_text(truth.to_json())


def load_ground_truth(path: str | Path) -> GroundTruth:
    return GroundTruth.from_json(Path(path).read_text())
