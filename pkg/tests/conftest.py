from __future__ import annotations

from datetime import date

import pytest

import fundwatch as fw


def tx(
    customer: str,
    fund: str,
    when: date,
    direction: fw.Direction,
    amount: float,
    shares: float | None = None,
    ctype: fw.CustomerType = fw.CustomerType.INDIVIDUAL,
    sub_fund: str | None = None,
) -> fw.RawTransactionRecord:
    return fw.RawTransactionRecord(
        customer_id=customer,
        fund_id=fund,
        sub_fund_id=sub_fund,
        date=when,
        direction=direction,
        amount=float(amount),
        shares_value=None if shares is None else float(shares),
        customer_type=ctype,
    )


def point(
    d1: float,
    d2: float,
    customer: str = "C1",
    fund: str = "F1",
    gran: fw.PeriodGranularity = fw.PeriodGranularity.DAY,
    idx: int = 730000,
    alpha: float = 0.0,
    beta: float = 1.0,
    theta: float = 1.0,
    k: int = 0,
    flag: bool = False,
) -> fw.DeltaPoint:
    agg = fw.PeriodAggregate(customer, fund, gran, idx, alpha, beta, theta)
    return fw.DeltaPoint(
        aggregate=agg, delta1=float(d1), delta2=float(d2), lookback_k=k, data_quality_flag=flag
    )


def week_day(year: int, week: int, weekday: int = 2) -> date:
    """A date inside the given ISO week (weekday 1=Monday..7=Sunday)."""
    return date.fromisocalendar(year, week, weekday)


# The worked weekly example: per row one subscription, one redemption carrying
# the investor's share value for that week.
TABLE1_ROWS = [
    # (customer, iso_week, subscription, redemption, shares_value)
    ("A01", 30, 100.0, 90.0, 110.0),
    ("A02", 30, 50.0, 20.0, 300.0),
    ("A01", 33, 100.0, 90.0, 120.0),
    ("A02", 37, 100.0, 80.0, 380.0),
    ("A03", 37, 500.0, 400.0, 900.0),
    ("A04", 50, 700.0, 300.0, 1500.0),
]

# Displayed (delta1, delta2) per row; the source truncates some ratios, so
# checks against these use a +/- 0.01 band.
TABLE1_DISPLAYED = [
    (0.9, 0.82),
    (0.4, 0.06),
    (0.9, 0.75),
    (0.8, 0.21),
    (0.8, 0.44),
    (0.43, 0.2),
]


@pytest.fixture
def table1_records() -> list[fw.RawTransactionRecord]:
    records = []
    for customer, week, sub, red, shares in TABLE1_ROWS:
        records.append(tx(customer, "FA", week_day(2000, week, 2), fw.Direction.SUBSCRIPTION, sub))
        records.append(
            tx(customer, "FA", week_day(2000, week, 4), fw.Direction.REDEMPTION, red, shares=shares)
        )
    return records


SYNTH_SPEC = fw.PopulationSpec(
    n_customers=1000,
    injections=(
        fw.InjectionSpec(fw.PatternKind.RAPID_IN_OUT, 10),
        fw.InjectionSpec(fw.PatternKind.EXCHANGE_ROUND_TRIP, 5),
    ),
    rng_seed=7,
)


@pytest.fixture(scope="session")
def synth_population() -> tuple[list[fw.RawTransactionRecord], fw.GroundTruth]:
    records, truth = fw.generate(SYNTH_SPEC)
    records, _ = fw.clean_mapping_errors(records)
    return records, truth


@pytest.fixture(scope="session")
def synth_run(tmp_path_factory, synth_population):
    """A completed batch run over the synthetic fixture; treat as read-only."""
    records, truth = synth_population
    store = fw.RunStore(tmp_path_factory.mktemp("runs"))
    profile = fw.RunProfile(created_at="2001-01-01T00:00:00Z")
    run_id = fw.run_batch(records, profile, store, run_id="base")
    return store, run_id, truth
