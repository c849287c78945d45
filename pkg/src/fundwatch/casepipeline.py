"""Batch pipeline, investigation scoring, and the append-only run store.

A batch run walks the whole monitoring chain per granularity: bucket the
transactions, compute delta points, screen, cluster the screened set, pick
the suspicious cluster (top of the suspicion ranking unless an expert label
overrides it), assemble a training set and train a scoring network. Every
artifact lands under one run directory:

    runs/<run_id>/
        config.json             profile echo (all seeds and thresholds)
        transactions.csv        cleaned input, for investigations
        points/<gran>.csv       delta points with the screened verdict
        clusters/<gran>.json    centroids, sizes, ranking, assignments
        models/<gran>.json      trained network, bit-exact serialization
        cases.ndjson            scored cases, append-only (latest version wins)
        knowledge.ndjson        append-only event log: configs, labels,
                                trainings, scorings, dispositions

Investigations score one customer x fund at a date across granularities and
combine the per-level degrees into an alert. Exchange dispositions recorded
by analysts are excluded from the positive set on retrain, which is the
refinement loop that whittles alerts down to real cases.

Writers serialize on a root-level file lock; readers go lock-free and
tolerate a torn trailing line in the ndjson logs.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, replace
from datetime import date, datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
from filelock import FileLock, Timeout

from . import classifier, clustering, features, ingest, screening
from .classifier import NetworkConfig, TrainedModel
from .clustering import ClusteringConfig, ClusteringResult
from .errors import (
    InputError,
    NotFoundError,
    RequestError,
    StageError,
    StoreBusyError,
)
from .features import DeltaPoint, PeriodGranularity
from .ingest import RawTransactionRecord
from .screening import ScreeningThresholds


class AlertLevel(str, Enum):
    NONE = "None"
    REVIEW = "Review"
    ALERT = "Alert"


class Disposition(str, Enum):
    OPEN = "Open"
    SUSPICIOUS = "Suspicious"
    CLEARED = "Cleared"
    EXCHANGE = "Exchange"


DEFAULT_GRANULARITIES = (
    PeriodGranularity.DAY,
    PeriodGranularity.WEEK,
    PeriodGranularity.MONTH,
)


@dataclass(frozen=True)
class AlertThresholds:
    alert: float = 0.8
    review: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.review <= self.alert <= 1.0:
            raise InputError("need 0 <= review <= alert <= 1")


@dataclass(frozen=True)
class RunProfile:
    """Everything a batch run depends on; echoing this reproduces the run."""

    granularities: tuple[PeriodGranularity, ...] = DEFAULT_GRANULARITIES
    k: int = 3
    thresholds: ScreeningThresholds = ScreeningThresholds()
    clustering: ClusteringConfig = ClusteringConfig()
    network: NetworkConfig = NetworkConfig()
    negative_rate: float = 0.05
    alerts: AlertThresholds = AlertThresholds()
    suspicious_override: tuple[tuple[PeriodGranularity, int], ...] = ()
    created_at: str = ""

    def __post_init__(self) -> None:
        if not self.granularities:
            raise InputError("at least one granularity required")
        if not 0 <= self.k <= 10:
            raise InputError("k must lie in [0, 10]")

    def to_dict(self) -> dict:
        return {
            "granularities": [g.value for g in self.granularities],
            "k": self.k,
            "thresholds": {"s": self.thresholds.s, "S": self.thresholds.S_upper},
            "clustering": {
                "n_clusters": self.clustering.n_clusters,
                "max_iterations": self.clustering.max_iterations,
                "convergence_tolerance": self.clustering.convergence_tolerance,
                "rng_seed": self.clustering.rng_seed,
                "n_init": self.clustering.n_init,
            },
            "network": {
                "layer_sizes": list(self.network.layer_sizes),
                "training_cycles": self.network.training_cycles,
                "learning_rate": self.network.learning_rate,
                "rng_seed": self.network.rng_seed,
            },
            "negative_rate": self.negative_rate,
            "alerts": {"alert": self.alerts.alert, "review": self.alerts.review},
            "suspicious_override": {g.value: i for g, i in self.suspicious_override},
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunProfile":
        try:
            return cls(
                granularities=tuple(PeriodGranularity(g) for g in doc["granularities"]),
                k=doc["k"],
                thresholds=ScreeningThresholds(doc["thresholds"]["s"], doc["thresholds"]["S"]),
                clustering=ClusteringConfig(**doc["clustering"]),
                network=NetworkConfig(
                    layer_sizes=tuple(doc["network"]["layer_sizes"]),
                    training_cycles=doc["network"]["training_cycles"],
                    learning_rate=doc["network"]["learning_rate"],
                    rng_seed=doc["network"]["rng_seed"],
                ),
                negative_rate=doc["negative_rate"],
                alerts=AlertThresholds(doc["alerts"]["alert"], doc["alerts"]["review"]),
                suspicious_override=tuple(
                    (PeriodGranularity(g), i) for g, i in doc.get("suspicious_override", {}).items()
                ),
                created_at=doc.get("created_at", ""),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad run config: {exc}") from exc


@dataclass
class ScoredCase:
    case_id: str
    run_id: str
    customer_id: str
    fund_id: str
    as_of_date: date
    degrees: dict[PeriodGranularity, float]
    alert_level: AlertLevel
    rationale: list[str]
    disposition: Disposition = Disposition.OPEN
    note: str = ""
    disposed_at: str | None = None

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "run_id": self.run_id,
            "customer_id": self.customer_id,
            "fund_id": self.fund_id,
            "as_of_date": self.as_of_date.isoformat(),
            "degrees": {g.value: d for g, d in self.degrees.items()},
            "alert_level": self.alert_level.value,
            "rationale": self.rationale,
            "disposition": self.disposition.value,
            "note": self.note,
            "disposed_at": self.disposed_at,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScoredCase":
        return cls(
            case_id=doc["case_id"],
            run_id=doc["run_id"],
            customer_id=doc["customer_id"],
            fund_id=doc["fund_id"],
            as_of_date=date.fromisoformat(doc["as_of_date"]),
            degrees={PeriodGranularity(g): d for g, d in doc["degrees"].items()},
            alert_level=AlertLevel(doc["alert_level"]),
            rationale=list(doc["rationale"]),
            disposition=Disposition(doc["disposition"]),
            note=doc.get("note", ""),
            disposed_at=doc.get("disposed_at"),
        )

    @property
    def max_degree(self) -> float:
        return max(self.degrees.values(), default=0.0)


def case_id_for(customer_id: str, fund_id: str, when: date) -> str:
    raw = f"{customer_id}\x1f{fund_id}\x1f{when.isoformat()}"
    return hashlib.sha1(raw.encode()).hexdigest()[:16]


def combine_alert(
    degrees: dict[PeriodGranularity, float], thresholds: AlertThresholds = AlertThresholds()
) -> tuple[AlertLevel, list[str]]:
    """Fixed-threshold combiner over per-granularity degrees.

    Alert if any degree clears the alert threshold, Review if any clears the
    review threshold, else None; the rationale names every triggering level.
    Transparent by design: an auditor can recompute the level from the stored
    degrees.
    """
    if not degrees:
        return AlertLevel.NONE, ["no activity"]
    alerts = [(g, d) for g, d in degrees.items() if d >= thresholds.alert]
    if alerts:
        return AlertLevel.ALERT, [
            f"{g.value} degree {d:.4f} >= alert threshold {thresholds.alert}" for g, d in alerts
        ]
    reviews = [(g, d) for g, d in degrees.items() if d >= thresholds.review]
    if reviews:
        return AlertLevel.REVIEW, [
            f"{g.value} degree {d:.4f} >= review threshold {thresholds.review}" for g, d in reviews
        ]
    return AlertLevel.NONE, [f"no degree reached review threshold {thresholds.review}"]


def _utcnow() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


class RunStore:
    """Directory-backed run store: JSON artifacts plus append-only ndjson logs."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = FileLock(str(self.root / ".writer.lock"))
        self._tx_cache: dict[str, tuple[float, list[RawTransactionRecord]]] = {}

    # -- locking ---------------------------------------------------------

    def writer_lock(self, block: bool = True, timeout: float = 60.0) -> FileLock:
        """Single-writer lock, acquired; block=False raises StoreBusyError when held."""
        try:
            self._lock.acquire(timeout=timeout if block else 0.001)
        except Timeout:
            raise StoreBusyError("another batch run or mutation is in progress")
        return self._lock

    # -- paths -----------------------------------------------------------

    def run_dir(self, run_id: str) -> Path:
        return self.root / run_id

    def _require_run(self, run_id: str) -> Path:
        path = self.run_dir(run_id)
        if not (path / "config.json").exists():
            raise NotFoundError(f"no such run: {run_id}")
        return path

    def list_runs(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(
            p.name for p in self.root.iterdir() if (p / "config.json").exists()
        )

    def new_run_id(self) -> str:
        base = datetime.now(timezone.utc).strftime("run-%Y%m%dT%H%M%S")
        run_id = base
        n = 1
        while self.run_dir(run_id).exists():
            n += 1
            run_id = f"{base}-{n}"
        return run_id

    def create_run(self, run_id: str) -> Path:
        path = self.run_dir(run_id)
        if path.exists():
            raise InputError(f"run directory already exists: {run_id}")
        for sub in ("points", "clusters", "models"):
            (path / sub).mkdir(parents=True)
        return path

    # -- config / transactions -------------------------------------------

    def save_config(self, run_id: str, profile: RunProfile) -> None:
        doc = {"run_id": run_id, **profile.to_dict()}
        (self.run_dir(run_id) / "config.json").write_text(json.dumps(doc, indent=2) + "\n")

    def load_profile(self, run_id: str) -> RunProfile:
        path = self._require_run(run_id) / "config.json"
        return RunProfile.from_dict(json.loads(path.read_text()))

    def save_transactions(self, run_id: str, records: Sequence[RawTransactionRecord]) -> None:
        ingest.write_transactions_csv(records, self.run_dir(run_id) / "transactions.csv")

    def load_transactions(self, run_id: str) -> list[RawTransactionRecord]:
        path = self._require_run(run_id) / "transactions.csv"
        mtime = path.stat().st_mtime
        cached = self._tx_cache.get(run_id)
        if cached and cached[0] == mtime:
            return cached[1]
        records, _ = ingest.load_transactions(path)
        self._tx_cache[run_id] = (mtime, records)
        return records

    # -- points / clusters / models ---------------------------------------

    def save_points(
        self,
        run_id: str,
        granularity: PeriodGranularity,
        points: Sequence[DeltaPoint],
        screened_ids: set[str],
    ) -> None:
        path = self.run_dir(run_id) / "points" / f"{granularity.value}.csv"
        features.write_points_csv(points, path, screened=screened_ids)

    def load_points(
        self, run_id: str, granularity: PeriodGranularity
    ) -> tuple[list[DeltaPoint], set[str]]:
        path = self._require_run(run_id) / "points" / f"{granularity.value}.csv"
        if not path.exists():
            raise NotFoundError(f"run {run_id} has no points for {granularity.value}")
        points, screened = features.read_points_csv(path)
        return points, screened or set()

    def save_clusters(
        self,
        run_id: str,
        granularity: PeriodGranularity,
        result: ClusteringResult,
        screened_points: Sequence[DeltaPoint],
        suspicious_default: int,
    ) -> None:
        doc = {
            "summary": clustering.cluster_summary(result),
            "suspicious_default": suspicious_default,
            "point_ids": [p.point_id for p in screened_points],
            "assignments": result.assignments,
        }
        path = self.run_dir(run_id) / "clusters" / f"{granularity.value}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n")

    def load_clusters(self, run_id: str, granularity: PeriodGranularity) -> dict:
        path = self._require_run(run_id) / "clusters" / f"{granularity.value}.json"
        if not path.exists():
            raise NotFoundError(f"run {run_id} has no clustering for {granularity.value}")
        return json.loads(path.read_text())

    def save_model(self, run_id: str, granularity: PeriodGranularity, model: TrainedModel) -> None:
        classifier.save_model(model, self.run_dir(run_id) / "models" / f"{granularity.value}.json")

    def load_model(self, run_id: str, granularity: PeriodGranularity) -> TrainedModel:
        path = self._require_run(run_id) / "models" / f"{granularity.value}.json"
        if not path.exists():
            raise NotFoundError(f"run {run_id} has no model for {granularity.value}")
        return classifier.load_model(path)

    def model_granularities(self, run_id: str) -> list[PeriodGranularity]:
        path = self._require_run(run_id) / "models"
        out = []
        for g in PeriodGranularity:
            if (path / f"{g.value}.json").exists():
                out.append(g)
        return out

    # -- append-only logs --------------------------------------------------

    def _append_line(self, path: Path, doc: dict) -> None:
        line = json.dumps(doc, separators=(",", ":")) + "\n"
        with open(path, "a") as handle:
            handle.write(line)
            handle.flush()
            os.fsync(handle.fileno())

    @staticmethod
    def _read_ndjson(path: Path) -> list[dict]:
        if not path.exists():
            return []
        out = []
        with open(path) as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError:
                    continue  # torn trailing record from an in-flight append
        return out

    def append_knowledge(self, run_id: str, kind: str, payload: dict) -> dict:
        path = self._require_run(run_id) / "knowledge.ndjson"
        record = {
            "seq": sum(1 for _ in open(path)) if path.exists() else 0,
            "timestamp": _utcnow(),
            "run_id": run_id,
            "kind": kind,
            "payload": payload,
        }
        self._append_line(path, record)
        return record

    def read_knowledge(self, run_id: str) -> list[dict]:
        return self._read_ndjson(self._require_run(run_id) / "knowledge.ndjson")

    def append_case(self, run_id: str, case: ScoredCase) -> None:
        self._append_line(self._require_run(run_id) / "cases.ndjson", case.to_dict())

    def load_cases(self, run_id: str) -> dict[str, ScoredCase]:
        """Latest version per case_id, in first-seen order."""
        out: dict[str, ScoredCase] = {}
        for doc in self._read_ndjson(self._require_run(run_id) / "cases.ndjson"):
            case = ScoredCase.from_dict(doc)
            out[case.case_id] = case
        return out

    # -- derived state ------------------------------------------------------

    def cluster_labels(self, run_id: str) -> dict[tuple[str, int], str]:
        """Latest expert label per (granularity, cluster index)."""
        labels: dict[tuple[str, int], str] = {}
        for rec in self.read_knowledge(run_id):
            if rec["kind"] == "cluster_label":
                p = rec["payload"]
                labels[(p["granularity"], int(p["cluster"]))] = p["label"]
        return labels

    def suspicious_cluster(self, run_id: str, granularity: PeriodGranularity) -> int:
        """Expert-labeled suspicious cluster, else first ranked not labeled normal."""
        doc = self.load_clusters(run_id, granularity)
        labels = self.cluster_labels(run_id)
        flagged = [
            c
            for (g, c), label in labels.items()
            if g == granularity.value and label == "suspicious"
        ]
        if flagged:
            return flagged[-1]
        for c in doc["summary"]["suspicion_ranking"]:
            if labels.get((granularity.value, c)) != "normal":
                return c
        return doc["suspicious_default"]

    def exchange_exclusions(self, run_id: str) -> frozenset[tuple[str, str]]:
        """Customer/fund pairs whose cases were disposed as benign exchanges."""
        return frozenset(
            (c.customer_id, c.fund_id)
            for c in self.load_cases(run_id).values()
            if c.disposition is Disposition.EXCHANGE
        )


# -- pipeline operations ----------------------------------------------------


def run_batch(
    records: Sequence[RawTransactionRecord],
    profile: RunProfile,
    store: RunStore,
    run_id: str | None = None,
) -> str:
    """Execute the full batch chain and persist everything under one run id.

    Any stage failure aborts with the stage named; artifacts written before
    the failure stay on disk for diagnosis.
    """
    lock = store.writer_lock()
    try:
        rid = run_id or store.new_run_id()
        store.create_run(rid)
        store.save_config(rid, profile)
        store.append_knowledge(rid, "run_config", {"run_id": rid, **profile.to_dict()})
        store.save_transactions(rid, records)

        overrides = dict(profile.suspicious_override)
        for gran in profile.granularities:
            aggregates = features.bucketize(records, gran)
            if not aggregates:
                raise StageError("bucketize", f"no aggregates at {gran.value}")
            points = features.compute_points(aggregates, profile.k)
            screened = screening.screen(points, profile.thresholds)
            store.save_points(rid, gran, points, {p.point_id for p in screened})

            try:
                result = clustering.kmeans(screened, profile.clustering)
            except Exception as exc:
                raise StageError("cluster", f"{gran.value}: {exc}") from exc
            ranking = clustering.rank_clusters_by_suspicion(result)
            suspicious = overrides.get(gran, ranking[0])
            store.save_clusters(rid, gran, result, screened, suspicious)
            store.append_knowledge(
                rid,
                "clustered",
                {
                    "granularity": gran.value,
                    "points": len(points),
                    "screened": len(screened),
                    "inertia": result.inertia,
                    "sizes": result.per_cluster_sizes,
                    "ranking": ranking,
                    "suspicious": suspicious,
                },
            )

            try:
                training_set = classifier.build_training_set(
                    screened,
                    result,
                    suspicious,
                    profile.negative_rate,
                    profile.network.rng_seed,
                    population=points,
                )
                model = classifier.train(
                    training_set, profile.network, granularity=gran, created_at=profile.created_at
                )
            except Exception as exc:
                raise StageError("train", f"{gran.value}: {exc}") from exc
            store.save_model(rid, gran, model)
            store.append_knowledge(
                rid,
                "trained",
                {
                    "granularity": gran.value,
                    "model_fingerprint": classifier.model_fingerprint(model),
                    "training_set_fingerprint": model.training_set_fingerprint,
                    "positives": len(training_set.positives),
                    "negatives": len(training_set.negatives),
                    "final_loss": model.final_loss,
                },
            )
        return rid
    finally:
        lock.release()


def retrain(store: RunStore, run_id: str, created_at: str = "", block: bool = True) -> dict[str, str]:
    """Retrain every granularity with current labels and exchange exclusions."""
    lock = store.writer_lock(block=block)
    try:
        profile = store.load_profile(run_id)
        exclusions = store.exchange_exclusions(run_id)
        fingerprints: dict[str, str] = {}
        for gran in profile.granularities:
            points, screened_ids = store.load_points(run_id, gran)
            screened = [p for p in points if p.point_id in screened_ids]
            doc = store.load_clusters(run_id, gran)
            result = ClusteringResult(
                centroids=[tuple(c) for c in doc["summary"]["centroids"]],
                assignments=list(doc["assignments"]),
                inertia=doc["summary"]["inertia"],
                iterations_run=doc["summary"]["iterations_run"],
                per_cluster_sizes=doc["summary"]["per_cluster_sizes"],
                inertia_history=[],
                config=profile.clustering,
            )
            suspicious = store.suspicious_cluster(run_id, gran)
            training_set = classifier.build_training_set(
                screened,
                result,
                suspicious,
                profile.negative_rate,
                profile.network.rng_seed,
                population=points,
                exclude_customer_funds=exclusions,
            )
            model = classifier.train(
                training_set, profile.network, granularity=gran, created_at=created_at or profile.created_at
            )
            store.save_model(run_id, gran, model)
            fingerprints[gran.value] = classifier.model_fingerprint(model)
            store.append_knowledge(
                run_id,
                "trained",
                {
                    "granularity": gran.value,
                    "model_fingerprint": fingerprints[gran.value],
                    "training_set_fingerprint": model.training_set_fingerprint,
                    "positives": len(training_set.positives),
                    "negatives": len(training_set.negatives),
                    "final_loss": model.final_loss,
                    "excluded_pairs": sorted(f"{c}|{f}" for c, f in exclusions),
                },
            )
        return fingerprints
    finally:
        lock.release()


def degree_for(model: TrainedModel, point: DeltaPoint) -> float:
    """Suspicious degree with the zero-redemption convention applied.

    A period with no redemption has nothing to launder out, so it scores 0
    without consulting the network.
    """
    if point.aggregate.beta <= 0.0:
        return 0.0
    return classifier.predict(model, point)


def investigate(
    store: RunStore,
    run_id: str,
    customer_id: str,
    fund_id: str | None,
    when: date,
    granularities: Sequence[PeriodGranularity] | None = None,
) -> ScoredCase:
    """Score one customer x fund at a date across the investigation profile.

    Computes the delta point of the period containing `when` at every
    granularity (with the run's lookback), predicts each degree, combines the
    alert, and persists the case with disposition Open.
    """
    profile = store.load_profile(run_id)
    records = store.load_transactions(run_id)
    mine = [r for r in records if r.customer_id == customer_id]
    if not mine:
        raise NotFoundError(f"unknown customer: {customer_id}")
    funds = sorted({r.fund_id for r in mine})
    if fund_id is None:
        if len(funds) != 1:
            raise RequestError(
                f"customer {customer_id} is active in {len(funds)} funds "
                f"({', '.join(funds)}); specify one"
            )
        fund_id = funds[0]
    elif fund_id not in funds:
        raise NotFoundError(f"customer {customer_id} has no activity in fund {fund_id}")
    mine = [r for r in mine if r.fund_id == fund_id]

    wanted = tuple(granularities) if granularities else tuple(
        g for g in profile.granularities if g in DEFAULT_GRANULARITIES
    ) or profile.granularities
    degrees: dict[PeriodGranularity, float] = {}
    for gran in wanted:
        model = store.load_model(run_id, gran)
        aggregates = features.bucketize(mine, gran)
        idx = features.period_index(when, gran)
        if not any(a.period_index == idx for a in aggregates):
            continue
        points = features.compute_points(aggregates, profile.k)
        point = next(p for p in points if p.aggregate.period_index == idx)
        degrees[gran] = degree_for(model, point)

    level, rationale = combine_alert(degrees, profile.alerts)
    case = ScoredCase(
        case_id=case_id_for(customer_id, fund_id, when),
        run_id=run_id,
        customer_id=customer_id,
        fund_id=fund_id,
        as_of_date=when,
        degrees=degrees,
        alert_level=level,
        rationale=rationale,
    )
    lock = store.writer_lock()
    try:
        store.append_case(run_id, case)
        store.append_knowledge(
            run_id,
            "case_scored",
            {
                "case_id": case.case_id,
                "customer_id": customer_id,
                "fund_id": fund_id,
                "as_of_date": when.isoformat(),
                "degrees": {g.value: d for g, d in degrees.items()},
                "alert_level": level.value,
            },
        )
    finally:
        lock.release()
    return case


def record_disposition(
    store: RunStore, run_id: str, case_id: str, disposition: Disposition, note: str = ""
) -> ScoredCase:
    """Append the analyst's verdict as a new case version plus a knowledge event."""
    cases = store.load_cases(run_id)
    current = cases.get(case_id)
    if current is None:
        raise NotFoundError(f"no such case: {case_id}")
    updated = replace(current, disposition=disposition, note=note, disposed_at=_utcnow())
    lock = store.writer_lock()
    try:
        store.append_case(run_id, updated)
        store.append_knowledge(
            run_id,
            "disposition",
            {
                "case_id": case_id,
                "disposition": disposition.value,
                "note": note,
            },
        )
    finally:
        lock.release()
    return updated


@dataclass(frozen=True)
class ScoreRow:
    customer_id: str
    fund_id: str
    period_index: int
    period_label: str
    delta1: float
    delta2: float
    degree: float


def score_all(store: RunStore, run_id: str, granularity: PeriodGranularity) -> list[ScoreRow]:
    """Score every customer x fund x period at one granularity, ranked by degree."""
    profile = store.load_profile(run_id)
    model = store.load_model(run_id, granularity)
    records = store.load_transactions(run_id)
    aggregates = features.bucketize(records, granularity)
    points = features.compute_points(aggregates, profile.k)
    xy = np.array([(p.delta1, p.delta2) for p in points], dtype=np.float64).reshape(-1, 2)
    degrees = classifier.predict_batch(model, xy) if len(points) else np.empty(0)
    rows = []
    for p, d in zip(points, degrees):
        a = p.aggregate
        rows.append(
            ScoreRow(
                customer_id=a.customer_id,
                fund_id=a.fund_id,
                period_index=a.period_index,
                period_label=features.period_label(a.period_index, granularity),
                delta1=p.delta1,
                delta2=p.delta2,
                degree=0.0 if a.beta <= 0.0 else float(d),
            )
        )
    rows.sort(key=lambda r: (-r.degree, r.customer_id, r.fund_id, r.period_index))
    return rows


def case_timeline(
    store: RunStore, run_id: str, case: ScoredCase
) -> list[dict]:
    """Transactions underlying a case: the widest scored period containing its date."""
    widest = None
    for gran in reversed(list(PeriodGranularity)):
        if gran in case.degrees:
            widest = gran
            break
    if widest is None:
        widest = PeriodGranularity.MONTH
    start, end = features.period_bounds(features.period_index(case.as_of_date, widest), widest)
    records = store.load_transactions(run_id)
    out = []
    for r in records:
        if r.customer_id == case.customer_id and r.fund_id == case.fund_id and start <= r.date <= end:
            out.append(
                {
                    "date": r.date.isoformat(),
                    "direction": r.direction.value,
                    "amount": r.amount,
                    "sub_fund_id": r.sub_fund_id,
                    "shares_value": r.shares_value,
                }
            )
    return out
