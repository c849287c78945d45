"""HTTP/JSON API over a run store, serving the analyst console and scripts.

All reads go straight at the store; every value returned is exactly what the
library computes, so CLI and API answers agree bit-for-bit. Mutations (cluster
labels, retraining, investigations, dispositions) require the analyst token
header and serialize on the store's writer lock: a busy store answers 409
rather than queueing.

Security stance: a single static token, no users, no TLS. This is a desk
tool; do not expose it beyond one.
"""

from __future__ import annotations

from datetime import date
from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import casepipeline, classifier
from .casepipeline import Disposition, RunStore, record_disposition, retrain
from .errors import (
    ConfigurationError,
    FundwatchError,
    InputError,
    NotFoundError,
    RequestError,
    StoreBusyError,
    TrainingError,
)
from .features import PeriodGranularity, period_label

MAX_PAGE_SIZE = 10_000


class LabelBody(BaseModel):
    label: Literal["suspicious", "normal"]
    granularity: str


class TrainBody(BaseModel):
    created_at: str = ""


class DispositionBody(BaseModel):
    disposition: Literal["Open", "Suspicious", "Cleared", "Exchange"]
    note: str = ""


class InvestigateBody(BaseModel):
    customer_id: str
    fund_id: str | None = None
    date: str


def _granularity(value: str) -> PeriodGranularity:
    try:
        return PeriodGranularity(value)
    except ValueError:
        raise RequestError(
            f"unknown granularity '{value}'; choose from "
            + ", ".join(g.value for g in PeriodGranularity)
        )


def _paginate(items: list, page: int, page_size: int) -> tuple[list, dict]:
    page = max(page, 1)
    page_size = min(max(page_size, 1), MAX_PAGE_SIZE)
    start = (page - 1) * page_size
    return items[start : start + page_size], {
        "total": len(items),
        "page": page,
        "page_size": page_size,
    }


def create_app(
    store: RunStore,
    analyst_token: str = "analyst",
    static_dir: Path | None = None,
) -> FastAPI:
    app = FastAPI(title="fundwatch", docs_url=None, redoc_url=None)

    def require_analyst(x_analyst_token: str | None = Header(default=None)) -> None:
        if x_analyst_token != analyst_token:
            raise _Unauthorized()

    class _Unauthorized(Exception):
        pass

    @app.exception_handler(_Unauthorized)
    async def _unauthorized(_req: Request, _exc: _Unauthorized):
        return JSONResponse(
            status_code=401,
            content={"code": "unauthorized", "message": "missing or wrong X-Analyst-Token header"},
        )

    @app.exception_handler(NotFoundError)
    async def _not_found(_req: Request, exc: NotFoundError):
        return JSONResponse(status_code=404, content={"code": "not_found", "message": str(exc)})

    @app.exception_handler(StoreBusyError)
    async def _busy(_req: Request, exc: StoreBusyError):
        return JSONResponse(status_code=409, content={"code": "busy", "message": str(exc)})

    @app.exception_handler(RequestError)
    @app.exception_handler(InputError)
    @app.exception_handler(ConfigurationError)
    @app.exception_handler(TrainingError)
    async def _bad_request(_req: Request, exc: FundwatchError):
        return JSONResponse(status_code=422, content={"code": "invalid_request", "message": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _invalid_body(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={"code": "invalid_body", "message": str(exc)})

    # -- runs -----------------------------------------------------------------

    @app.get("/runs")
    def list_runs():
        runs = []
        for run_id in store.list_runs():
            profile = store.load_profile(run_id)
            runs.append(
                {
                    "run_id": run_id,
                    "created_at": profile.created_at,
                    "granularities": [g.value for g in profile.granularities],
                }
            )
        return {"runs": runs}

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        profile = store.load_profile(run_id)
        models = {}
        for gran in store.model_granularities(run_id):
            models[gran.value] = classifier.model_fingerprint(store.load_model(run_id, gran))
        labels = {
            f"{g}/{c}": label for (g, c), label in store.cluster_labels(run_id).items()
        }
        return {
            "run_id": run_id,
            "config": profile.to_dict(),
            "models": models,
            "cluster_labels": labels,
        }

    # -- points ---------------------------------------------------------------

    @app.get("/runs/{run_id}/points")
    def get_points(
        run_id: str,
        granularity: str,
        screened: bool | None = None,
        page: int = 1,
        page_size: int = Query(default=1000, le=MAX_PAGE_SIZE),
        sample: int = 0,
        sample_seed: int = 0,
    ):
        gran = _granularity(granularity)
        points, screened_ids = store.load_points(run_id, gran)
        try:
            doc = store.load_clusters(run_id, gran)
            cluster_of = dict(zip(doc["point_ids"], doc["assignments"]))
        except NotFoundError:
            cluster_of = {}
        rows = []
        for p in points:
            is_screened = p.point_id in screened_ids
            if screened is not None and is_screened != screened:
                continue
            rows.append(
                {
                    "point_id": p.point_id,
                    "customer_id": p.aggregate.customer_id,
                    "fund_id": p.aggregate.fund_id,
                    "period_index": p.aggregate.period_index,
                    "period_label": period_label(p.aggregate.period_index, gran),
                    "delta1": p.delta1,
                    "delta2": p.delta2,
                    "flag": p.data_quality_flag,
                    "screened": is_screened,
                    "cluster": cluster_of.get(p.point_id),
                }
            )
        sampled = len(rows)
        if sample and sample < len(rows):
            rng = np.random.default_rng(sample_seed)
            keep = rng.choice(len(rows), size=sample, replace=False)
            keep.sort()
            rows = [rows[i] for i in keep]
            sampled = sample
        page_rows, meta = _paginate(rows, page, page_size)
        return {**meta, "sampled": sampled, "points": page_rows}

    # -- clusters ---------------------------------------------------------------

    @app.get("/runs/{run_id}/clusters")
    def get_clusters(run_id: str, granularity: str):
        gran = _granularity(granularity)
        doc = store.load_clusters(run_id, gran)
        labels = store.cluster_labels(run_id)
        return {
            "granularity": gran.value,
            "centroids": doc["summary"]["centroids"],
            "per_cluster_sizes": doc["summary"]["per_cluster_sizes"],
            "inertia": doc["summary"]["inertia"],
            "suspicion_ranking": doc["summary"]["suspicion_ranking"],
            "suspicious": store.suspicious_cluster(run_id, gran),
            "labels": {
                str(c): label for (g, c), label in labels.items() if g == gran.value
            },
        }

    @app.post("/runs/{run_id}/clusters/{cluster_index}/label", dependencies=[Depends(require_analyst)])
    def label_cluster(run_id: str, cluster_index: int, body: LabelBody):
        gran = _granularity(body.granularity)
        doc = store.load_clusters(run_id, gran)
        if not 0 <= cluster_index < len(doc["summary"]["centroids"]):
            raise RequestError(f"no such cluster: {cluster_index}")
        lock = store.writer_lock(block=False)
        try:
            store.append_knowledge(
                run_id,
                "cluster_label",
                {"granularity": gran.value, "cluster": cluster_index, "label": body.label},
            )
        finally:
            lock.release()
        return {"granularity": gran.value, "cluster": cluster_index, "label": body.label}

    @app.post("/runs/{run_id}/train", dependencies=[Depends(require_analyst)])
    def train_run(run_id: str, body: TrainBody | None = None):
        store._require_run(run_id)
        created_at = body.created_at if body else ""
        fingerprints = retrain(store, run_id, created_at=created_at, block=False)
        return {"models": fingerprints}

    # -- cases ------------------------------------------------------------------

    @app.get("/runs/{run_id}/cases")
    def get_cases(
        run_id: str,
        alert: str | None = None,
        disposition: str | None = None,
        page: int = 1,
        page_size: int = Query(default=100, le=MAX_PAGE_SIZE),
    ):
        cases = list(store.load_cases(run_id).values())
        if alert is not None:
            cases = [c for c in cases if c.alert_level.value == alert]
        if disposition is not None:
            cases = [c for c in cases if c.disposition.value == disposition]
        cases.sort(key=lambda c: (-c.max_degree, c.case_id))
        page_cases, meta = _paginate(cases, page, page_size)
        return {**meta, "cases": [{**c.to_dict(), "max_degree": c.max_degree} for c in page_cases]}

    @app.get("/runs/{run_id}/cases/{case_id}")
    def get_case(run_id: str, case_id: str):
        case = store.load_cases(run_id).get(case_id)
        if case is None:
            raise NotFoundError(f"no such case: {case_id}")
        return {
            **case.to_dict(),
            "max_degree": case.max_degree,
            "timeline": casepipeline.case_timeline(store, run_id, case),
        }

    @app.post("/runs/{run_id}/cases/{case_id}/disposition", dependencies=[Depends(require_analyst)])
    def set_disposition(run_id: str, case_id: str, body: DispositionBody):
        updated = record_disposition(
            store, run_id, case_id, Disposition(body.disposition), note=body.note
        )
        return updated.to_dict()

    @app.post("/runs/{run_id}/investigate", dependencies=[Depends(require_analyst)])
    def investigate_case(run_id: str, body: InvestigateBody):
        try:
            when = date.fromisoformat(body.date)
        except ValueError:
            raise RequestError(f"bad date '{body.date}': expected YYYY-MM-DD")
        case = casepipeline.investigate(store, run_id, body.customer_id, body.fund_id, when)
        return {**case.to_dict(), "max_degree": case.max_degree}

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
