"""HTTP API over the discovery pipeline.

A small single-analyst service: logs are uploaded and kept in memory,
discovery results are cached per (log, canonical parameter JSON) so
repeated requests with identical parameters return the same model id.
"""

from __future__ import annotations

import hashlib
import io
import json
import threading
import uuid
from typing import Optional

from fastapi import FastAPI, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from ocmine.io import (
    FormatError,
    parse_mdl,
    parse_timestamp,
    render_dot,
    serialize_model,
    write_flat_csv,
)
from ocmine.log import (
    FilterSpec,
    LogError,
    flatten,
    flattening_diagnostics,
    object_type_stats,
)
from ocmine.ocpn import DiscoveryParams, OcpnError, discover_ocpn
from ocmine.petri import PetriError
from ocmine.replay import annotate

DEFAULT_UPLOAD_CAP = 64 * 1024 * 1024


class _Store:
    def __init__(self):
        self.lock = threading.Lock()
        self.logs: dict[str, object] = {}
        self.models: dict[str, dict] = {}          # model_id -> serialized doc
        self.cache: dict[tuple[str, str], str] = {}  # (log_id, param hash) -> model_id
        self.jobs: dict[str, dict] = {}


def _param_hash(params: dict) -> str:
    canonical = json.dumps(params, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _error(status: int, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": _STATUS_NAMES.get(status, "error"), "detail": detail})


_STATUS_NAMES = {
    404: "not_found",
    413: "payload_too_large",
    422: "invalid_parameters",
    500: "internal_error",
}


def _filter_spec(obj: Optional[dict]) -> Optional[FilterSpec]:
    if not obj:
        return None
    window = None
    if obj.get("time_window"):
        lo, hi = obj["time_window"]
        window = (
            parse_timestamp(lo) if lo else None,
            parse_timestamp(hi) if hi else None,
        )
    return FilterSpec(
        retained={k: set(v) for k, v in obj.get("retained", {}).items()} or None,
        activities=set(obj["activities"]) if obj.get("activities") else None,
        min_activity_frequency=obj.get("min_activity_frequency"),
        time_window=window,
    )


def create_app(upload_cap_bytes: int = DEFAULT_UPLOAD_CAP) -> FastAPI:
    app = FastAPI(title="ocmine", version="1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = _Store()

    @app.exception_handler(Exception)
    async def on_error(request: Request, exc: Exception):
        if isinstance(exc, (LogError, OcpnError, PetriError, FormatError, ValueError)):
            return _error(422, str(exc))
        return _error(500, str(exc))

    @app.post("/logs", status_code=201)
    async def upload_log(request: Request):
        body = await request.body()
        if len(body) > upload_cap_bytes:
            return _error(413, f"upload exceeds {upload_cap_bytes} bytes")
        try:
            log = parse_mdl(io.StringIO(body.decode("utf-8")))
        except (FormatError, LogError, UnicodeDecodeError) as exc:
            return _error(422, str(exc))
        log_id = uuid.uuid4().hex
        with store.lock:
            store.logs[log_id] = log
        return {"log_id": log_id, "events": len(log)}

    def _get_log(log_id: str):
        with store.lock:
            return store.logs.get(log_id)

    @app.get("/logs/{log_id}/stats")
    async def log_stats(log_id: str):
        log = _get_log(log_id)
        if log is None:
            return _error(404, f"unknown log {log_id}")
        table = object_type_stats(log)
        return {
            "events": len(log),
            "activities": sorted(log.activities),
            "object_types": {
                ot: len(log.objects_of_type(ot)) for ot in sorted(log.object_types)
            },
            "table": [
                {
                    "activity": act,
                    "object_type": ot,
                    "min": s.min_objects,
                    "mean": s.mean_objects,
                    "max": s.max_objects,
                    "events": s.events,
                    "unique_objects": s.unique_objects,
                }
                for (act, ot), s in sorted(table.items())
            ],
        }

    @app.get("/logs/{log_id}/diagnostics")
    async def log_diagnostics(log_id: str, type: str = Query(...)):
        log = _get_log(log_id)
        if log is None:
            return _error(404, f"unknown log {log_id}")
        try:
            diag = flattening_diagnostics(log, type)
        except LogError as exc:
            return _error(422, str(exc))
        return {
            "type": type,
            "deficient": diag.deficient_count,
            "convergent": diag.convergent_count,
            "divergent": diag.divergent_count,
        }

    @app.post("/logs/{log_id}/discover", status_code=201)
    async def discover(log_id: str, request: Request):
        log = _get_log(log_id)
        if log is None:
            return _error(404, f"unknown log {log_id}")
        body = await request.body()
        payload = json.loads(body) if body else {}
        params_doc = {
            "noise": payload.get("noise", 0.0),
            "tau": payload.get("tau", 0.98),
            "filter": payload.get("filter"),
            "types": payload.get("types"),
        }
        key = (log_id, _param_hash(params_doc))
        with store.lock:
            cached = store.cache.get(key)
        if cached is not None:
            return {"model_id": cached, "cached": True}
        try:
            params = DiscoveryParams(
                noise=params_doc["noise"],
                tau=params_doc["tau"],
                filter_spec=_filter_spec(params_doc["filter"]),
                types=frozenset(params_doc["types"]) if params_doc["types"] else None,
            )
            aocpn = discover_ocpn(log, params)
            annotated = annotate(log, aocpn)
        except (LogError, OcpnError, PetriError, ValueError) as exc:
            return _error(422, str(exc))
        doc = serialize_model(annotated)
        model_id = uuid.uuid4().hex
        with store.lock:
            # another identical request may have won the race; keep the first
            existing = store.cache.get(key)
            if existing is not None:
                return {"model_id": existing, "cached": True}
            store.models[model_id] = doc
            store.cache[key] = model_id
            store.jobs[model_id] = {"job_id": model_id, "status": "done", "model_id": model_id}
        return {"model_id": model_id, "cached": False}

    @app.get("/models/{model_id}")
    async def get_model(model_id: str):
        with store.lock:
            doc = store.models.get(model_id)
        if doc is None:
            return _error(404, f"unknown model {model_id}")
        return doc

    @app.get("/models/{model_id}/dot")
    async def get_model_dot(model_id: str):
        with store.lock:
            doc = store.models.get(model_id)
        if doc is None:
            return _error(404, f"unknown model {model_id}")
        from ocmine.io import parse_model

        return PlainTextResponse(render_dot(parse_model(doc)))

    @app.get("/models/{model_id}/transitions/{label}")
    async def transition_stats(model_id: str, label: str):
        with store.lock:
            doc = store.models.get(model_id)
        if doc is None:
            return _error(404, f"unknown model {model_id}")
        annotations = doc.get("annotations", {})
        for t_id, entry in sorted(annotations.get("transitions", {}).items()):
            t_label = next(
                (t["label"] for t in doc["transitions"] if t["id"] == t_id), None
            )
            if t_label == label:
                return {"transition": t_id, "label": label, **entry}
        return _error(404, f"no transition labeled {label!r}")

    @app.post("/logs/{log_id}/flatten")
    async def flatten_log(log_id: str, request: Request):
        log = _get_log(log_id)
        if log is None:
            return _error(404, f"unknown log {log_id}")
        body = await request.body()
        payload = json.loads(body) if body else {}
        ot = payload.get("type")
        if not ot:
            return _error(422, "missing 'type' in request body")
        try:
            flat = flatten(log, ot)
        except LogError as exc:
            return _error(422, str(exc))
        buf = io.StringIO()
        write_flat_csv(flat, buf)
        return Response(
            content=buf.getvalue(),
            media_type="text/csv",
            headers={"Content-Disposition": f'attachment; filename="{log_id}-{ot}.csv"'},
        )

    @app.get("/jobs/{job_id}")
    async def get_job(job_id: str):
        with store.lock:
            job = store.jobs.get(job_id)
        if job is None:
            return _error(404, f"unknown job {job_id}")
        return job

    return app


app = create_app()
