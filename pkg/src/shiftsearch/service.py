"""HTTP service exposing search, record lookup, assessment plans, feedback
capture, and qrels export.

The index is served read-only; the provider is rebuilt from the manifest spec
and checked against the stored fingerprint at startup. Feedback lands in an
append-only JSON-lines log, flushed and fsynced per write, so an acknowledged
event survives a process kill. Every error body is {"code", "message"}.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from starlette.exceptions import HTTPException as StarletteHTTPException

from .evaluation import (
    LEVELS,
    FeedbackEvent,
    dedup_events,
    fuse_votes,
    load_feedback_log,
)
from .embedding import provider_from_spec
from .index import load_index
from .search import (
    METHODS,
    EmptyQueryError,
    SearchConfig,
    Searcher,
    SearchResult,
)

ENV_PREFIX = "SHIFTSEARCH_"


class ServiceConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ServiceConfig:
    index_dir: str
    host: str = "127.0.0.1"
    port: int = 8000
    feedback_log: str = "feedback.jsonl"
    plan_path: str | None = None
    static_dir: str | None = None
    method: str = "semantic"
    page_size: int = 20
    k: int = 200
    query_expansion: bool = True

    def __post_init__(self) -> None:
        if not (1 <= self.port <= 65535):
            raise ServiceConfigError(f"port must be in 1..65535, got {self.port}")
        if self.method not in METHODS:
            raise ServiceConfigError(f"unknown method {self.method!r}")

    def search_defaults(self) -> SearchConfig:
        return SearchConfig(
            k=self.k,
            page_size=self.page_size,
            query_expansion=self.query_expansion,
            method=self.method,
        )


_BOOL_VALUES = {"on": True, "true": True, "1": True, "off": False, "false": False, "0": False}

_CONFIG_KEYS = {
    "index_dir": str,
    "host": str,
    "port": int,
    "feedback_log": str,
    "plan": str,
    "static_dir": str,
    "method": str,
    "page_size": int,
    "k": int,
    "query_expansion": "bool",
}


def load_service_config(path: str | Path) -> ServiceConfig:
    """Parse the key=value config file ('#' comments) and apply env overrides.

    Recognized environment overrides: SHIFTSEARCH_PORT, SHIFTSEARCH_HOST,
    SHIFTSEARCH_INDEX_DIR, SHIFTSEARCH_FEEDBACK_LOG, SHIFTSEARCH_PLAN,
    SHIFTSEARCH_STATIC_DIR.
    """
    values: dict[str, object] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        # '#' starts a comment anywhere, so values cannot contain it
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ServiceConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _CONFIG_KEYS:
            raise ServiceConfigError(f"line {lineno}: unknown config key {key!r}")
        values[key] = raw
    for env_key in ("PORT", "HOST", "INDEX_DIR", "FEEDBACK_LOG", "PLAN", "STATIC_DIR"):
        env_value = os.environ.get(ENV_PREFIX + env_key)
        if env_value is not None:
            values[env_key.lower()] = env_value
    if "index_dir" not in values:
        raise ServiceConfigError("config must set index_dir")

    def _convert(key: str, default):
        if key not in values:
            return default
        raw = str(values[key])
        kind = _CONFIG_KEYS[key]
        if kind is int:
            try:
                return int(raw)
            except ValueError:
                raise ServiceConfigError(f"{key} must be an integer, got {raw!r}") from None
        if kind == "bool":
            if raw.lower() not in _BOOL_VALUES:
                raise ServiceConfigError(f"{key} must be on/off, got {raw!r}")
            return _BOOL_VALUES[raw.lower()]
        return raw

    return ServiceConfig(
        index_dir=str(values["index_dir"]),
        host=_convert("host", "127.0.0.1"),
        port=_convert("port", 8000),
        feedback_log=_convert("feedback_log", "feedback.jsonl"),
        plan_path=_convert("plan", None),
        static_dir=_convert("static_dir", None),
        method=_convert("method", "semantic"),
        page_size=_convert("page_size", 20),
        k=_convert("k", 200),
        query_expansion=_convert("query_expansion", True),
    )


@dataclass(frozen=True)
class AssessmentPlan:
    """Frozen assignment of queries and per-method top result lists.

    The served lists never include scores; assessors judge identical rankings
    regardless of later search changes.
    """

    version: int
    assessment_method: str
    queries: Mapping[str, str]
    assignments: Mapping[str, tuple[str, ...]]
    rankings: Mapping[str, Mapping[str, tuple[str, ...]]]

    def __post_init__(self) -> None:
        if self.assessment_method not in self.rankings:
            raise ValueError(
                f"assessment_method {self.assessment_method!r} has no ranking lists"
            )
        listed = self.rankings[self.assessment_method]
        for assessor, qids in self.assignments.items():
            for qid in qids:
                if qid not in self.queries:
                    raise ValueError(f"assessor {assessor!r}: unknown query {qid!r}")
                if qid not in listed:
                    raise ValueError(
                        f"assessor {assessor!r}: query {qid!r} has no frozen ranking"
                    )


def save_plan(plan: AssessmentPlan, path: str | Path) -> None:
    doc = {
        "version": plan.version,
        "assessment_method": plan.assessment_method,
        "queries": dict(plan.queries),
        "assignments": {a: list(qids) for a, qids in plan.assignments.items()},
        "rankings": {
            method: {qid: list(rids) for qid, rids in by_query.items()}
            for method, by_query in plan.rankings.items()
        },
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def load_plan(path: str | Path) -> AssessmentPlan:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return AssessmentPlan(
        version=int(doc["version"]),
        assessment_method=str(doc["assessment_method"]),
        queries={str(k): str(v) for k, v in doc["queries"].items()},
        assignments={
            str(a): tuple(str(q) for q in qids)
            for a, qids in doc["assignments"].items()
        },
        rankings={
            str(m): {str(q): tuple(str(r) for r in rids) for q, rids in by_query.items()}
            for m, by_query in doc["rankings"].items()
        },
    )


class FeedbackLog:
    """Append-only durable JSON-lines store; one writer at a time."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        self._last_timestamp = 0.0

    def next_timestamp(self) -> float:
        # strictly increasing so last-write-wins dedup is unambiguous
        now = time.time()
        with self._lock:
            if now <= self._last_timestamp:
                now = self._last_timestamp + 1e-6
            self._last_timestamp = now
        return now

    def append(self, event: FeedbackEvent) -> None:
        line = json.dumps(event.as_dict(), ensure_ascii=False) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(line)
                handle.flush()
                os.fsync(handle.fileno())

    def events(self) -> list[FeedbackEvent]:
        if not self.path.exists():
            return []
        return load_feedback_log(self.path)


def _http_error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def _result_payload(result: SearchResult, index, include_scores: bool = True) -> dict:
    record = index.record(result.record_id)
    payload = {
        "record_id": record.id,
        "rank": result.rank,
        "timestamp": record.timestamp,
        "title": record.title,
        "body": [[name, text] for name, text in record.body],
        "attributes": list(record.attributes),
    }
    if include_scores:
        payload["score"] = result.score
        payload["doc_sim"] = result.doc_sim
        payload["term_sim"] = result.term_sim
    return payload


def build_app(config: ServiceConfig) -> FastAPI:
    index = load_index(config.index_dir)
    provider = provider_from_spec(index.provider_spec)
    searcher = Searcher(index, provider)  # fails fast on fingerprint mismatch
    log = FeedbackLog(config.feedback_log)
    plan: AssessmentPlan | None = None
    if config.plan_path and Path(config.plan_path).exists():
        plan = load_plan(config.plan_path)
    defaults = config.search_defaults()

    app = FastAPI(title="shiftsearch", docs_url=None, redoc_url=None)
    app.state.index = index
    app.state.searcher = searcher
    app.state.feedback_log = log
    app.state.plan = plan

    @app.exception_handler(StarletteHTTPException)
    async def _on_http_error(request: Request, exc: StarletteHTTPException):
        detail = exc.detail
        if isinstance(detail, dict) and "code" in detail:
            return JSONResponse(status_code=exc.status_code, content=detail)
        return _http_error(exc.status_code, "error", str(detail))

    @app.exception_handler(RequestValidationError)
    async def _on_validation_error(request: Request, exc: RequestValidationError):
        return _http_error(400, "invalid_request", "malformed request")

    @app.exception_handler(Exception)
    async def _on_internal_error(request: Request, exc: Exception):
        return _http_error(500, "internal_error", "internal server error")

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "doc_count": index.doc_count, "dim": index.dim}

    @app.get("/api/search")
    async def search(request: Request):
        params = request.query_params
        raw = params.get("q", "")
        method = params.get("method", defaults.method)
        if method not in METHODS:
            return _http_error(400, "invalid_method", f"unknown method {method!r}")
        sort = params.get("sort", "relevance")
        if sort not in ("relevance", "time"):
            return _http_error(400, "invalid_sort", f"unknown sort {sort!r}")
        expansion_raw = params.get("expansion")
        if expansion_raw is None:
            expansion = defaults.query_expansion
        elif expansion_raw.lower() in _BOOL_VALUES:
            expansion = _BOOL_VALUES[expansion_raw.lower()]
        else:
            return _http_error(400, "invalid_expansion", "expansion must be on or off")
        limit_raw = params.get("limit")
        try:
            limit = int(limit_raw) if limit_raw is not None else defaults.page_size
        except ValueError:
            return _http_error(400, "invalid_limit", "limit must be an integer")
        try:
            search_config = replace(
                defaults, method=method, query_expansion=expansion, page_size=limit
            )
        except ValueError as exc:
            return _http_error(400, "invalid_limit", str(exc))
        try:
            results = searcher.search(raw, search_config)
        except EmptyQueryError:
            return _http_error(400, "empty_query", "empty query")
        if sort == "time":
            ordered = sorted(
                results, key=lambda r: (-index.timestamps[r.record_id], r.record_id)
            )
        else:
            ordered = results
        return {
            "query": raw,
            "method": method,
            "expansion": expansion,
            "sort": sort,
            "count": len(ordered),
            "results": [_result_payload(r, index) for r in ordered],
        }

    @app.get("/api/records/{record_id}")
    async def get_record(record_id: str):
        try:
            record = index.record(record_id)
        except KeyError:
            return _http_error(404, "not_found", f"no record {record_id!r}")
        return {
            "record_id": record.id,
            "timestamp": record.timestamp,
            "title": record.title,
            "body": [[name, text] for name, text in record.body],
            "attributes": list(record.attributes),
        }

    @app.get("/api/plan/{assessor_id}")
    async def get_plan(assessor_id: str):
        if plan is None:
            return _http_error(404, "no_plan", "no assessment plan is loaded")
        qids = plan.assignments.get(assessor_id)
        if qids is None:
            return _http_error(404, "unknown_assessor", f"no plan for {assessor_id!r}")
        listed = plan.rankings[plan.assessment_method]
        queries = []
        for qid in qids:
            records = []
            for rid in listed[qid]:
                try:
                    record = index.record(rid)
                except KeyError:
                    continue
                records.append({
                    "record_id": record.id,
                    "timestamp": record.timestamp,
                    "title": record.title,
                    "body": [[name, text] for name, text in record.body],
                    "attributes": list(record.attributes),
                })
            queries.append({"query_id": qid, "text": plan.queries[qid], "records": records})
        # intentionally no scores anywhere in this payload
        return {
            "assessor_id": assessor_id,
            "assessment_method": plan.assessment_method,
            "queries": queries,
        }

    @app.post("/api/feedback", status_code=201)
    async def post_feedback(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _http_error(400, "invalid_body", "body must be JSON")
        if not isinstance(body, dict):
            return _http_error(400, "invalid_body", "body must be a JSON object")
        missing = [
            key for key in ("assessor_id", "query_id", "record_id", "level", "relevant")
            if key not in body
        ]
        if missing:
            return _http_error(400, "invalid_body", f"missing fields: {', '.join(missing)}")
        if body["level"] not in LEVELS:
            return _http_error(400, "invalid_body", f"level must be one of {list(LEVELS)}")
        if not isinstance(body["relevant"], bool):
            return _http_error(400, "invalid_body", "relevant must be a boolean")
        record_id = str(body["record_id"])
        if record_id not in index.id_to_row:
            return _http_error(404, "unknown_record", f"no record {record_id!r}")
        query_id = str(body["query_id"])
        plan_id = "plan" if plan is not None and query_id in plan.queries else "ad-hoc"
        event = FeedbackEvent(
            assessor_id=str(body["assessor_id"]),
            query_id=query_id,
            record_id=record_id,
            level=str(body["level"]),
            relevant=body["relevant"],
            timestamp=log.next_timestamp(),
        )
        log.append(event)
        return {"status": "stored", "plan_id": plan_id, "event": event.as_dict()}

    @app.get("/api/export/feedback")
    async def export_feedback():
        lines = [
            json.dumps(event.as_dict(), ensure_ascii=False)
            for event in dedup_events(log.events())
        ]
        return PlainTextResponse(
            "\n".join(lines) + ("\n" if lines else ""),
            media_type="application/x-ndjson",
        )

    @app.get("/api/export/qrels")
    async def export_qrels():
        qrels = fuse_votes(log.events())
        lines = [
            f"{qid} 0 {rid} {qrels.grades[(qid, rid)]}"
            for qid, rid in sorted(qrels.grades)
        ]
        return PlainTextResponse("\n".join(lines) + ("\n" if lines else ""))

    if config.static_dir and Path(config.static_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.static_dir, html=True), name="ui")

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(build_app(config), host=config.host, port=config.port, log_level="info")
