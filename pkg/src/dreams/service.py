"""HTTP front end over a directory of model files.

One canonical file per model. Reads serve in-memory snapshots; every
mutation takes the model's lock, applies the change to a copy, writes
the file atomically, and only then swaps the snapshot, so a failed
write leaves both memory and disk unchanged. Clients pass the revision
they saw in If-Match; a mismatch is rejected instead of merged.
"""

from __future__ import annotations

import copy
import logging
import os
import threading
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import model as model_ops
from .errors import (
    ConflictError,
    DreamsError,
    NotFoundError,
    ParseError,
    StaleRevisionError,
    StorageError,
    UnsupportedVersionError,
    ValidationError,
)
from .layout import LayeredLayout, layout as compute_layout
from .metrics import model_stats
from .model import EvidenceKind, ModelDocument, ModelKind, NodeKind, Polarity
from .search import SearchQuery, build_index, query as run_query
from .store import document_to_dict, load_document, save_document

log = logging.getLogger("dreams.service")

DEFAULT_BIND = "127.0.0.1:7421"

ERROR_STATUS = {
    "validation_error": 422,
    "not_found": 404,
    "conflict": 409,
    "stale_revision": 409,
    "unsupported_version": 400,
    "malformed_body": 400,
    "io_error": 503,
}

_ERROR_CODES: list[tuple[type, str]] = [
    (ValidationError, "validation_error"),
    (NotFoundError, "not_found"),
    (StaleRevisionError, "stale_revision"),
    (ConflictError, "conflict"),
    (UnsupportedVersionError, "unsupported_version"),
    (StorageError, "io_error"),
]


class BadRequestError(DreamsError):
    """Request body or headers are structurally wrong."""


def error_body(code: str, detail: str, offending_id: str | None = None) -> dict:
    return {
        "status": ERROR_STATUS[code],
        "code": code,
        "detail": detail,
        "offending_id": offending_id,
    }


def _error_code(exc: DreamsError) -> str:
    for cls, code in _ERROR_CODES:
        if isinstance(exc, cls):
            return code
    return "malformed_body" if isinstance(exc, BadRequestError) else "validation_error"


class DocumentStore:
    """In-memory snapshots backed by one .dreams.json file per model."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._documents: dict[str, ModelDocument] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._layout_lock = threading.Lock()
        self._layout_cache: dict[tuple[str, int, bool], LayeredLayout] = {}
        self._layout_seed: dict[str, LayeredLayout] = {}
        self._load_existing()

    def _path(self, model_id: str) -> Path:
        return self.data_dir / f"{model_id}.dreams.json"

    def _load_existing(self) -> None:
        for path in sorted(self.data_dir.glob("*.dreams.json")):
            try:
                document = load_document(path)
            except DreamsError as exc:
                log.warning("skipping %s: %s", path.name, exc.detail)
                continue
            self._documents[document.id] = document

    def _lock_for(self, model_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(model_id, threading.Lock())

    def ids(self) -> list[str]:
        return sorted(self._documents)

    def get(self, model_id: str) -> ModelDocument:
        """Return the current snapshot. Callers must not mutate it."""
        document = self._documents.get(model_id)
        if document is None:
            raise NotFoundError(f"no model with id {model_id!r}", offending_id=model_id)
        return document

    def _persist(self, document: ModelDocument) -> None:
        try:
            save_document(document, self._path(document.id))
        except OSError as exc:
            raise StorageError(f"could not write model file: {exc}") from exc

    def create(self, kind: ModelKind, title: str) -> ModelDocument:
        document = model_ops.create_model(kind, title)
        with self._lock_for(document.id):
            self._persist(document)
            self._documents[document.id] = document
        return document

    def mutate(self, model_id: str, expected_revision: int, fn: Callable[[ModelDocument], object]):
        """Apply fn to a copy, persist, then swap. Returns (document, fn result)."""
        with self._lock_for(model_id):
            current = self.get(model_id)
            if current.revision != expected_revision:
                raise StaleRevisionError(
                    f"expected revision {expected_revision}, document is at {current.revision}",
                    offending_id=model_id,
                )
            working = copy.deepcopy(current)
            result = fn(working)
            self._persist(working)
            self._documents[model_id] = working
        self._drop_stale_layouts(model_id, working.revision)
        return working, result

    def delete(self, model_id: str, expected_revision: int) -> None:
        with self._lock_for(model_id):
            current = self.get(model_id)
            if current.revision != expected_revision:
                raise StaleRevisionError(
                    f"expected revision {expected_revision}, document is at {current.revision}",
                    offending_id=model_id,
                )
            try:
                os.unlink(self._path(model_id))
            except FileNotFoundError:
                pass
            except OSError as exc:
                raise StorageError(f"could not remove model file: {exc}") from exc
            del self._documents[model_id]
        with self._layout_lock:
            self._layout_seed.pop(model_id, None)
            self._layout_cache = {k: v for k, v in self._layout_cache.items() if k[0] != model_id}

    def _drop_stale_layouts(self, model_id: str, current_revision: int) -> None:
        with self._layout_lock:
            self._layout_cache = {
                k: v
                for k, v in self._layout_cache.items()
                if k[0] != model_id or k[1] == current_revision
            }

    def layout_for(self, model_id: str, incremental: bool) -> tuple[ModelDocument, LayeredLayout]:
        """Compute (or reuse) the layout at the current revision.

        Incremental mode seeds from the last layout served for this
        model, keeping node order stable across small edits.
        """
        document = self.get(model_id)
        key = (model_id, document.revision, incremental)
        with self._layout_lock:
            cached = self._layout_cache.get(key)
            previous = self._layout_seed.get(model_id) if incremental else None
        if cached is None:
            cached = compute_layout(document, previous_layout=previous)
            with self._layout_lock:
                cached = self._layout_cache.setdefault(key, cached)
                self._layout_seed[model_id] = cached
        return document, cached


def layout_body(document: ModelDocument, result: LayeredLayout) -> dict:
    body = result.to_dict()
    body["revision"] = document.revision
    return body


def search_body(document: ModelDocument, hits) -> dict:
    return {"revision": document.revision, "hits": [h.to_dict() for h in hits]}


def stats_body(document: ModelDocument, result: LayeredLayout) -> dict:
    return model_stats(document, result).to_dict()


def _parse_search_query(
    q: str, kind: str | None, polarity: str | None, evidence: str | None, limit: int
) -> SearchQuery:
    try:
        return SearchQuery(
            text=q,
            kind_filter=NodeKind(kind) if kind else None,
            polarity_filter=Polarity(polarity) if polarity else None,
            evidence_filter=EvidenceKind(evidence) if evidence else None,
            limit=limit,
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def _require_revision(request: Request) -> int:
    raw = request.headers.get("if-match")
    if raw is None:
        raise BadRequestError("mutations require an If-Match header with the document revision")
    value = raw.strip().strip('"')
    if not value.isdigit():
        raise BadRequestError(f"If-Match must be a revision number, got {raw!r}")
    return int(value)


class _Body:
    """A JSON object body with an exact set of allowed keys."""

    def __init__(self, data: object, allowed: set[str]):
        if not isinstance(data, dict):
            raise BadRequestError("request body must be a JSON object")
        unknown = set(data) - allowed
        if unknown:
            raise BadRequestError(f"unknown body fields: {', '.join(sorted(unknown))}")
        self.data = data

    def require(self, key: str) -> str:
        value = self.data.get(key)
        if not isinstance(value, str):
            raise BadRequestError(f"body field {key!r} must be a string")
        return value

    def optional(self, key: str) -> str | None:
        value = self.data.get(key)
        if value is not None and not isinstance(value, str):
            raise BadRequestError(f"body field {key!r} must be a string or null")
        return value

    def string_list(self, key: str) -> list[str] | None:
        value = self.data.get(key)
        if value is None:
            return None
        if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
            raise BadRequestError(f"body field {key!r} must be a list of strings")
        return value

    def __contains__(self, key: str) -> bool:
        return key in self.data


def _enum(enum_cls, value: str, what: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in enum_cls)
        raise ValidationError(f"unknown {what} {value!r}; expected one of: {allowed}")


def _document_response(document: ModelDocument, status: int = 200, location: str | None = None) -> JSONResponse:
    headers = {"ETag": f'"{document.revision}"'}
    if location is not None:
        headers["Location"] = location
    return JSONResponse(document_to_dict(document), status_code=status, headers=headers)


def create_app(data_dir: str | Path | None = None, cors_origins: list[str] | None = None) -> FastAPI:
    """Build the application over a store directory.

    data_dir falls back to DREAMS_DATA_DIR, then ./dreams-data. The
    store is shared by all requests; app.state.store exposes it for
    tests and embedding.
    """
    if data_dir is None:
        data_dir = os.environ.get("DREAMS_DATA_DIR", "dreams-data")
    store = DocumentStore(data_dir)

    app = FastAPI(title="dreams", docs_url=None, redoc_url=None, openapi_url=None)
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins if cors_origins is not None else ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["ETag", "Location"],
    )

    @app.exception_handler(DreamsError)
    async def _dreams_error(request: Request, exc: DreamsError) -> JSONResponse:
        code = _error_code(exc)
        body = error_body(code, exc.detail, exc.offending_id)
        return JSONResponse(body, status_code=body["status"])

    @app.exception_handler(RequestValidationError)
    async def _request_error(request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(error_body("malformed_body", "malformed request"), status_code=400)

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(request: Request, exc: StarletteHTTPException) -> JSONResponse:
        code = "not_found" if exc.status_code == 404 else "malformed_body"
        body = {
            "status": exc.status_code,
            "code": code,
            "detail": str(exc.detail),
            "offending_id": None,
        }
        return JSONResponse(body, status_code=exc.status_code)

    async def _json_body(request: Request) -> object:
        try:
            return await request.json()
        except Exception as exc:
            raise BadRequestError("request body is not valid JSON") from exc

    # -- model collection ------------------------------------------------

    @app.get("/models")
    async def list_models() -> dict:
        rows = []
        for model_id in store.ids():
            document = store.get(model_id)
            rows.append(
                {
                    "id": document.id,
                    "kind": document.kind.value,
                    "title": document.title,
                    "revision": document.revision,
                }
            )
        return {"models": rows}

    @app.post("/models")
    async def post_model(request: Request) -> JSONResponse:
        body = _Body(await _json_body(request), {"kind", "title"})
        kind = _enum(ModelKind, body.require("kind"), "model kind")
        document = store.create(kind, body.require("title"))
        return _document_response(document, status=201, location=f"/models/{document.id}")

    @app.get("/models/{model_id}")
    async def get_model(model_id: str) -> JSONResponse:
        return _document_response(store.get(model_id))

    @app.delete("/models/{model_id}")
    async def delete_model(model_id: str, request: Request) -> Response:
        store.delete(model_id, _require_revision(request))
        return Response(status_code=204)

    # -- nodes -----------------------------------------------------------

    @app.post("/models/{model_id}/nodes")
    async def post_node(model_id: str, request: Request) -> JSONResponse:
        revision = _require_revision(request)
        body = _Body(await _json_body(request), {"kind", "label", "notes", "tags"})
        kind = _enum(NodeKind, body.require("kind"), "node kind")
        label = body.require("label")
        notes = body.optional("notes")
        tags = body.string_list("tags")
        document, node_id = store.mutate(
            model_id, revision, lambda m: model_ops.add_node(m, kind, label, notes=notes, tags=tags)
        )
        return _document_response(
            document, status=201, location=f"/models/{model_id}/nodes/{node_id}"
        )

    @app.patch("/models/{model_id}/nodes/{node_id}")
    async def patch_node(model_id: str, node_id: str, request: Request) -> JSONResponse:
        revision = _require_revision(request)
        body = _Body(await _json_body(request), {"kind", "label", "notes", "tags"})
        kind = _enum(NodeKind, body.require("kind"), "node kind") if "kind" in body else None
        label = body.optional("label")
        notes = body.optional("notes")
        tags = body.string_list("tags")
        document, _ = store.mutate(
            model_id,
            revision,
            lambda m: model_ops.update_node(m, node_id, label=label, kind=kind, notes=notes, tags=tags),
        )
        return _document_response(document)

    @app.delete("/models/{model_id}/nodes/{node_id}")
    async def delete_node(model_id: str, node_id: str, request: Request) -> JSONResponse:
        revision = _require_revision(request)
        document, _ = store.mutate(model_id, revision, lambda m: model_ops.remove_node(m, node_id))
        return _document_response(document)

    # -- links -----------------------------------------------------------

    @app.post("/models/{model_id}/links")
    async def post_link(model_id: str, request: Request) -> JSONResponse:
        revision = _require_revision(request)
        body = _Body(await _json_body(request), {"source", "target", "polarity", "notes"})
        polarity = _enum(Polarity, body.require("polarity"), "polarity")
        source = body.require("source")
        target = body.require("target")
        notes = body.optional("notes")

        def apply(m: ModelDocument) -> str:
            link_id = model_ops.add_link(m, source, target, polarity)
            if notes is not None:
                model_ops.update_link_notes(m, link_id, notes)
                m.revision -= 1  # one mutation from the client's view
            return link_id

        document, link_id = store.mutate(model_id, revision, apply)
        return _document_response(
            document, status=201, location=f"/models/{model_id}/links/{link_id}"
        )

    @app.patch("/models/{model_id}/links/{link_id}")
    async def patch_link(model_id: str, link_id: str, request: Request) -> JSONResponse:
        revision = _require_revision(request)
        body = _Body(await _json_body(request), {"polarity", "notes"})
        polarity = _enum(Polarity, body.require("polarity"), "polarity") if "polarity" in body else None
        notes = body.optional("notes") if "notes" in body else None
        touch_notes = "notes" in body

        def apply(m: ModelDocument) -> None:
            bumped = 0
            if polarity is not None:
                model_ops.update_link_polarity(m, link_id, polarity)
                bumped += 1
            if touch_notes:
                model_ops.update_link_notes(m, link_id, notes)
                bumped += 1
            if bumped == 0:
                m.link(link_id)  # surface not_found even for no-op patches
                m.revision += 1
            else:
                m.revision -= bumped - 1

        document, _ = store.mutate(model_id, revision, apply)
        return _document_response(document)

    @app.delete("/models/{model_id}/links/{link_id}")
    async def delete_link(model_id: str, link_id: str, request: Request) -> JSONResponse:
        revision = _require_revision(request)
        document, _ = store.mutate(model_id, revision, lambda m: model_ops.remove_link(m, link_id))
        return _document_response(document)

    # -- evidence ----------------------------------------------------------

    @app.post("/models/{model_id}/links/{link_id}/evidence")
    async def post_evidence(model_id: str, link_id: str, request: Request) -> JSONResponse:
        revision = _require_revision(request)
        body = _Body(await _json_body(request), {"kind", "text", "locator"})
        kind = _enum(EvidenceKind, body.require("kind"), "evidence kind")
        text = body.require("text")
        locator = body.optional("locator")
        document, evidence_id = store.mutate(
            model_id,
            revision,
            lambda m: model_ops.attach_evidence(m, link_id, kind, text, locator=locator),
        )
        return _document_response(
            document,
            status=201,
            location=f"/models/{model_id}/links/{link_id}/evidence/{evidence_id}",
        )

    @app.delete("/models/{model_id}/links/{link_id}/evidence/{evidence_id}")
    async def delete_evidence(
        model_id: str, link_id: str, evidence_id: str, request: Request
    ) -> JSONResponse:
        revision = _require_revision(request)
        document, _ = store.mutate(
            model_id, revision, lambda m: model_ops.detach_evidence(m, link_id, evidence_id)
        )
        return _document_response(document)

    # -- read-only computations --------------------------------------------

    @app.get("/models/{model_id}/layout")
    async def get_layout(model_id: str, incremental: bool = Query(default=True)) -> dict:
        document, result = store.layout_for(model_id, incremental)
        return layout_body(document, result)

    @app.get("/models/{model_id}/search")
    async def get_search(
        model_id: str,
        q: str = Query(default=""),
        kind: str | None = Query(default=None),
        polarity: str | None = Query(default=None),
        evidence: str | None = Query(default=None),
        limit: int = Query(default=20),
    ) -> dict:
        document = store.get(model_id)
        if limit < 1:
            raise ValidationError("limit must be at least 1")
        search_query = _parse_search_query(q, kind, polarity, evidence, limit)
        index = build_index(document)
        hits = run_query(index, document, search_query)
        return search_body(document, hits)

    @app.get("/models/{model_id}/stats")
    async def get_stats(model_id: str) -> dict:
        document, result = store.layout_for(model_id, incremental=False)
        return stats_body(document, result)

    return app


def parse_bind(value: str | None) -> tuple[str, int]:
    """Split a host:port string; value falls back to DREAMS_BIND, then the default."""
    if value is None:
        value = os.environ.get("DREAMS_BIND", DEFAULT_BIND)
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise ValidationError(f"bind address must be host:port, got {value!r}")
    return host, int(port)


def serve(data_dir: str | Path | None = None, bind: str | None = None) -> None:
    """Run the HTTP server until interrupted."""
    import uvicorn

    host, port = parse_bind(bind)
    app = create_app(data_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
