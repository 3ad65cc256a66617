"""HTTP facade: workspace CRUD, widget actions, the five flows, SSE streams.

Streaming endpoints emit server-sent events named ``delta``, ``done``, and
``error``; each event's data line is a JSON document, so payloads with
newlines survive the wire format.
"""

from __future__ import annotations

import json
import queue
import threading
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import model
from .errors import (
    AuthFailure,
    DuplicateOptions,
    EmptyName,
    EmptyOption,
    EmptyPrompt,
    EmptyText,
    EmptyTitle,
    EmptyValue,
    FixtureWriteError,
    FlowInProgress,
    IndexOutOfRange,
    MissingFixture,
    NameConflict,
    NoActiveWidgets,
    PromptCanvasError,
    ProviderUnavailable,
    SchemaViolation,
    SchemaViolationExhausted,
    StorageFailure,
    UnknownWidget,
    UnknownWorkspace,
)
from .gateway import EVENT_DONE, EVENT_ERROR, StreamEvent
from .service import FlowService

API_VERSION = "0.1.0"

STATUS_BY_CODE = {
    EmptyName.code: 400,
    EmptyOption.code: 400,
    EmptyValue.code: 400,
    EmptyText.code: 400,
    EmptyTitle.code: 400,
    EmptyPrompt.code: 400,
    IndexOutOfRange.code: 400,
    "invalid_request": 400,
    "not_found": 404,
    "method_not_allowed": 405,
    UnknownWorkspace.code: 404,
    UnknownWidget.code: 404,
    NameConflict.code: 409,
    NoActiveWidgets.code: 409,
    FlowInProgress.code: 409,
    SchemaViolation.code: 502,
    DuplicateOptions.code: 502,
    SchemaViolationExhausted.code: 502,
    ProviderUnavailable.code: 502,
    AuthFailure.code: 502,
    MissingFixture.code: 502,
    StorageFailure.code: 500,
    FixtureWriteError.code: 500,
}


def error_response(exc: PromptCanvasError) -> JSONResponse:
    status = STATUS_BY_CODE.get(exc.code, 500)
    return JSONResponse(
        status_code=status,
        content={"code": exc.code, "message": exc.message, "detail": exc.detail},
    )


# -- request bodies -----------------------------------------------------------

class WorkspaceBody(BaseModel):
    name: str


class WidgetCreateBody(BaseModel):
    position: tuple[float, float]


class WidgetMoveBody(BaseModel):
    zone: str
    position: Optional[tuple[float, float]] = None


class WidgetPatchBody(BaseModel):
    title: Optional[str] = None
    value: Optional[str] = None
    size: Optional[tuple[float, float]] = None


class SelectOptionBody(BaseModel):
    index: int


class GuidedBody(BaseModel):
    guiding_prompt: Optional[str] = None


class PromptBody(BaseModel):
    prompt: str


class DocumentPutBody(BaseModel):
    content: str
    checkpoint: bool = False


class RevertBody(BaseModel):
    revision_index: int


def _sse(event: str, data: object) -> str:
    return f"event: {event}\ndata: {json.dumps(data, ensure_ascii=False)}\n\n"


def create_app(service: FlowService) -> FastAPI:
    app = FastAPI(title="promptcanvas", version=API_VERSION)
    store = service.store

    @app.exception_handler(PromptCanvasError)
    async def handle_domain_error(request: Request, exc: PromptCanvasError):
        return error_response(exc)

    @app.exception_handler(StarletteHTTPException)
    async def handle_http_error(request: Request, exc: StarletteHTTPException):
        code = {400: "invalid_request", 404: "not_found",
                405: "method_not_allowed"}.get(exc.status_code, "error")
        return JSONResponse(
            status_code=exc.status_code,
            content={"code": code, "message": str(exc.detail), "detail": None},
        )

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={
                "code": "invalid_request",
                "message": "request body failed validation",
                "detail": json.loads(json.dumps(exc.errors(), default=str)),
            },
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/version")
    def version():
        return {"version": API_VERSION}

    # -- workspace CRUD -------------------------------------------------------

    @app.post("/workspaces", status_code=201)
    def create_workspace(body: WorkspaceBody):
        return store.create_workspace(body.name).to_dict()

    @app.get("/workspaces")
    def list_workspaces():
        return [s.to_dict() for s in store.list_workspaces()]

    @app.get("/workspaces/{workspace_id}")
    def get_workspace(workspace_id: str):
        return store.load_workspace(workspace_id).to_dict()

    @app.patch("/workspaces/{workspace_id}")
    def rename_workspace(workspace_id: str, body: WorkspaceBody):
        return store.rename_workspace(workspace_id, body.name).to_dict()

    @app.delete("/workspaces/{workspace_id}")
    def delete_workspace(workspace_id: str):
        store.delete_workspace(workspace_id)
        return {"deleted": workspace_id}

    @app.post("/workspaces/{workspace_id}:duplicate", status_code=201)
    def duplicate_workspace(workspace_id: str, body: WorkspaceBody):
        return store.duplicate_workspace(workspace_id, body.name).to_dict()

    # -- widget CRUD ----------------------------------------------------------

    @app.post("/workspaces/{workspace_id}/widgets", status_code=201)
    def create_widget(workspace_id: str, body: WidgetCreateBody):
        return service.create_empty_widget(workspace_id, body.position).to_dict()

    @app.post("/workspaces/{workspace_id}/widgets/{widget_id}:move")
    def move_widget(workspace_id: str, widget_id: str, body: WidgetMoveBody):
        return service.move_widget(
            workspace_id, widget_id, body.zone, body.position
        ).to_dict()

    @app.patch("/workspaces/{workspace_id}/widgets/{widget_id}")
    def patch_widget(workspace_id: str, widget_id: str, body: WidgetPatchBody):
        return service.update_widget(
            workspace_id, widget_id, title=body.title, value=body.value, size=body.size
        ).to_dict()

    @app.post("/workspaces/{workspace_id}/widgets/{widget_id}:save-input")
    def save_input(workspace_id: str, widget_id: str):
        return service.save_input(workspace_id, widget_id).to_dict()

    @app.post("/workspaces/{workspace_id}/widgets/{widget_id}:select-option")
    def select_option(workspace_id: str, widget_id: str, body: SelectOptionBody):
        return service.select_option(workspace_id, widget_id, body.index).to_dict()

    @app.delete("/workspaces/{workspace_id}/widgets/{widget_id}")
    def delete_widget(workspace_id: str, widget_id: str):
        service.delete_widget(workspace_id, widget_id)
        return {"deleted": widget_id}

    # -- structured flows -----------------------------------------------------

    @app.post("/workspaces/{workspace_id}/widgets:generate", status_code=201)
    def generate_widgets(workspace_id: str, body: Optional[GuidedBody] = None):
        guiding = body.guiding_prompt if body else None
        created = service.generate_widgets(workspace_id, guiding)
        return [w.to_dict() for w in created]

    @app.post("/workspaces/{workspace_id}/widgets/{widget_id}/options:suggest")
    def suggest_options(
        workspace_id: str, widget_id: str, body: Optional[GuidedBody] = None
    ):
        guiding = body.guiding_prompt if body else None
        return service.suggest_options(workspace_id, widget_id, guiding).to_dict()

    @app.post("/workspaces/{workspace_id}/widgets/{widget_id}/options:extract")
    def extract_value(workspace_id: str, widget_id: str):
        return service.extract_value(workspace_id, widget_id).to_dict()

    # -- document -------------------------------------------------------------

    @app.get("/workspaces/{workspace_id}/document")
    def get_document(workspace_id: str):
        return store.load_workspace(workspace_id).document.to_dict()

    @app.put("/workspaces/{workspace_id}/document")
    def put_document(workspace_id: str, body: DocumentPutBody):
        ws = service.put_document(workspace_id, body.content, body.checkpoint)
        return ws.document.to_dict()

    @app.get("/workspaces/{workspace_id}/document/history")
    def get_history(workspace_id: str):
        doc = store.load_workspace(workspace_id).document
        return [r.to_dict() for r in doc.history]

    @app.post("/workspaces/{workspace_id}/document:revert")
    def revert_document(workspace_id: str, body: RevertBody):
        ws = service.revert_document(workspace_id, body.revision_index)
        return ws.document.to_dict()

    # -- streaming flows ------------------------------------------------------

    def _stream_response(workspace_id: str, run) -> StreamingResponse:
        """Run a streaming flow on a worker thread, relaying events as SSE."""
        events: "queue.Queue[Optional[StreamEvent]]" = queue.Queue()
        service.acquire_flow(workspace_id)

        def work():
            try:
                run(events.put)
            except PromptCanvasError as exc:
                # gateway stream faults already emitted an error event
                if not (isinstance(exc.detail, dict) and "partial" in exc.detail):
                    events.put(StreamEvent(EVENT_ERROR, f"{exc.code}: {exc.message}"))
            except Exception as exc:  # pragma: no cover - safety net
                events.put(StreamEvent(EVENT_ERROR, str(exc)))
            finally:
                service.release_flow(workspace_id)
                events.put(None)

        thread = threading.Thread(target=work, daemon=True)

        def generate():
            thread.start()
            while True:
                event = events.get()
                if event is None:
                    break
                if event.kind == EVENT_ERROR:
                    yield _sse(EVENT_ERROR, {"code": "provider_unavailable",
                                             "message": event.payload})
                elif event.kind == EVENT_DONE:
                    yield _sse(EVENT_DONE, {"final": True})
                else:
                    yield _sse(event.kind, {"text": event.payload})

        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.post("/workspaces/{workspace_id}/document:rephrase")
    def rephrase(workspace_id: str):
        # pre-checks run before the response starts so they surface as HTTP errors
        workspace = store.load_workspace(workspace_id)
        if not model.active_pairs(workspace):
            raise NoActiveWidgets("no active widgets on the canvas")
        return _stream_response(
            workspace_id,
            lambda sink: service.rephrase(workspace_id, sink, hold_slot=False),
        )

    @app.post("/workspaces/{workspace_id}/document:prompt")
    def apply_prompt(workspace_id: str, body: PromptBody):
        store.load_workspace(workspace_id)
        if not body.prompt.strip():
            raise EmptyPrompt("prompt is empty")
        return _stream_response(
            workspace_id,
            lambda sink: service.apply_prompt(
                workspace_id, body.prompt, sink, hold_slot=False
            ),
        )

    return app
