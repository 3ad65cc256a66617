"""Flow orchestration over the store, prompt engine, and gateway.

One service instance backs both the HTTP facade and the CLI, so the two
surfaces cannot drift. All mutations append to the interaction log and
save before returning; streaming flows replace the document atomically
only after the stream completes.
"""

from __future__ import annotations

import threading
from dataclasses import replace
from typing import Callable, Optional

from . import model
from .errors import (
    EmptyPrompt,
    EmptyText,
    EmptyTitle,
    FlowInProgress,
    NoActiveWidgets,
    PromptCanvasError,
)
from .gateway import Gateway, StreamEvent, request_digest
from .model import ControlWidget, Workspace
from .prompts import (
    build_apply_prompt,
    build_apply_widgets,
    build_extract_value,
    build_generate_options,
    build_generate_widgets,
)
from .store import ACTOR_SYSTEM, ACTOR_USER, InteractionLogEntry, WorkspaceStore


class FlowService:
    def __init__(self, store: WorkspaceStore, gateway: Gateway):
        self.store = store
        self.gateway = gateway
        self._streaming: set[str] = set()
        self._streaming_lock = threading.Lock()

    # -- logging helpers ------------------------------------------------------

    def _log(self, workspace_id: str, actor: str, event: str, detail: dict):
        self.store.append_log(
            InteractionLogEntry(
                workspace_id=workspace_id, actor=actor, event=event, detail=detail
            )
        )

    # -- streaming slot (one modification stream per workspace) ---------------

    def acquire_flow(self, workspace_id: str):
        with self._streaming_lock:
            if workspace_id in self._streaming:
                raise FlowInProgress(
                    f"a streaming flow is already running for workspace {workspace_id}"
                )
            self._streaming.add(workspace_id)

    def release_flow(self, workspace_id: str):
        with self._streaming_lock:
            self._streaming.discard(workspace_id)

    # -- widget CRUD ----------------------------------------------------------

    def create_empty_widget(
        self, workspace_id: str, position: tuple[float, float]
    ) -> ControlWidget:
        with self.store.lock(workspace_id):
            workspace = self.store.load_workspace(workspace_id)
            widget = model.create_empty_widget(position)
            workspace.widgets.append(widget)
            self.store.save_workspace(workspace)
        self._log(workspace_id, ACTOR_USER, "widget_created",
                  {"widget_id": widget.id, "origin": widget.origin})
        return widget

    def move_widget(
        self,
        workspace_id: str,
        widget_id: str,
        zone: str,
        position: Optional[tuple[float, float]] = None,
    ) -> ControlWidget:
        with self.store.lock(workspace_id):
            workspace = self.store.load_workspace(workspace_id)
            workspace = model.move_widget(workspace, widget_id, zone, position)
            self.store.save_workspace(workspace)
        self._log(workspace_id, ACTOR_USER, "widget_moved",
                  {"widget_id": widget_id, "zone": zone})
        return workspace.widget_by_id(widget_id)

    def update_widget(
        self,
        workspace_id: str,
        widget_id: str,
        title: Optional[str] = None,
        value: Optional[str] = None,
        size: Optional[tuple[float, float]] = None,
    ) -> ControlWidget:
        with self.store.lock(workspace_id):
            workspace = self.store.load_workspace(workspace_id)
            widget = workspace.widget_by_id(widget_id)
            if title is not None:
                widget.title = title
            if value is not None:
                widget.value = value
            if size is not None:
                widget.size = (float(size[0]), float(size[1]))
            self.store.save_workspace(workspace)
        if value is not None:
            self._log(workspace_id, ACTOR_USER, "value_set",
                      {"widget_id": widget_id, "value": value})
        return widget

    def save_input(self, workspace_id: str, widget_id: str) -> ControlWidget:
        with self.store.lock(workspace_id):
            workspace = self.store.load_workspace(workspace_id)
            widget = workspace.widget_by_id(widget_id)
            updated = model.save_input(widget)
            workspace.widgets[workspace.widgets.index(widget)] = updated
            self.store.save_workspace(workspace)
        self._log(workspace_id, ACTOR_USER, "option_added",
                  {"widget_id": widget_id, "source": "save_input"})
        return updated

    def select_option(
        self, workspace_id: str, widget_id: str, option_index: int
    ) -> ControlWidget:
        with self.store.lock(workspace_id):
            workspace = self.store.load_workspace(workspace_id)
            widget = workspace.widget_by_id(widget_id)
            updated = model.set_value_from_option(widget, option_index)
            workspace.widgets[workspace.widgets.index(widget)] = updated
            self.store.save_workspace(workspace)
        self._log(workspace_id, ACTOR_USER, "value_set",
                  {"widget_id": widget_id, "value": updated.value})
        return updated

    def delete_widget(self, workspace_id: str, widget_id: str):
        with self.store.lock(workspace_id):
            workspace = self.store.load_workspace(workspace_id)
            widget = workspace.widget_by_id(widget_id)
            workspace.widgets.remove(widget)
            self.store.save_workspace(workspace)
        self._log(workspace_id, ACTOR_USER, "workspace_event",
                  {"action": "widget_deleted", "widget_id": widget_id})

    # -- document -------------------------------------------------------------

    def put_document(
        self, workspace_id: str, content: str, checkpoint: bool = False
    ) -> Workspace:
        with self.store.lock(workspace_id):
            workspace = self.store.load_workspace(workspace_id)
            if checkpoint:
                workspace.document = model.push_revision(
                    workspace.document, content, model.CAUSE_USER_EDIT
                )
            else:
                workspace.document.content = content
            self.store.save_workspace(workspace)
        if checkpoint:
            self._log(workspace_id, ACTOR_USER, "revision_pushed",
                      {"cause": model.CAUSE_USER_EDIT})
        return workspace

    def revert_document(self, workspace_id: str, revision_index: int) -> Workspace:
        with self.store.lock(workspace_id):
            workspace = self.store.load_workspace(workspace_id)
            workspace.document = model.revert_to(workspace.document, revision_index)
            self.store.save_workspace(workspace)
        self._log(workspace_id, ACTOR_USER, "reverted",
                  {"source_revision": revision_index})
        return workspace

    # -- structured flows -----------------------------------------------------

    def generate_widgets(
        self, workspace_id: str, guiding_prompt: Optional[str] = None
    ) -> list[ControlWidget]:
        with self.store.lock(workspace_id):
            workspace = self.store.load_workspace(workspace_id)
            existing_labels = [
                w.title for w in workspace.widgets if model.canonical(w.title)
            ]
            request = build_generate_widgets(
                workspace.document.content, existing_labels, guiding_prompt
            )
            self._log(workspace_id, ACTOR_USER, "flow_started",
                      {"flow": request.flow, "digest": request_digest(request)})
            try:
                result = self.gateway.complete_structured(request)
            except PromptCanvasError as exc:
                self._log(workspace_id, ACTOR_SYSTEM, "flow_failed",
                          {"flow": request.flow, "code": exc.code})
                raise
            specs = model.dedup_new_widgets(result.value, workspace.widgets)
            origin = (
                model.ORIGIN_PROMPTED
                if guiding_prompt and guiding_prompt.strip()
                else model.ORIGIN_SUGGESTED
            )
            created = [
                ControlWidget(
                    title=spec.label,
                    value=spec.value,
                    options=list(spec.options),
                    zone=model.ZONE_PANEL,
                    fresh=True,
                    origin=origin,
                )
                for spec in specs
            ]
            workspace.widgets.extend(created)
            self.store.save_workspace(workspace)
        self._log(workspace_id, ACTOR_SYSTEM, "flow_completed",
                  {"flow": request.flow, "attempts": result.attempts,
                   "widgets_created": len(created)})
        return created

    def suggest_options(
        self, workspace_id: str, widget_id: str,
        guiding_prompt: Optional[str] = None,
    ) -> ControlWidget:
        with self.store.lock(workspace_id):
            workspace = self.store.load_workspace(workspace_id)
            widget = workspace.widget_by_id(widget_id)
            existing: list[str] = []
            for candidate in [widget.value] + widget.options:
                key = model.canonical(candidate)
                if key and key not in existing:
                    existing.append(key)
            request = build_generate_options(
                widget.title, existing, workspace.document.content, guiding_prompt
            )
            self._log(workspace_id, ACTOR_USER, "flow_started",
                      {"flow": request.flow, "digest": request_digest(request)})
            try:
                result = self.gateway.complete_structured(request)
            except PromptCanvasError as exc:
                self._log(workspace_id, ACTOR_SYSTEM, "flow_failed",
                          {"flow": request.flow, "code": exc.code})
                raise
            # reversed insertion keeps the provider's order with newest on top
            for option in reversed(result.value):
                try:
                    widget = model.add_option(widget, option)
                except PromptCanvasError:
                    continue
            workspace.widgets[
                [w.id for w in workspace.widgets].index(widget_id)
            ] = widget
            self.store.save_workspace(workspace)
        self._log(workspace_id, ACTOR_SYSTEM, "flow_completed",
                  {"flow": request.flow, "attempts": result.attempts})
        self._log(workspace_id, ACTOR_SYSTEM, "option_added",
                  {"widget_id": widget_id, "source": request.flow})
        return widget

    def extract_value(self, workspace_id: str, widget_id: str) -> ControlWidget:
        with self.store.lock(workspace_id):
            workspace = self.store.load_workspace(workspace_id)
            widget = workspace.widget_by_id(widget_id)
            request = build_extract_value(widget.title, workspace.document.content)
            self._log(workspace_id, ACTOR_USER, "flow_started",
                      {"flow": request.flow, "digest": request_digest(request)})
            try:
                result = self.gateway.complete_structured(request)
            except PromptCanvasError as exc:
                self._log(workspace_id, ACTOR_SYSTEM, "flow_failed",
                          {"flow": request.flow, "code": exc.code})
                raise
            try:
                widget = model.add_option(widget, result.value)
            except PromptCanvasError:
                pass  # extracted an empty string: nothing to record
            workspace.widgets[
                [w.id for w in workspace.widgets].index(widget_id)
            ] = widget
            self.store.save_workspace(workspace)
        self._log(workspace_id, ACTOR_SYSTEM, "flow_completed",
                  {"flow": request.flow, "attempts": result.attempts})
        return widget

    # -- streaming flows ------------------------------------------------------

    def _run_stream(
        self,
        workspace_id: str,
        request,
        cause: str,
        sink: Callable[[StreamEvent], None],
        hold_slot: bool,
    ) -> str:
        if hold_slot:
            self.acquire_flow(workspace_id)
        try:
            self._log(workspace_id, ACTOR_USER, "flow_started",
                      {"flow": request.flow, "digest": request_digest(request)})
            try:
                final = self.gateway.complete_streaming(request, sink)
            except PromptCanvasError as exc:
                self._log(workspace_id, ACTOR_SYSTEM, "flow_failed",
                          {"flow": request.flow, "code": exc.code})
                raise
            with self.store.lock(workspace_id):
                workspace = self.store.load_workspace(workspace_id)
                workspace.document = model.push_revision(
                    workspace.document, final, cause
                )
                self.store.save_workspace(workspace)
            self._log(workspace_id, ACTOR_SYSTEM, "flow_completed",
                      {"flow": request.flow})
            self._log(workspace_id, ACTOR_SYSTEM, "revision_pushed", {"cause": cause})
            return final
        finally:
            if hold_slot:
                self.release_flow(workspace_id)

    def rephrase(
        self,
        workspace_id: str,
        sink: Callable[[StreamEvent], None],
        hold_slot: bool = True,
    ) -> str:
        """Apply all active widgets to the document, streaming the result."""
        workspace = self.store.load_workspace(workspace_id)
        pairs = model.active_pairs(workspace)
        if not pairs:
            raise NoActiveWidgets("no active widgets on the canvas")
        request = build_apply_widgets(workspace.document.content, pairs)
        return self._run_stream(
            workspace_id, request, model.CAUSE_REPHRASE_WIDGETS, sink, hold_slot
        )

    def apply_prompt(
        self,
        workspace_id: str,
        prompt: str,
        sink: Callable[[StreamEvent], None],
        hold_slot: bool = True,
    ) -> str:
        """Apply a free-form prompt to the document (may be empty), streaming."""
        workspace = self.store.load_workspace(workspace_id)
        request = build_apply_prompt(workspace.document.content, prompt)
        return self._run_stream(
            workspace_id, request, model.CAUSE_APPLY_PROMPT, sink, hold_slot
        )
