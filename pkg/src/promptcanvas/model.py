"""Domain types and pure logic for widgets, workspaces, and documents.

All operations here are pure: they take values and return new values,
never mutating their arguments. Persistence and locking live elsewhere.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Optional

from .errors import (
    EmptyOption,
    EmptyValue,
    IndexOutOfRange,
    UnknownWidget,
)

ZONE_PANEL = "panel"
ZONE_CANVAS = "canvas"

ORIGIN_SUGGESTED = "suggested"
ORIGIN_PROMPTED = "prompted"
ORIGIN_MANUAL = "manual"

CAUSE_USER_EDIT = "user_edit"
CAUSE_GENERATE = "generate"
CAUSE_REPHRASE_WIDGETS = "rephrase_widgets"
CAUSE_APPLY_PROMPT = "apply_prompt"
CAUSE_REVERT = "revert"

REVISION_CAUSES = (
    CAUSE_USER_EDIT,
    CAUSE_GENERATE,
    CAUSE_REPHRASE_WIDGETS,
    CAUSE_APPLY_PROMPT,
    CAUSE_REVERT,
)

MAX_OPTIONS_PER_SPEC = 3


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def new_id() -> str:
    return str(uuid.uuid4())


def canonical(text: str) -> str:
    """Canonical form for option/label equality: trimmed, case-sensitive."""
    return text.strip()


@dataclass
class ControlWidget:
    """A reified text attribute: title, current value, and alternatives."""

    id: str = field(default_factory=new_id)
    title: str = ""
    value: str = ""
    options: list[str] = field(default_factory=list)
    zone: str = ZONE_PANEL
    position: Optional[tuple[float, float]] = None
    size: tuple[float, float] = (240.0, 120.0)
    fresh: bool = False
    origin: str = ORIGIN_MANUAL

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "value": self.value,
            "options": list(self.options),
            "zone": self.zone,
            "position": list(self.position) if self.position is not None else None,
            "size": list(self.size),
            "fresh": self.fresh,
            "origin": self.origin,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ControlWidget":
        pos = data.get("position")
        return cls(
            id=data["id"],
            title=data["title"],
            value=data["value"],
            options=list(data["options"]),
            zone=data["zone"],
            position=(pos[0], pos[1]) if pos is not None else None,
            size=tuple(data.get("size", (240.0, 120.0))),
            fresh=data.get("fresh", False),
            origin=data.get("origin", ORIGIN_MANUAL),
        )


@dataclass
class Revision:
    """Snapshot of document text taken just before it was replaced."""

    text: str
    cause: str
    timestamp: str = field(default_factory=utc_now_iso)
    source_revision: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "cause": self.cause,
            "timestamp": self.timestamp,
            "source_revision": self.source_revision,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Revision":
        return cls(
            text=data["text"],
            cause=data["cause"],
            timestamp=data["timestamp"],
            source_revision=data.get("source_revision"),
        )


@dataclass
class Document:
    content: str = ""
    history: list[Revision] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"content": self.content, "history": [r.to_dict() for r in self.history]}

    @classmethod
    def from_dict(cls, data: dict) -> "Document":
        return cls(
            content=data["content"],
            history=[Revision.from_dict(r) for r in data["history"]],
        )


@dataclass
class Viewport:
    pan: tuple[float, float] = (0.0, 0.0)
    zoom: float = 1.0

    def to_dict(self) -> dict:
        return {"pan": list(self.pan), "zoom": self.zoom}

    @classmethod
    def from_dict(cls, data: dict) -> "Viewport":
        return cls(pan=tuple(data["pan"]), zoom=data["zoom"])


@dataclass
class Workspace:
    """One named canvas: its widgets, document, and viewport."""

    id: str = field(default_factory=new_id)
    name: str = ""
    widgets: list[ControlWidget] = field(default_factory=list)
    document: Document = field(default_factory=Document)
    viewport: Viewport = field(default_factory=Viewport)
    created_at: str = field(default_factory=utc_now_iso)
    modified_at: str = field(default_factory=utc_now_iso)

    def widget_by_id(self, widget_id: str) -> ControlWidget:
        for w in self.widgets:
            if w.id == widget_id:
                return w
        raise UnknownWidget(f"no widget with id {widget_id!r}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "widgets": [w.to_dict() for w in self.widgets],
            "document": self.document.to_dict(),
            "viewport": self.viewport.to_dict(),
            "created_at": self.created_at,
            "modified_at": self.modified_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Workspace":
        return cls(
            id=data["id"],
            name=data["name"],
            widgets=[ControlWidget.from_dict(w) for w in data["widgets"]],
            document=Document.from_dict(data["document"]),
            viewport=Viewport.from_dict(data["viewport"]),
            created_at=data["created_at"],
            modified_at=data["modified_at"],
        )


@dataclass
class WidgetSpec:
    """Draft widget as produced by the widget-generation flow."""

    label: str
    value: str
    options: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"label": self.label, "value": self.value, "options": list(self.options)}


# -- widget operations --------------------------------------------------------

def create_empty_widget(position: tuple[float, float]) -> ControlWidget:
    """Blank widget placed directly on the canvas (double-click gesture)."""
    return ControlWidget(
        zone=ZONE_CANVAS,
        position=(float(position[0]), float(position[1])),
        origin=ORIGIN_MANUAL,
        fresh=False,
    )


def add_option(widget: ControlWidget, option: str) -> ControlWidget:
    """Insert a new option at the top of the list; duplicates are dropped."""
    trimmed = canonical(option)
    if not trimmed:
        raise EmptyOption("option is empty after trimming")
    if any(canonical(o) == trimmed for o in widget.options):
        return replace(widget, options=list(widget.options))
    return replace(widget, options=[trimmed] + list(widget.options))


def save_input(widget: ControlWidget) -> ControlWidget:
    """Add the widget's current value to its options list."""
    if not canonical(widget.value):
        raise EmptyValue("widget value is empty after trimming")
    return add_option(widget, widget.value)


def set_value_from_option(widget: ControlWidget, option_index: int) -> ControlWidget:
    if not 0 <= option_index < len(widget.options):
        raise IndexOutOfRange(
            f"option index {option_index} out of range for {len(widget.options)} options"
        )
    return replace(widget, value=widget.options[option_index], options=list(widget.options))


def move_widget(
    workspace: Workspace,
    widget_id: str,
    target_zone: str,
    position: Optional[tuple[float, float]] = None,
) -> Workspace:
    """Move a widget between panel and canvas (or within the canvas).

    Landing on the canvas clears the fresh flag; returning to the panel
    clears the position.
    """
    found = False
    widgets: list[ControlWidget] = []
    for w in workspace.widgets:
        if w.id != widget_id:
            widgets.append(w)
            continue
        found = True
        if target_zone == ZONE_CANVAS:
            pos = position if position is not None else (w.position or (0.0, 0.0))
            widgets.append(replace(w, zone=ZONE_CANVAS, position=tuple(pos), fresh=False))
        else:
            widgets.append(replace(w, zone=ZONE_PANEL, position=None))
    if not found:
        raise UnknownWidget(f"no widget with id {widget_id!r}")
    return replace(workspace, widgets=widgets)


def acknowledge_fresh(widget: ControlWidget) -> ControlWidget:
    return replace(widget, fresh=False)


def active_pairs(workspace: Workspace) -> list[tuple[str, str]]:
    """(title, value) of canvas widgets with nonempty trimmed title and value.

    Panel widgets never contribute; order follows the widget list, which is
    creation order.
    """
    pairs = []
    for w in workspace.widgets:
        if w.zone != ZONE_CANVAS:
            continue
        title = canonical(w.title)
        value = canonical(w.value)
        if title and value:
            pairs.append((title, value))
    return pairs


def dedup_new_widgets(
    drafts: list[WidgetSpec], existing: list[ControlWidget]
) -> list[WidgetSpec]:
    """Drop drafts colliding with existing titles or earlier drafts.

    Surviving drafts get order-preserving unique options truncated to three.
    """
    seen = {canonical(w.title) for w in existing}
    result: list[WidgetSpec] = []
    for draft in drafts:
        label = canonical(draft.label)
        if label in seen:
            continue
        seen.add(label)
        options: list[str] = []
        taken: set[str] = set()
        for opt in draft.options:
            key = canonical(opt)
            if key in taken:
                continue
            taken.add(key)
            options.append(opt)
            if len(options) == MAX_OPTIONS_PER_SPEC:
                break
        result.append(WidgetSpec(label=draft.label, value=draft.value, options=options))
    return result


def word_count(text: str) -> int:
    """Count maximal runs of non-whitespace characters."""
    return len(text.split())


# -- document operations ------------------------------------------------------

def push_revision(document: Document, new_text: str, cause: str) -> Document:
    """Replace content, recording the prior content as one new revision."""
    snapshot = Revision(text=document.content, cause=cause)
    return Document(content=new_text, history=list(document.history) + [snapshot])


def revert_to(document: Document, revision_index: int) -> Document:
    """Restore a past revision's text, appending (never truncating) history."""
    if not 0 <= revision_index < len(document.history):
        raise IndexOutOfRange(
            f"revision index {revision_index} out of range for {len(document.history)} revisions"
        )
    snapshot = Revision(
        text=document.content, cause=CAUSE_REVERT, source_revision=revision_index
    )
    return Document(
        content=document.history[revision_index].text,
        history=list(document.history) + [snapshot],
    )
