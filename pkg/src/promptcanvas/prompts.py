"""Message construction and result parsing for the five orchestration flows.

Everything here is deterministic: identical inputs produce byte-identical
requests. System messages are versioned text assets under ``templates/``.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Optional

from .errors import (
    DuplicateOptions,
    EmptyPrompt,
    EmptyText,
    EmptyTitle,
    NoActiveWidgets,
    SchemaViolation,
)
from .model import WidgetSpec, canonical

DEFAULT_TEMPERATURE = 1.06

FLOW_GENERATE_WIDGETS = "generate_widgets"
FLOW_GENERATE_OPTIONS = "generate_options"
FLOW_EXTRACT_VALUE = "extract_value"
FLOW_APPLY_WIDGETS = "apply_widgets"
FLOW_APPLY_PROMPT = "apply_prompt"

STREAMING_FLOWS = (FLOW_APPLY_WIDGETS, FLOW_APPLY_PROMPT)
STRUCTURED_FLOWS = (FLOW_GENERATE_WIDGETS, FLOW_GENERATE_OPTIONS, FLOW_EXTRACT_VALUE)

ROLE_SYSTEM = "system"
ROLE_USER = "user"


def _template(name: str) -> str:
    return resources.files("promptcanvas.templates").joinpath(name).read_text("utf-8")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class ResponseSchema:
    """Shape descriptor for a flow's structured result."""

    name: str
    json_schema: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "schema": self.json_schema}


WIDGET_ARRAY_SCHEMA = ResponseSchema(
    name="widget_array",
    json_schema={
        "type": "object",
        "properties": {
            "widgets": {
                "type": "array",
                "minItems": 1,
                "maxItems": 4,
                "items": {
                    "type": "object",
                    "properties": {
                        "label": {"type": "string"},
                        "value": {"type": "string"},
                        "options": {
                            "type": "array",
                            "maxItems": 3,
                            "items": {"type": "string"},
                        },
                    },
                    "required": ["label", "value", "options"],
                    "additionalProperties": False,
                },
            }
        },
        "required": ["widgets"],
        "additionalProperties": False,
    },
)

OPTION_PAIR_SCHEMA = ResponseSchema(
    name="option_pair",
    json_schema={
        "type": "object",
        "properties": {
            "options": {
                "type": "array",
                "minItems": 2,
                "maxItems": 2,
                "items": {"type": "string"},
            }
        },
        "required": ["options"],
        "additionalProperties": False,
    },
)

SINGLE_STRING_SCHEMA = ResponseSchema(
    name="single_string",
    json_schema={
        "type": "object",
        "properties": {"value": {"type": "string"}},
        "required": ["value"],
        "additionalProperties": False,
    },
)


@dataclass(frozen=True)
class FlowRequest:
    flow: str
    messages: tuple[ChatMessage, ...]
    response_schema: Optional[ResponseSchema] = None
    stream: bool = False
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self):
        expect_stream = self.flow in STREAMING_FLOWS
        assert self.stream == expect_stream, "stream flag must match flow category"
        expect_schema = self.flow in STRUCTURED_FLOWS
        assert (self.response_schema is not None) == expect_schema

    def to_dict(self) -> dict:
        return {
            "flow": self.flow,
            "messages": [m.to_dict() for m in self.messages],
            "response_schema": self.response_schema.to_dict() if self.response_schema else None,
            "stream": self.stream,
            "temperature": self.temperature,
        }


def fence_text(text: str) -> str:
    """Wrap text in a quote fence the text itself cannot terminate.

    Starts at the triple quote and widens (3, 5, 7, ...) until the fence
    does not occur inside the text.
    """
    n = 3
    while '"' * n in text:
        n += 2
    fence = '"' * n
    return f"{fence}\n{text}\n{fence}"


def _guidance_block(guiding_prompt: Optional[str]) -> str:
    if guiding_prompt is None or not guiding_prompt.strip():
        return ""
    return f"\n\nGuiding instruction (follow it exactly):\n{fence_text(guiding_prompt)}"


def build_generate_widgets(
    text: str,
    existing_labels: list[str],
    guiding_prompt: Optional[str] = None,
) -> FlowRequest:
    if not text.strip():
        raise EmptyText("cannot generate widgets for empty text")
    labels = ", ".join(existing_labels) if existing_labels else "(none)"
    user = (
        f"Text:\n{fence_text(text)}\n\n"
        f"Existing widget labels (do not recreate these): {labels}"
        f"{_guidance_block(guiding_prompt)}"
    )
    return FlowRequest(
        flow=FLOW_GENERATE_WIDGETS,
        messages=(
            ChatMessage(ROLE_SYSTEM, _template("generate_widgets_system.txt")),
            ChatMessage(ROLE_USER, user),
        ),
        response_schema=WIDGET_ARRAY_SCHEMA,
    )


def build_generate_options(
    widget_title: str,
    existing_values: list[str],
    text: str,
    guiding_prompt: Optional[str] = None,
) -> FlowRequest:
    if not widget_title.strip():
        raise EmptyTitle("widget title is empty")
    values = ", ".join(existing_values) if existing_values else "(none)"
    user = (
        f"Widget label: {widget_title}\n\n"
        f"Text:\n{fence_text(text)}\n\n"
        f"Note: these values already exist, do not repeat them: {values}"
        f"{_guidance_block(guiding_prompt)}"
    )
    return FlowRequest(
        flow=FLOW_GENERATE_OPTIONS,
        messages=(
            ChatMessage(ROLE_SYSTEM, _template("generate_options_system.txt")),
            ChatMessage(ROLE_USER, user),
        ),
        response_schema=OPTION_PAIR_SCHEMA,
    )


def build_extract_value(widget_title: str, text: str) -> FlowRequest:
    if not widget_title.strip():
        raise EmptyTitle("widget title is empty")
    if not text.strip():
        raise EmptyText("cannot extract a value from empty text")
    user = f"Widget title: {widget_title}\n\nText:\n{fence_text(text)}"
    return FlowRequest(
        flow=FLOW_EXTRACT_VALUE,
        messages=(
            ChatMessage(ROLE_SYSTEM, _template("extract_value_system.txt")),
            ChatMessage(ROLE_USER, user),
        ),
        response_schema=SINGLE_STRING_SCHEMA,
    )


def build_apply_widgets(text: str, pairs: list[tuple[str, str]]) -> FlowRequest:
    if not pairs:
        raise NoActiveWidgets("no active widgets to apply")
    if not text.strip():
        raise EmptyText("cannot rephrase empty text")
    spec_lines = "\n".join(f"{label}: {value}" for label, value in pairs)
    user = (
        f"Text:\n{fence_text(text)}\n\n"
        f"Specifications:\n{fence_text(spec_lines)}"
    )
    return FlowRequest(
        flow=FLOW_APPLY_WIDGETS,
        messages=(
            ChatMessage(ROLE_SYSTEM, _template("apply_widgets_system.txt")),
            ChatMessage(ROLE_USER, user),
        ),
        stream=True,
    )


def build_apply_prompt(text: str, prompt: str) -> FlowRequest:
    if not prompt.strip():
        raise EmptyPrompt("prompt is empty")
    user = (
        f"Text (may be empty):\n{fence_text(text)}\n\n"
        f"Instruction:\n{fence_text(prompt)}"
    )
    return FlowRequest(
        flow=FLOW_APPLY_PROMPT,
        messages=(
            ChatMessage(ROLE_SYSTEM, _template("apply_prompt_system.txt")),
            ChatMessage(ROLE_USER, user),
        ),
        stream=True,
    )


# -- strict parsing -----------------------------------------------------------

def _require(cond: bool, message: str, path: str):
    if not cond:
        raise SchemaViolation(message, path=path)


def parse_widgets_response(raw: object) -> list[WidgetSpec]:
    """Validate the widget-array payload: 1-4 widgets, <=3 options each."""
    _require(isinstance(raw, dict), "payload must be an object", "$")
    _require(set(raw.keys()) == {"widgets"}, "payload must contain exactly 'widgets'", "$")
    widgets = raw["widgets"]
    _require(isinstance(widgets, list), "'widgets' must be an array", "$.widgets")
    _require(1 <= len(widgets) <= 4, "widget count must be between 1 and 4", "$.widgets")
    specs = []
    for i, item in enumerate(widgets):
        path = f"$.widgets[{i}]"
        _require(isinstance(item, dict), "widget must be an object", path)
        _require(
            set(item.keys()) == {"label", "value", "options"},
            "widget must contain exactly label, value, options",
            path,
        )
        _require(isinstance(item["label"], str), "label must be a string", f"{path}.label")
        _require(isinstance(item["value"], str), "value must be a string", f"{path}.value")
        options = item["options"]
        _require(isinstance(options, list), "options must be an array", f"{path}.options")
        _require(len(options) <= 3, "at most 3 options allowed", f"{path}.options")
        for j, opt in enumerate(options):
            _require(isinstance(opt, str), "option must be a string", f"{path}.options[{j}]")
        specs.append(WidgetSpec(label=item["label"], value=item["value"], options=list(options)))
    return specs


def parse_options_response(raw: object) -> list[str]:
    """Validate the two-string payload; the two strings must be distinct."""
    if isinstance(raw, dict):
        _require(set(raw.keys()) == {"options"}, "payload must contain exactly 'options'", "$")
        raw = raw["options"]
    _require(isinstance(raw, list), "payload must be an array", "$")
    _require(len(raw) == 2, "exactly 2 options required", "$")
    for i, opt in enumerate(raw):
        _require(isinstance(opt, str), "option must be a string", f"$[{i}]")
    if canonical(raw[0]) == canonical(raw[1]):
        raise DuplicateOptions(f"the two options are equal: {raw[0]!r}")
    return list(raw)


def parse_extract_response(raw: object) -> str:
    """Validate the single-string payload, trimming surrounding whitespace."""
    if isinstance(raw, dict):
        _require(set(raw.keys()) == {"value"}, "payload must contain exactly 'value'", "$")
        raw = raw["value"]
    _require(isinstance(raw, str), "payload must be a string", "$")
    return raw.strip()
