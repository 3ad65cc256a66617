"""Scriptable end-to-end scenarios.

A scenario is a YAML file describing an ordered list of workspace actions
with optional per-step expectations. Steps that create widgets may bind a
symbolic name (``as``); later steps reference widgets either by ``$name``
or by title. The same script runs in-process against a FlowService or
over HTTP against a running server, which is how CLI/API equivalence is
tested.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import httpx
import yaml

from .errors import PromptCanvasError
from .model import ZONE_CANVAS, ZONE_PANEL, active_pairs, word_count
from .service import FlowService

KNOWN_ACTIONS = (
    "prompt",
    "rephrase",
    "generate_widgets",
    "suggest_options",
    "extract_value",
    "create_widget",
    "set_title",
    "set_value",
    "select_option",
    "save_input",
    "move_widget",
    "delete_widget",
    "user_edit",
    "revert",
)


class ScenarioParseError(PromptCanvasError):
    code = "scenario_parse_error"


@dataclass
class Step:
    index: int
    action: str
    args: dict = field(default_factory=dict)
    expect: dict = field(default_factory=dict)
    bind: Optional[str] = None


@dataclass
class Scenario:
    name: str
    workspace_name: str
    steps: list[Step]


def parse_scenario(path: str | Path) -> Scenario:
    data = yaml.safe_load(Path(path).read_text("utf-8"))
    if not isinstance(data, dict) or "steps" not in data:
        raise ScenarioParseError("scenario must be a mapping with a 'steps' list")
    steps = []
    bound: set[str] = set()
    for i, raw in enumerate(data["steps"]):
        if not isinstance(raw, dict) or "action" not in raw:
            raise ScenarioParseError(f"step {i}: missing 'action'")
        action = raw["action"]
        if action not in KNOWN_ACTIONS:
            raise ScenarioParseError(f"step {i}: unknown action {action!r}")
        args = raw.get("args") or {}
        step = Step(
            index=i,
            action=action,
            args=args,
            expect=raw.get("expect") or {},
            bind=raw.get("as"),
        )
        ref = args.get("widget")
        if isinstance(ref, str) and ref.startswith("$") and ref[1:] not in bound:
            raise ScenarioParseError(
                f"step {i}: widget reference {ref!r} is not defined by an earlier step"
            )
        if step.bind:
            bound.add(step.bind)
        steps.append(step)
    return Scenario(
        name=data.get("name", Path(path).stem),
        workspace_name=data.get("workspace", data.get("name", Path(path).stem)),
        steps=steps,
    )


# -- backends -----------------------------------------------------------------

class InProcessBackend:
    """Drives a FlowService directly, no HTTP."""

    def __init__(self, service: FlowService):
        self.service = service
        self.workspace_id: Optional[str] = None

    def create_workspace(self, name: str) -> dict:
        ws = self.service.store.create_workspace(name)
        self.workspace_id = ws.id
        return ws.to_dict()

    def workspace(self) -> dict:
        return self.service.store.load_workspace(self.workspace_id).to_dict()

    def prompt(self, prompt: str, sink=None) -> str:
        return self.service.apply_prompt(self.workspace_id, prompt, sink or (lambda e: None))

    def rephrase(self, sink=None) -> str:
        return self.service.rephrase(self.workspace_id, sink or (lambda e: None))

    def generate_widgets(self, guiding_prompt=None) -> list[dict]:
        created = self.service.generate_widgets(self.workspace_id, guiding_prompt)
        return [w.to_dict() for w in created]

    def suggest_options(self, widget_id: str, guiding_prompt=None) -> dict:
        return self.service.suggest_options(
            self.workspace_id, widget_id, guiding_prompt
        ).to_dict()

    def extract_value(self, widget_id: str) -> dict:
        return self.service.extract_value(self.workspace_id, widget_id).to_dict()

    def create_widget(self, position) -> dict:
        return self.service.create_empty_widget(self.workspace_id, tuple(position)).to_dict()

    def update_widget(self, widget_id: str, **fields) -> dict:
        return self.service.update_widget(self.workspace_id, widget_id, **fields).to_dict()

    def move_widget(self, widget_id: str, zone: str, position=None) -> dict:
        return self.service.move_widget(
            self.workspace_id, widget_id, zone,
            tuple(position) if position else None,
        ).to_dict()

    def select_option(self, widget_id: str, index: int) -> dict:
        return self.service.select_option(self.workspace_id, widget_id, index).to_dict()

    def save_input(self, widget_id: str) -> dict:
        return self.service.save_input(self.workspace_id, widget_id).to_dict()

    def delete_widget(self, widget_id: str):
        self.service.delete_widget(self.workspace_id, widget_id)

    def user_edit(self, content: str, checkpoint: bool = False):
        self.service.put_document(self.workspace_id, content, checkpoint)

    def revert(self, revision_index: int):
        self.service.revert_document(self.workspace_id, revision_index)


class HttpBackend:
    """Drives a running server over HTTP + SSE with the same surface."""

    def __init__(self, base_url: str, client: Optional[httpx.Client] = None):
        self.base_url = base_url.rstrip("/")
        self.client = client or httpx.Client(timeout=60.0)
        self.workspace_id: Optional[str] = None

    def _check(self, resp: httpx.Response) -> dict | list:
        if resp.status_code >= 400:
            try:
                body = resp.json()
            except json.JSONDecodeError:
                body = {"code": "error", "message": resp.text}
            raise PromptCanvasError(body.get("message", ""), detail=body)
        return resp.json()

    def _post(self, path: str, body: Optional[dict] = None):
        return self._check(self.client.post(self.base_url + path, json=body))

    def _stream(self, path: str, body: Optional[dict] = None, sink=None) -> str:
        parts: list[str] = []
        with self.client.stream("POST", self.base_url + path, json=body) as resp:
            if resp.status_code >= 400:
                resp.read()
                self._check(resp)
            event_name = ""
            for line in resp.iter_lines():
                if line.startswith("event:"):
                    event_name = line[len("event:"):].strip()
                elif line.startswith("data:"):
                    data = json.loads(line[len("data:"):].strip())
                    if event_name == "delta":
                        parts.append(data["text"])
                        if sink:
                            sink(data["text"])
                    elif event_name == "error":
                        raise PromptCanvasError(data.get("message", "stream error"),
                                                detail=data)
        return "".join(parts)

    def create_workspace(self, name: str) -> dict:
        ws = self._post("/workspaces", {"name": name})
        self.workspace_id = ws["id"]
        return ws

    def workspace(self) -> dict:
        return self._check(self.client.get(f"{self.base_url}/workspaces/{self.workspace_id}"))

    def prompt(self, prompt: str, sink=None) -> str:
        return self._stream(
            f"/workspaces/{self.workspace_id}/document:prompt", {"prompt": prompt}, sink
        )

    def rephrase(self, sink=None) -> str:
        return self._stream(f"/workspaces/{self.workspace_id}/document:rephrase", sink=sink)

    def generate_widgets(self, guiding_prompt=None) -> list[dict]:
        return self._post(
            f"/workspaces/{self.workspace_id}/widgets:generate",
            {"guiding_prompt": guiding_prompt},
        )

    def suggest_options(self, widget_id: str, guiding_prompt=None) -> dict:
        return self._post(
            f"/workspaces/{self.workspace_id}/widgets/{widget_id}/options:suggest",
            {"guiding_prompt": guiding_prompt},
        )

    def extract_value(self, widget_id: str) -> dict:
        return self._post(
            f"/workspaces/{self.workspace_id}/widgets/{widget_id}/options:extract"
        )

    def create_widget(self, position) -> dict:
        return self._post(
            f"/workspaces/{self.workspace_id}/widgets", {"position": list(position)}
        )

    def update_widget(self, widget_id: str, **fields) -> dict:
        return self._check(
            self.client.patch(
                f"{self.base_url}/workspaces/{self.workspace_id}/widgets/{widget_id}",
                json=fields,
            )
        )

    def move_widget(self, widget_id: str, zone: str, position=None) -> dict:
        return self._post(
            f"/workspaces/{self.workspace_id}/widgets/{widget_id}:move",
            {"zone": zone, "position": list(position) if position else None},
        )

    def select_option(self, widget_id: str, index: int) -> dict:
        return self._post(
            f"/workspaces/{self.workspace_id}/widgets/{widget_id}:select-option",
            {"index": index},
        )

    def save_input(self, widget_id: str) -> dict:
        return self._post(
            f"/workspaces/{self.workspace_id}/widgets/{widget_id}:save-input"
        )

    def delete_widget(self, widget_id: str):
        self._check(
            self.client.delete(
                f"{self.base_url}/workspaces/{self.workspace_id}/widgets/{widget_id}"
            )
        )

    def user_edit(self, content: str, checkpoint: bool = False):
        self._check(
            self.client.put(
                f"{self.base_url}/workspaces/{self.workspace_id}/document",
                json={"content": content, "checkpoint": checkpoint},
            )
        )

    def revert(self, revision_index: int):
        self._post(
            f"/workspaces/{self.workspace_id}/document:revert",
            {"revision_index": revision_index},
        )


# -- runner -------------------------------------------------------------------

@dataclass
class StepResult:
    step: Step
    ok: bool
    message: str = ""


class ExpectationFailure(PromptCanvasError):
    code = "expectation_failure"


def _resolve_widget(ref: str, bindings: dict[str, str], snapshot: dict) -> str:
    if ref.startswith("$"):
        name = ref[1:]
        if name not in bindings:
            raise ScenarioParseError(f"undefined widget binding {ref!r}")
        return bindings[name]
    for widget in snapshot["widgets"]:
        if widget["title"].strip() == ref.strip():
            return widget["id"]
    raise ScenarioParseError(f"no widget with title {ref!r}")


def _check_expectations(expect: dict, snapshot: dict, result) -> None:
    doc = snapshot["document"]
    widgets = snapshot["widgets"]
    from .model import Workspace
    ws = Workspace.from_dict(snapshot)
    checks = {
        "document_equals": lambda v: doc["content"] == v,
        "document_contains": lambda v: v in doc["content"],
        "word_count": lambda v: word_count(doc["content"]) == v,
        "history_length": lambda v: len(doc["history"]) == v,
        "widget_count": lambda v: len(widgets) == v,
        "panel_widget_count": lambda v: sum(w["zone"] == ZONE_PANEL for w in widgets) == v,
        "canvas_widget_count": lambda v: sum(w["zone"] == ZONE_CANVAS for w in widgets) == v,
        "active_pair_count": lambda v: len(active_pairs(ws)) == v,
        "result_count": lambda v: isinstance(result, list) and len(result) == v,
        "result_contains": lambda v: v in json.dumps(result, ensure_ascii=False),
    }
    for key, expected in expect.items():
        if key in ("widget_value", "widget_options", "widget_option_count"):
            continue  # handled below with widget resolution by caller
        if key not in checks:
            raise ScenarioParseError(f"unknown expectation {key!r}")
        if not checks[key](expected):
            raise ExpectationFailure(f"expectation {key}={expected!r} failed")


def _check_widget_expectations(expect: dict, snapshot: dict, bindings: dict):
    for key in ("widget_value", "widget_options", "widget_option_count"):
        spec = expect.get(key)
        if spec is None:
            continue
        wid = _resolve_widget(spec["widget"], bindings, snapshot)
        widget = next(w for w in snapshot["widgets"] if w["id"] == wid)
        if key == "widget_value":
            actual = widget["value"]
        elif key == "widget_options":
            actual = widget["options"]
        else:
            actual = len(widget["options"])
        if actual != spec["equals"]:
            raise ExpectationFailure(
                f"expectation {key} for {spec['widget']!r}: "
                f"expected {spec['equals']!r}, got {actual!r}"
            )


def run_scenario(scenario: Scenario, backend, report=None) -> list[StepResult]:
    """Execute every step in order; the first failure aborts.

    ``report`` receives one StepResult per executed step.
    """
    bindings: dict[str, str] = {}
    results: list[StepResult] = []

    def emit(result: StepResult):
        results.append(result)
        if report:
            report(result)

    # reruns against the same store get a numbered workspace name
    name = scenario.workspace_name
    for attempt in range(2, 100):
        try:
            backend.create_workspace(name)
            break
        except PromptCanvasError as exc:
            if getattr(exc, "code", "") != "name_conflict" and \
                    (not isinstance(exc.detail, dict) or
                     exc.detail.get("code") != "name_conflict"):
                raise
            name = f"{scenario.workspace_name} ({attempt})"
    else:
        raise ExpectationFailure("could not allocate a workspace name")
    for step in scenario.steps:
        args = dict(step.args)
        try:
            if "widget" in args:
                args["widget"] = _resolve_widget(
                    args["widget"], bindings, backend.workspace()
                )
            result = _execute(backend, step.action, args)
            if step.bind:
                bindings[step.bind] = result["id"]
            snapshot = backend.workspace()
            _check_expectations(step.expect, snapshot, result)
            _check_widget_expectations(step.expect, snapshot, bindings)
        except PromptCanvasError as exc:
            emit(StepResult(step, ok=False, message=f"{exc.code}: {exc.message}"))
            raise ExpectationFailure(
                f"step {step.index} ({step.action}) failed: {exc.message}"
            ) from exc
        emit(StepResult(step, ok=True))
    return results


def _execute(backend, action: str, args: dict):
    if action == "prompt":
        return backend.prompt(args["prompt"])
    if action == "rephrase":
        return backend.rephrase()
    if action == "generate_widgets":
        return backend.generate_widgets(args.get("guiding_prompt"))
    if action == "suggest_options":
        return backend.suggest_options(args["widget"], args.get("guiding_prompt"))
    if action == "extract_value":
        return backend.extract_value(args["widget"])
    if action == "create_widget":
        return backend.create_widget(args.get("position", (0, 0)))
    if action == "set_title":
        return backend.update_widget(args["widget"], title=args["title"])
    if action == "set_value":
        return backend.update_widget(args["widget"], value=args["value"])
    if action == "select_option":
        return backend.select_option(args["widget"], args["index"])
    if action == "save_input":
        return backend.save_input(args["widget"])
    if action == "move_widget":
        return backend.move_widget(args["widget"], args["zone"], args.get("position"))
    if action == "delete_widget":
        return backend.delete_widget(args["widget"])
    if action == "user_edit":
        return backend.user_edit(args["content"], args.get("checkpoint", False))
    if action == "revert":
        return backend.revert(args["index"])
    raise ScenarioParseError(f"unknown action {action!r}")
