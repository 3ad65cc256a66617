"""Execution of flow requests against a model endpoint or a replay fixture.

Three provider modes:

* live    — chat-completions-compatible HTTP endpoint with structured output
* replay  — deterministic playback from a fixture file, fully offline
* record  — proxy to live while appending every exchange to the fixture

Structured flows retry on schema violations (they are not transient, so no
backoff); network failures back off exponentially.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Optional

import httpx

from .errors import (
    AuthFailure,
    FixtureWriteError,
    MissingFixture,
    ProviderUnavailable,
    SchemaViolation,
    SchemaViolationExhausted,
    DuplicateOptions,
)
from .prompts import (
    DEFAULT_TEMPERATURE,
    FLOW_EXTRACT_VALUE,
    FLOW_GENERATE_OPTIONS,
    FLOW_GENERATE_WIDGETS,
    FlowRequest,
    parse_extract_response,
    parse_options_response,
    parse_widgets_response,
)

log = logging.getLogger("promptcanvas.gateway")

PARSERS: dict[str, Callable] = {
    FLOW_GENERATE_WIDGETS: parse_widgets_response,
    FLOW_GENERATE_OPTIONS: parse_options_response,
    FLOW_EXTRACT_VALUE: parse_extract_response,
}

EVENT_DELTA = "delta"
EVENT_DONE = "done"
EVENT_ERROR = "error"


@dataclass(frozen=True)
class StreamEvent:
    kind: str
    payload: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind, "payload": self.payload}


@dataclass
class ProviderConfig:
    base_url: str = "https://api.openai.com/v1"
    api_key: str = ""
    model_name: str = "gpt-4o-2024-08-06"
    default_temperature: float = DEFAULT_TEMPERATURE
    max_retries: int = 2
    timeout: float = 60.0
    network_attempts: int = 3
    backoff_base: float = 0.5

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    @classmethod
    def from_env(cls, env: Optional[dict] = None) -> "ProviderConfig":
        env = env if env is not None else os.environ
        kwargs = {}
        if env.get("PC_LLM_BASE_URL"):
            kwargs["base_url"] = env["PC_LLM_BASE_URL"]
        if env.get("PC_LLM_API_KEY"):
            kwargs["api_key"] = env["PC_LLM_API_KEY"]
        if env.get("PC_LLM_MODEL"):
            kwargs["model_name"] = env["PC_LLM_MODEL"]
        if env.get("PC_LLM_TEMPERATURE"):
            kwargs["default_temperature"] = float(env["PC_LLM_TEMPERATURE"])
        return cls(**kwargs)


def canonical_request(request: FlowRequest) -> dict:
    return {
        "flow": request.flow,
        "messages": [m.to_dict() for m in request.messages],
        "schema": request.response_schema.name if request.response_schema else None,
        "temperature": request.temperature,
    }


def request_digest(request: FlowRequest) -> str:
    """Stable digest over flow, messages, schema id, and temperature."""
    blob = json.dumps(canonical_request(request), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# -- fixtures -----------------------------------------------------------------

@dataclass
class FixtureEntry:
    flow: str
    request_digest: str
    response: dict
    request: Optional[dict] = None

    def to_dict(self) -> dict:
        data = {
            "flow": self.flow,
            "request_digest": self.request_digest,
            "response": self.response,
        }
        if self.request is not None:
            data["request"] = self.request
        return data


class FixtureFile:
    """One fixture document: a list of digest-keyed recorded exchanges.

    A structured response is ``{"payloads": [...]}`` where successive
    payloads feed successive attempts (the last repeats). A streaming
    response is ``{"chunks": [...]}`` with an optional ``"error_after"``
    chunk count for fault injection.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.entries: dict[str, FixtureEntry] = {}
        self._cursors: dict[str, int] = {}
        if self.path.exists():
            self._load()

    def _load(self):
        data = json.loads(self.path.read_text("utf-8"))
        for raw in data.get("entries", []):
            entry = FixtureEntry(
                flow=raw["flow"],
                request_digest=raw["request_digest"],
                response=raw["response"],
                request=raw.get("request"),
            )
            if entry.request_digest in self.entries:
                raise FixtureWriteError(
                    f"duplicate digest in fixture: {entry.request_digest}"
                )
            self.entries[entry.request_digest] = entry

    def save(self):
        try:
            tmp = self.path.with_suffix(self.path.suffix + ".tmp")
            doc = {"entries": [e.to_dict() for e in self.entries.values()]}
            tmp.write_text(json.dumps(doc, ensure_ascii=False, indent=2), "utf-8")
            os.replace(tmp, self.path)
        except OSError as exc:
            raise FixtureWriteError(f"cannot write fixture: {exc}") from exc

    def add(self, entry: FixtureEntry):
        existing = self.entries.get(entry.request_digest)
        if existing is not None:
            if existing.request != entry.request:
                raise FixtureWriteError(
                    f"digest collision on differing requests: {entry.request_digest}"
                )
            # same request seen again: append further attempt payloads
            if "payloads" in existing.response and "payloads" in entry.response:
                existing.response["payloads"].extend(entry.response["payloads"])
                return
        self.entries[entry.request_digest] = entry

    def lookup(self, digest: str) -> FixtureEntry:
        entry = self.entries.get(digest)
        if entry is None:
            raise MissingFixture(f"no fixture entry for digest {digest}")
        return entry

    def next_payload(self, digest: str) -> object:
        """Structured attempt payload; sequenced entries advance a cursor."""
        entry = self.lookup(digest)
        payloads = entry.response.get("payloads")
        if payloads is None:
            raise MissingFixture(f"fixture entry {digest} is not structured")
        idx = min(self._cursors.get(digest, 0), len(payloads) - 1)
        self._cursors[digest] = idx + 1
        return payloads[idx]

    def reset_cursors(self):
        self._cursors.clear()


# -- providers ----------------------------------------------------------------

class ReplayProvider:
    """Deterministic playback of recorded exchanges; never touches the network."""

    def __init__(self, fixture: FixtureFile | str | Path):
        self.fixture = fixture if isinstance(fixture, FixtureFile) else FixtureFile(fixture)

    def complete_structured_once(self, request: FlowRequest) -> object:
        return self.fixture.next_payload(request_digest(request))

    def stream(self, request: FlowRequest) -> Iterator[str]:
        entry = self.fixture.lookup(request_digest(request))
        chunks = entry.response.get("chunks")
        if chunks is None:
            raise MissingFixture(f"fixture entry for {request.flow} is not a stream")
        error_after = entry.response.get("error_after")
        for i, chunk in enumerate(chunks):
            if error_after is not None and i >= error_after:
                raise ProviderUnavailable("injected stream fault")
            yield chunk
        if error_after is not None and error_after >= len(chunks):
            raise ProviderUnavailable("injected stream fault")


class LiveProvider:
    """Chat-completions-compatible HTTP client with structured output."""

    def __init__(self, config: ProviderConfig, client: Optional[httpx.Client] = None):
        self.config = config
        self.client = client or httpx.Client(timeout=config.timeout)

    def _body(self, request: FlowRequest, stream: bool) -> dict:
        body = {
            "model": self.config.model_name,
            "messages": [m.to_dict() for m in request.messages],
            "temperature": request.temperature,
            "stream": stream,
        }
        if request.response_schema is not None:
            body["response_format"] = {
                "type": "json_schema",
                "json_schema": {
                    "name": request.response_schema.name,
                    "strict": True,
                    "schema": request.response_schema.json_schema,
                },
            }
        return body

    def _headers(self) -> dict:
        return {"Authorization": f"Bearer {self.config.api_key}"}

    def _url(self) -> str:
        return self.config.base_url.rstrip("/") + "/chat/completions"

    def complete_structured_once(self, request: FlowRequest) -> object:
        try:
            resp = self.client.post(
                self._url(), json=self._body(request, stream=False), headers=self._headers()
            )
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(str(exc)) from exc
        if resp.status_code in (401, 403):
            raise AuthFailure(f"provider rejected credentials: {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderUnavailable(f"provider error {resp.status_code}: {resp.text[:200]}")
        content = resp.json()["choices"][0]["message"]["content"]
        try:
            return json.loads(content)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"response is not valid structured data: {exc}") from exc

    def stream(self, request: FlowRequest) -> Iterator[str]:
        try:
            with self.client.stream(
                "POST", self._url(), json=self._body(request, stream=True),
                headers=self._headers(),
            ) as resp:
                if resp.status_code in (401, 403):
                    raise AuthFailure(f"provider rejected credentials: {resp.status_code}")
                if resp.status_code >= 400:
                    raise ProviderUnavailable(f"provider error {resp.status_code}")
                for line in resp.iter_lines():
                    if not line.startswith("data:"):
                        continue
                    data = line[len("data:"):].strip()
                    if data == "[DONE]":
                        return
                    delta = (
                        json.loads(data)["choices"][0].get("delta", {}).get("content")
                    )
                    if delta:
                        yield delta
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(str(exc)) from exc


class RecordingProvider:
    """Proxies to a live provider, appending every exchange to a fixture file."""

    def __init__(self, live: LiveProvider, fixture_path: str | Path):
        self.live = live
        self.fixture = FixtureFile(fixture_path)

    def complete_structured_once(self, request: FlowRequest) -> object:
        payload = self.live.complete_structured_once(request)
        self.fixture.add(
            FixtureEntry(
                flow=request.flow,
                request_digest=request_digest(request),
                response={"payloads": [payload]},
                request=canonical_request(request),
            )
        )
        self.fixture.save()
        return payload

    def stream(self, request: FlowRequest) -> Iterator[str]:
        chunks = []
        for chunk in self.live.stream(request):
            chunks.append(chunk)
            yield chunk
        self.fixture.add(
            FixtureEntry(
                flow=request.flow,
                request_digest=request_digest(request),
                response={"chunks": chunks},
                request=canonical_request(request),
            )
        )
        self.fixture.save()


def provider_from_env(env: Optional[dict] = None):
    env = env if env is not None else os.environ
    mode = env.get("PC_PROVIDER_MODE", "replay")
    if mode == "replay":
        path = env.get("PC_FIXTURE_PATH")
        if not path:
            raise MissingFixture("PC_FIXTURE_PATH is required in replay mode")
        return ReplayProvider(path)
    config = ProviderConfig.from_env(env)
    live = LiveProvider(config)
    if mode == "record":
        path = env.get("PC_FIXTURE_PATH")
        if not path:
            raise FixtureWriteError("PC_FIXTURE_PATH is required in record mode")
        return RecordingProvider(live, path)
    if mode == "live":
        return live
    raise ValueError(f"unknown PC_PROVIDER_MODE: {mode}")


# -- gateway ------------------------------------------------------------------

@dataclass
class StructuredResult:
    value: object
    attempts: int


class Gateway:
    """Retry and streaming semantics on top of a provider."""

    def __init__(self, provider, max_retries: int = 2,
                 network_attempts: int = 3, backoff_base: float = 0.5):
        self.provider = provider
        self.max_retries = max_retries
        self.network_attempts = network_attempts
        self.backoff_base = backoff_base

    def _once_with_network_retry(self, request: FlowRequest) -> object:
        last: Optional[Exception] = None
        for attempt in range(self.network_attempts):
            try:
                return self.provider.complete_structured_once(request)
            except ProviderUnavailable as exc:
                last = exc
                if attempt + 1 < self.network_attempts:
                    time.sleep(self.backoff_base * (2 ** attempt))
        raise last  # type: ignore[misc]

    def complete_structured(self, request: FlowRequest) -> StructuredResult:
        """Run a structured flow, re-asking on schema violations.

        Schema violations get up to ``max_retries`` identical re-asks with
        no backoff; they are model misbehavior, not transient faults.
        """
        assert not request.stream
        parser = PARSERS[request.flow]
        attempts = 0
        last_error: Optional[Exception] = None
        while attempts <= self.max_retries:
            attempts += 1
            raw = self._once_with_network_retry(request)
            try:
                value = parser(raw)
            except (SchemaViolation, DuplicateOptions) as exc:
                last_error = exc
                log.info(
                    "schema violation on %s attempt %d/%d: %s",
                    request.flow, attempts, self.max_retries + 1, exc,
                )
                continue
            log.info(
                "flow %s succeeded after %d attempt(s), retry_count=%d",
                request.flow, attempts, attempts - 1,
            )
            return StructuredResult(value=value, attempts=attempts)
        raise SchemaViolationExhausted(
            f"all {attempts} attempts produced invalid payloads: {last_error}",
            attempts=attempts,
        )

    def complete_streaming(
        self, request: FlowRequest, sink: Callable[[StreamEvent], None]
    ) -> str:
        """Stream deltas into ``sink``; returns the concatenated final text.

        On mid-stream failure an error event is emitted and the error is
        re-raised with the partial text attached as ``detail``.
        """
        assert request.stream
        parts: list[str] = []
        try:
            for chunk in self.provider.stream(request):
                parts.append(chunk)
                sink(StreamEvent(EVENT_DELTA, chunk))
        except (ProviderUnavailable, AuthFailure, MissingFixture) as exc:
            sink(StreamEvent(EVENT_ERROR, str(exc)))
            exc.detail = {"partial": "".join(parts)}
            raise
        final = "".join(parts)
        sink(StreamEvent(EVENT_DONE))
        return final
