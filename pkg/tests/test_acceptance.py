"""Acceptance suite: one test per release criterion, each printing a
PASS line with its runtime budget (run with ``pytest -s`` to see them)."""

from __future__ import annotations

import json
import logging
import random
import string
import subprocess
import sys
import time
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from promptcanvas import prompts
from promptcanvas.api import STATUS_BY_CODE, create_app
from promptcanvas.errors import SchemaViolation, SchemaViolationExhausted
from promptcanvas.gateway import (
    FixtureEntry,
    FixtureFile,
    Gateway,
    ReplayProvider,
    canonical_request,
    request_digest,
)
from promptcanvas.model import (
    ControlWidget,
    WidgetSpec,
    Workspace,
    active_pairs,
    add_option,
    canonical,
    dedup_new_widgets,
    save_input,
    set_value_from_option,
)
from promptcanvas.service import FlowService
from promptcanvas.store import WorkspaceStore

ROOT = Path(__file__).resolve().parents[1]
SCENARIO = ROOT / "scenarios" / "three_little_pigs.scenario"
FIXTURE = ROOT / "scenarios" / "three_little_pigs.fixture.json"


def budget(name: str, started: float, limit: float):
    elapsed = time.monotonic() - started
    assert elapsed < limit, f"{name} exceeded {limit}s budget ({elapsed:.1f}s)"
    print(f"PASS {name} ({elapsed:.2f}s < {limit:.0f}s)")


def rand_text(rng, n=8):
    return "".join(rng.choice(string.ascii_letters + "  ") for _ in range(n))


def test_widget_generation_constraint():
    """Accepted payloads have 1-4 widgets with <=3 options; others rejected."""
    started = time.monotonic()
    rng = random.Random(7)
    for _ in range(200):
        n_widgets = rng.randint(0, 7)
        widgets = []
        for _ in range(n_widgets):
            n_opts = rng.randint(0, 6)
            widgets.append({
                "label": rand_text(rng),
                "value": rand_text(rng),
                "options": [rand_text(rng) for _ in range(n_opts)],
            })
        payload = {"widgets": widgets}
        in_range = 1 <= n_widgets <= 4 and all(
            len(w["options"]) <= 3 for w in widgets
        )
        if in_range:
            specs = prompts.parse_widgets_response(payload)
            assert 1 <= len(specs) <= 4
            assert all(len(s.options) <= 3 for s in specs)
        else:
            with pytest.raises(SchemaViolation):
                prompts.parse_widgets_response(payload)
    budget("widget-generation constraint", started, 5)


def test_dedup_matches_brute_force_oracle():
    started = time.monotonic()
    rng = random.Random(11)
    labels_pool = [f"L{i}" for i in range(60)] + ["  L1", "L2  "]
    for _ in range(300):
        existing = [
            ControlWidget(title=rng.choice(labels_pool))
            for _ in range(rng.randint(0, 50))
        ]
        drafts = [
            WidgetSpec(
                label=rng.choice(labels_pool),
                value=rand_text(rng, 4),
                options=[rng.choice(labels_pool) for _ in range(rng.randint(0, 6))],
            )
            for _ in range(rng.randint(0, 50))
        ]
        result = dedup_new_widgets(drafts, existing)

        # brute-force set-membership oracle
        seen = {canonical(w.title) for w in existing}
        expected = []
        for d in drafts:
            if canonical(d.label) in seen:
                continue
            seen.add(canonical(d.label))
            opts, taken = [], set()
            for o in d.options:
                if canonical(o) not in taken and len(opts) < 3:
                    taken.add(canonical(o))
                    opts.append(o)
            expected.append((d.label, d.value, opts))
        assert [(s.label, s.value, s.options) for s in result] == expected

        # idempotence
        again = dedup_new_widgets(result, existing)
        assert [(s.label, s.options) for s in again] == \
            [(s.label, s.options) for s in result]
    budget("dedup oracle + idempotence", started, 5)


def test_option_ordering_over_random_sequences():
    started = time.monotonic()
    rng = random.Random(13)
    pool = [f"opt{i}" for i in range(12)] + ["  opt1", "opt2  "]
    for _ in range(1000):
        widget = ControlWidget(value=rng.choice(pool))
        for _ in range(rng.randint(0, 12)):
            op = rng.choice(["suggest", "extract", "save_input", "select"])
            before = list(widget.options)
            if op == "suggest":
                # two suggestions land newest-first, like the suggest flow
                a, b = rng.sample(pool, 2)
                for candidate in (b, a):
                    widget = add_option(widget, candidate)
            elif op == "extract":
                candidate = rng.choice(pool)
                widget = add_option(widget, candidate)
                if canonical(candidate) not in [canonical(o) for o in before]:
                    assert widget.options[0] == canonical(candidate)
            elif op == "save_input":
                if canonical(widget.value):
                    widget = save_input(widget)
            elif op == "select" and widget.options:
                widget = set_value_from_option(
                    widget, rng.randrange(len(widget.options))
                )
            opts = [canonical(o) for o in widget.options]
            assert len(set(opts)) == len(opts), "duplicate options appeared"
    budget("option ordering + dedup over 1000 sequences", started, 10)


def test_active_pairs_filtering_oracle():
    started = time.monotonic()
    rng = random.Random(17)
    for _ in range(500):
        widgets = []
        for _ in range(rng.randint(0, 15)):
            zone = rng.choice(["canvas", "panel"])
            widgets.append(ControlWidget(
                title=rng.choice(["Tone", "", "  ", "Setting", "X "]),
                value=rng.choice(["formal", "", " ", "casual"]),
                zone=zone,
                position=(0, 0) if zone == "canvas" else None,
            ))
        ws = Workspace(name="t", widgets=widgets)
        expected = [
            (w.title.strip(), w.value.strip())
            for w in widgets
            if w.zone == "canvas" and w.title.strip() and w.value.strip()
        ]
        assert active_pairs(ws) == expected
    budget("apply-widgets filtering oracle", started, 5)


def test_streaming_atomicity(tmp_path):
    started = time.monotonic()
    rng = random.Random(19)
    store = WorkspaceStore(tmp_path / "data")
    fixture = FixtureFile(tmp_path / "stream.json")

    cases = []
    content = ""
    chunk_counts = [0, 1, 500] + [rng.randint(0, 500) for _ in range(27)]
    for i, n_chunks in enumerate(chunk_counts):
        prompt = f"step {i}"
        chunks = [rand_text(rng, rng.randint(1, 6)) for _ in range(n_chunks)]
        fault = rng.random() < 0.4
        response = {"chunks": chunks}
        if fault:
            response["error_after"] = rng.randint(0, max(n_chunks, 1))
        request = prompts.build_apply_prompt(content, prompt)
        fixture.add(FixtureEntry(
            flow=request.flow, request_digest=request_digest(request),
            response=response, request=canonical_request(request),
        ))
        cases.append((prompt, chunks, fault, response.get("error_after")))
        if not fault:
            content = "".join(chunks)

    service = FlowService(store, Gateway(ReplayProvider(fixture)))
    ws = store.create_workspace("Atomicity")
    for prompt, chunks, fault, error_after in cases:
        before = store.load_workspace(ws.id)
        pre_content = before.document.content
        pre_history = len(before.document.history)
        if fault:
            with pytest.raises(Exception):
                service.apply_prompt(ws.id, prompt, lambda e: None)
            after = store.load_workspace(ws.id)
            assert after.document.content == pre_content
            assert len(after.document.history) == pre_history
        else:
            final = service.apply_prompt(ws.id, prompt, lambda e: None)
            assert final == "".join(chunks)
            after = store.load_workspace(ws.id)
            assert after.document.content == final
            assert len(after.document.history) == pre_history + 1
    budget("streaming atomicity (0-500 chunks, faults)", started, 10)


def test_scenario_reproduction(tmp_path):
    started = time.monotonic()
    result = subprocess.run(
        [sys.executable, "-m", "promptcanvas.cli", "scenario", "run", str(SCENARIO)],
        capture_output=True, text=True,
        env={
            "PC_DATA_DIR": str(tmp_path / "data"),
            "PC_PROVIDER_MODE": "replay",
            "PC_FIXTURE_PATH": str(FIXTURE),
            "PATH": "/usr/bin:/bin",
            "PYTHONPATH": str(ROOT / "src"),
        },
    )
    assert result.returncode == 0, result.stdout + result.stderr
    assert "all 10 steps passed" in result.stdout
    budget("scenario reproduction (replay, no network)", started, 10)


def test_persistence_round_trip_and_crash(tmp_path):
    started = time.monotonic()
    rng = random.Random(23)
    store = WorkspaceStore(tmp_path / "data")
    from promptcanvas.model import Document, Revision, Viewport

    for i in range(500):
        widgets = [
            ControlWidget(
                title=rand_text(rng), value=rand_text(rng),
                options=[rand_text(rng) for _ in range(rng.randint(0, 4))],
                zone=rng.choice(["canvas", "panel"]),
                fresh=rng.random() < 0.3,
                origin=rng.choice(["suggested", "prompted", "manual"]),
                position=(rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3)),
            )
            for _ in range(rng.randint(0, 6))
        ]
        ws = Workspace(
            name=f"ws-{i}-é日",
            widgets=widgets,
            document=Document(
                content=rand_text(rng, 40) + "—ü日本",
                history=[
                    Revision(text=rand_text(rng), cause=rng.choice(
                        ["user_edit", "generate", "rephrase_widgets"]))
                    for _ in range(rng.randint(0, 4))
                ],
            ),
            viewport=Viewport(pan=(rng.uniform(-99, 99), rng.uniform(-99, 99)),
                              zoom=rng.uniform(0.1, 4.0)),
        )
        store.save_workspace(ws)
        assert store.load_workspace(ws.id).to_dict() == ws.to_dict()

    # crash between write and rename: temp file present, never read
    victim = store.list_workspaces()[0].id
    good = store.load_workspace(victim)
    tmp_file = store._path(victim).with_suffix(".json.tmp")
    tmp_file.write_text('{"torn":', "utf-8")
    assert store.load_workspace(victim).to_dict() == good.to_dict()
    budget("persistence round-trip + crash simulation", started, 30)


def test_retry_policy(tmp_path, caplog):
    started = time.monotonic()
    valid = {"widgets": [{"label": "A", "value": "b", "options": []}]}
    invalid = {"widgets": []}
    max_retries = 2
    for n_invalid in range(0, 5):
        request = prompts.build_generate_widgets(f"text {n_invalid}", [])
        fixture = FixtureFile(tmp_path / f"retry{n_invalid}.json")
        fixture.add(FixtureEntry(
            flow=request.flow,
            request_digest=request_digest(request),
            response={"payloads": [invalid] * n_invalid + [valid]},
            request=canonical_request(request),
        ))
        gateway = Gateway(ReplayProvider(fixture), max_retries=max_retries)
        with caplog.at_level(logging.INFO, logger="promptcanvas.gateway"):
            caplog.clear()
            if n_invalid <= max_retries:
                result = gateway.complete_structured(request)
                assert result.attempts == n_invalid + 1
                assert f"retry_count={n_invalid}" in caplog.text
            else:
                with pytest.raises(SchemaViolationExhausted) as e:
                    gateway.complete_structured(request)
                assert e.value.attempts == max_retries + 1
                violations = [r for r in caplog.records
                              if "schema violation" in r.message]
                assert len(violations) == max_retries + 1
    budget("retry policy (invalid x n then valid)", started, 5)


def test_api_error_taxonomy_fuzzing(tmp_path):
    started = time.monotonic()
    rng = random.Random(29)
    store = WorkspaceStore(tmp_path / "data")
    service = FlowService(store, Gateway(ReplayProvider(FixtureFile(tmp_path / "f.json"))))
    client = TestClient(create_app(service), raise_server_exceptions=False)
    ws = store.create_workspace("Fuzz")

    endpoints = [
        ("POST", "/workspaces"),
        ("PATCH", f"/workspaces/{ws.id}"),
        ("POST", f"/workspaces/{ws.id}:duplicate"),
        ("POST", f"/workspaces/{ws.id}/widgets"),
        ("POST", f"/workspaces/{ws.id}/widgets/bogus:move"),
        ("PATCH", f"/workspaces/{ws.id}/widgets/bogus"),
        ("POST", f"/workspaces/{ws.id}/widgets/bogus:select-option"),
        ("POST", f"/workspaces/{ws.id}/widgets:generate"),
        ("POST", f"/workspaces/{ws.id}/widgets/bogus/options:suggest"),
        ("POST", f"/workspaces/{ws.id}/widgets/bogus/options:extract"),
        ("PUT", f"/workspaces/{ws.id}/document"),
        ("POST", f"/workspaces/{ws.id}/document:revert"),
        ("POST", f"/workspaces/{ws.id}/document:prompt"),
        ("POST", "/workspaces/missing/document:rephrase"),
    ]

    def junk_value(depth=0):
        choices = [
            None, 42, -1, 3.5, True, "", "x" * 50, [], {}, [1, "a"],
            {"unexpected": "field"}, {"name": 5}, {"position": "nope"},
            {"index": "NaN"}, {"zone": 9}, {"content": None},
            {"revision_index": -3}, {"prompt": None}, {"guiding_prompt": 1},
        ]
        return rng.choice(choices)

    for i in range(1000):
        method, url = rng.choice(endpoints)
        mode = rng.random()
        if mode < 0.2:
            resp = client.request(method, url,
                                  content=b"\x00{not json!",
                                  headers={"content-type": "application/json"})
        else:
            resp = client.request(method, url, json=junk_value())
        assert resp.status_code < 500 or resp.status_code in (500, 502), \
            f"case {i}: unexpected status {resp.status_code}"
        body = resp.json()
        if resp.status_code >= 400:
            assert body.get("code") in STATUS_BY_CODE, \
                f"case {i}: undocumented code {body!r}"
    budget("API error taxonomy fuzz (1000 cases)", started, 30)
