from __future__ import annotations

import pytest

from promptcanvas import prompts
from promptcanvas.errors import (
    FlowInProgress,
    NoActiveWidgets,
    ProviderUnavailable,
    UnknownWidget,
)
from promptcanvas.gateway import canonical_request, request_digest
from promptcanvas.model import ZONE_PANEL


def entry(request, response):
    return {
        "flow": request.flow,
        "request_digest": request_digest(request),
        "response": response,
        "request": canonical_request(request),
    }


STORY = "A story about three pigs."


def seeded_workspace(service, content=STORY):
    ws = service.store.create_workspace("T")
    if content:
        service.put_document(ws.id, content, checkpoint=False)
    return ws


class TestGenerateWidgets:
    def test_dedup_against_existing(self, service_factory):
        req = prompts.build_generate_widgets(STORY, ["Tone"])
        payload = {"widgets": [
            {"label": "Tone", "value": "x", "options": []},
            {"label": "Setting", "value": "y", "options": []},
            {"label": "Pacing", "value": "z", "options": []},
            {"label": "Mood", "value": "m", "options": []},
        ]}
        service = service_factory([entry(req, {"payloads": [payload]})])
        ws = seeded_workspace(service)
        service.update_widget(
            ws.id, service.create_empty_widget(ws.id, (0, 0)).id, title="Tone"
        )
        created = service.generate_widgets(ws.id)
        assert [w.title for w in created] == ["Setting", "Pacing", "Mood"]
        assert all(w.zone == ZONE_PANEL and w.fresh for w in created)

    def test_empty_document_rejected(self, service_factory):
        service = service_factory([])
        ws = seeded_workspace(service, content="")
        with pytest.raises(Exception) as e:
            service.generate_widgets(ws.id)
        assert getattr(e.value, "code", "") == "empty_text"

    def test_guided_origin_prompted(self, service_factory):
        req = prompts.build_generate_widgets(STORY, [], "Widgets to change the ending")
        payload = {"widgets": [{"label": "Ending", "value": "happy", "options": []}]}
        service = service_factory([entry(req, {"payloads": [payload]})])
        ws = seeded_workspace(service)
        created = service.generate_widgets(ws.id, "Widgets to change the ending")
        assert created[0].origin == "prompted"

    def test_flow_logged(self, service_factory):
        req = prompts.build_generate_widgets(STORY, [])
        payload = {"widgets": [{"label": "A", "value": "b", "options": []}]}
        service = service_factory([entry(req, {"payloads": [payload]})])
        ws = seeded_workspace(service)
        service.generate_widgets(ws.id)
        events = [e.event for e in service.store.read_log(ws.id)]
        assert "flow_started" in events and "flow_completed" in events


class TestSuggestOptions:
    def test_insertion_order_newest_first(self, service_factory):
        req = prompts.build_generate_options("Three Pigs' Names", [], STORY, None)
        service = service_factory(
            [entry(req, {"payloads": [{"options": ["Pip, Pop, Pup", "Trot, Dot, Scot"]}]})]
        )
        ws = seeded_workspace(service)
        w = service.create_empty_widget(ws.id, (0, 0))
        service.update_widget(ws.id, w.id, title="Three Pigs' Names")
        updated = service.suggest_options(ws.id, w.id)
        assert updated.options == ["Pip, Pop, Pup", "Trot, Dot, Scot"]

    def test_existing_option_not_reinserted(self, service_factory):
        req = prompts.build_generate_options("Names", ["Pip"], STORY, None)
        service = service_factory(
            [entry(req, {"payloads": [{"options": ["Pip", "Trot"]}]})]
        )
        ws = seeded_workspace(service)
        w = service.create_empty_widget(ws.id, (0, 0))
        service.update_widget(ws.id, w.id, title="Names", value="Pip")
        service.save_input(ws.id, w.id)  # options now ["Pip"]
        updated = service.suggest_options(ws.id, w.id)
        assert updated.options == ["Trot", "Pip"]

    def test_unknown_widget(self, service_factory):
        service = service_factory([])
        ws = seeded_workspace(service)
        with pytest.raises(UnknownWidget):
            service.suggest_options(ws.id, "nope")


class TestExtractValue:
    def test_inserted_at_top(self, service_factory):
        req = prompts.build_extract_value("Threat Description", STORY)
        service = service_factory(
            [entry(req, {"payloads": [{"value": "A hungry wolf"}]})]
        )
        ws = seeded_workspace(service)
        w = service.create_empty_widget(ws.id, (0, 0))
        service.update_widget(ws.id, w.id, title="Threat Description")
        updated = service.extract_value(ws.id, w.id)
        assert updated.options[0] == "A hungry wolf"


class TestStreamingFlows:
    def test_rephrase_success(self, service_factory):
        pairs = [("Tone", "formal")]
        req = prompts.build_apply_widgets(STORY, pairs)
        service = service_factory([entry(req, {"chunks": ["New ", "text."]})])
        ws = seeded_workspace(service)
        w = service.create_empty_widget(ws.id, (5, 5))
        service.update_widget(ws.id, w.id, title="Tone", value="formal")
        events = []
        final = service.rephrase(ws.id, events.append)
        assert final == "New text."
        loaded = service.store.load_workspace(ws.id)
        assert loaded.document.content == "New text."
        assert len(loaded.document.history) == 1
        assert loaded.document.history[-1].cause == "rephrase_widgets"

    def test_rephrase_without_active_widgets(self, service_factory):
        service = service_factory([])
        ws = seeded_workspace(service)
        with pytest.raises(NoActiveWidgets):
            service.rephrase(ws.id, lambda e: None)

    def test_fault_leaves_document_unchanged(self, service_factory):
        req = prompts.build_apply_widgets(STORY, [("Tone", "formal")])
        service = service_factory(
            [entry(req, {"chunks": ["partial"], "error_after": 1})]
        )
        ws = seeded_workspace(service)
        w = service.create_empty_widget(ws.id, (5, 5))
        service.update_widget(ws.id, w.id, title="Tone", value="formal")
        with pytest.raises(ProviderUnavailable):
            service.rephrase(ws.id, lambda e: None)
        loaded = service.store.load_workspace(ws.id)
        assert loaded.document.content == STORY
        assert len(loaded.document.history) == 0

    def test_initial_generation_on_empty_document(self, service_factory):
        req = prompts.build_apply_prompt("", "Write a story")
        service = service_factory([entry(req, {"chunks": ["Once upon a time."]})])
        ws = seeded_workspace(service, content="")
        final = service.apply_prompt(ws.id, "Write a story", lambda e: None)
        assert final == "Once upon a time."
        loaded = service.store.load_workspace(ws.id)
        assert loaded.document.content == final
        assert loaded.document.history[-1].cause == "apply_prompt"

    def test_flow_slot_exclusive(self, service_factory):
        service = service_factory([])
        ws = seeded_workspace(service)
        service.acquire_flow(ws.id)
        with pytest.raises(FlowInProgress):
            service.acquire_flow(ws.id)
        service.release_flow(ws.id)
        service.acquire_flow(ws.id)  # reusable after release
        service.release_flow(ws.id)
