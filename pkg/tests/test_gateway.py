from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from promptcanvas import prompts
from promptcanvas.errors import (
    FixtureWriteError,
    MissingFixture,
    ProviderUnavailable,
    SchemaViolationExhausted,
)
from promptcanvas.gateway import (
    EVENT_DELTA,
    EVENT_DONE,
    EVENT_ERROR,
    FixtureEntry,
    FixtureFile,
    Gateway,
    ProviderConfig,
    RecordingProvider,
    ReplayProvider,
    canonical_request,
    request_digest,
)


def widgets_payload(n=2):
    return {"widgets": [{"label": f"L{i}", "value": "v", "options": []} for i in range(n)]}


def structured_request():
    return prompts.build_generate_widgets("some text", [])


def streaming_request():
    return prompts.build_apply_prompt("", "write")


def entry_for(request, response):
    return FixtureEntry(
        flow=request.flow,
        request_digest=request_digest(request),
        response=response,
        request=canonical_request(request),
    )


def replay_gateway(tmp_path, request, response, **kwargs) -> Gateway:
    fixture = FixtureFile(tmp_path / "f.json")
    fixture.add(entry_for(request, response))
    return Gateway(ReplayProvider(fixture), **kwargs)


class TestDigest:
    def test_stable_across_key_order(self):
        req = structured_request()
        blob = canonical_request(req)
        reordered = json.loads(json.dumps(blob))
        assert json.dumps(blob, sort_keys=True) == json.dumps(reordered, sort_keys=True)
        assert request_digest(req) == request_digest(structured_request())

    def test_differs_on_content(self):
        a = prompts.build_generate_widgets("text one", [])
        b = prompts.build_generate_widgets("text two", [])
        assert request_digest(a) != request_digest(b)


class TestProviderConfig:
    def test_invariants(self):
        with pytest.raises(ValueError):
            ProviderConfig(max_retries=-1)
        with pytest.raises(ValueError):
            ProviderConfig(timeout=0)

    def test_from_env(self):
        cfg = ProviderConfig.from_env({
            "PC_LLM_BASE_URL": "http://x", "PC_LLM_API_KEY": "k",
            "PC_LLM_MODEL": "m", "PC_LLM_TEMPERATURE": "0.5",
        })
        assert (cfg.base_url, cfg.api_key, cfg.model_name, cfg.default_temperature) == \
            ("http://x", "k", "m", 0.5)

    def test_default_temperature(self):
        assert ProviderConfig().default_temperature == 1.06


class TestCompleteStructured:
    def test_valid_first_attempt(self, tmp_path):
        req = structured_request()
        gw = replay_gateway(tmp_path, req, {"payloads": [widgets_payload()]})
        result = gw.complete_structured(req)
        assert len(result.value) == 2
        assert result.attempts == 1

    def test_invalid_then_valid(self, tmp_path):
        req = structured_request()
        gw = replay_gateway(
            tmp_path, req,
            {"payloads": [{"widgets": []}, widgets_payload()]},
        )
        result = gw.complete_structured(req)
        assert result.attempts == 2  # retry_count = 1

    def test_exhausted_after_budget(self, tmp_path):
        req = structured_request()
        gw = replay_gateway(
            tmp_path, req, {"payloads": [{"widgets": []}]}, max_retries=2
        )
        with pytest.raises(SchemaViolationExhausted) as e:
            gw.complete_structured(req)
        assert e.value.attempts == 3

    def test_succeeds_iff_invalid_count_within_budget(self, tmp_path):
        for n in range(0, 5):
            req = structured_request()
            payloads = [{"widgets": []}] * n + [widgets_payload()]
            gw = replay_gateway(tmp_path, req, {"payloads": payloads}, max_retries=2)
            if n <= 2:
                assert gw.complete_structured(req).attempts == n + 1
            else:
                with pytest.raises(SchemaViolationExhausted):
                    gw.complete_structured(req)

    def test_missing_fixture(self, tmp_path):
        gw = Gateway(ReplayProvider(FixtureFile(tmp_path / "f.json")))
        with pytest.raises(MissingFixture):
            gw.complete_structured(structured_request())


class TestCompleteStreaming:
    def collect(self, gw, req):
        events = []
        final = gw.complete_streaming(req, events.append)
        return events, final

    def test_concatenation(self, tmp_path):
        req = streaming_request()
        gw = replay_gateway(tmp_path, req, {"chunks": ["Once", " upon"]})
        events, final = self.collect(gw, req)
        assert [e.kind for e in events] == [EVENT_DELTA, EVENT_DELTA, EVENT_DONE]
        assert final == "Once upon"

    def test_empty_stream(self, tmp_path):
        req = streaming_request()
        gw = replay_gateway(tmp_path, req, {"chunks": []})
        events, final = self.collect(gw, req)
        assert [e.kind for e in events] == [EVENT_DONE]
        assert final == ""

    def test_fault_surfaces_partial(self, tmp_path):
        req = streaming_request()
        gw = replay_gateway(tmp_path, req, {"chunks": ["a"], "error_after": 1})
        events = []
        with pytest.raises(ProviderUnavailable) as e:
            gw.complete_streaming(req, events.append)
        assert [ev.kind for ev in events] == [EVENT_DELTA, EVENT_ERROR]
        assert e.value.detail["partial"] == "a"

    @given(st.text(max_size=80), st.lists(st.integers(0, 80), max_size=6))
    def test_rechunking_invariance(self, text, cuts):
        # any chunking of the same final string yields the same final string
        points = sorted({min(c, len(text)) for c in cuts})
        chunks, prev = [], 0
        for p in points + [len(text)]:
            chunks.append(text[prev:p])
            prev = p

        class P:
            def stream(self, request):
                yield from chunks

        final = Gateway(P()).complete_streaming(streaming_request(), lambda e: None)
        assert final == text


class TestFixtureFile:
    def test_record_then_replay_round_trip(self, tmp_path):
        req = structured_request()

        class FakeLive:
            def complete_structured_once(self, request):
                return widgets_payload()

            def stream(self, request):
                yield from ["a", "b"]

        path = tmp_path / "rec.json"
        rec = RecordingProvider(FakeLive(), path)
        payload = rec.complete_structured_once(req)
        sreq = streaming_request()
        assert "".join(rec.stream(sreq)) == "ab"

        replay = ReplayProvider(path)
        assert replay.complete_structured_once(req) == payload
        assert list(replay.stream(sreq)) == ["a", "b"]

    def test_replay_deterministic(self, tmp_path):
        req = structured_request()
        fixture = FixtureFile(tmp_path / "f.json")
        fixture.add(entry_for(req, {"payloads": [widgets_payload()]}))
        fixture.save()
        first = ReplayProvider(FixtureFile(tmp_path / "f.json")).complete_structured_once(req)
        second = ReplayProvider(FixtureFile(tmp_path / "f.json")).complete_structured_once(req)
        assert first == second

    def test_digest_collision_on_differing_request(self, tmp_path):
        req = structured_request()
        other = canonical_request(prompts.build_generate_widgets("different", []))
        fixture = FixtureFile(tmp_path / "f.json")
        fixture.add(entry_for(req, {"payloads": [1]}))
        clashing = FixtureEntry(
            flow=req.flow, request_digest=request_digest(req),
            response={"payloads": [2]}, request=other,
        )
        with pytest.raises(FixtureWriteError):
            fixture.add(clashing)

    def test_duplicate_digest_in_file_rejected(self, tmp_path):
        req = structured_request()
        entry = entry_for(req, {"payloads": [1]}).to_dict()
        (tmp_path / "f.json").write_text(json.dumps({"entries": [entry, entry]}))
        with pytest.raises(FixtureWriteError):
            FixtureFile(tmp_path / "f.json")
