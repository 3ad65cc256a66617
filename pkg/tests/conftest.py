from __future__ import annotations

import pytest

from promptcanvas.gateway import FixtureEntry, FixtureFile, Gateway, ReplayProvider
from promptcanvas.service import FlowService
from promptcanvas.store import WorkspaceStore


@pytest.fixture
def store(tmp_path):
    return WorkspaceStore(tmp_path / "data")


def make_fixture(tmp_path, entries) -> FixtureFile:
    fixture = FixtureFile(tmp_path / "fixture.json")
    for entry in entries:
        fixture.add(FixtureEntry(**entry))
    return fixture


@pytest.fixture
def service_factory(tmp_path, store):
    """Build a FlowService over a replay fixture assembled in the test."""

    def build(entries, max_retries: int = 2) -> FlowService:
        fixture = make_fixture(tmp_path, entries)
        provider = ReplayProvider(fixture)
        return FlowService(store, Gateway(provider, max_retries=max_retries))

    return build
