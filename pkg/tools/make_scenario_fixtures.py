#!/usr/bin/env python3
"""Regenerate the shipped replay fixtures.

Runs each scenario against a queue of authored model responses, recording
the resulting request/response pairs so the digests always match what the
service actually builds. Run from the repo root:

    python3 tools/make_scenario_fixtures.py
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from promptcanvas.gateway import Gateway, RecordingProvider  # noqa: E402
from promptcanvas.scenario import InProcessBackend, parse_scenario, run_scenario  # noqa: E402
from promptcanvas.service import FlowService  # noqa: E402
from promptcanvas.store import WorkspaceStore  # noqa: E402


class QueueProvider:
    """Returns authored responses in flow-invocation order."""

    def __init__(self, responses):
        self.responses = list(responses)

    def complete_structured_once(self, request):
        return self.responses.pop(0)

    def stream(self, request):
        yield from self.responses.pop(0)


def chunks(text: str, size: int = 12) -> list[str]:
    return [text[i:i + size] for i in range(0, len(text), size)]


STORY_V1 = (
    "Once upon a time, three little pigs set out to build homes of their own. "
    "The first pig built a house of straw, the second a house of sticks, and "
    "the third a sturdy house of bricks. A hungry wolf prowled the woods, "
    "huffing and puffing at every door. The straw house fell, the stick house "
    "fell, but the brick house stood firm. The wolf slid down the chimney into "
    "a pot of soup, and the three little pigs lived safely ever after."
)

STORY_V2 = (
    "Once upon a time, three little pigs named Clay, Fay, and May set out to "
    "build homes of their own. Clay built a house of straw, Fay a house of "
    "sticks, and May a sturdy house of bricks. A cunning wolf prowled the "
    "woods, huffing and puffing at every door. The straw house fell, the "
    "stick house fell, but the brick house stood firm. The wolf slid down the "
    "chimney into a pot of soup, and Clay, Fay, and May lived safely ever after."
)

PIGS_RESPONSES = [
    # prompt flow: initial generation
    chunks(STORY_V1),
    # widget generation (unguided): four suggestions
    {
        "widgets": [
            {
                "label": "Threat Description",
                "value": "A hungry wolf who huffs and puffs at every door",
                "options": [
                    "A sly fox with a silver tongue",
                    "A grumpy bear looking for honey",
                    "A storm that batters the houses",
                ],
            },
            {
                "label": "Tone",
                "value": "Warm bedtime-story tone",
                "options": ["Playful and silly", "Suspenseful", "Matter-of-fact"],
            },
            {
                "label": "Setting",
                "value": "A wood near a meadow",
                "options": ["A snowy mountain village", "A seaside cliff", "A big city"],
            },
            {
                "label": "Pacing",
                "value": "Steady, with a quick ending",
                "options": ["Slow build", "Breakneck"],
            },
        ]
    },
    # widget generation guided by "Widgets to change the ending"
    {
        "widgets": [
            {
                "label": "Ending Style",
                "value": "The wolf is defeated and the pigs are safe",
                "options": [
                    "The wolf reforms and joins the pigs",
                    "A cliffhanger ending",
                    "The pigs move to a new forest",
                ],
            },
            {
                "label": "Final Twist",
                "value": "The wolf lands in a pot of soup",
                "options": ["The wolf becomes the pigs' cook", "A fourth pig appears"],
            },
        ]
    },
    # option suggestions for "Three Pigs' Names"
    {"options": ["Pip, Pop, Pup", "Trot, Dot, Scot"]},
    # prompted suggestions: "Give me 3 names that rhyme"
    {"options": ["Rick, Stick, Brick", "Clay, Fay, May"]},
    # rephrase with Threat Description + Three Pigs' Names active
    chunks(STORY_V2),
]

E2E_TEXT = "Hello world."
E2E_REPHRASED = "Greetings, world."

E2E_RESPONSES = [
    chunks(E2E_REPHRASED),
]


def record(scenario_path: Path, fixture_path: Path, responses):
    fixture_path.unlink(missing_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        store = WorkspaceStore(tmp)
        provider = RecordingProvider(QueueProvider(responses), fixture_path)
        service = FlowService(store, Gateway(provider))
        scenario = parse_scenario(scenario_path)
        run_scenario(scenario, InProcessBackend(service))
    print(f"wrote {fixture_path}")


def main():
    scenarios = ROOT / "scenarios"
    record(
        scenarios / "three_little_pigs.scenario",
        scenarios / "three_little_pigs.fixture.json",
        PIGS_RESPONSES,
    )
    record(
        scenarios / "frontend_e2e.scenario",
        scenarios / "frontend_e2e.fixture.json",
        E2E_RESPONSES,
    )


if __name__ == "__main__":
    main()
