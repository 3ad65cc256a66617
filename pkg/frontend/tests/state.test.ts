import { describe, expect, it } from "vitest";

import {
  activePairs,
  rephraseEnabled,
  widgetVisualState,
  wordCount,
  type ControlWidget,
} from "../src/state";

function widget(overrides: Partial<ControlWidget> = {}): ControlWidget {
  return {
    id: "w",
    title: "Tone",
    value: "formal",
    options: [],
    zone: "panel",
    position: null,
    size: [220, 120],
    fresh: false,
    origin: "manual",
    ...overrides,
  };
}

describe("widgetVisualState", () => {
  it("maps panel+fresh to the glowing state", () => {
    expect(widgetVisualState({ zone: "panel", fresh: true })).toBe("fresh");
  });

  it("maps canvas widgets to active regardless of freshness", () => {
    expect(widgetVisualState({ zone: "canvas", fresh: false })).toBe("active");
    // a fresh flag on a canvas widget is stale data; canvas still wins
    expect(widgetVisualState({ zone: "canvas", fresh: true })).toBe("active");
  });

  it("maps everything else to inactive", () => {
    expect(widgetVisualState({ zone: "panel", fresh: false })).toBe("inactive");
  });
});

describe("activePairs", () => {
  it("includes only canvas widgets with nonempty trimmed title and value", () => {
    const widgets = [
      widget({ id: "a", zone: "canvas", position: [0, 0] }),
      widget({ id: "b", zone: "canvas", position: [0, 0], value: "   " }),
      widget({ id: "c", zone: "canvas", position: [0, 0], title: "" }),
      widget({ id: "d", zone: "panel" }),
      widget({ id: "e", zone: "canvas", position: [0, 0], title: " Setting ", value: " farm " }),
    ];
    expect(activePairs(widgets)).toEqual([
      ["Tone", "formal"],
      ["Setting", "farm"],
    ]);
  });

  it("drives the rephrase affordance", () => {
    expect(rephraseEnabled([widget()])).toBe(false);
    expect(rephraseEnabled([widget({ zone: "canvas", position: [0, 0] })])).toBe(true);
  });
});

describe("wordCount", () => {
  it("counts whitespace-delimited words", () => {
    expect(wordCount("")).toBe(0);
    expect(wordCount("   ")).toBe(0);
    expect(wordCount("one")).toBe(1);
    expect(wordCount("  a\tb\n c  ")).toBe(3);
  });
});
