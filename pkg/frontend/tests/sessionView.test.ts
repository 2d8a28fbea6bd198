import { describe, expect, it } from "vitest";

import {
  applyResult,
  clearSession,
  createSessionView,
  lampState,
} from "../src/sessionView";
import { result } from "./helpers";

describe("lamp", () => {
  it("matches the category of the latest result for all three colors", () => {
    for (const category of ["green", "yellow", "red"] as const) {
      const view = createSessionView();
      applyResult(view, result({ category }), 1000);
      expect(lampState(view, 1000)).toBe(category);
    }
  });

  it("is stale before any result arrives", () => {
    expect(lampState(createSessionView(), 0)).toBe("stale");
  });

  it("flips to stale within one second of stream silence", () => {
    const view = createSessionView();
    applyResult(view, result({ category: "green" }), 1000);
    expect(lampState(view, 1999)).toBe("green");
    expect(lampState(view, 2000)).toBe("green"); // window is inclusive
    expect(lampState(view, 2001)).toBe("stale");
  });

  it("recovers from stale when a new result arrives", () => {
    const view = createSessionView();
    applyResult(view, result({ category: "red" }), 0);
    expect(lampState(view, 5000)).toBe("stale");
    applyResult(view, result({ category: "yellow" }), 5000);
    expect(lampState(view, 5000)).toBe("yellow");
  });
});

describe("score history", () => {
  it("evicts the first sample when the 301st arrives", () => {
    const view = createSessionView(300);
    for (let i = 0; i < 301; i++) {
      applyResult(view, result({ frame_index: i, score: i / 1000 }), i);
    }
    expect(view.scoreHistory).toHaveLength(300);
    expect(view.scoreHistory[0].frameIndex).toBe(1);
    expect(view.scoreHistory[299].frameIndex).toBe(300);
  });

  it("never exceeds capacity", () => {
    const view = createSessionView(10);
    for (let i = 0; i < 57; i++) {
      applyResult(view, result({ frame_index: i }), i);
      expect(view.scoreHistory.length).toBeLessThanOrEqual(10);
    }
    expect(view.scoreHistory.map((p) => p.frameIndex)).toEqual(
      [47, 48, 49, 50, 51, 52, 53, 54, 55, 56],
    );
  });

  it("rejects a non-positive capacity", () => {
    expect(() => createSessionView(0)).toThrow("capacity");
  });
});

describe("lvef and drops", () => {
  it("keeps the last non-null estimate", () => {
    const view = createSessionView();
    applyResult(view, result({ lvef: { value: 57.5, frame_range: [10, 41] } }), 0);
    applyResult(view, result({ lvef: null }), 1);
    expect(view.lvef).toEqual({ value: 57.5, frame_range: [10, 41] });
  });

  it("accumulates dropped counts", () => {
    const view = createSessionView();
    applyResult(view, result({ dropped_count: 2 }), 0);
    applyResult(view, result({ dropped_count: 3 }), 1);
    expect(view.droppedTotal).toBe(5);
  });

  it("clears back to the initial state", () => {
    const view = createSessionView();
    applyResult(view, result({ lvef: { value: 60, frame_range: [0, 31] } }), 0);
    clearSession(view);
    expect(view.lastResult).toBeNull();
    expect(view.scoreHistory).toHaveLength(0);
    expect(view.lvef).toBeNull();
    expect(lampState(view, 1)).toBe("stale");
  });
});
