// Client-side session state: the latest result, a bounded score history,
// and the lamp. The lamp derives only from results newer than the staleness
// window; a frozen guidance display during live probe movement would be
// actively misleading, so silence flips it to a distinct "stale" state.

import type { LvefEstimate, ResultMessage } from "./protocol";

export type LampState = "green" | "yellow" | "red" | "stale";

export interface ScorePoint {
  frameIndex: number;
  score: number;
  receivedAt: number; // ms clock of arrival, used for stale-gap detection
}

export interface SessionView {
  capacity: number;
  staleAfterMs: number;
  lastResult: ResultMessage | null;
  lastResultAt: number;
  scoreHistory: ScorePoint[]; // oldest first, length <= capacity
  lvef: LvefEstimate | null;
  droppedTotal: number;
}

export function createSessionView(capacity = 300, staleAfterMs = 1000): SessionView {
  if (capacity < 1) throw new Error(`capacity must be positive, got ${capacity}`);
  return {
    capacity,
    staleAfterMs,
    lastResult: null,
    lastResultAt: -Infinity,
    scoreHistory: [],
    lvef: null,
    droppedTotal: 0,
  };
}

/** Fold one result into the view; `now` is the arrival clock in ms. */
export function applyResult(view: SessionView, result: ResultMessage, now: number): void {
  view.lastResult = result;
  view.lastResultAt = now;
  view.scoreHistory.push({
    frameIndex: result.frame_index,
    score: result.score,
    receivedAt: now,
  });
  if (view.scoreHistory.length > view.capacity) {
    view.scoreHistory.splice(0, view.scoreHistory.length - view.capacity);
  }
  if (result.lvef !== null) view.lvef = result.lvef;
  view.droppedTotal += result.dropped_count ?? 0;
}

/** Lamp = category of the most recent result, or "stale" after silence. */
export function lampState(view: SessionView, now: number): LampState {
  if (view.lastResult === null) return "stale";
  if (now - view.lastResultAt > view.staleAfterMs) return "stale";
  return view.lastResult.category;
}

export function clearSession(view: SessionView): void {
  view.lastResult = null;
  view.lastResultAt = -Infinity;
  view.scoreHistory.length = 0;
  view.lvef = null;
  view.droppedTotal = 0;
}
