// Rolling score trace: the last N scores as a line with horizontal guides at
// the category boundaries (0 and -1). Gaps longer than the staleness window
// break the line instead of bridging silence.

import type { DrawSurface } from "./overlay";
import type { SessionView } from "./sessionView";

export const SCORE_MIN = -2;
export const SCORE_MAX = 1;
export const GUIDE_SCORES: readonly number[] = [0, -1];

export interface TracePoint {
  frameIndex: number;
  score: number;
}

export interface ChartState {
  /** Line segments; a new segment starts after each stale gap. */
  segments: TracePoint[][];
  guides: readonly number[];
  scoreMin: number;
  scoreMax: number;
  capacity: number;
}

/** Chart-ready view of the score history (pure; no drawing). */
export function plotScoreTrace(view: SessionView): ChartState {
  const segments: TracePoint[][] = [];
  let current: TracePoint[] = [];
  let previousAt: number | null = null;
  for (const point of view.scoreHistory) {
    if (previousAt !== null && point.receivedAt - previousAt > view.staleAfterMs) {
      if (current.length > 0) segments.push(current);
      current = [];
    }
    current.push({ frameIndex: point.frameIndex, score: point.score });
    previousAt = point.receivedAt;
  }
  if (current.length > 0) segments.push(current);
  return {
    segments,
    guides: GUIDE_SCORES,
    scoreMin: SCORE_MIN,
    scoreMax: SCORE_MAX,
    capacity: view.capacity,
  };
}

export interface TraceLayout {
  width: number;
  height: number;
}

export function drawScoreTrace(
  ctx: DrawSurface,
  chart: ChartState,
  layout: TraceLayout,
): void {
  const { width, height } = layout;
  ctx.clearRect(0, 0, width, height);
  const span = chart.scoreMax - chart.scoreMin;
  const toY = (score: number) => height * (1 - (score - chart.scoreMin) / span);

  ctx.strokeStyle = "#666666";
  ctx.lineWidth = 1;
  for (const guide of chart.guides) {
    ctx.beginPath();
    ctx.moveTo(0, toY(guide));
    ctx.lineTo(width, toY(guide));
    ctx.stroke();
  }

  // x positions index the rolling window, newest at the right edge
  let offset = 0;
  const total = chart.segments.reduce((n, s) => n + s.length, 0);
  const toX = (i: number) => (width * i) / Math.max(chart.capacity - 1, 1);
  const start = Math.max(chart.capacity - total, 0);
  ctx.strokeStyle = "#4dabf7";
  ctx.lineWidth = 1.5;
  for (const segment of chart.segments) {
    ctx.beginPath();
    segment.forEach((point, i) => {
      const x = toX(start + offset + i);
      const y = toY(point.score);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
    offset += segment.length;
  }
}
