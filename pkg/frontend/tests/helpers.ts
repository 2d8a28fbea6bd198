import type { DrawSurface } from "../src/overlay";
import type { Landmark, ResultMessage } from "../src/protocol";

export interface DrawCall {
  op: string;
  args: (number | string)[];
}

/** Call-recording stand-in for a 2D canvas context. */
export class RecordingSurface implements DrawSurface {
  strokeStyle = "";
  fillStyle = "";
  lineWidth = 0;
  font = "";
  calls: DrawCall[] = [];

  beginPath(): void {
    this.calls.push({ op: "beginPath", args: [] });
  }
  arc(x: number, y: number, radius: number, a0: number, a1: number): void {
    this.calls.push({ op: "arc", args: [x, y, radius, a0, a1] });
  }
  moveTo(x: number, y: number): void {
    this.calls.push({ op: "moveTo", args: [x, y] });
  }
  lineTo(x: number, y: number): void {
    this.calls.push({ op: "lineTo", args: [x, y] });
  }
  stroke(): void {
    this.calls.push({ op: "stroke", args: [] });
  }
  fill(): void {
    this.calls.push({ op: "fill", args: [] });
  }
  fillText(text: string, x: number, y: number): void {
    this.calls.push({ op: "fillText", args: [text, x, y] });
  }
  clearRect(x: number, y: number, w: number, h: number): void {
    this.calls.push({ op: "clearRect", args: [x, y, w, h] });
  }

  ops(op: string): DrawCall[] {
    return this.calls.filter((c) => c.op === op);
  }
}

export function landmark(id: string, overrides: Partial<Landmark> = {}): Landmark {
  return { id, x: 10, y: 20, radius: 2, visible: true, ...overrides };
}

export function result(overrides: Partial<ResultMessage> = {}): ResultMessage {
  return {
    type: "result",
    frame_index: 0,
    category: "green",
    score: 0.5,
    latency_ms: 1.0,
    dropped_count: 0,
    landmarks: [],
    lvef: null,
    ...overrides,
  };
}
