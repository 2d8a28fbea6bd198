// Wire types for the guidance service WebSocket protocol. The server is the
// source of truth; malformed payloads are dropped here with a warning rather
// than crashing the render loop.

export type PoseCategory = "green" | "yellow" | "red";

export interface Landmark {
  id: string;
  x: number;
  y: number;
  radius: number;
  visible: boolean;
}

export interface LvefEstimate {
  value: number;
  frame_range: [number, number];
}

export interface ResultMessage {
  type: "result";
  frame_index: number;
  category: PoseCategory;
  score: number;
  latency_ms: number;
  dropped_count: number;
  landmarks: Landmark[];
  lvef: LvefEstimate | null;
  /** Playback results carry the source frame so the client needs no file access. */
  image_b64?: string;
}

export interface ErrorMessage {
  type: "error";
  code: "malformed" | "out_of_order" | "session_not_found";
  detail: string;
}

export interface PlaybackDoneMessage {
  type: "playback_done";
  sweep_id: string;
  frame_count: number;
}

export type ServerMessage = ResultMessage | ErrorMessage | PlaybackDoneMessage;

export interface FrameMessage {
  type: "frame";
  session_id: string;
  frame_index: number;
  timestamp_ms: number;
  image_b64: string;
}

const CATEGORIES: readonly string[] = ["green", "yellow", "red"];
const ERROR_CODES: readonly string[] = ["malformed", "out_of_order", "session_not_found"];

function isNum(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function isLandmark(v: unknown): v is Landmark {
  if (typeof v !== "object" || v === null) return false;
  const p = v as Record<string, unknown>;
  return (
    typeof p.id === "string" &&
    isNum(p.x) &&
    isNum(p.y) &&
    isNum(p.radius) &&
    typeof p.visible === "boolean"
  );
}

function isLvef(v: unknown): v is LvefEstimate {
  if (typeof v !== "object" || v === null) return false;
  const p = v as Record<string, unknown>;
  return (
    isNum(p.value) &&
    Array.isArray(p.frame_range) &&
    p.frame_range.length === 2 &&
    p.frame_range.every(isNum)
  );
}

/** Parse one server payload; null means "drop it and warn", never throw. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as Record<string, unknown>;

  if (msg.type === "result") {
    if (
      !isNum(msg.frame_index) ||
      typeof msg.category !== "string" ||
      !CATEGORIES.includes(msg.category) ||
      !isNum(msg.score) ||
      !Array.isArray(msg.landmarks) ||
      !msg.landmarks.every(isLandmark) ||
      !(msg.lvef === null || isLvef(msg.lvef))
    ) {
      return null;
    }
    return msg as unknown as ResultMessage;
  }
  if (msg.type === "error") {
    if (typeof msg.code !== "string" || !ERROR_CODES.includes(msg.code)) return null;
    return msg as unknown as ErrorMessage;
  }
  if (msg.type === "playback_done") {
    if (typeof msg.sweep_id !== "string" || !isNum(msg.frame_count)) return null;
    return msg as unknown as PlaybackDoneMessage;
  }
  return null;
}
