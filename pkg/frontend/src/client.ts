// Thin WebSocket client for the guidance wire protocol. Each connect uses a
// fresh session id (the server forgets closed sessions), frame indices only
// move forward, and anything unparseable is surfaced as a warning instead of
// an exception in the socket callback.

import { parseServerMessage } from "./protocol";
import type {
  ErrorMessage,
  PlaybackDoneMessage,
  ResultMessage,
  ServerMessage,
} from "./protocol";

export type ConnectionState = "idle" | "connecting" | "open" | "closed" | "error";

// What the client needs from a WebSocket; tests substitute a scripted fake.
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export interface ClientEvents {
  onResult(result: ResultMessage): void;
  onPlaybackDone(message: PlaybackDoneMessage): void;
  onProtocolError(message: ErrorMessage): void;
  onConnectionChange(state: ConnectionState): void;
  onWarning(detail: string): void;
}

let sessionCounter = 0;

function freshSessionId(): string {
  sessionCounter += 1;
  return `ui-${Date.now().toString(36)}-${sessionCounter}`;
}

export class GuidanceClient {
  private socket: SocketLike | null = null;
  private events: Partial<ClientEvents>;
  private makeSocket: (url: string) => SocketLike;
  private frameIndex = 0;
  sessionId = "";
  state: ConnectionState = "idle";

  constructor(
    private url: string,
    events: Partial<ClientEvents> = {},
    makeSocket?: (url: string) => SocketLike,
  ) {
    this.events = events;
    this.makeSocket = makeSocket ?? ((u) => new WebSocket(u) as unknown as SocketLike);
  }

  /** Open the stream; reconnecting starts over with a fresh session id. */
  connect(): void {
    this.disconnect();
    this.sessionId = freshSessionId();
    this.frameIndex = 0;
    this.setState("connecting");
    const socket = this.makeSocket(this.url);
    this.socket = socket;
    socket.onopen = () => this.setState("open");
    socket.onclose = () => this.setState("closed");
    socket.onerror = () => this.setState("error");
    socket.onmessage = (event) => this.handleMessage(String(event.data));
  }

  disconnect(): void {
    if (this.socket !== null) {
      this.socket.onclose = null;
      this.socket.close();
      this.socket = null;
      this.setState("closed");
    }
  }

  sendFrame(imageB64: string, timestampMs: number): number {
    const socket = this.requireSocket();
    const index = this.frameIndex;
    this.frameIndex += 1;
    socket.send(
      JSON.stringify({
        type: "frame",
        session_id: this.sessionId,
        frame_index: index,
        timestamp_ms: timestampMs,
        image_b64: imageB64,
      }),
    );
    return index;
  }

  openPlayback(sweepPath: string): void {
    this.requireSocket().send(
      JSON.stringify({
        type: "open_playback",
        session_id: this.sessionId,
        sweep_path: sweepPath,
      }),
    );
  }

  closeSession(): void {
    this.requireSocket().send(
      JSON.stringify({ type: "close", session_id: this.sessionId }),
    );
  }

  private requireSocket(): SocketLike {
    if (this.socket === null) throw new Error("not connected");
    return this.socket;
  }

  private setState(state: ConnectionState): void {
    this.state = state;
    this.events.onConnectionChange?.(state);
  }

  private handleMessage(raw: string): void {
    const message: ServerMessage | null = parseServerMessage(raw);
    if (message === null) {
      this.events.onWarning?.(`dropped malformed server payload: ${raw.slice(0, 120)}`);
      return;
    }
    if (message.type === "result") this.events.onResult?.(message);
    else if (message.type === "playback_done") this.events.onPlaybackDone?.(message);
    else this.events.onProtocolError?.(message);
  }
}
