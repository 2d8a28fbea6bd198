import { describe, expect, it } from "vitest";

import { GuidanceClient } from "../src/client";
import type { SocketLike } from "../src/client";
import type { ErrorMessage, ResultMessage } from "../src/protocol";
import { result } from "./helpers";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onopen: (() => void) | null = null;
  onmessage: ((event: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }
  close(): void {
    this.closed = true;
  }
  receive(payload: unknown): void {
    this.onmessage?.({ data: JSON.stringify(payload) });
  }
}

function connected() {
  const sockets: FakeSocket[] = [];
  const results: ResultMessage[] = [];
  const errors: ErrorMessage[] = [];
  const warnings: string[] = [];
  const states: string[] = [];
  const client = new GuidanceClient(
    "ws://test/stream",
    {
      onResult: (r) => results.push(r),
      onProtocolError: (e) => errors.push(e),
      onWarning: (w) => warnings.push(w),
      onConnectionChange: (s) => states.push(s),
    },
    () => {
      const socket = new FakeSocket();
      sockets.push(socket);
      return socket;
    },
  );
  client.connect();
  sockets[0].onopen?.();
  return { client, sockets, results, errors, warnings, states };
}

describe("GuidanceClient", () => {
  it("sends frames with the session id and increasing indices", () => {
    const { client, sockets } = connected();
    client.sendFrame("AAAA", 0);
    client.sendFrame("BBBB", 20);
    const [a, b] = sockets[0].sent.map((s) => JSON.parse(s));
    expect(a).toMatchObject({ type: "frame", frame_index: 0, image_b64: "AAAA" });
    expect(b).toMatchObject({ type: "frame", frame_index: 1, image_b64: "BBBB" });
    expect(a.session_id).toBe(client.sessionId);
    expect(b.session_id).toBe(a.session_id);
  });

  it("reconnect starts a fresh session with frame indices reset", () => {
    const { client, sockets } = connected();
    client.sendFrame("AAAA", 0);
    const firstId = client.sessionId;
    client.connect();
    sockets[1].onopen?.();
    client.sendFrame("CCCC", 40);
    expect(client.sessionId).not.toBe(firstId);
    const replayed = JSON.parse(sockets[1].sent[0]);
    expect(replayed.frame_index).toBe(0);
    expect(sockets[0].closed).toBe(true);
  });

  it("routes results, protocol errors, and playback completion", () => {
    const { sockets, results, errors } = connected();
    sockets[0].receive(result({ frame_index: 4 }));
    sockets[0].receive({ type: "error", code: "malformed", detail: "bad frame" });
    expect(results.map((r) => r.frame_index)).toEqual([4]);
    expect(errors.map((e) => e.code)).toEqual(["malformed"]);
  });

  it("warns on unparseable payloads instead of throwing", () => {
    const { sockets, warnings, results } = connected();
    sockets[0].onmessage?.({ data: "{broken" });
    sockets[0].receive({ type: "result", frame_index: "x" });
    expect(warnings).toHaveLength(2);
    expect(results).toHaveLength(0);
  });

  it("emits open_playback and close for the current session", () => {
    const { client, sockets } = connected();
    client.openPlayback("s01/sweep00.json");
    client.closeSession();
    const [open, close] = sockets[0].sent.map((s) => JSON.parse(s));
    expect(open).toEqual({
      type: "open_playback",
      session_id: client.sessionId,
      sweep_path: "s01/sweep00.json",
    });
    expect(close).toEqual({ type: "close", session_id: client.sessionId });
  });

  it("reports connection state transitions", () => {
    const { sockets, states } = connected();
    sockets[0].onerror?.();
    expect(states).toEqual(["connecting", "open", "error"]);
  });

  it("refuses to send before connecting", () => {
    const client = new GuidanceClient("ws://test/stream", {}, () => new FakeSocket());
    expect(() => client.sendFrame("AAAA", 0)).toThrow("not connected");
  });
});
