// Store for a played-back sweep: every result that arrived over the wire,
// keyed by frame index. Scrubbing is a pure lookup of what the server
// already computed; the client never re-derives scores or overlays.

import type { PlaybackDoneMessage, ResultMessage } from "./protocol";

export class PlaybackStore {
  private results = new Map<number, ResultMessage>();
  private done: PlaybackDoneMessage | null = null;

  store(result: ResultMessage): void {
    this.results.set(result.frame_index, result);
  }

  finish(message: PlaybackDoneMessage): void {
    this.done = message;
  }

  /** The stored result for a frame, exactly as received; null if absent. */
  seek(frameIndex: number): ResultMessage | null {
    return this.results.get(frameIndex) ?? null;
  }

  get frameCount(): number {
    return this.done !== null ? this.done.frame_count : this.results.size;
  }

  get sweepId(): string | null {
    return this.done?.sweep_id ?? null;
  }

  get isComplete(): boolean {
    return this.done !== null;
  }

  clear(): void {
    this.results.clear();
    this.done = null;
  }
}
