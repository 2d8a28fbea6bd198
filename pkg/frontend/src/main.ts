// Page wiring: connects the guidance client to the lamp, overlay canvas,
// score trace, LVEF panel, and playback controls. All guidance content comes
// from server results; this file only routes and renders.

import { GuidanceClient } from "./client";
import { drawOverlay } from "./overlay";
import { PlaybackStore } from "./playback";
import type { ResultMessage } from "./protocol";
import { applyResult, clearSession, createSessionView, lampState } from "./sessionView";
import { drawScoreTrace, plotScoreTrace } from "./trace";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el as T;
};

const frameCanvas = $<HTMLCanvasElement>("frame");
const traceCanvas = $<HTMLCanvasElement>("trace");
const lampEl = $("lamp");
const lvefEl = $("lvef");
const bannerEl = $("banner");
const consoleEl = $("console");
const scrubEl = $<HTMLInputElement>("scrub");
const playButton = $<HTMLButtonElement>("play");
const connectButton = $<HTMLButtonElement>("connect");
const serverInput = $<HTMLInputElement>("server");
const sweepInput = $<HTMLInputElement>("sweep");

const frameCtx = frameCanvas.getContext("2d")!;
const traceCtx = traceCanvas.getContext("2d")!;

const view = createSessionView();
const playback = new PlaybackStore();
let client: GuidanceClient | null = null;
let playbackFrame = 0;
let playing = false;
let playTimer: number | null = null;
let currentImage: HTMLImageElement | null = null;
let currentLandmarks: ResultMessage["landmarks"] = [];

function logLine(text: string): void {
  const line = document.createElement("div");
  line.textContent = text;
  consoleEl.appendChild(line);
  while (consoleEl.childElementCount > 200) consoleEl.firstElementChild?.remove();
  consoleEl.scrollTop = consoleEl.scrollHeight;
}

function showBanner(text: string | null): void {
  bannerEl.textContent = text ?? "";
  bannerEl.style.display = text === null ? "none" : "block";
}

function setFrameImage(b64: string | undefined): void {
  if (b64 === undefined) return;
  const image = new Image();
  image.onload = () => {
    currentImage = image;
  };
  image.src = `data:image/png;base64,${b64}`;
}

function displayResult(result: ResultMessage): void {
  currentLandmarks = result.landmarks;
  setFrameImage(result.image_b64);
  if (result.lvef !== null) {
    const [a, b] = result.lvef.frame_range;
    lvefEl.textContent = `LVEF ${result.lvef.value.toFixed(1)}% (frames ${a}-${b})`;
  }
}

function onResult(result: ResultMessage): void {
  applyResult(view, result, performance.now());
  if (result.image_b64 !== undefined) {
    playback.store(result);
    scrubEl.max = String(Math.max(playback.frameCount - 1, 0));
    if (!playing) return; // scrub position decides what shows
    playbackFrame = result.frame_index;
    scrubEl.value = String(playbackFrame);
  }
  displayResult(result);
}

function scrubTo(frameIndex: number): void {
  const stored = playback.seek(frameIndex);
  if (stored === null) return;
  playbackFrame = frameIndex;
  applyResult(view, stored, performance.now());
  displayResult(stored);
}

function render(): void {
  const lamp = lampState(view, performance.now());
  lampEl.dataset.state = lamp;
  lampEl.textContent = lamp.toUpperCase();

  frameCtx.clearRect(0, 0, frameCanvas.width, frameCanvas.height);
  if (currentImage !== null) {
    frameCtx.drawImage(currentImage, 0, 0, frameCanvas.width, frameCanvas.height);
  }
  if (currentImage !== null && currentImage.width > 0) {
    drawOverlay(frameCtx, currentLandmarks, {
      sx: frameCanvas.width / currentImage.width,
      sy: frameCanvas.height / currentImage.height,
    });
  }
  drawScoreTrace(traceCtx, plotScoreTrace(view), {
    width: traceCanvas.width,
    height: traceCanvas.height,
  });
  requestAnimationFrame(render);
}

function connect(): void {
  client?.disconnect();
  clearSession(view);
  playback.clear();
  currentImage = null;
  currentLandmarks = [];
  showBanner(null);

  client = new GuidanceClient(serverInput.value, {
    onResult,
    onPlaybackDone: (message) => {
      scrubEl.max = String(Math.max(message.frame_count - 1, 0));
      logLine(`playback complete: ${message.sweep_id} (${message.frame_count} frames)`);
    },
    onProtocolError: (message) => logLine(`server error [${message.code}]: ${message.detail}`),
    onWarning: logLine,
    onConnectionChange: (state) => {
      if (state === "error" || state === "closed") {
        showBanner("Connection lost. Check the server address and reconnect.");
        stopPlaying();
      } else if (state === "open") {
        showBanner(null);
        const sweep = sweepInput.value.trim();
        if (sweep !== "") client?.openPlayback(sweep);
      }
    },
  });
  client.connect();
}

function stopPlaying(): void {
  playing = false;
  playButton.textContent = "Play";
  if (playTimer !== null) {
    window.clearInterval(playTimer);
    playTimer = null;
  }
}

function togglePlay(): void {
  if (playing) {
    stopPlaying();
    return;
  }
  if (!playback.isComplete) return; // stream still arriving; nothing to replay yet
  playing = true;
  playButton.textContent = "Pause";
  playTimer = window.setInterval(() => {
    const next = playbackFrame + 1;
    if (next >= playback.frameCount) {
      stopPlaying();
      return;
    }
    scrubEl.value = String(next);
    scrubTo(next);
  }, 40);
}

connectButton.addEventListener("click", connect);
playButton.addEventListener("click", togglePlay);
scrubEl.addEventListener("input", () => {
  stopPlaying();
  scrubTo(Number(scrubEl.value));
});

requestAnimationFrame(render);
