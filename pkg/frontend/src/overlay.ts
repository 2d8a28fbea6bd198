// Canvas landmark overlay: one dot per visible landmark, an uncertainty
// circle of the reported radius, and a text label on the key anatomical
// subset. A single drawing surface keeps 47-marker redraw cheap.

import type { Landmark } from "./protocol";

// Subset of CanvasRenderingContext2D the overlay touches; tests substitute a
// call-recording stub so no browser canvas is needed.
export interface DrawSurface {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  beginPath(): void;
  arc(x: number, y: number, radius: number, startAngle: number, endAngle: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
}

export interface OverlayStyle {
  markerRadius: number;
  markerColor: string;
  circleColor: string;
  labelColor: string;
  labelFont: string;
  labelOffset: number;
}

export const DEFAULT_OVERLAY_STYLE: OverlayStyle = {
  markerRadius: 2.5,
  markerColor: "#ffd966",
  circleColor: "rgba(255, 217, 102, 0.55)",
  labelColor: "#ffffff",
  labelFont: "11px sans-serif",
  labelOffset: 6,
};

// Key subset forwarded to pose scoring; only these get text labels so the
// contour points do not smear the image with 42 captions.
export const KEY_LANDMARK_LABELS: ReadonlyMap<string, string> = new Map([
  ["lv_contour_00", "LV apex"],
  ["lv_contour_01", "MV"],
  ["RV", "RV"],
  ["TV", "TV"],
  ["RA", "RA"],
  ["LA", "LA"],
]);

export interface OverlayScale {
  sx: number; // display px per model px, horizontal
  sy: number;
}

/**
 * Draw the overlay for one result; returns the number of markers drawn.
 * Hidden (visibility-gated) landmarks are never drawn.
 */
export function drawOverlay(
  ctx: DrawSurface,
  landmarks: Landmark[],
  scale: OverlayScale = { sx: 1, sy: 1 },
  style: OverlayStyle = DEFAULT_OVERLAY_STYLE,
): number {
  const radiusScale = Math.sqrt(scale.sx * scale.sy);
  let drawn = 0;
  for (const lm of landmarks) {
    if (!lm.visible) continue;
    const x = lm.x * scale.sx;
    const y = lm.y * scale.sy;

    ctx.fillStyle = style.markerColor;
    ctx.beginPath();
    ctx.arc(x, y, style.markerRadius, 0, 2 * Math.PI);
    ctx.fill();

    ctx.strokeStyle = style.circleColor;
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.arc(x, y, Math.max(lm.radius * radiusScale, style.markerRadius), 0, 2 * Math.PI);
    ctx.stroke();

    const label = KEY_LANDMARK_LABELS.get(lm.id);
    if (label !== undefined) {
      ctx.fillStyle = style.labelColor;
      ctx.font = style.labelFont;
      ctx.fillText(label, x + style.labelOffset, y - style.labelOffset);
    }
    drawn += 1;
  }
  return drawn;
}
