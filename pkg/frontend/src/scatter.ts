// Canvas scatter of (delta1, delta2) points colored by cluster, with
// centroid markers. Both ratios live in [0, 1], so the projection is a
// fixed unit-square mapping.

import { clusterColor } from "./format.js";

export interface ScatterDatum {
  x: number;
  y: number;
  cluster: number | null;
}

export const MARGIN = 28;

/** Unit-square data coordinates to canvas pixels (y axis flipped). */
export function project(
  x: number,
  y: number,
  width: number,
  height: number,
  margin: number = MARGIN,
): [number, number] {
  const spanX = width - 2 * margin;
  const spanY = height - 2 * margin;
  return [margin + x * spanX, height - margin - y * spanY];
}

export function drawScatter(
  canvas: HTMLCanvasElement,
  points: ScatterDatum[],
  centroids: [number, number][],
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);

  ctx.strokeStyle = "#ccc";
  ctx.strokeRect(MARGIN, MARGIN, width - 2 * MARGIN, height - 2 * MARGIN);
  ctx.fillStyle = "#666";
  ctx.font = "11px sans-serif";
  ctx.fillText("0", MARGIN - 10, height - MARGIN + 12);
  ctx.fillText("delta1 →", width / 2 - 20, height - 6);
  ctx.save();
  ctx.translate(10, height / 2 + 20);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText("delta2 →", 0, 0);
  ctx.restore();

  for (const p of points) {
    const [px, py] = project(p.x, p.y, width, height);
    ctx.fillStyle = clusterColor(p.cluster);
    ctx.globalAlpha = 0.75;
    ctx.beginPath();
    ctx.arc(px, py, 2.5, 0, Math.PI * 2);
    ctx.fill();
  }
  ctx.globalAlpha = 1.0;

  centroids.forEach(([cx, cy], index) => {
    const [px, py] = project(cx, cy, width, height);
    ctx.strokeStyle = clusterColor(index);
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(px - 6, py);
    ctx.lineTo(px + 6, py);
    ctx.moveTo(px, py - 6);
    ctx.lineTo(px, py + 6);
    ctx.stroke();
    ctx.lineWidth = 1;
  });
}
