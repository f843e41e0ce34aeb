import type { EpsilonReport } from "./api.js";

/** Square plot mapping the data interval [lo, hi] to both canvas axes. */
export interface PlotTransform {
  lo: number;
  hi: number;
  size: number;
  pad: number;
}

const MARGIN = 0.05;

/** Data range covering the first two channels of every point set plus any
    marker positions. The origin is always inside. */
export function plotRange(
  sets: (number[][] | null)[],
  markers: number[][]
): { lo: number; hi: number } {
  let lo = 0;
  let hi = 1e-6;
  for (const set of sets) {
    if (!set) continue;
    for (const p of set) {
      lo = Math.min(lo, p[0], p[1]);
      hi = Math.max(hi, p[0], p[1]);
    }
  }
  for (const m of markers) {
    lo = Math.min(lo, m[0], m[1]);
    hi = Math.max(hi, m[0], m[1]);
  }
  const span = hi - lo;
  return { lo: lo - MARGIN * span, hi: hi + MARGIN * span };
}

export function makeTransform(
  range: { lo: number; hi: number },
  size: number,
  pad: number
): PlotTransform {
  return { lo: range.lo, hi: range.hi, size, pad };
}

export function toCanvas(t: PlotTransform, u: number, v: number): [number, number] {
  const span = t.size - 2 * t.pad;
  const s = (t.hi - t.lo) || 1;
  return [
    t.pad + ((u - t.lo) / s) * span,
    t.size - t.pad - ((v - t.lo) / s) * span,
  ];
}

/** Display tint for one point from its own channel values. Decoration
    only; every number the page shows comes from a server response. */
export function tint(p: number[]): string {
  const c = (v: number) =>
    Math.round(255 * Math.pow(Math.min(1, Math.max(0, v)), 1 / 2.2));
  return `rgb(${c(p[0])}, ${c(p[1])}, ${c(p[2])})`;
}

/** Where the fitted channel lines cross the zero-sum plane: the first two
    intercepts. Correction moves this point to the origin. */
export function convergenceMarker(report: EpsilonReport): [number, number] {
  return [report.epsilon[0], report.epsilon[1]];
}

function drawCross(ctx: CanvasRenderingContext2D, x: number, y: number, r: number) {
  ctx.beginPath();
  ctx.moveTo(x - r, y - r);
  ctx.lineTo(x + r, y + r);
  ctx.moveTo(x - r, y + r);
  ctx.lineTo(x + r, y - r);
  ctx.stroke();
}

export function drawScatter(
  canvas: HTMLCanvasElement,
  raw: number[][] | null,
  corrected: number[][] | null,
  report: EpsilonReport | null
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const size = canvas.width;
  ctx.clearRect(0, 0, size, canvas.height);

  const markers: number[][] = [[0, 0]];
  if (report) markers.push(convergenceMarker(report));
  const t = makeTransform(plotRange([raw, corrected], markers), size, 28);

  // axes through the data origin
  const [ox, oy] = toCanvas(t, 0, 0);
  ctx.strokeStyle = "#3a4149";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(t.pad, oy);
  ctx.lineTo(size - t.pad, oy);
  ctx.moveTo(ox, t.pad);
  ctx.lineTo(ox, size - t.pad);
  ctx.stroke();

  const plot = (pts: number[][], side: number, alpha: number) => {
    ctx.globalAlpha = alpha;
    for (const p of pts) {
      const [x, y] = toCanvas(t, p[0], p[1]);
      ctx.fillStyle = tint(p);
      ctx.fillRect(x - side / 2, y - side / 2, side, side);
    }
    ctx.globalAlpha = 1;
  };
  if (raw) plot(raw, 3, 0.35);
  if (corrected) plot(corrected, 3, 0.9);

  // origin ring
  ctx.strokeStyle = "#e8b339";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.arc(ox, oy, 6, 0, 2 * Math.PI);
  ctx.stroke();

  // convergence point implied by the channel fits
  if (report) {
    const [u, v] = convergenceMarker(report);
    const [cx, cy] = toCanvas(t, u, v);
    ctx.strokeStyle = "#58a6ff";
    ctx.lineWidth = 1.5;
    drawCross(ctx, cx, cy, 5);
  }
}
