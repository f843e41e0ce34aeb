import type { Rect } from "./geometry.js";
import { rectParam } from "./geometry.js";

export interface ImageMeta {
  id: string;
  width: number;
  height: number;
  source?: string;
}

export interface ChannelFit {
  slope: number;
  intercept: number;
  r2: number;
  n: number;
}

export interface EpsilonReport {
  id: string;
  epsilon: number[];
  fits: ChannelFit[];
  method: string;
  region: { x: number; y: number; w: number; h: number };
  space: string;
}

export interface ColorLineEntry {
  rect: number[];
  centroid: number[];
  direction: number[];
  rms_residual: number;
  n: number;
  origin_distance: number;
}

export interface DiagnoseReport {
  id: string;
  lines: ColorLineEntry[];
  convergence: { point: number[]; rms_line_distance: number } | null;
  convergence_error?: string;
}

export interface ScatterData {
  id: string;
  points: number[][];
  total: number;
  stride: number;
}

export class ApiError extends Error {
  status: number;
  code: string;
  detail: string;

  constructor(status: number, code: string, detail: string) {
    super(`${code}: ${detail}`);
    this.status = status;
    this.code = code;
    this.detail = detail;
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (resp.ok) {
    return resp.json() as Promise<T>;
  }
  let code = `http-${resp.status}`;
  let detail = resp.statusText;
  try {
    const doc = await resp.json();
    if (doc && typeof doc.error === "string") {
      code = doc.error;
      detail = typeof doc.detail === "string" ? doc.detail : detail;
    }
  } catch {
    // error body was not JSON; keep the status line
  }
  throw new ApiError(resp.status, code, detail);
}

export function previewUrl(id: string): string {
  return `/api/images/${id}.png`;
}

export function scatterUrl(id: string, rect: Rect): string {
  return `/api/scatter?id=${id}&rect=${rectParam(rect)}`;
}

export async function uploadImage(bytes: ArrayBuffer): Promise<ImageMeta> {
  const resp = await fetch("/api/images", { method: "POST", body: bytes });
  return asJson<ImageMeta>(resp);
}

export async function imageMeta(id: string): Promise<ImageMeta> {
  return asJson<ImageMeta>(await fetch(`/api/images/${encodeURIComponent(id)}`));
}

function postJson(path: string, doc: unknown, signal?: AbortSignal): Promise<Response> {
  return fetch(path, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(doc),
    signal,
  });
}

export async function estimate(
  id: string,
  rect: Rect,
  signal?: AbortSignal
): Promise<EpsilonReport> {
  return asJson<EpsilonReport>(await postJson("/api/estimate", { id, rect }, signal));
}

export async function correct(
  id: string,
  epsilon: number[],
  signal?: AbortSignal
): Promise<{ id: string; source: string }> {
  return asJson(await postJson("/api/correct", { id, epsilon }, signal));
}

export async function diagnose(
  id: string,
  rects: number[][],
  signal?: AbortSignal
): Promise<DiagnoseReport> {
  return asJson<DiagnoseReport>(await postJson("/api/diagnose", { id, rects }, signal));
}

export async function scatter(
  id: string,
  rect: Rect,
  signal?: AbortSignal
): Promise<ScatterData> {
  return asJson<ScatterData>(await fetch(scatterUrl(id, rect), { signal }));
}
