import type { Rect } from "./geometry.js";
import type { EpsilonReport } from "./api.js";

export type ViewMode = "slider" | "split";

export interface StudioState {
  imageId: string | null;
  width: number;
  height: number;
  selection: Rect | null;
  report: EpsilonReport | null;
  correctedId: string | null;
  rawScatter: number[][] | null;
  correctedScatter: number[][] | null;
  rawDistance: number | null;
  correctedDistance: number | null;
  mode: ViewMode;
  slider: number;
  zoom: number;
  warning: string | null;
}

export function initialState(): StudioState {
  return {
    imageId: null,
    width: 0,
    height: 0,
    selection: null,
    report: null,
    correctedId: null,
    rawScatter: null,
    correctedScatter: null,
    rawDistance: null,
    correctedDistance: null,
    mode: "slider",
    slider: 0.5,
    zoom: 1,
    warning: null,
  };
}

/** Load a new image: everything derived from the old one is dropped,
    view preferences survive. */
export function withImage(
  state: StudioState,
  meta: { id: string; width: number; height: number }
): StudioState {
  return {
    ...initialState(),
    mode: state.mode,
    slider: state.slider,
    zoom: state.zoom,
    imageId: meta.id,
    width: meta.width,
    height: meta.height,
  };
}

/** A new selection invalidates every response tied to the previous one. */
export function withSelection(state: StudioState, rect: Rect): StudioState {
  return {
    ...state,
    selection: rect,
    report: null,
    correctedId: null,
    rawScatter: null,
    correctedScatter: null,
    rawDistance: null,
    correctedDistance: null,
    warning: null,
  };
}

export function withWarning(state: StudioState, text: string): StudioState {
  return { ...state, warning: text };
}

export function withEstimate(state: StudioState, report: EpsilonReport): StudioState {
  return { ...state, report, warning: null };
}

/** Server rejected the region; the selection is kept so the user can
    adjust it instead of starting over. */
export function withEstimateError(
  state: StudioState,
  code: string,
  detail: string
): StudioState {
  return { ...state, report: null, warning: `${code}: ${detail}` };
}

export function withCorrected(state: StudioState, id: string): StudioState {
  return { ...state, correctedId: id };
}

export function withScatter(
  state: StudioState,
  raw: number[][] | null,
  corrected: number[][] | null
): StudioState {
  return { ...state, rawScatter: raw, correctedScatter: corrected };
}

export function withDistances(
  state: StudioState,
  raw: number | null,
  corrected: number | null
): StudioState {
  return { ...state, rawDistance: raw, correctedDistance: corrected };
}

export function setMode(state: StudioState, mode: ViewMode): StudioState {
  return { ...state, mode };
}

export function setSlider(state: StudioState, v: number): StudioState {
  return { ...state, slider: Math.min(1, Math.max(0, v)) };
}

export function setZoom(state: StudioState, zoom: number): StudioState {
  return { ...state, zoom: Math.min(8, Math.max(1, zoom)) };
}

/** Scatter is plotted only while a selection exists and has data. */
export function canPlotScatter(state: StudioState): boolean {
  return state.selection !== null && state.rawScatter !== null;
}

// The fragment is the only thing that survives a reload.

export function fragmentFor(id: string | null): string {
  return id ? `#i=${id}` : "";
}

export function idFromFragment(hash: string): string | null {
  const m = /^#i=([0-9a-f]{64})$/.exec(hash);
  return m ? m[1] : null;
}
