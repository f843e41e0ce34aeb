import * as api from "./api.js";
import * as geom from "./geometry.js";
import * as st from "./state.js";
import { drawScatter } from "./scatter.js";

let state = st.initialState();
let inflight: AbortController | null = null;
let seq = 0;

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

let fileInput: HTMLInputElement;
let viewer: HTMLElement;
let paneWrap: HTMLElement;
let corWrap: HTMLElement;
let rawImg: HTMLImageElement;
let corImg: HTMLImageElement;
let overlay: HTMLCanvasElement;
let compare: HTMLInputElement;
let compareRow: HTMLElement;
let banner: HTMLElement;
let metaLine: HTMLElement;
let readout: HTMLElement;
let scatterCanvas: HTMLCanvasElement;
let scatterNote: HTMLElement;
let modeSliderBtn: HTMLButtonElement;
let modeSplitBtn: HTMLButtonElement;
let zoomLabel: HTMLElement;

const sci = (v: number | null): string =>
  v === null ? "–" : v.toExponential(3);

function setSrc(img: HTMLImageElement, url: string | null) {
  if (url === null) {
    img.removeAttribute("src");
    return;
  }
  if (img.getAttribute("src") !== url) img.src = url;
}

function drawOverlay(temp?: geom.Rect) {
  overlay.width = state.width * state.zoom;
  overlay.height = state.height * state.zoom;
  const ctx = overlay.getContext("2d");
  const r = temp ?? state.selection;
  if (!ctx || !r || r.w <= 0 || r.h <= 0) return;
  const z = state.zoom;
  ctx.strokeStyle = temp ? "#58a6ff" : "#e8b339";
  ctx.setLineDash([5, 3]);
  ctx.lineWidth = 1.5;
  ctx.strokeRect(r.x * z + 0.5, r.y * z + 0.5, Math.max(r.w * z - 1, 1), Math.max(r.h * z - 1, 1));
}

function renderReadout() {
  if (!state.report) {
    readout.innerHTML = "<p class=\"hint\">No estimate yet.</p>";
    return;
  }
  const rep = state.report;
  const rows = rep.fits
    .map(
      (f, i) =>
        `<tr><td>${"RGB"[i]}</td><td>${f.slope.toFixed(6)}</td>` +
        `<td>${f.intercept.toFixed(6)}</td><td>${f.r2.toFixed(4)}</td><td>${f.n}</td></tr>`
    )
    .join("");
  const eps = rep.epsilon.map((v) => v.toFixed(6)).join(", ");
  readout.innerHTML =
    `<p>&epsilon; = [${eps}] <span class="hint">(${rep.method}, ${rep.space})</span></p>` +
    `<table><tr><th></th><th>slope</th><th>intercept</th><th>r&sup2;</th><th>n</th></tr>${rows}</table>`;
}

function renderScatter() {
  const plotted = st.canPlotScatter(state);
  scatterCanvas.hidden = !plotted;
  if (!plotted) {
    scatterNote.textContent = state.selection
      ? "Waiting for scatter data."
      : "Draw a rectangle on the image to plot its pixels.";
    return;
  }
  drawScatter(scatterCanvas, state.rawScatter, state.correctedScatter, state.report);
  scatterNote.innerHTML =
    `R-G plane. Faint: raw, solid: corrected, ring: origin, cross: fitted-line convergence.<br>` +
    `Selected line misses origin by ${sci(state.rawDistance)} raw, ` +
    `${sci(state.correctedDistance)} corrected.`;
}

function render() {
  const hasImage = state.imageId !== null;
  viewer.classList.toggle("empty", !hasImage);
  metaLine.textContent = hasImage
    ? `${state.width}×${state.height}  id ${state.imageId!.slice(0, 12)}…`
    : "no image loaded";

  if (hasImage) {
    setSrc(rawImg, api.previewUrl(state.imageId!));
    const w = state.width * state.zoom + "px";
    rawImg.style.width = w;
    corImg.style.width = w;
  } else {
    setSrc(rawImg, null);
  }

  const hasCorrected = state.correctedId !== null;
  if (hasCorrected) setSrc(corImg, api.previewUrl(state.correctedId!));
  corImg.hidden = !hasCorrected;

  // pane layout for the current view mode
  if (state.mode === "slider") {
    if (corImg.parentElement !== paneWrap) paneWrap.appendChild(corImg);
    corImg.classList.add("stacked");
    corImg.style.clipPath = `inset(0 ${(1 - state.slider) * 100}% 0 0)`;
    corWrap.hidden = true;
    compareRow.hidden = false;
    compare.disabled = !hasCorrected;
  } else {
    if (corImg.parentElement !== corWrap) corWrap.appendChild(corImg);
    corImg.classList.remove("stacked");
    corImg.style.clipPath = "none";
    corWrap.hidden = !hasCorrected;
    compareRow.hidden = true;
  }
  compare.value = String(Math.round(state.slider * 100));
  modeSliderBtn.classList.toggle("active", state.mode === "slider");
  modeSplitBtn.classList.toggle("active", state.mode === "split");
  zoomLabel.textContent = state.zoom + "×";

  banner.hidden = state.warning === null;
  banner.textContent = state.warning ?? "";

  drawOverlay();
  renderReadout();
  renderScatter();
}

function cancelPipeline() {
  seq++;
  if (inflight) {
    inflight.abort();
    inflight = null;
  }
}

async function runEstimate(rect: geom.Rect) {
  cancelPipeline();
  const ctl = new AbortController();
  inflight = ctl;
  const my = seq;
  const id = state.imageId;
  if (id === null) return;
  try {
    const report = await api.estimate(id, rect, ctl.signal);
    if (my !== seq) return;
    state = st.withEstimate(state, report);
    render();

    const cor = await api.correct(id, report.epsilon, ctl.signal);
    if (my !== seq) return;
    state = st.withCorrected(state, cor.id);
    render();

    const rectArr = [rect.x, rect.y, rect.w, rect.h];
    const [rawSc, corSc, rawDg, corDg] = await Promise.all([
      api.scatter(id, rect, ctl.signal),
      api.scatter(cor.id, rect, ctl.signal),
      api.diagnose(id, [rectArr], ctl.signal),
      api.diagnose(cor.id, [rectArr], ctl.signal),
    ]);
    if (my !== seq) return;
    state = st.withScatter(state, rawSc.points, corSc.points);
    state = st.withDistances(
      state,
      rawDg.lines[0].origin_distance,
      corDg.lines[0].origin_distance
    );
    render();
  } catch (err) {
    if (my !== seq || ctl.signal.aborted) return;
    if (err instanceof api.ApiError) {
      state = st.withEstimateError(state, err.code, err.detail);
    } else {
      state = st.withEstimateError(state, "network", String(err));
    }
    render();
  }
}

function applyImage(meta: api.ImageMeta) {
  cancelPipeline();
  state = st.withImage(state, meta);
  const frag = st.fragmentFor(meta.id);
  if (location.hash !== frag) history.replaceState(null, "", frag);
  render();
}

async function loadFile(file: File) {
  try {
    applyImage(await api.uploadImage(await file.arrayBuffer()));
  } catch (err) {
    state = st.withWarning(
      state,
      err instanceof api.ApiError ? `${err.code}: ${err.detail}` : String(err)
    );
    render();
  }
}

async function loadFromFragment() {
  const id = st.idFromFragment(location.hash);
  if (id === null || id === state.imageId) return;
  try {
    applyImage(await api.imageMeta(id));
  } catch {
    // the fragment pointed at an image the server no longer holds
    state = st.withWarning(state, "image in the URL is no longer on the server");
    render();
  }
}

function bindDrag() {
  let start: [number, number] | null = null;
  const imagePoint = (e: PointerEvent): [number, number] => [
    e.offsetX / state.zoom,
    e.offsetY / state.zoom,
  ];
  overlay.addEventListener("pointerdown", (e) => {
    if (state.imageId === null) return;
    overlay.setPointerCapture(e.pointerId);
    start = imagePoint(e);
    e.preventDefault();
  });
  overlay.addEventListener("pointermove", (e) => {
    if (!start) return;
    const [ex, ey] = imagePoint(e);
    drawOverlay(geom.rectFromDrag(start[0], start[1], ex, ey, state.width, state.height));
  });
  overlay.addEventListener("pointerup", (e) => {
    if (!start) return;
    const [ex, ey] = imagePoint(e);
    const rect = geom.rectFromDrag(start[0], start[1], ex, ey, state.width, state.height);
    start = null;
    state = st.withSelection(state, rect);
    if (geom.tooSmall(rect)) {
      // not worth a round trip; the server would reject it anyway
      state = st.withWarning(
        state,
        `selection covers ${geom.rectArea(rect)} px, need at least ${geom.MIN_REGION_PIXELS}`
      );
      render();
      return;
    }
    render();
    runEstimate(rect);
  });
}

function init() {
  fileInput = $<HTMLInputElement>("file");
  viewer = $("viewer");
  paneWrap = $("pane-wrap");
  corWrap = $("cor-wrap");
  rawImg = $<HTMLImageElement>("raw-img");
  corImg = $<HTMLImageElement>("cor-img");
  overlay = $<HTMLCanvasElement>("overlay");
  compare = $<HTMLInputElement>("compare");
  compareRow = $("compare-row");
  banner = $("banner");
  metaLine = $("meta");
  readout = $("readout");
  scatterCanvas = $<HTMLCanvasElement>("scatter");
  scatterNote = $("scatter-note");
  modeSliderBtn = $<HTMLButtonElement>("mode-slider");
  modeSplitBtn = $<HTMLButtonElement>("mode-split");
  zoomLabel = $("zoom-label");

  fileInput.addEventListener("change", () => {
    const f = fileInput.files && fileInput.files[0];
    if (f) loadFile(f);
  });
  compare.addEventListener("input", () => {
    state = st.setSlider(state, Number(compare.value) / 100);
    render();
  });
  modeSliderBtn.addEventListener("click", () => {
    state = st.setMode(state, "slider");
    render();
  });
  modeSplitBtn.addEventListener("click", () => {
    state = st.setMode(state, "split");
    render();
  });
  $("zoom-in").addEventListener("click", () => {
    state = st.setZoom(state, state.zoom * 2);
    render();
  });
  $("zoom-out").addEventListener("click", () => {
    state = st.setZoom(state, state.zoom / 2);
    render();
  });
  window.addEventListener("hashchange", loadFromFragment);

  bindDrag();
  loadFromFragment();
  render();
}

// guard lets the module graph load outside a browser (syntax smoke checks)
if (typeof document !== "undefined") {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", init);
  } else {
    init();
  }
}
