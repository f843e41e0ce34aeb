import { describe, expect, it } from "vitest";
import type { EpsilonReport } from "../src/api.js";
import {
  canPlotScatter,
  fragmentFor,
  idFromFragment,
  initialState,
  setMode,
  setSlider,
  setZoom,
  withCorrected,
  withEstimate,
  withEstimateError,
  withImage,
  withScatter,
  withSelection,
} from "../src/state.js";

const REPORT: EpsilonReport = {
  id: "a".repeat(64),
  epsilon: [-0.1, 0.005, 0.095],
  fits: [
    { slope: 0.6, intercept: -0.1, r2: 1, n: 100 },
    { slope: 0.3, intercept: 0.005, r2: 1, n: 100 },
    { slope: 0.1, intercept: 0.095, r2: 1, n: 100 },
  ],
  method: "ols",
  region: { x: 0, y: 0, w: 10, h: 10 },
  space: "linear-rgb",
};

const META = { id: "b".repeat(64), width: 192, height: 128 };

describe("image loading", () => {
  it("stores id and dimensions", () => {
    const s = withImage(initialState(), META);
    expect(s.imageId).toBe(META.id);
    expect(s.width).toBe(192);
    expect(s.height).toBe(128);
  });

  it("drops everything derived from the previous image but keeps view prefs", () => {
    let s = withImage(initialState(), { id: "c".repeat(64), width: 8, height: 8 });
    s = withSelection(s, { x: 0, y: 0, w: 4, h: 4 });
    s = withEstimate(s, REPORT);
    s = withCorrected(s, "d".repeat(64));
    s = setMode(s, "split");
    s = setZoom(s, 4);
    const next = withImage(s, META);
    expect(next.selection).toBeNull();
    expect(next.report).toBeNull();
    expect(next.correctedId).toBeNull();
    expect(next.mode).toBe("split");
    expect(next.zoom).toBe(4);
  });
});

describe("selection", () => {
  it("invalidates stale responses", () => {
    let s = withImage(initialState(), META);
    s = withSelection(s, { x: 0, y: 0, w: 10, h: 10 });
    s = withEstimate(s, REPORT);
    s = withCorrected(s, "d".repeat(64));
    s = withScatter(s, [[0.1, 0.2, 0.3]], [[0.1, 0.2, 0.3]]);
    s = withSelection(s, { x: 5, y: 5, w: 10, h: 10 });
    expect(s.report).toBeNull();
    expect(s.correctedId).toBeNull();
    expect(s.rawScatter).toBeNull();
    expect(s.selection).toEqual({ x: 5, y: 5, w: 10, h: 10 });
  });

  it("survives a rejected estimate so the user can adjust it", () => {
    let s = withImage(initialState(), META);
    s = withSelection(s, { x: 0, y: 0, w: 10, h: 10 });
    s = withEstimateError(s, "flat-region", "pick a region crossing a shadow edge");
    expect(s.selection).toEqual({ x: 0, y: 0, w: 10, h: 10 });
    expect(s.warning).toContain("flat-region");
    expect(s.warning).toContain("shadow edge");
    expect(s.report).toBeNull();
  });
});

describe("scatter gating", () => {
  it("plots only when a selection exists and has data", () => {
    let s = withImage(initialState(), META);
    expect(canPlotScatter(s)).toBe(false);
    s = withScatter(s, [[0.1, 0.2, 0.3]], null);
    expect(canPlotScatter(s)).toBe(false); // points without a selection
    s = withSelection(s, { x: 0, y: 0, w: 10, h: 10 });
    expect(canPlotScatter(s)).toBe(false); // selection cleared the points
    s = withScatter(s, [[0.1, 0.2, 0.3]], null);
    expect(canPlotScatter(s)).toBe(true);
  });
});

describe("view controls", () => {
  it("clamps the slider to [0, 1] and leaves zoom alone", () => {
    let s = setZoom(initialState(), 4);
    s = setSlider(s, 1.5);
    expect(s.slider).toBe(1);
    s = setSlider(s, -0.2);
    expect(s.slider).toBe(0);
    expect(s.zoom).toBe(4);
  });

  it("clamps zoom to [1, 8]", () => {
    expect(setZoom(initialState(), 0.25).zoom).toBe(1);
    expect(setZoom(initialState(), 64).zoom).toBe(8);
  });
});

describe("url fragment", () => {
  it("round trips an image id", () => {
    const id = "0123456789abcdef".repeat(4);
    expect(idFromFragment(fragmentFor(id))).toBe(id);
  });

  it("is empty with no image", () => {
    expect(fragmentFor(null)).toBe("");
  });

  it("rejects fragments that are not a hex id", () => {
    expect(idFromFragment("")).toBeNull();
    expect(idFromFragment("#i=zzz")).toBeNull();
    expect(idFromFragment("#other=" + "a".repeat(64))).toBeNull();
    expect(idFromFragment("#i=" + "A".repeat(64))).toBeNull();
  });
});
