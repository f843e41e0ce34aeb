export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

// the server rejects regions smaller than this
export const MIN_REGION_PIXELS = 8;

/** Normalize a drag gesture to a rect with positive width and height. */
export function dragRect(x0: number, y0: number, x1: number, y1: number): Rect {
  return {
    x: Math.min(x0, x1),
    y: Math.min(y0, y1),
    w: Math.abs(x1 - x0),
    h: Math.abs(y1 - y0),
  };
}

/** Clip a rect to the image bounds; may come back with zero area. */
export function clipRect(r: Rect, width: number, height: number): Rect {
  const x0 = Math.min(Math.max(r.x, 0), width);
  const y0 = Math.min(Math.max(r.y, 0), height);
  const x1 = Math.min(Math.max(r.x + r.w, 0), width);
  const y1 = Math.min(Math.max(r.y + r.h, 0), height);
  return { x: x0, y: y0, w: x1 - x0, h: y1 - y0 };
}

export function rectArea(r: Rect): number {
  return r.w * r.h;
}

export function tooSmall(r: Rect): boolean {
  return rectArea(r) < MIN_REGION_PIXELS;
}

/** Drag endpoints in image coordinates -> integer rect inside the image. */
export function rectFromDrag(
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  width: number,
  height: number
): Rect {
  const raw = dragRect(
    Math.round(x0),
    Math.round(y0),
    Math.round(x1),
    Math.round(y1)
  );
  return clipRect(raw, width, height);
}

export function rectParam(r: Rect): string {
  return `${r.x},${r.y},${r.w},${r.h}`;
}
