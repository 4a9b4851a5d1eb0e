import { describe, expect, it } from "vitest";

import { clampRate, denormalize, normalizePointer, RectLike } from "../src/geometry";

const WINDOW_SIZES: RectLike[] = [
  { left: 0, top: 0, width: 512, height: 512 },
  { left: 37.5, top: 120.25, width: 893, height: 502 },
  { left: 4, top: 4, width: 1883.6, height: 1059.4 },
];

describe("mouse-as-gaze geometry", () => {
  it("maps corners to (0,0)/(1,1) within one pixel at three window sizes", () => {
    for (const rect of WINDOW_SIZES) {
      const tl = normalizePointer(rect, rect.left, rect.top)!;
      const br = normalizePointer(
        rect,
        rect.left + rect.width,
        rect.top + rect.height,
      )!;
      // error measured back in pixel space
      expect(Math.abs(tl.x * rect.width)).toBeLessThanOrEqual(1);
      expect(Math.abs(tl.y * rect.height)).toBeLessThanOrEqual(1);
      expect(Math.abs((1 - br.x) * rect.width)).toBeLessThanOrEqual(1);
      expect(Math.abs((1 - br.y) * rect.height)).toBeLessThanOrEqual(1);
    }
  });

  it("round-trips interior points within one pixel", () => {
    for (const rect of WINDOW_SIZES) {
      for (const [nx, ny] of [[0.25, 0.75], [0.5, 0.5], [0.999, 0.001]]) {
        const px = denormalize(rect, { x: nx, y: ny });
        const back = normalizePointer(rect, px.x, px.y)!;
        expect(Math.abs(back.x - nx) * rect.width).toBeLessThanOrEqual(1);
        expect(Math.abs(back.y - ny) * rect.height).toBeLessThanOrEqual(1);
      }
    }
  });

  it("returns null outside the element", () => {
    const rect = WINDOW_SIZES[1];
    expect(normalizePointer(rect, rect.left - 2, rect.top + 5)).toBeNull();
    expect(
      normalizePointer(rect, rect.left + rect.width + 2, rect.top + 5),
    ).toBeNull();
    expect(normalizePointer(rect, rect.left + 5, rect.top - 0.5)).toBeNull();
  });

  it("degenerate rects never produce samples", () => {
    expect(normalizePointer({ left: 0, top: 0, width: 0, height: 100 }, 0, 0)).toBeNull();
  });

  it("clamps the emit rate to 10..120 Hz", () => {
    expect(clampRate(30)).toBe(30);
    expect(clampRate(1)).toBe(10);
    expect(clampRate(500)).toBe(120);
    expect(clampRate(Number.NaN)).toBe(30);
  });
});
