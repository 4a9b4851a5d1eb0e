// Pointer-to-gaze mapping. Kept free of DOM types so the round-trip
// guarantee (corners map to (0,0)/(1,1) within a pixel at any size) is
// testable headless.

export interface RectLike {
  left: number;
  top: number;
  width: number;
  height: number;
}

export interface NormPoint {
  x: number;
  y: number;
}

// Maps client coordinates to normalized canvas coordinates; null when the
// pointer is outside the element (callers emit v:false then).
export function normalizePointer(
  rect: RectLike,
  clientX: number,
  clientY: number,
): NormPoint | null {
  if (rect.width <= 0 || rect.height <= 0) return null;
  const x = (clientX - rect.left) / rect.width;
  const y = (clientY - rect.top) / rect.height;
  if (x < 0 || x > 1 || y < 0 || y > 1) return null;
  return { x: clamp01(x), y: clamp01(y) };
}

export function denormalize(rect: RectLike, p: NormPoint): { x: number; y: number } {
  return { x: rect.left + p.x * rect.width, y: rect.top + p.y * rect.height };
}

function clamp01(v: number): number {
  return v < 0 ? 0 : v > 1 ? 1 : v;
}

export function clampRate(rateHz: number): number {
  // emit rate contract: 10..120 Hz
  if (!Number.isFinite(rateHz)) return 30;
  return Math.min(120, Math.max(10, rateHz));
}
