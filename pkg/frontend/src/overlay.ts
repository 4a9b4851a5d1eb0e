// Debug overlay: recent gaze spots, attention heat, active prompt, mode
// and stage badges, absence countdown. Draws onto its own canvas layered
// above the artwork so toggling it never touches artwork pixels.

import { DebugSnapshot } from "./protocol.js";

export function drawOverlay(
  ctx: CanvasRenderingContext2D,
  snap: DebugSnapshot,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);

  // attention heat: reduced grid, alpha by energy
  const grid = snap.attention;
  if (grid.length > 0) {
    const rows = grid.length;
    const cols = grid[0].length;
    const cw = width / cols;
    const ch = height / rows;
    let peak = 0;
    for (const row of grid) for (const v of row) peak = Math.max(peak, v);
    if (peak > 0) {
      for (let r = 0; r < rows; r++) {
        for (let c = 0; c < cols; c++) {
          const v = grid[r][c] / peak;
          if (v <= 0.05) continue;
          ctx.fillStyle = `rgba(255, 80, 0, ${(0.45 * v).toFixed(3)})`;
          ctx.fillRect(c * cw, r * ch, cw, ch);
        }
      }
    }
  }

  // recent gaze spots, newest brightest
  const n = snap.gaze.length;
  snap.gaze.forEach((g, i) => {
    const a = 0.15 + 0.85 * ((i + 1) / n);
    ctx.beginPath();
    ctx.arc(g.x * width, g.y * height, 7, 0, Math.PI * 2);
    ctx.strokeStyle = `rgba(0, 255, 180, ${a.toFixed(3)})`;
    ctx.lineWidth = 2;
    ctx.stroke();
  });

  // text block: prompt + badges
  ctx.font = "14px monospace";
  ctx.textBaseline = "top";
  const lines = [
    `prompt: ${snap.prompt || "(none)"}`,
    `mode: ${snap.mode}   stage: ${snap.stage}   cycles: ${snap.cycle_index}`,
  ];
  if (!snap.present && snap.regen_due_in_ms !== null) {
    lines.push(`regeneration in ${(snap.regen_due_in_ms / 1000).toFixed(1)} s`);
  }
  const pad = 6;
  const boxW = Math.max(...lines.map((l) => ctx.measureText(l).width)) + pad * 2;
  ctx.fillStyle = "rgba(0, 0, 0, 0.55)";
  ctx.fillRect(8, 8, boxW, lines.length * 18 + pad * 2);
  ctx.fillStyle = "#e8e8e8";
  lines.forEach((l, i) => ctx.fillText(l, 8 + pad, 8 + pad + i * 18));
}

export function clearOverlay(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
}
