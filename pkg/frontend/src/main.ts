// Wiring: three socket subscriptions, pointer -> gaze emission, overlay.
// Configuration via query params: ?engine=host:port&rate=30&overlay=1&input=mouse

import { GazeEmitter } from "./emitter.js";
import { FramePainter } from "./frames.js";
import { clampRate, normalizePointer } from "./geometry.js";
import { clearOverlay, drawOverlay } from "./overlay.js";
import { DebugSnapshot, EngineState } from "./protocol.js";
import { ReconnectingSocket } from "./socket.js";

const params = new URLSearchParams(window.location.search);
const engine = params.get("engine") ?? window.location.host;
const rate = clampRate(Number(params.get("rate") ?? "30"));
let overlayOn = params.get("overlay") !== "0";
const inputMode = params.get("input") ?? "mouse"; // mouse | external

const wsBase = `${window.location.protocol === "https:" ? "wss" : "ws"}://${engine}`;
const httpBase = `${window.location.protocol}//${engine}`;

const artCanvas = document.getElementById("art") as HTMLCanvasElement;
const overlayCanvas = document.getElementById("overlay") as HTMLCanvasElement;
const statusEl = document.getElementById("status") as HTMLElement;
const overlayCtx = overlayCanvas.getContext("2d")!;

function setStatus(text: string, bad = false): void {
  statusEl.textContent = text;
  statusEl.className = bad ? "bad" : "";
}

// ---- frames ---------------------------------------------------------------

const painter = new FramePainter(artCanvas);
new ReconnectingSocket(`${wsBase}/frames`, {
  onMessage: (data) => {
    painter.onMessage(data);
    syncOverlaySize();
  },
  onOpen: () => setStatus("connected"),
  onDown: () => setStatus("reconnecting…", true),
});

// late joiners get the current canvas over HTTP (the stream itself never
// replays history)
fetch(`${httpBase}/canvas.png`)
  .then((r) => (r.ok ? r.blob() : null))
  .then(async (blob) => {
    if (!blob || painter.framesShown > 0) return;
    const bmp = await createImageBitmap(blob);
    artCanvas.width = bmp.width;
    artCanvas.height = bmp.height;
    artCanvas.getContext("2d")!.drawImage(bmp, 0, 0);
    bmp.close();
    syncOverlaySize();
  })
  .catch(() => undefined);

function syncOverlaySize(): void {
  if (overlayCanvas.width !== artCanvas.width ||
      overlayCanvas.height !== artCanvas.height) {
    overlayCanvas.width = artCanvas.width;
    overlayCanvas.height = artCanvas.height;
  }
}

// ---- debug overlay ---------------------------------------------------------

let lastSnapshot: DebugSnapshot | null = null;
new ReconnectingSocket(`${wsBase}/debug`, {
  onMessage: (data) => {
    if (typeof data !== "string") return;
    lastSnapshot = JSON.parse(data) as DebugSnapshot;
    if (overlayOn) {
      syncOverlaySize();
      drawOverlay(overlayCtx, lastSnapshot, overlayCanvas.width,
                  overlayCanvas.height);
    }
  },
  // hide silently on stream loss; the artwork stays untouched
  onDown: () => clearOverlay(overlayCtx, overlayCanvas.width, overlayCanvas.height),
});

window.addEventListener("keydown", (ev) => {
  if (ev.key === "o") {
    overlayOn = !overlayOn;
    if (!overlayOn) {
      clearOverlay(overlayCtx, overlayCanvas.width, overlayCanvas.height);
    } else if (lastSnapshot) {
      drawOverlay(overlayCtx, lastSnapshot, overlayCanvas.width,
                  overlayCanvas.height);
    }
  }
});

// ---- gaze emission ----------------------------------------------------------

if (inputMode === "mouse") {
  const gazeSocket = new ReconnectingSocket(`${wsBase}/gaze`, {});
  const emitter = new GazeEmitter(
    { send: (line) => void gazeSocket.send(line), now: () => performance.now() },
    rate,
  );
  const updatePointer = (ev: PointerEvent) => {
    const rect = artCanvas.getBoundingClientRect();
    const p = normalizePointer(rect, ev.clientX, ev.clientY);
    if (p === null) emitter.pointerGone();
    else emitter.pointerAt(p);
  };
  window.addEventListener("pointermove", updatePointer);
  window.addEventListener("pointerdown", updatePointer);
  artCanvas.addEventListener("pointerleave", () => emitter.pointerGone());
  document.addEventListener("mouseleave", () => emitter.pointerGone());
  window.setInterval(() => emitter.tick(), emitter.intervalMs);
}

// ---- state poll (title bar) --------------------------------------------------

window.setInterval(async () => {
  try {
    const state = (await (await fetch(`${httpBase}/state`)).json()) as EngineState;
    document.title = `gazescape - ${state.mode} · stage ${state.stage}`;
  } catch {
    /* engine away; reconnect banner already shows */
  }
}, 1000);
