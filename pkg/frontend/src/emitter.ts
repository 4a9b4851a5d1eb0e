// Mouse-as-gaze: samples the current pointer state at a fixed rate and
// writes gaze lines to the socket. While the pointer is off the canvas it
// emits v:false samples, which is exactly what drives the engine's
// absence logic - the engine cannot tell a mouse from a tracker bridge.

import { clampRate, NormPoint } from "./geometry.js";
import { encodeGazeLine } from "./protocol.js";

export interface EmitterDeps {
  send: (line: string) => void;
  now: () => number; // monotonic milliseconds
}

export class GazeEmitter {
  readonly intervalMs: number;
  private deps: EmitterDeps;
  private sourceId: number;
  private t0: number | null = null;
  private current: NormPoint | null = null;
  private emitted = 0;

  constructor(deps: EmitterDeps, rateHz: number, sourceId = 0) {
    this.deps = deps;
    this.sourceId = sourceId;
    this.intervalMs = 1000 / clampRate(rateHz);
  }

  pointerAt(p: NormPoint): void {
    this.current = p;
  }

  pointerGone(): void {
    this.current = null;
  }

  get sampleCount(): number {
    return this.emitted;
  }

  // Called on the emit schedule; one sample per call.
  tick(): void {
    const wall = this.deps.now();
    if (this.t0 === null) this.t0 = wall;
    const t = wall - this.t0;
    const p = this.current;
    const line = encodeGazeLine(
      p === null
        ? { t, x: 0, y: 0, v: false, s: this.sourceId }
        : { t, x: p.x, y: p.y, v: true, s: this.sourceId },
    );
    this.deps.send(line);
    this.emitted += 1;
  }
}
