// Wire formats shared with the engine: gaze JSON lines out, length-prefixed
// frame messages and debug JSON in.

export interface GazeSampleMsg {
  t: number; // milliseconds, client-monotone
  x: number; // normalized [0,1]
  y: number;
  v: boolean; // tracker/pointer validity
  s: number; // source id
}

export function encodeGazeLine(sample: GazeSampleMsg): string {
  return JSON.stringify({
    t: Math.round(sample.t),
    x: sample.x,
    y: sample.y,
    v: sample.v,
    s: sample.s,
  });
}

export interface FrameHeader {
  cycle: number;
  frame: number;
  of: number;
}

export interface FrameMessage {
  header: FrameHeader;
  png: Uint8Array;
}

// u32 big-endian header length | JSON header | PNG bytes
export function decodeFrameMessage(data: ArrayBuffer): FrameMessage {
  const view = new DataView(data);
  if (data.byteLength < 4) {
    throw new Error(`frame message too short: ${data.byteLength} bytes`);
  }
  const headerLen = view.getUint32(0, false);
  if (4 + headerLen > data.byteLength) {
    throw new Error(`frame header length ${headerLen} exceeds message`);
  }
  const headerBytes = new Uint8Array(data, 4, headerLen);
  const header = JSON.parse(new TextDecoder().decode(headerBytes)) as FrameHeader;
  const png = new Uint8Array(data, 4 + headerLen);
  return { header, png };
}

export interface DebugGazePoint {
  t: number;
  x: number;
  y: number;
}

export interface DebugSnapshot {
  t_ms: number;
  mode: string;
  stage: number;
  transform_count: number;
  cycle_index: number;
  prompt: string;
  present: boolean;
  absence_ms: number;
  regen_due_in_ms: number | null;
  attention: number[][];
  gaze: DebugGazePoint[];
  canvas: string | null;
}

export interface EngineState {
  mode: string;
  stage: number;
  transform_count: number;
  cycle_index: number;
  present: boolean;
  absence_ms: number;
  tick_ms: number;
}
