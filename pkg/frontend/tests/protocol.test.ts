import { describe, expect, it } from "vitest";

import { decodeFrameMessage, encodeGazeLine } from "../src/protocol";

function buildFrameMessage(header: object, png: Uint8Array): ArrayBuffer {
  const headerBytes = new TextEncoder().encode(JSON.stringify(header));
  const buf = new ArrayBuffer(4 + headerBytes.length + png.length);
  new DataView(buf).setUint32(0, headerBytes.length, false);
  new Uint8Array(buf, 4).set(headerBytes);
  new Uint8Array(buf, 4 + headerBytes.length).set(png);
  return buf;
}

describe("gaze wire format", () => {
  it("emits the exact field set the engine parses", () => {
    const line = encodeGazeLine({ t: 123.6, x: 0.25, y: 0.75, v: true, s: 0 });
    const obj = JSON.parse(line);
    expect(Object.keys(obj).sort()).toEqual(["s", "t", "v", "x", "y"]);
    expect(obj.t).toBe(124); // integer milliseconds
    expect(obj.v).toBe(true);
  });

  it("marks absence with v:false", () => {
    const obj = JSON.parse(encodeGazeLine({ t: 0, x: 0, y: 0, v: false, s: 2 }));
    expect(obj.v).toBe(false);
    expect(obj.s).toBe(2);
  });
});

describe("frame message codec", () => {
  it("splits header and png payload", () => {
    const png = new Uint8Array([137, 80, 78, 71, 1, 2, 3]);
    const msg = buildFrameMessage({ cycle: 4, frame: 2, of: 12 }, png);
    const { header, png: got } = decodeFrameMessage(msg);
    expect(header).toEqual({ cycle: 4, frame: 2, of: 12 });
    expect(Array.from(got)).toEqual(Array.from(png));
  });

  it("rejects truncated messages", () => {
    expect(() => decodeFrameMessage(new ArrayBuffer(2))).toThrow(/too short/);
    const bad = buildFrameMessage({ cycle: 0, frame: 0, of: 1 }, new Uint8Array(0));
    new DataView(bad).setUint32(0, 9999, false);
    expect(() => decodeFrameMessage(bad)).toThrow(/exceeds/);
  });
});
