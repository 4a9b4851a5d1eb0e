// Frame stream consumer. Live-signal semantics: if frames arrive faster
// than we can paint, only the newest is kept - never a growing queue.

import { decodeFrameMessage, FrameHeader } from "./protocol.js";

export class FramePainter {
  private ctx: CanvasRenderingContext2D;
  private pendingPng: Uint8Array | null = null;
  private pendingHeader: FrameHeader | null = null;
  private painting = false;
  framesShown = 0;
  lastHeader: FrameHeader | null = null;

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d context unavailable");
    this.ctx = ctx;
  }

  onMessage(data: string | ArrayBuffer): void {
    if (typeof data === "string") return;
    const { header, png } = decodeFrameMessage(data);
    // drop whatever older frame is still pending
    this.pendingPng = png;
    this.pendingHeader = header;
    void this.paint();
  }

  private async paint(): Promise<void> {
    if (this.painting) return;
    this.painting = true;
    try {
      while (this.pendingPng !== null) {
        const png = this.pendingPng;
        const header = this.pendingHeader;
        this.pendingPng = null;
        this.pendingHeader = null;
        const bitmap = await createImageBitmap(
          new Blob([png.slice().buffer as ArrayBuffer], { type: "image/png" }),
        );
        if (this.canvas.width !== bitmap.width ||
            this.canvas.height !== bitmap.height) {
          this.canvas.width = bitmap.width;
          this.canvas.height = bitmap.height;
        }
        this.ctx.drawImage(bitmap, 0, 0);
        bitmap.close();
        this.framesShown += 1;
        this.lastHeader = header;
      }
    } finally {
      this.painting = false;
    }
  }
}
