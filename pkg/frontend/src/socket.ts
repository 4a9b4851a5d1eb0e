// Reconnecting websocket wrapper: the gallery network hiccups, the piece
// must not.

export interface SocketHandlers {
  onMessage?: (data: string | ArrayBuffer) => void;
  onOpen?: () => void;
  onDown?: () => void;
}

export class ReconnectingSocket {
  private url: string;
  private handlers: SocketHandlers;
  private ws: WebSocket | null = null;
  private closed = false;
  private backoffMs = 250;

  constructor(url: string, handlers: SocketHandlers) {
    this.url = url;
    this.handlers = handlers;
    this.connect();
  }

  private connect(): void {
    if (this.closed) return;
    const ws = new WebSocket(this.url);
    ws.binaryType = "arraybuffer";
    ws.onopen = () => {
      this.backoffMs = 250;
      this.handlers.onOpen?.();
    };
    ws.onmessage = (ev) => this.handlers.onMessage?.(ev.data);
    ws.onclose = () => this.scheduleReconnect();
    ws.onerror = () => ws.close();
    this.ws = ws;
  }

  private scheduleReconnect(): void {
    this.ws = null;
    this.handlers.onDown?.();
    if (this.closed) return;
    setTimeout(() => this.connect(), this.backoffMs);
    this.backoffMs = Math.min(this.backoffMs * 2, 5000);
  }

  send(data: string): boolean {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(data);
      return true;
    }
    return false;
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
