/**
 * WebSocket transport: binary frames in both directions, fed through
 * the streaming decoder so split or dirty input cannot wedge the
 * panel. Reconnects on its own until told to stop.
 */

import {
  Command,
  FrameError,
  Message,
  StreamDecoder,
  encode,
} from "./protocol.js";

export interface SocketHandlers {
  onOpen(): void;
  onClose(): void;
  onMessage(msg: Message): void;
  onFault(err: FrameError): void;
}

const RETRY_MS = 1500;

export class PanelSocket {
  private ws: WebSocket | null = null;
  private decoder = new StreamDecoder();
  private retryTimer: number | null = null;
  private stopped = false;

  constructor(private url: string, private handlers: SocketHandlers) {
    this.open();
  }

  private open(): void {
    this.decoder = new StreamDecoder();
    const ws = new WebSocket(this.url);
    ws.binaryType = "arraybuffer";
    ws.onopen = () => this.handlers.onOpen();
    ws.onmessage = (ev: MessageEvent) => {
      if (!(ev.data instanceof ArrayBuffer)) return;
      for (const event of this.decoder.feed(new Uint8Array(ev.data))) {
        if (event instanceof FrameError) {
          this.handlers.onFault(event);
        } else {
          this.handlers.onMessage(event);
        }
      }
    };
    ws.onclose = () => {
      this.ws = null;
      this.handlers.onClose();
      if (!this.stopped) {
        this.retryTimer = setTimeout(() => this.open(), RETRY_MS) as
          unknown as number;
      }
    };
    this.ws = ws;
  }

  get connected(): boolean {
    return this.ws !== null && this.ws.readyState === WebSocket.OPEN;
  }

  send(cmd: Command): boolean {
    if (!this.connected || this.ws === null) return false;
    this.ws.send(encode(cmd));
    return true;
  }

  close(): void {
    this.stopped = true;
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.ws?.close();
  }
}
