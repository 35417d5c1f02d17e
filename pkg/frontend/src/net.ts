/**
 * Connection plumbing between the UI and a duel server.
 *
 * A Transport moves raw bytes; the browser build uses a WebSocket
 * (pointed at a small relay that pipes frames to the TCP server), and
 * tests substitute an in-memory or TCP-backed transport. Connection
 * layers the frame codec on top, remembers the credentials the first
 * snapshot assigns, and stamps them into every outgoing command.
 */

import { FrameDecoder, encodeFrame, type Message, type MessageKind } from "./protocol.js";

export interface Transport {
  send(data: Uint8Array): void;
  onData(handler: (data: Uint8Array) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

export class Connection {
  match = "";
  token = "";
  you = "";

  private readonly decoder = new FrameDecoder();
  private readonly handlers = new Map<MessageKind, ((msg: Message) => void)[]>();
  private anyHandlers: ((msg: Message) => void)[] = [];

  constructor(private readonly transport: Transport) {
    transport.onData((data) => {
      for (const msg of this.decoder.feed(data)) {
        this.dispatch(msg);
      }
    });
  }

  private dispatch(msg: Message): void {
    if (msg.kind === "state_snapshot") {
      const m = msg.fields["match"];
      const t = msg.fields["token"];
      const y = msg.fields["you"];
      if (m !== undefined) this.match = m;
      if (t !== undefined) this.token = t;
      if (y !== undefined) this.you = y;
    }
    for (const handler of this.anyHandlers) handler(msg);
    for (const handler of this.handlers.get(msg.kind) ?? []) handler(msg);
  }

  on(kind: MessageKind, handler: (msg: Message) => void): void {
    const list = this.handlers.get(kind) ?? [];
    list.push(handler);
    this.handlers.set(kind, list);
  }

  onAny(handler: (msg: Message) => void): void {
    this.anyHandlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.transport.onClose(handler);
  }

  /** Send a raw message without credential stamping (join goes here). */
  sendRaw(kind: MessageKind, fields: Record<string, string>): void {
    this.transport.send(encodeFrame(kind, fields));
  }

  /** Send a command with the stored match and token filled in. */
  send(kind: MessageKind, fields: Record<string, string> = {}): void {
    this.sendRaw(kind, { match: this.match, token: this.token, ...fields });
  }

  join(name: string): void {
    this.sendRaw("join", { name });
  }

  close(): void {
    this.transport.close();
  }
}

/** Browser transport: binary WebSocket to a frame relay. */
export class WebSocketTransport implements Transport {
  private readonly ws: WebSocket;
  private dataHandler: ((data: Uint8Array) => void) | null = null;
  private closeHandler: (() => void) | null = null;

  constructor(url: string) {
    this.ws = new WebSocket(url);
    this.ws.binaryType = "arraybuffer";
    this.ws.onmessage = (event) => {
      if (event.data instanceof ArrayBuffer && this.dataHandler) {
        this.dataHandler(new Uint8Array(event.data));
      }
    };
    this.ws.onclose = () => {
      if (this.closeHandler) this.closeHandler();
    };
  }

  ready(): Promise<void> {
    if (this.ws.readyState === WebSocket.OPEN) return Promise.resolve();
    return new Promise((resolve, reject) => {
      this.ws.addEventListener("open", () => resolve(), { once: true });
      this.ws.addEventListener("error", () => reject(new Error("websocket failed")), {
        once: true,
      });
    });
  }

  send(data: Uint8Array): void {
    this.ws.send(data);
  }

  onData(handler: (data: Uint8Array) => void): void {
    this.dataHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }

  close(): void {
    this.ws.close();
  }
}
