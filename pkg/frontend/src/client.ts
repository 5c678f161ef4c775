/**
 * GatewayClient: owns the /stream and /gaze WebSocket connections,
 * reconnects with backoff, and forwards parsed frames and acks to callbacks.
 *
 * The WebSocket constructor is injectable so tests can drive the client with
 * a fake socket; only the small surface the client uses is required.
 */
import type { GazeAck, StreamFrame } from "./types.js";
import type { GazeTarget } from "./keymap.js";

export interface SocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface GatewayClientOptions {
  baseUrl: string; // e.g. "ws://127.0.0.1:8350"
  onFrame: (frame: StreamFrame) => void;
  onAck?: (ack: GazeAck) => void;
  onStatus?: (status: "connecting" | "open" | "closed") => void;
  socketFactory?: SocketFactory;
  reconnectDelayMs?: number;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
}

export class GatewayClient {
  private readonly opts: Required<Pick<GatewayClientOptions, "baseUrl" | "onFrame">> &
    GatewayClientOptions;
  private readonly makeSocket: SocketFactory;
  private readonly delayMs: number;
  private readonly schedule: (fn: () => void, ms: number) => unknown;
  private stream: SocketLike | null = null;
  private gaze: SocketLike | null = null;
  private gazeOpen = false;
  private stopped = false;
  private pendingGaze: string[] = [];

  constructor(opts: GatewayClientOptions) {
    this.opts = opts;
    this.makeSocket = opts.socketFactory ??
      ((url: string) => new WebSocket(url) as unknown as SocketLike);
    this.delayMs = opts.reconnectDelayMs ?? 1000;
    this.schedule = opts.setTimeoutFn ?? ((fn, ms) => setTimeout(fn, ms));
  }

  start(): void {
    this.stopped = false;
    this.connectStream();
    this.connectGaze();
  }

  stop(): void {
    this.stopped = true;
    this.stream?.close();
    this.gaze?.close();
    this.stream = null;
    this.gaze = null;
    this.gazeOpen = false;
  }

  /** Queue a gaze change; sent immediately when the gaze socket is open. */
  sendGaze(target: GazeTarget): void {
    const message = JSON.stringify({ attend: target });
    if (this.gaze && this.gazeOpen) {
      this.gaze.send(message);
    } else {
      this.pendingGaze.push(message);
    }
  }

  private connectStream(): void {
    this.opts.onStatus?.("connecting");
    const ws = this.makeSocket(`${this.opts.baseUrl}/stream`);
    this.stream = ws;
    ws.onopen = () => this.opts.onStatus?.("open");
    ws.onmessage = (ev) => {
      const frame = JSON.parse(String(ev.data)) as StreamFrame;
      this.opts.onFrame(frame);
    };
    ws.onerror = () => {};
    ws.onclose = () => {
      this.opts.onStatus?.("closed");
      if (!this.stopped) {
        this.schedule(() => this.connectStream(), this.delayMs);
      }
    };
  }

  private connectGaze(): void {
    const ws = this.makeSocket(`${this.opts.baseUrl}/gaze`);
    this.gaze = ws;
    this.gazeOpen = false;
    ws.onopen = () => {
      this.gazeOpen = true;
      for (const message of this.pendingGaze.splice(0)) {
        ws.send(message);
      }
    };
    ws.onmessage = (ev) => {
      const ack = JSON.parse(String(ev.data)) as GazeAck;
      this.opts.onAck?.(ack);
    };
    ws.onerror = () => {};
    ws.onclose = () => {
      this.gazeOpen = false;
      if (!this.stopped) {
        this.schedule(() => this.connectGaze(), this.delayMs);
      }
    };
  }
}
