/**
 * Transport: REST calls for setup, one WebSocket per trial.
 *
 * The socket type is injected so tests can wire the console to an
 * in-process loopback speaking the same protocol.  All inbound frames
 * go through decodeFrame and then into the viewmodel queue; this module
 * never touches viewmodel fields directly.
 */

import {
  ScenarioSummary, ServerFrame, SessionDescriptor, abortMessage,
  commandMessage, decodeFrame, ProtocolError,
} from "./protocol.js";

export interface WireSocket {
  onopen: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev: { code: number }) => void) | null;
  send(data: string): void;
  close(code?: number, reason?: string): void;
}

export type SocketFactory = (url: string) => WireSocket;

export interface TrialSocketHandlers {
  onFrame(frame: ServerFrame): void;
  onOpen(): void;
  /** Unexpected close while the trial looked live. */
  onConnectionLost(): void;
  /** Reconnect attempts exhausted. */
  onGaveUp(): void;
}

const RECONNECT_DELAY_MS = 500;
const RECONNECT_ATTEMPTS = 5;

export class TrialSocket {
  private socket: WireSocket | null = null;
  private sawTerminal = false;
  private closedByUs = false;
  private attempts = 0;

  constructor(
    private readonly url: string,
    private readonly handlers: TrialSocketHandlers,
    private readonly factory: SocketFactory,
  ) {}

  connect(): void {
    const ws = this.factory(this.url);
    this.socket = ws;
    ws.onopen = () => {
      this.attempts = 0;
      this.handlers.onOpen();
    };
    ws.onmessage = (ev) => {
      if (typeof ev.data !== "string") return;
      let frame: ServerFrame;
      try {
        frame = decodeFrame(ev.data);
      } catch (err) {
        if (err instanceof ProtocolError) return; // not ours; skip it
        throw err;
      }
      if (frame.type === "terminal") this.sawTerminal = true;
      this.handlers.onFrame(frame);
    };
    ws.onclose = () => {
      this.socket = null;
      if (this.closedByUs || this.sawTerminal) return;
      // live trial lost its stream: tell the console, then retry; the
      // service aborts the trial on disconnect and replays the terminal
      // frame to the next connection, so one successful retry closes
      // the loop with a metrics card.
      this.handlers.onConnectionLost();
      if (this.attempts >= RECONNECT_ATTEMPTS) {
        this.handlers.onGaveUp();
        return;
      }
      this.attempts += 1;
      setTimeout(() => {
        if (!this.closedByUs && !this.sawTerminal) this.connect();
      }, RECONNECT_DELAY_MS * this.attempts);
    };
  }

  /** True when the command went out on an open socket. */
  sendCommand(value: number): boolean {
    if (this.socket === null) return false;
    try {
      this.socket.send(commandMessage(value));
    } catch {
      return false;
    }
    return true;
  }

  abort(): boolean {
    if (this.socket === null) return false;
    try {
      this.socket.send(abortMessage());
    } catch {
      return false;
    }
    return true;
  }

  close(): void {
    this.closedByUs = true;
    if (this.socket !== null) this.socket.close(1000);
    this.socket = null;
  }
}

async function asJson<T>(resp: Response, what: string): Promise<T> {
  if (!resp.ok) {
    let detail = "";
    try {
      detail = await resp.text();
    } catch {
      // response body already gone; status alone will have to do
    }
    throw new Error(`${what} failed: ${resp.status} ${detail}`.trim());
  }
  return (await resp.json()) as T;
}

/** Thin REST wrapper; apiBase is "" when served from the same origin. */
export class ServiceClient {
  constructor(private readonly apiBase: string = "") {}

  async scenarios(): Promise<ScenarioSummary[]> {
    const resp = await fetch(`${this.apiBase}/scenarios`);
    return asJson(resp, "scenario listing");
  }

  async createSession(
    scenarioId: string, shaped: boolean,
  ): Promise<SessionDescriptor> {
    const resp = await fetch(`${this.apiBase}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ scenario_id: scenarioId, shaped }),
    });
    return asJson(resp, "session creation");
  }

  sessionSocketUrl(sessionId: string): string {
    const base = this.apiBase === ""
      ? `${location.protocol === "https:" ? "wss:" : "ws:"}//${location.host}`
      : this.apiBase.replace(/^http/, "ws");
    return `${base}/session/${sessionId}`;
  }
}
