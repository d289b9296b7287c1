/**
 * Console state machine.
 *
 * Socket handlers call enqueue() and nothing else; the rendering loop
 * calls drain() once per animation frame and then reads the public
 * fields.  That keeps a single mutation site, so there is no shared
 * mutable state between the socket callbacks and the painter.
 *
 * Rendering invariant: everything displayed is a pure projection of the
 * last received state frame.  The view never integrates positions
 * forward on wall time, so the displayed simulation timestamp can never
 * run ahead of the stream.
 */

import {
  ScenarioSummary, ServerFrame, StateFrame, TerminalState, TrialMetrics,
} from "./protocol.js";
import { RateTrace } from "./trace.js";

export type Phase = "idle" | "running" | "terminal";
export type Connection = "idle" | "connected" | "reconnecting" | "lost";

export interface TerminalCard {
  state: TerminalState;
  metrics: TrialMetrics;
}

/** What the painter draws; built from the last frame only. */
export interface DisplaySnapshot {
  t: number;
  boomAngle: number;
  rate: number;
  rateCmd: number;
  swingDeg: number;
  tipMargin: number;
  payloadX: number;
  payloadY: number;
}

export class ViewModel {
  phase: Phase = "idle";
  connection: Connection = "idle";
  scenario: ScenarioSummary | null = null;
  shaped = true;
  collisions = 0;
  notice: string | null = null;
  terminal: TerminalCard | null = null;
  readonly trace = new RateTrace();

  private queue: ServerFrame[] = [];
  private last: StateFrame | null = null;
  private lastSeq = 0;
  private insideObstacle: boolean[] = [];

  selectScenario(sc: ScenarioSummary): boolean {
    if (this.phase === "running") return false;
    this.scenario = sc;
    this.insideObstacle = sc.obstacles.map(() => false);
    return true;
  }

  /** Shaping is fixed for the duration of a trial; mid-trial toggles are
   * refused and the current setting applies only from the next start. */
  setShaped(on: boolean): boolean {
    if (this.phase === "running") {
      this.notice = "shaping is locked during a trial; applies to the next one";
      return false;
    }
    this.shaped = on;
    return true;
  }

  /** Reset per-trial state; called when the trial socket opens. */
  beginTrial(): void {
    if (this.scenario === null) throw new Error("no scenario selected");
    this.phase = "running";
    this.connection = "connected";
    this.collisions = 0;
    this.insideObstacle = this.scenario.obstacles.map(() => false);
    this.terminal = null;
    this.notice = null;
    this.last = null;
    this.lastSeq = 0;
    this.queue = [];
    this.trace.clear();
  }

  /** Socket side: park a decoded frame for the rendering loop. */
  enqueue(frame: ServerFrame): void {
    this.queue.push(frame);
  }

  /** Rendering side: apply queued frames in arrival order. */
  drain(): number {
    const pending = this.queue;
    if (pending.length === 0) return 0;
    this.queue = [];
    for (const frame of pending) this.apply(frame);
    return pending.length;
  }

  connectionLost(): void {
    if (this.phase === "running") {
      this.connection = "reconnecting";
      this.notice = "connection lost; reconnecting";
    } else if (this.connection !== "idle") {
      this.connection = "idle";
    }
  }

  reconnectFailed(): void {
    this.connection = "lost";
    this.notice = "connection lost; trial abandoned";
    if (this.phase === "running") this.phase = "idle";
  }

  inputAccepted(): boolean {
    return this.phase === "running" && this.connection === "connected";
  }

  noteDroppedInput(): void {
    this.notice = "joystick input dropped: not connected";
  }

  /** Simulation timestamp currently on screen, straight off the last
   * frame.  Anything newer simply has not been painted yet. */
  displayedTime(): number | null {
    return this.last === null ? null : this.last.t;
  }

  displayed(): DisplaySnapshot | null {
    const f = this.last;
    if (f === null) return null;
    return {
      t: f.t,
      boomAngle: f.alpha,
      rate: f.alpha_dot,
      rateCmd: f.rate_cmd,
      swingDeg: (Math.hypot(f.theta1, f.theta2) * 180) / Math.PI,
      tipMargin: f.tip_margin,
      payloadX: f.payload_x,
      payloadY: f.payload_y,
    };
  }

  private apply(frame: ServerFrame): void {
    switch (frame.type) {
      case "state":
        if (frame.seq <= this.lastSeq) return; // stale or duplicate
        this.lastSeq = frame.seq;
        this.last = frame;
        this.trace.push(frame.t, frame.rate_cmd);
        this.updateCollisions(frame);
        break;
      case "terminal":
        this.lastSeq = Math.max(this.lastSeq, frame.seq);
        this.terminal = { state: frame.state, metrics: frame.metrics };
        this.phase = "terminal";
        this.connection = "connected";
        // the service's count is scored on the full-rate log; trust it
        this.collisions = frame.metrics.collision_count;
        break;
      case "error":
        this.notice = frame.error;
        break;
    }
  }

  /**
   * Live collision counter: rising edge of "in contact" per obstacle,
   * same contact rule the trial scoring uses (payload plan position
   * against payload-level discs, boom tip against boom-level ones).
   * Frames subsample the simulation, so a fast clip can slip between
   * frames; the terminal metrics carry the authoritative count.
   */
  private updateCollisions(f: StateFrame): void {
    const sc = this.scenario;
    if (sc === null || sc.obstacles.length === 0) return;
    const tipX = sc.crane.radius_m * Math.cos(f.alpha);
    const tipY = sc.crane.radius_m * Math.sin(f.alpha);
    sc.obstacles.forEach((ob, i) => {
      const x = ob.height_class === "boom-level" ? tipX : f.payload_x;
      const y = ob.height_class === "boom-level" ? tipY : f.payload_y;
      const dx = x - ob.center[0];
      const dy = y - ob.center[1];
      const inside = dx * dx + dy * dy <= ob.radius * ob.radius;
      if (inside && !this.insideObstacle[i]) this.collisions += 1;
      this.insideObstacle[i] = inside;
    });
  }
}
