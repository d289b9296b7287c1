/**
 * Wire protocol spoken by the trial service.
 *
 * Every frame carries a schema version `v` and a monotonically increasing
 * `seq`.  State frames stream at a fixed cadence while a trial runs; a
 * single terminal frame with the trial metrics ends the stream.  The
 * client sends only two message shapes back: a normalized rate command
 * and an abort.
 */

export const PROTOCOL_VERSION = 1;
export const STREAM_HZ = 30;
export const STREAM_INTERVAL_S = 1 / STREAM_HZ;

export interface StateFrame {
  v: 1;
  type: "state";
  seq: number;
  t: number;
  alpha: number;
  alpha_dot: number;
  rate_cmd: number;
  theta1: number;
  theta2: number;
  tip_margin: number;
  payload_x: number;
  payload_y: number;
}

export interface TrialMetrics {
  max_swing_deg: number;
  collision_count: number;
  completion_time_s: number | null;
  tipped: boolean;
  completed: boolean;
}

export type TerminalState = "tipped" | "completed" | "aborted";

export interface TerminalFrame {
  v: 1;
  type: "terminal";
  seq: number;
  t: number;
  state: TerminalState;
  metrics: TrialMetrics;
}

export interface ErrorFrame {
  v: 1;
  type: "error";
  error: string;
}

export type ServerFrame = StateFrame | TerminalFrame | ErrorFrame;

export interface ObstacleSummary {
  center: [number, number];
  radius: number;
  height_class: "payload-level" | "boom-level";
}

export interface ScenarioSummary {
  id: string;
  start_angle_deg: number;
  goal_angle_deg: number;
  goal_tolerance_deg: number;
  time_limit_s: number;
  crane: {
    radius_m: number;
    rope_length_m: number;
    speed_limit_rad_s: number;
    payload_mass_kg: number;
    footprint_half_width_m: number;
  };
  obstacles: ObstacleSummary[];
}

export interface SessionDescriptor {
  session_id: string;
  scenario_id: string;
  shaped: boolean;
  state: string;
}

const STATE_NUMBER_FIELDS = [
  "seq", "t", "alpha", "alpha_dot", "rate_cmd", "theta1", "theta2",
  "tip_margin", "payload_x", "payload_y",
] as const;

const TERMINAL_STATES: ReadonlySet<string> = new Set([
  "tipped", "completed", "aborted",
]);

function isRecord(x: unknown): x is Record<string, unknown> {
  return typeof x === "object" && x !== null && !Array.isArray(x);
}

function isFiniteNumber(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

export class ProtocolError extends Error {}

function checkMetrics(x: unknown): TrialMetrics {
  if (!isRecord(x)) throw new ProtocolError("metrics is not an object");
  const { max_swing_deg, collision_count, completion_time_s, tipped,
          completed } = x;
  if (!isFiniteNumber(max_swing_deg) || !isFiniteNumber(collision_count)) {
    throw new ProtocolError("metrics numbers malformed");
  }
  if (completion_time_s !== null && !isFiniteNumber(completion_time_s)) {
    throw new ProtocolError("completion_time_s malformed");
  }
  if (typeof tipped !== "boolean" || typeof completed !== "boolean") {
    throw new ProtocolError("metrics flags malformed");
  }
  return { max_swing_deg, collision_count, completion_time_s, tipped,
           completed };
}

/** Parse one text frame off the socket; throws ProtocolError when the
 * payload is not a frame this client understands. */
export function decodeFrame(raw: string): ServerFrame {
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch {
    throw new ProtocolError("frame is not valid JSON");
  }
  if (!isRecord(parsed)) throw new ProtocolError("frame is not an object");
  if (parsed.v !== PROTOCOL_VERSION) {
    throw new ProtocolError(`unsupported protocol version ${String(parsed.v)}`);
  }
  switch (parsed.type) {
    case "state": {
      for (const field of STATE_NUMBER_FIELDS) {
        if (!isFiniteNumber(parsed[field])) {
          throw new ProtocolError(`state frame field ${field} malformed`);
        }
      }
      return parsed as unknown as StateFrame;
    }
    case "terminal": {
      if (!isFiniteNumber(parsed.seq) || !isFiniteNumber(parsed.t)) {
        throw new ProtocolError("terminal frame header malformed");
      }
      if (typeof parsed.state !== "string" ||
          !TERMINAL_STATES.has(parsed.state)) {
        throw new ProtocolError(
          `unknown terminal state ${String(parsed.state)}`);
      }
      return {
        v: 1, type: "terminal", seq: parsed.seq, t: parsed.t,
        state: parsed.state as TerminalState,
        metrics: checkMetrics(parsed.metrics),
      };
    }
    case "error": {
      if (typeof parsed.error !== "string") {
        throw new ProtocolError("error frame without message");
      }
      return { v: 1, type: "error", error: parsed.error };
    }
    default:
      throw new ProtocolError(`unknown frame type ${String(parsed.type)}`);
  }
}

export function clampCommand(value: number): number {
  if (!Number.isFinite(value)) return 0;
  return Math.min(1, Math.max(-1, value));
}

export function commandMessage(value: number): string {
  return JSON.stringify({ type: "command", value: clampCommand(value) });
}

export function abortMessage(): string {
  return JSON.stringify({ type: "abort" });
}
