/**
 * One-axis virtual joystick.
 *
 * While engaged it re-sends the held value on a fixed cadence (30 Hz,
 * matching the stream rate) so the service's held-command model always
 * has a fresh value; release sends a single zero.  The send function
 * reports whether the command actually went out; refused sends surface
 * through onDrop so the console can show the dropped-input notice.
 */

import { clampCommand } from "./protocol.js";

export const EMIT_HZ = 30;
export const EMIT_INTERVAL_MS = 1000 / EMIT_HZ;

export type SendCommand = (value: number) => boolean;

export class Joystick {
  private held = 0;
  private engaged = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly send: SendCommand,
    private readonly onDrop: () => void = () => {},
    private readonly intervalMs: number = EMIT_INTERVAL_MS,
  ) {}

  get value(): number {
    return this.engaged ? this.held : 0;
  }

  get isEngaged(): boolean {
    return this.engaged;
  }

  engage(value: number): void {
    this.held = clampCommand(value);
    if (!this.engaged) {
      this.engaged = true;
      this.emit();
      this.timer = setInterval(() => this.emit(), this.intervalMs);
    }
  }

  move(value: number): void {
    if (this.engaged) this.held = clampCommand(value);
  }

  release(): void {
    if (!this.engaged) return;
    this.engaged = false;
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    if (!this.send(0)) this.onDrop();
  }

  dispose(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    this.engaged = false;
  }

  private emit(): void {
    if (!this.send(this.held)) this.onDrop();
  }
}

/** Map a pointer position on the pad to a stick value in [-1, 1]. */
export function padValue(
  clientX: number, rect: { left: number; width: number },
): number {
  if (rect.width <= 0) return 0;
  return clampCommand(((clientX - rect.left) / rect.width) * 2 - 1);
}
