/**
 * Canvas painting: top-down plan view plus the commanded-rate strip.
 *
 * Plan view conventions: world x to the right, world y up (so the
 * vertical screen axis is flipped), slew axis at the origin.  The boom
 * is a line from the axis, the payload a disc wherever the stream says
 * it hangs, obstacles are discs, the support footprint a square around
 * the axis.
 */

import { ObstacleSummary, ScenarioSummary } from "./protocol.js";
import { TraceSample } from "./trace.js";
import { DisplaySnapshot } from "./viewmodel.js";

export interface PlanTransform {
  scale: number; // px per metre
  cx: number;
  cy: number;
}

/** Worst-case plan reach: boom tip plus a fully swung-out rope. */
export function worldExtent(sc: ScenarioSummary): number {
  let extent = sc.crane.radius_m + sc.crane.rope_length_m;
  for (const ob of sc.obstacles) {
    const reach = Math.hypot(ob.center[0], ob.center[1]) + ob.radius;
    extent = Math.max(extent, reach);
  }
  return extent * 1.12;
}

export function makeTransform(
  extent: number, width: number, height: number,
): PlanTransform {
  return {
    scale: Math.min(width, height) / (2 * extent),
    cx: width / 2,
    cy: height / 2,
  };
}

export function worldToScreen(
  x: number, y: number, tf: PlanTransform,
): [number, number] {
  return [tf.cx + x * tf.scale, tf.cy - y * tf.scale];
}

const COLORS = {
  floor: "#f7f5f0",
  grid: "#ddd8cc",
  footprint: "#9a8f7a",
  boom: "#1f2d3d",
  payload: "#c2571a",
  rope: "#b0a890",
  goal: "rgba(70, 140, 80, 0.25)",
  obstaclePayload: "#a33",
  obstacleBoom: "#7355a0",
  trace: "#1f5fa8",
  traceGuide: "#c9c2b2",
};

function circle(
  ctx: CanvasRenderingContext2D, x: number, y: number, r: number,
): void {
  ctx.beginPath();
  ctx.arc(x, y, r, 0, Math.PI * 2);
}

function drawObstacle(
  ctx: CanvasRenderingContext2D, ob: ObstacleSummary, tf: PlanTransform,
): void {
  const [x, y] = worldToScreen(ob.center[0], ob.center[1], tf);
  const r = ob.radius * tf.scale;
  if (ob.height_class === "boom-level") {
    ctx.setLineDash([5, 4]);
    ctx.strokeStyle = COLORS.obstacleBoom;
    ctx.lineWidth = 2;
    circle(ctx, x, y, r);
    ctx.stroke();
    ctx.setLineDash([]);
  } else {
    ctx.fillStyle = COLORS.obstaclePayload;
    circle(ctx, x, y, r);
    ctx.fill();
  }
}

export function drawPlan(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  sc: ScenarioSummary,
  snap: DisplaySnapshot | null,
): void {
  const tf = makeTransform(worldExtent(sc), width, height);
  ctx.fillStyle = COLORS.floor;
  ctx.fillRect(0, 0, width, height);

  // reach circle for orientation
  ctx.strokeStyle = COLORS.grid;
  ctx.lineWidth = 1;
  circle(ctx, tf.cx, tf.cy, sc.crane.radius_m * tf.scale);
  ctx.stroke();

  // goal wedge at the slew radius
  const goal = (sc.goal_angle_deg * Math.PI) / 180;
  const tol = (sc.goal_tolerance_deg * Math.PI) / 180;
  ctx.fillStyle = COLORS.goal;
  ctx.beginPath();
  ctx.moveTo(tf.cx, tf.cy);
  // canvas angles run clockwise on a flipped y axis
  ctx.arc(tf.cx, tf.cy, sc.crane.radius_m * tf.scale * 1.08,
          -(goal + tol), -(goal - tol));
  ctx.closePath();
  ctx.fill();

  // support footprint square
  const w = sc.crane.footprint_half_width_m * tf.scale;
  ctx.strokeStyle = COLORS.footprint;
  ctx.lineWidth = 2;
  ctx.strokeRect(tf.cx - w, tf.cy - w, 2 * w, 2 * w);

  for (const ob of sc.obstacles) drawObstacle(ctx, ob, tf);

  const angle = snap === null
    ? (sc.start_angle_deg * Math.PI) / 180
    : snap.boomAngle;
  const [tipX, tipY] = worldToScreen(
    sc.crane.radius_m * Math.cos(angle),
    sc.crane.radius_m * Math.sin(angle), tf);

  ctx.strokeStyle = COLORS.boom;
  ctx.lineWidth = 4;
  ctx.lineCap = "round";
  ctx.beginPath();
  ctx.moveTo(tf.cx, tf.cy);
  ctx.lineTo(tipX, tipY);
  ctx.stroke();

  // payload disc, hung off the tip by however far it has swung
  const [px, py] = snap === null
    ? [tipX, tipY]
    : worldToScreen(snap.payloadX, snap.payloadY, tf);
  ctx.strokeStyle = COLORS.rope;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.moveTo(tipX, tipY);
  ctx.lineTo(px, py);
  ctx.stroke();
  ctx.fillStyle = COLORS.payload;
  circle(ctx, px, py, Math.max(5, 0.035 * tf.scale));
  ctx.fill();
}

/** Strip chart of the commanded slew rate; cruise guides at the rate
 * limit make the shaped staircase obvious against the plain ramp. */
export function drawRateTrace(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  samples: readonly TraceSample[],
  rateLimit: number,
  windowSeconds: number,
): void {
  ctx.fillStyle = COLORS.floor;
  ctx.fillRect(0, 0, width, height);
  const span = 1.25 * rateLimit;
  const yOf = (rate: number): number => (height / 2) * (1 - rate / span);

  ctx.strokeStyle = COLORS.traceGuide;
  ctx.lineWidth = 1;
  for (const guide of [0, rateLimit, -rateLimit]) {
    ctx.beginPath();
    ctx.moveTo(0, yOf(guide));
    ctx.lineTo(width, yOf(guide));
    ctx.stroke();
  }
  if (samples.length < 2) return;

  const tEnd = samples[samples.length - 1].t;
  const t0 = tEnd - windowSeconds;
  ctx.strokeStyle = COLORS.trace;
  ctx.lineWidth = 2;
  ctx.beginPath();
  samples.forEach((s, i) => {
    const x = ((s.t - t0) / windowSeconds) * width;
    if (i === 0) ctx.moveTo(x, yOf(s.rate));
    else ctx.lineTo(x, yOf(s.rate));
  });
  ctx.stroke();
}
