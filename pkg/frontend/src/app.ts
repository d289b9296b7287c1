/**
 * Page wiring.  One requestAnimationFrame loop drains the frame queue
 * and repaints; socket callbacks only enqueue.  Everything the operator
 * does goes out as command messages; nothing here writes simulation
 * state any other way.
 */

import { ServiceClient, SocketFactory, TrialSocket, WireSocket } from "./client.js";
import { Joystick, padValue } from "./joystick.js";
import { ScenarioSummary } from "./protocol.js";
import { drawPlan, drawRateTrace } from "./render.js";
import { ViewModel } from "./viewmodel.js";

const browserSocket: SocketFactory = (url) =>
  new WebSocket(url) as unknown as WireSocket;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function fmtSeconds(s: number | null): string {
  return s === null ? "n/a" : `${s.toFixed(2)} s`;
}

export function bootstrap(): void {
  const vm = new ViewModel();
  const api = new URLSearchParams(location.search).get("api") ?? "";
  const client = new ServiceClient(api);

  const scenarioSel = el<HTMLSelectElement>("scenario");
  const shapedBox = el<HTMLInputElement>("shaped");
  const startBtn = el<HTMLButtonElement>("start");
  const connBadge = el<HTMLElement>("conn");
  const banner = el<HTMLElement>("banner");
  const card = el<HTMLElement>("card");
  const cardBody = el<HTMLElement>("card-body");
  const againBtn = el<HTMLButtonElement>("again");
  const swingNeedle = el<HTMLElement>("swing-needle");
  const swingText = el<HTMLElement>("swing-value");
  const marginNeedle = el<HTMLElement>("margin-needle");
  const marginText = el<HTMLElement>("margin-value");
  const collisionsText = el<HTMLElement>("collisions");
  const pad = el<HTMLElement>("pad");
  const knob = el<HTMLElement>("knob");
  const planCanvas = el<HTMLCanvasElement>("plan");
  const traceCanvas = el<HTMLCanvasElement>("trace");
  const planCtx = planCanvas.getContext("2d")!;
  const traceCtx = traceCanvas.getContext("2d")!;

  let scenarios: ScenarioSummary[] = [];
  let socket: TrialSocket | null = null;
  let marginAtRest: number | null = null;
  let shownCollisions = 0;

  const joystick = new Joystick(
    (value) => {
      if (vm.phase !== "running") return true; // stick is idle outside trials
      if (!vm.inputAccepted() || socket === null) return false;
      return socket.sendCommand(value);
    },
    () => vm.noteDroppedInput(),
  );

  // -- trial flow

  async function loadScenarios(): Promise<void> {
    try {
      scenarios = await client.scenarios();
    } catch (err) {
      vm.notice = `cannot reach service: ${String(err)}`;
      return;
    }
    scenarioSel.innerHTML = "";
    for (const sc of scenarios) {
      const opt = document.createElement("option");
      opt.value = sc.id;
      opt.textContent = sc.id;
      scenarioSel.appendChild(opt);
    }
    if (scenarios.length > 0) vm.selectScenario(scenarios[0]);
  }

  async function startTrial(): Promise<void> {
    const sc = scenarios.find((s) => s.id === scenarioSel.value);
    if (sc === undefined) return;
    vm.selectScenario(sc);
    startBtn.disabled = true;
    try {
      const desc = await client.createSession(sc.id, vm.shaped);
      vm.beginTrial();
      marginAtRest = null;
      shownCollisions = 0;
      socket = new TrialSocket(
        client.sessionSocketUrl(desc.session_id),
        {
          onFrame: (frame) => vm.enqueue(frame),
          onOpen: () => { vm.connection = "connected"; },
          onConnectionLost: () => vm.connectionLost(),
          onGaveUp: () => vm.reconnectFailed(),
        },
        browserSocket,
      );
      socket.connect();
    } catch (err) {
      vm.notice = `trial start failed: ${String(err)}`;
      startBtn.disabled = false;
    }
  }

  scenarioSel.addEventListener("change", () => {
    const sc = scenarios.find((s) => s.id === scenarioSel.value);
    if (sc !== undefined && !vm.selectScenario(sc)) {
      scenarioSel.value = vm.scenario?.id ?? scenarioSel.value;
    }
  });
  shapedBox.addEventListener("change", () => {
    if (!vm.setShaped(shapedBox.checked)) {
      shapedBox.checked = vm.shaped; // refused mid-trial; snap back
    }
  });
  startBtn.addEventListener("click", () => { void startTrial(); });
  againBtn.addEventListener("click", () => { void startTrial(); });

  // -- joystick bindings

  pad.addEventListener("pointerdown", (ev) => {
    pad.setPointerCapture(ev.pointerId);
    joystick.engage(padValue(ev.clientX, pad.getBoundingClientRect()));
  });
  pad.addEventListener("pointermove", (ev) => {
    if (joystick.isEngaged) {
      joystick.move(padValue(ev.clientX, pad.getBoundingClientRect()));
    }
  });
  for (const evName of ["pointerup", "pointercancel"] as const) {
    pad.addEventListener(evName, () => joystick.release());
  }
  window.addEventListener("keydown", (ev) => {
    if (ev.key === "ArrowLeft") joystick.engage(1);
    else if (ev.key === "ArrowRight") joystick.engage(-1);
  });
  window.addEventListener("keyup", (ev) => {
    if (ev.key === "ArrowLeft" || ev.key === "ArrowRight") joystick.release();
  });

  // -- the rendering loop; socket events only ever queue into it

  function paint(): void {
    vm.drain();
    const sc = vm.scenario;
    const snap = vm.displayed();

    if (sc !== null) {
      drawPlan(planCtx, planCanvas.width, planCanvas.height, sc, snap);
      drawRateTrace(traceCtx, traceCanvas.width, traceCanvas.height,
                    vm.trace.recent(), sc.crane.speed_limit_rad_s,
                    vm.trace.windowSeconds);
    }

    if (snap !== null) {
      const swing = snap.swingDeg;
      swingNeedle.style.left = `${Math.min(100, (swing / 12) * 100)}%`;
      swingText.textContent = `${swing.toFixed(2)} deg`;
      if (marginAtRest === null && snap.tipMargin > 0) {
        marginAtRest = snap.tipMargin;
      }
      const ref = marginAtRest ?? 1;
      // scale runs -25% .. 100% of the at-rest margin, red below zero
      const frac = Math.max(-0.25, Math.min(1, snap.tipMargin / ref));
      marginNeedle.style.left = `${((frac + 0.25) / 1.25) * 100}%`;
      marginText.textContent = `${snap.tipMargin.toFixed(3)} N·m`;
      marginText.classList.toggle("danger", snap.tipMargin <= 0);
    }

    if (vm.collisions !== shownCollisions) {
      shownCollisions = vm.collisions;
      collisionsText.classList.remove("bump");
      void collisionsText.offsetWidth; // restart the bump animation
      collisionsText.classList.add("bump");
    }
    collisionsText.textContent = String(vm.collisions);

    connBadge.textContent = vm.connection;
    connBadge.className = `badge ${vm.connection}`;
    banner.hidden = vm.notice === null;
    if (vm.notice !== null) banner.textContent = vm.notice;

    knob.style.left = `${((joystick.value + 1) / 2) * 100}%`;

    const term = vm.terminal;
    card.hidden = term === null;
    if (term !== null) {
      card.className = `card ${term.state}`;
      const m = term.metrics;
      cardBody.innerHTML =
        `<h3>${term.state}</h3>` +
        `<dl><dt>max swing</dt><dd>${m.max_swing_deg.toFixed(2)} deg</dd>` +
        `<dt>collisions</dt><dd>${m.collision_count}</dd>` +
        `<dt>completion</dt><dd>${fmtSeconds(m.completion_time_s)}</dd></dl>`;
    }
    startBtn.disabled = vm.phase === "running";
    shapedBox.disabled = vm.phase === "running";

    requestAnimationFrame(paint);
  }

  shapedBox.checked = vm.shaped;
  void loadScenarios();
  requestAnimationFrame(paint);
}

bootstrap();
