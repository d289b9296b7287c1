/**
 * Console wired to a loopback replaying real recorded service traffic:
 * command round-trip latency, the shaped/unshaped trace signature, the
 * tip-over ending, and connection-loss recovery.
 */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { TrialSocket } from "../src/client.js";
import { ScenarioSummary } from "../src/protocol.js";
import { intermediatePlateaus } from "../src/trace.js";
import { ViewModel } from "../src/viewmodel.js";
import { LoopbackServer, RecordedRun } from "./loopback.js";
import openFloorJson from "./fixtures/scenario_open_floor.json";
import shapedJson from "./fixtures/run_shaped_hold.json";
import unshapedJson from "./fixtures/run_unshaped_tip.json";

const openFloor = openFloorJson as unknown as ScenarioSummary;
const shapedRun = shapedJson as unknown as RecordedRun;
const unshapedRun = unshapedJson as unknown as RecordedRun;

const flushMicrotasks = async (): Promise<void> => {
  await Promise.resolve();
  await Promise.resolve();
};

function wire(run: RecordedRun): {
  server: LoopbackServer; vm: ViewModel; socket: TrialSocket;
} {
  const server = new LoopbackServer(run);
  const vm = new ViewModel();
  vm.selectScenario(openFloor);
  vm.beginTrial();
  const socket = new TrialSocket("loopback://trial", {
    onFrame: (frame) => vm.enqueue(frame),
    onOpen: () => { vm.connection = "connected"; },
    onConnectionLost: () => vm.connectionLost(),
    onGaveUp: () => vm.reconnectFailed(),
  }, server.connect);
  socket.connect();
  return { server, vm, socket };
}

/** One lockstep exchange = one stream interval: command out, frame back,
 * queue drained by the rendering loop. */
function exchange(socket: TrialSocket, vm: ViewModel, value: number): void {
  socket.sendCommand(value);
  vm.drain();
}

describe("command round-trip", () => {
  it("reflects a joystick command in rendered state within 2 stream intervals", async () => {
    const { vm, socket } = wire(shapedRun);
    await flushMicrotasks();
    expect(vm.displayed()).toBeNull(); // nothing rendered before frames

    let intervals = 0;
    for (let i = 0; i < 2; i += 1) {
      exchange(socket, vm, -1);
      intervals += 1;
      const snap = vm.displayed();
      if (snap !== null && snap.rateCmd !== 0) break;
    }
    const snap = vm.displayed();
    expect(intervals).toBeLessThanOrEqual(2);
    expect(snap).not.toBeNull();
    expect(snap!.rateCmd).toBeLessThan(0); // the command shows in the view
    expect(snap!.rate).toBeLessThan(0); //  and the crane is already moving
  });
});

describe("shaping signature end to end", () => {
  function driveToEnd(run: RecordedRun): ViewModel {
    const { vm, socket } = wire(run);
    for (let i = 0; i < 400 && vm.phase !== "terminal"; i += 1) {
      exchange(socket, vm, -1);
    }
    return vm;
  }

  it("toggling shaping changes the rendered rate trace to a staircase", () => {
    const cruise = openFloor.crane.speed_limit_rad_s;
    const shapedVm = driveToEnd(shapedRun);
    const unshapedVm = driveToEnd(unshapedRun);
    // same stick input, visibly different commanded-rate history
    expect(intermediatePlateaus(shapedVm.trace.values(), cruise).length)
      .toBeGreaterThanOrEqual(1);
    expect(intermediatePlateaus(unshapedVm.trace.values(), cruise))
      .toEqual([]);
  });

  it("a forced tip-over ends the trial with the metrics card", () => {
    const vm = driveToEnd(unshapedRun);
    expect(vm.phase).toBe("terminal");
    expect(vm.terminal?.state).toBe("tipped");
    const m = vm.terminal!.metrics;
    expect(m.tipped).toBe(true);
    expect(m.completed).toBe(false);
    expect(m.completion_time_s).toBeNull();
    expect(m.max_swing_deg).toBeGreaterThan(9);
    expect(vm.collisions).toBe(m.collision_count);
  });

  it("only command and abort messages ever reach the server", () => {
    const { server, vm, socket } = wire(unshapedRun);
    for (let i = 0; i < 50; i += 1) exchange(socket, vm, -1);
    socket.abort();
    expect(server.received.length).toBeGreaterThan(0);
    for (const msg of server.received) {
      if (msg.type === "command") {
        const v = msg.value as number;
        expect(typeof v).toBe("number");
        expect(Math.abs(v)).toBeLessThanOrEqual(1);
      } else {
        expect(msg.type).toBe("abort");
      }
    }
  });
});

describe("connection loss", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("raises the banner, reconnects, and lands on the abort card", async () => {
    const { server, vm, socket } = wire(shapedRun);
    await flushMicrotasks();
    for (let i = 0; i < 5; i += 1) exchange(socket, vm, -1);
    expect(vm.phase).toBe("running");

    server.dropConnection();
    expect(vm.connection).toBe("reconnecting");
    expect(vm.notice).toMatch(/reconnect/);
    expect(vm.inputAccepted()).toBe(false);
    expect(socket.sendCommand(-1)).toBe(false); // dropped, not queued

    vi.advanceTimersByTime(500); // first retry fires
    await flushMicrotasks(); // loopback accepts and replays the terminal
    vm.drain();
    expect(vm.phase).toBe("terminal");
    expect(vm.terminal?.state).toBe("aborted");
  });

  it("a reconnect after the trial ended replays the terminal frame", async () => {
    const { vm, socket, server } = wire(unshapedRun);
    for (let i = 0; i < 400 && vm.phase !== "terminal"; i += 1) {
      exchange(socket, vm, -1);
    }
    expect(vm.terminal?.state).toBe("tipped");

    // fresh page, same session id: the card comes straight back
    const vm2 = new ViewModel();
    vm2.selectScenario(openFloor);
    vm2.beginTrial();
    const socket2 = new TrialSocket("loopback://trial", {
      onFrame: (frame) => vm2.enqueue(frame),
      onOpen: () => { vm2.connection = "connected"; },
      onConnectionLost: () => vm2.connectionLost(),
      onGaveUp: () => vm2.reconnectFailed(),
    }, server.connect);
    socket2.connect();
    await flushMicrotasks();
    vm2.drain();
    expect(vm2.phase).toBe("terminal");
    expect(vm2.terminal?.metrics.max_swing_deg)
      .toBe(vm.terminal?.metrics.max_swing_deg);
  });
});
