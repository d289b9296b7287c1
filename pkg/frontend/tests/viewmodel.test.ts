import { describe, expect, it } from "vitest";

import { ScenarioSummary, StateFrame, TerminalFrame } from "../src/protocol.js";
import { ViewModel } from "../src/viewmodel.js";
import type { RecordedRun } from "./loopback.js";
import keepoutJson from "./fixtures/scenario_station_keepout.json";
import shapedJson from "./fixtures/run_shaped_hold.json";

const keepout = keepoutJson as unknown as ScenarioSummary;
const shapedRun = shapedJson as unknown as RecordedRun;

let seqCounter = 0;

function stateFrame(partial: Partial<StateFrame>): StateFrame {
  seqCounter += 1;
  return {
    v: 1, type: "state", seq: seqCounter, t: seqCounter / 30,
    alpha: Math.PI / 2, alpha_dot: 0, rate_cmd: 0, theta1: 0, theta2: 0,
    tip_margin: 0.5, payload_x: 0, payload_y: 0.7,
    ...partial,
  };
}

function readyModel(sc: ScenarioSummary = keepout): ViewModel {
  const vm = new ViewModel();
  vm.selectScenario(sc);
  vm.beginTrial();
  seqCounter = 0;
  return vm;
}

describe("trial phases", () => {
  it("walks idle -> running -> terminal", () => {
    const vm = new ViewModel();
    expect(vm.phase).toBe("idle");
    vm.selectScenario(keepout);
    vm.beginTrial();
    expect(vm.phase).toBe("running");
    const terminal: TerminalFrame = {
      v: 1, type: "terminal", seq: 3, t: 0.1, state: "completed",
      metrics: { max_swing_deg: 1.2, collision_count: 0,
                 completion_time_s: 4.5, tipped: false, completed: true },
    };
    vm.enqueue(terminal);
    vm.drain();
    expect(vm.phase).toBe("terminal");
    expect(vm.terminal?.state).toBe("completed");
    expect(vm.terminal?.metrics.completion_time_s).toBe(4.5);
  });

  it("refuses a shaping toggle mid-trial and allows it after", () => {
    const vm = readyModel();
    expect(vm.shaped).toBe(true);
    expect(vm.setShaped(false)).toBe(false);
    expect(vm.shaped).toBe(true);
    expect(vm.notice).toMatch(/next/);
    vm.enqueue({
      v: 1, type: "terminal", seq: 1, t: 0.1, state: "aborted",
      metrics: { max_swing_deg: 0, collision_count: 0,
                 completion_time_s: null, tipped: false, completed: false },
    });
    vm.drain();
    expect(vm.setShaped(false)).toBe(true);
    expect(vm.shaped).toBe(false);
  });

  it("refuses a scenario change mid-trial", () => {
    const vm = readyModel();
    expect(vm.selectScenario(keepout)).toBe(false);
  });
});

describe("frame application", () => {
  it("ignores stale or duplicate frames", () => {
    const vm = readyModel();
    vm.enqueue(stateFrame({ seq: 5, t: 5 / 30, rate_cmd: -0.4 }));
    vm.enqueue(stateFrame({ seq: 4, t: 4 / 30, rate_cmd: -0.1 }));
    vm.drain();
    expect(vm.displayed()?.rateCmd).toBe(-0.4);
    expect(vm.displayedTime()).toBeCloseTo(5 / 30, 12);
  });

  it("projects swing magnitude in degrees", () => {
    const vm = readyModel();
    vm.enqueue(stateFrame({ theta1: 0.03, theta2: 0.04 }));
    vm.drain();
    expect(vm.displayed()?.swingDeg).toBeCloseTo((0.05 * 180) / Math.PI, 10);
  });

  it("shows error frames as notices", () => {
    const vm = readyModel();
    vm.enqueue({ v: 1, type: "error", error: "session already has a live stream" });
    vm.drain();
    expect(vm.notice).toMatch(/live stream/);
  });
});

describe("rendering never runs ahead of the stream", () => {
  it("displays exactly the last received simulation timestamp", () => {
    const vm = readyModel();
    let newest = -Infinity;
    for (const raw of shapedRun.frames) {
      if (raw.type !== "state") break;
      vm.enqueue(raw as unknown as StateFrame);
      newest = Math.max(newest, raw.t as number);
      if ((raw.seq as number) % 3 === 0) {
        vm.drain();
        expect(vm.displayedTime()).toBeLessThanOrEqual(newest);
      }
    }
    vm.drain();
    expect(vm.displayedTime()).toBe(newest);
  });
});

describe("collision counting", () => {
  const nearMiss = { x: 0.80 + 0.04 + 0.02, y: 0.05 };

  it("counts rising edges of payload contact, once per entry", () => {
    const vm = readyModel();
    // approach, touch, stay, leave, touch again
    vm.enqueue(stateFrame({ payload_x: nearMiss.x, payload_y: nearMiss.y }));
    vm.enqueue(stateFrame({ payload_x: 0.80, payload_y: 0.05 }));
    vm.enqueue(stateFrame({ payload_x: 0.81, payload_y: 0.05 }));
    vm.enqueue(stateFrame({ payload_x: nearMiss.x, payload_y: nearMiss.y }));
    vm.enqueue(stateFrame({ payload_x: 0.80, payload_y: 0.05 }));
    vm.drain();
    expect(vm.collisions).toBe(2);
  });

  it("tests boom-level obstacles against the boom tip", () => {
    const radius = keepout.crane.radius_m;
    const sc: ScenarioSummary = {
      ...keepout,
      obstacles: [{ center: [radius, 0], radius: 0.05,
                    height_class: "boom-level" }],
    };
    const vm = readyModel(sc);
    // payload far away; the boom tip sweeps through the disc
    vm.enqueue(stateFrame({ alpha: Math.PI / 2, payload_x: -0.7 }));
    vm.enqueue(stateFrame({ alpha: 0.0, payload_x: -0.7 }));
    vm.drain();
    expect(vm.collisions).toBe(1);
  });

  it("adopts the authoritative count from the terminal metrics", () => {
    const vm = readyModel();
    vm.enqueue(stateFrame({ payload_x: 0.80, payload_y: 0.05 }));
    vm.enqueue({
      v: 1, type: "terminal", seq: 99, t: 1.0, state: "completed",
      metrics: { max_swing_deg: 2, collision_count: 3,
                 completion_time_s: 6.0, tipped: false, completed: true },
    });
    vm.drain();
    expect(vm.collisions).toBe(3);
  });
});

describe("connection state", () => {
  it("raises the reconnect banner when the stream drops mid-trial", () => {
    const vm = readyModel();
    vm.connectionLost();
    expect(vm.connection).toBe("reconnecting");
    expect(vm.notice).toMatch(/reconnect/);
    expect(vm.inputAccepted()).toBe(false);
  });

  it("flags dropped joystick input", () => {
    const vm = readyModel();
    vm.connectionLost();
    vm.noteDroppedInput();
    expect(vm.notice).toMatch(/dropped/);
  });
});
