import { describe, expect, it } from "vitest";

import { intermediatePlateaus, plateauLevels, RateTrace } from "../src/trace.js";
import type { RecordedRun } from "./loopback.js";
import scenarioJson from "./fixtures/scenario_open_floor.json";
import shapedJson from "./fixtures/run_shaped_hold.json";
import unshapedJson from "./fixtures/run_unshaped_tip.json";

const shaped = shapedJson as unknown as RecordedRun;
const unshaped = unshapedJson as unknown as RecordedRun;
const cruise = (scenarioJson as { crane: { speed_limit_rad_s: number } })
  .crane.speed_limit_rad_s;

function rates(run: RecordedRun): number[] {
  return run.frames
    .filter((f) => f.type === "state")
    .map((f) => f.rate_cmd as number);
}

describe("RateTrace", () => {
  it("keeps a rolling window", () => {
    const trace = new RateTrace(1.0);
    for (let i = 0; i <= 40; i += 1) trace.push(i * 0.1, i);
    const kept = trace.recent();
    expect(kept[0].t).toBeGreaterThanOrEqual(4.0 - 1.0);
    expect(kept[kept.length - 1].rate).toBe(40);
  });

  it("clears between trials", () => {
    const trace = new RateTrace();
    trace.push(0.1, 1);
    trace.clear();
    expect(trace.values()).toEqual([]);
  });
});

describe("plateauLevels", () => {
  it("finds held runs and skips ramps", () => {
    const values = [0, 0.1, 0.2, 0.2, 0.2, 0.2, 0.35, 0.5, 0.5, 0.5];
    expect(plateauLevels(values, 1e-9)).toEqual([0.2, 0.5]);
  });

  it("needs the minimum run length", () => {
    expect(plateauLevels([0.2, 0.2, 0.4, 0.4], 1e-9, 3)).toEqual([]);
  });
});

describe("shaping signature in recorded runs", () => {
  it("shaped spin-up holds an intermediate staircase level", () => {
    const mid = intermediatePlateaus(rates(shaped), cruise);
    expect(mid.length).toBeGreaterThanOrEqual(1);
    // the hold sits well inside the range, not hugging either end
    expect(Math.abs(mid[0])).toBeGreaterThan(0.1 * cruise);
    expect(Math.abs(mid[0])).toBeLessThan(0.9 * cruise);
  });

  it("unshaped spin-up ramps straight to cruise with no hold", () => {
    expect(intermediatePlateaus(rates(unshaped), cruise)).toEqual([]);
  });

  it("both runs cruise at the rate limit", () => {
    for (const run of [shaped, unshaped]) {
      const levels = plateauLevels(rates(run));
      expect(levels.some((v) => Math.abs(Math.abs(v) - cruise) < 2e-3))
        .toBe(true);
    }
  });
});
