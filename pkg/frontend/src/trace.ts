/**
 * Rolling commanded-rate history behind the velocity strip chart.
 *
 * The texture of this trace is the visible difference between shaping
 * modes: an unshaped trial ramps straight to cruise, a shaped one climbs
 * a staircase (ramp, hold, shallower ramp).  plateauLevels finds the held
 * levels so tests can assert on that texture instead of eyeballing it.
 */

export interface TraceSample {
  t: number;
  rate: number;
}

export class RateTrace {
  private samples: TraceSample[] = [];

  constructor(readonly windowSeconds: number = 8) {}

  push(t: number, rate: number): void {
    this.samples.push({ t, rate });
    const cutoff = t - this.windowSeconds;
    let drop = 0;
    while (drop < this.samples.length && this.samples[drop].t < cutoff) {
      drop += 1;
    }
    if (drop > 0) this.samples.splice(0, drop);
  }

  recent(): readonly TraceSample[] {
    return this.samples;
  }

  values(): number[] {
    return this.samples.map((s) => s.rate);
  }

  clear(): void {
    this.samples = [];
  }
}

/**
 * Held levels in a sampled signal: the mean of every maximal run of at
 * least minRun consecutive samples that stay within eps of each other.
 */
export function plateauLevels(
  values: readonly number[], eps = 2e-3, minRun = 3,
): number[] {
  const levels: number[] = [];
  let start = 0;
  for (let i = 1; i <= values.length; i += 1) {
    const broken = i === values.length ||
      Math.abs(values[i] - values[start]) > eps;
    if (!broken) continue;
    const run = i - start;
    if (run >= minRun) {
      let sum = 0;
      for (let k = start; k < i; k += 1) sum += values[k];
      levels.push(sum / run);
    }
    start = i;
  }
  return levels;
}

/**
 * Plateaus strictly between zero and cruise magnitude.  A staircase
 * spin-up holds at least one such level; a plain ramp holds none.
 */
export function intermediatePlateaus(
  values: readonly number[], cruiseRate: number, eps = 2e-3,
): number[] {
  const cruise = Math.abs(cruiseRate);
  return plateauLevels(values, eps).filter(
    (v) => Math.abs(v) > 0.05 * cruise && Math.abs(v) < 0.95 * cruise,
  );
}
