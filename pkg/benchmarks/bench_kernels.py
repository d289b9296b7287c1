"""Time the simulation kernels: compiled against the plain-numpy fallback.

Run with no arguments to get the comparison: the script re-runs itself
once per mode in a subprocess (the fallback is selected by setting
SLEWSAFE_NO_NUMBA=1 before the package is imported, so each mode needs a
fresh interpreter) and prints both throughputs plus the speedup.

    python3 benchmarks/bench_kernels.py

A single mode can be timed directly with --worker; it honours whatever
SLEWSAFE_NO_NUMBA already says in the environment and emits one JSON line.
"""

import argparse
import dataclasses
import json
import os
import subprocess
import sys
import time

WORKLOAD_SECONDS = 30.0  # simulated seconds per run
REPEATS = 5


def run_worker() -> dict:
    import numpy as np

    from slewsafe import _kernels
    from slewsafe.config import CraneConfig, DEFAULT_TIMESTEP
    from slewsafe.dynamics import run_rate_profile

    # wide footprint so the long spin never ends early at tip-over
    cfg = dataclasses.replace(CraneConfig(), footprint_half_width=2.0)
    dt = DEFAULT_TIMESTEP
    n = int(WORKLOAD_SECONDS / dt)
    vcmd = np.full(n, 0.4)
    vcmd[n // 2:] = 0.0

    trace = run_rate_profile(cfg, vcmd, dt=dt)  # warm-up pays any jit cost
    assert len(trace) >= n
    best = float("inf")
    total = 0.0
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        trace = run_rate_profile(cfg, vcmd, dt=dt)
        elapsed = time.perf_counter() - t0
        best = min(best, elapsed)
        total += elapsed
    return {
        "numba": _kernels.NUMBA_ENABLED,
        "steps": n,
        "repeats": REPEATS,
        "best_s": best,
        "mean_s": total / REPEATS,
        "steps_per_s": n / best,
        "final_alpha": float(trace.column("alpha")[-1]),
    }


def run_comparison() -> int:
    results = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, SLEWSAFE_NO_NUMBA=flag)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--worker"],
            env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            sys.stderr.write(proc.stderr)
            return proc.returncode
        results[label] = json.loads(proc.stdout.splitlines()[-1])

    for label, r in results.items():
        mode = "numba jit" if r["numba"] else "numpy fallback"
        print(f"{label:>6}: {mode:<15} {r['steps_per_s']:>12,.0f} steps/s "
              f"(best of {r['repeats']}: {r['best_s'] * 1e3:.2f} ms "
              f"for {r['steps']} steps)")
    if results["numba"]["numba"] == results["numpy"]["numba"]:
        print("warning: both workers ran the same mode; is numba installed?")
    else:
        ratio = results["numba"]["steps_per_s"] / results["numpy"]["steps_per_s"]
        print(f"speedup: {ratio:.1f}x")
    if results["numba"]["final_alpha"] != results["numpy"]["final_alpha"]:
        print("warning: modes disagree on the final state")
        return 1
    return 0


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--worker", action="store_true",
                        help="time the current mode and print one JSON line")
    args = parser.parse_args()
    if args.worker:
        print(json.dumps(run_worker()))
        return 0
    return run_comparison()


if __name__ == "__main__":
    sys.exit(main())
