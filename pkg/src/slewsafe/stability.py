"""Safe-operating-envelope analysis: load chart, failure map, speed limits.

The static chart asks "how heavy before the machine tips over standing
still"; the dynamic sweeps ask "how fast can a 90 degree slew go before
the swinging payload pulls it over".  Shaped variants route the rate
command through the swing-cancelling filter and are compared against the
raw commands cell by cell.

All sweeps are deterministic: no randomness, fixed iteration order, so
identical configs produce byte-identical CSV artifacts.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import dynamics, shaper
from .config import AnalysisConfig, CraneConfig, config_fingerprint

OUTCOME_STABLE = "stable"
OUTCOME_TIPPED = "tipped"
OUTCOME_INVALID = "invalid"

# completion-time classification split (fraction of the unshaped time)
EQUAL_TIME_BAND = 0.05


@dataclass(frozen=True)
class DynamicResult:
    speed_fraction: float
    shaped: bool
    outcome: str
    peak_swing: float  # rad
    completion_time: float | None  # s, stable outcomes only


@dataclass
class StabilityCell:
    radius: float
    boom_length: float
    static_limit: float  # kg
    dynamic_results: list[DynamicResult] = field(default_factory=list)


@dataclass(frozen=True)
class SpeedLimitResult:
    radius: float
    payload_mass: float
    shaped: bool
    max_safe_speed: float  # rad/s, <= speed limit
    capped: bool  # True when the speed limit itself is stable
    peak_swing_at_max: float  # rad
    maneuver_time_90deg: float | None  # s


@dataclass(frozen=True)
class CompareRow:
    radius: float
    payload_mass: float
    unshaped: SpeedLimitResult
    shaped: SpeedLimitResult
    time_reduction_pct: float
    classification: str  # "faster" | "equal-time" | "slower" | "no-motion"


def speed_scaling(reference_rate: float, reference_frequency: float,
                  target_frequency: float) -> float:
    """Slew rate preserving rate/frequency across different pendulum scales.

    A rotation that covers the same angle per swing cycle excites the two
    systems identically, so rates carry over by the frequency ratio.
    """
    if reference_rate < 0.0 or reference_frequency <= 0.0 or target_frequency <= 0.0:
        raise ValueError("rates must be >= 0 and frequencies > 0")
    return reference_rate * target_frequency / reference_frequency


def static_load_limit(radius: float, boom_length: float, cfg: CraneConfig) -> float:
    """Heaviest payload the stationary crane supports at this reach.

    Minimizes the moment-balance payload over yaw angles on a 1 degree
    grid and the four footprint edges, with the rope hanging plumb.  If a
    root bending-moment cap is configured the returned mass also satisfies
    m * g * radius <= cap.
    """
    if radius > boom_length:
        raise ValueError(
            f"radius {radius} exceeds boom_length {boom_length}; unreachable")
    cfg = replace(cfg, boom_length=boom_length).at_radius(radius)
    g = cfg.gravity
    w = cfg.footprint_half_width
    ds = cfg.structure_com_offset
    c_r = cfg.boom_com_fraction * cfg.radius

    alphas = np.deg2rad(np.arange(360.0))
    bx, by = np.cos(alphas), np.sin(alphas)
    best = math.inf
    for nx, ny in ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)):
        p = bx * nx + by * ny
        arm = cfg.radius * p - w  # payload lever about this edge
        numer = cfg.structure_mass * (w + ds * p) - cfg.boom_mass * (c_r * p - w)
        binding = arm > 0.0  # payload only destabilizes when outboard
        if np.any(numer[~binding] <= 0.0):
            return 0.0  # tips with no payload at all
        if np.any(binding):
            m_edge = numer[binding] / arm[binding]
            best = min(best, float(np.min(m_edge)))
    if best < 0.0:
        best = 0.0
    if cfg.bending_moment_limit is not None:
        best = min(best, cfg.bending_moment_limit / (g * cfg.radius))
    return best


def build_load_chart(radius_grid, boom_length_grid, cfg: CraneConfig
                     ) -> list[StabilityCell]:
    """One static-limit cell per reachable (radius, boom_length) pair."""
    if not len(radius_grid) or not len(boom_length_grid):
        raise ValueError("grids must be non-empty")
    cells = []
    for lb in boom_length_grid:
        for r in radius_grid:
            if r > lb:
                continue
            cells.append(StabilityCell(r, lb, static_load_limit(r, lb, cfg)))
    if not cells:
        warnings.warn("no reachable (radius, boom_length) pairs; empty chart")
    return cells


@dataclass(frozen=True)
class ManeuverOutcome:
    outcome: str
    peak_swing: float
    completion_time: float | None


def constant_rate_slew(cfg: CraneConfig, rate: float,
                       spec: shaper.ShaperSpec | None, *,
                       dt: float, start_angle: float, goal: float,
                       settle_time: float, horizon: float
                       ) -> tuple[dynamics.SimTrace, int]:
    """Slew from start_angle toward goal at |rate|, stop at the crossing.

    Unshaped: flat rate command, zeroed once the goal angle is crossed
    (the drive's own acceleration limit bounds both ramps).  Shaped: the
    spin-up pulse is filtered, the crossing step is found on a first pass,
    then the full command including the mirrored, filtered stop pulse is
    rebuilt and re-run from zero; the first pass and the rebuild agree
    bit-for-bit up to the crossing.  Slew direction follows the sign of
    goal - start_angle.

    Returns the trace and the crossing row index (-1 if never crossed);
    for shaped runs the trace itself carries no crossing marker because
    the rebuilt command already encodes the stop.
    """
    direction = 1.0 if goal >= start_angle else -1.0
    start = dynamics.make_initial_state(cfg, alpha=start_angle)
    if start.tipped:
        return (dynamics.SimTrace(np.empty(0), np.empty((0, dynamics.TRACE_WIDTH)),
                                  dt, dynamics.STATUS_TIPPED, -1), -1)
    eta = cfg.accel_gain

    if spec is None:
        vcmd = direction * np.full(int(math.ceil(horizon / dt)), rate)
        trace = dynamics.run_rate_profile(
            cfg, vcmd, initial=start, dt=dt, zero_after_cross=True,
            goal=goal, direction=direction, settle_time=settle_time,
            max_time=horizon)
        return trace, trace.crossing_index

    total = int(math.ceil(horizon / dt))
    vcmd = direction * shaper.rate_command_profile(
        rate, eta, cfg.speed_limit, spec, dt, total)
    first = dynamics.run_rate_profile(
        cfg, vcmd, initial=start, dt=dt, hold_last=True,
        goal=goal, direction=direction, settle_time=0.0, max_time=horizon)
    if first.crossing_index < 0:
        return first, -1  # tipped, invalid, or out of time before the goal
    # run_profile rows start one step after the initial state
    stop_step = first.crossing_index + 1
    n_pulse = shaper.shaped_pulse_steps(rate, eta, spec, dt)
    total2 = stop_step + n_pulse + int(spec.duration / dt) + int(settle_time / dt) + 4
    vcmd2 = direction * shaper.rate_command_profile(
        rate, eta, cfg.speed_limit, spec, dt, total2, stop_step=stop_step)
    trace = dynamics.run_rate_profile(
        cfg, vcmd2, initial=start, dt=dt, max_time=total2 * dt + settle_time)
    return trace, first.crossing_index


def run_90deg_maneuver(cfg: CraneConfig, rate: float,
                       spec: shaper.ShaperSpec | None,
                       analysis: AnalysisConfig) -> ManeuverOutcome:
    """Constant-rate slew over the test arc, stop at the crossing, settle."""
    if rate <= 0.0:
        return ManeuverOutcome(OUTCOME_STABLE, 0.0, None)
    dt = analysis.timestep
    goal = analysis.start_angle + analysis.slew_angle
    period = 2.0 * math.pi / dynamics.natural_frequency(cfg.rope_length, cfg.gravity)
    settle = analysis.settle_periods * period
    ramp_time = rate / cfg.accel_gain if spec is None else (
        rate / (2.0 * (spec.deflection_ratio or 0.5) * cfg.accel_gain) + spec.duration)
    horizon = analysis.slew_angle / rate + ramp_time + settle + 5.0 * period

    trace, cross_idx = constant_rate_slew(
        cfg, rate, spec, dt=dt, start_angle=analysis.start_angle, goal=goal,
        settle_time=settle, horizon=horizon)
    if trace.tipped or trace.status == dynamics.STATUS_INVALID or cross_idx < 0:
        return _outcome_from_trace(trace)
    cross_time = float(trace.times[0]) + cross_idx * dt if len(trace) else None
    return ManeuverOutcome(OUTCOME_STABLE, trace.peak_swing(), cross_time)


def _outcome_from_trace(trace: dynamics.SimTrace) -> ManeuverOutcome:
    peak = trace.peak_swing() if trace.times.size else 0.0
    if trace.tipped:
        return ManeuverOutcome(OUTCOME_TIPPED, peak, None)
    if trace.status == dynamics.STATUS_INVALID:
        return ManeuverOutcome(OUTCOME_INVALID, peak, None)
    if trace.crossing_index is not None and trace.crossing_index >= 0:
        return ManeuverOutcome(OUTCOME_STABLE, peak, float(trace.crossing_time))
    # ran out of time before reaching the goal; not provably stable
    return ManeuverOutcome(OUTCOME_INVALID, peak, None)


def _shaper_for(cfg: CraneConfig, analysis: AnalysisConfig) -> shaper.ShaperSpec:
    wn = dynamics.natural_frequency(cfg.rope_length, cfg.gravity)
    return shaper.design_mumzv(wn, analysis.deflection_ratio)


def dynamic_failure_map(chart: list[StabilityCell], speed_fractions,
                        shaped: bool, cfg: CraneConfig,
                        analysis: AnalysisConfig | None = None
                        ) -> list[StabilityCell]:
    """Run the test slew at each chart cell's static-limit payload.

    Appends one DynamicResult per (cell, speed fraction).  Simulation
    validity loss is recorded as an outcome, never raised, so one bad
    cell cannot abort a sweep.
    """
    analysis = analysis or AnalysisConfig()
    out = []
    for cell in chart:
        cfg_cell = replace(cfg, boom_length=cell.boom_length,
                           payload_mass=cell.static_limit).at_radius(cell.radius)
        spec = _shaper_for(cfg_cell, analysis) if shaped else None
        results = list(cell.dynamic_results)
        for f in speed_fractions:
            rate = f * cfg.speed_limit
            try:
                mo = run_90deg_maneuver(cfg_cell, rate, spec, analysis)
            except ValueError:
                mo = ManeuverOutcome(OUTCOME_INVALID, 0.0, None)
            results.append(DynamicResult(f, shaped, mo.outcome,
                                         mo.peak_swing, mo.completion_time))
        out.append(StabilityCell(cell.radius, cell.boom_length,
                                 cell.static_limit, results))
    return out


def max_safe_speed(radius: float, payload_mass: float, shaped: bool,
                   cfg: CraneConfig, resolution: float | None = None,
                   analysis: AnalysisConfig | None = None) -> SpeedLimitResult:
    """Fastest commanded rate whose test slew completes without tipping.

    Bisection over [0, speed limit] to within ``resolution``.  A payload
    past the static envelope returns zero; a payload that survives the
    full speed limit is reported as capped.
    """
    analysis = analysis or AnalysisConfig()
    if resolution is None:
        resolution = analysis.speed_resolution
    if resolution <= 0.0:
        raise ValueError(f"resolution must be > 0, got {resolution}")
    cfg_r = replace(cfg, payload_mass=payload_mass).at_radius(radius)
    spec = _shaper_for(cfg_r, analysis) if shaped else None

    if _statically_inadmissible(cfg_r):
        return SpeedLimitResult(radius, payload_mass, shaped, 0.0, False, 0.0, None)

    def stable_at(rate):
        mo = run_90deg_maneuver(cfg_r, rate, spec, analysis)
        return mo.outcome == OUTCOME_STABLE, mo

    ok, mo = stable_at(cfg.speed_limit)
    if ok:
        return SpeedLimitResult(radius, payload_mass, shaped, cfg.speed_limit,
                                True, mo.peak_swing, mo.completion_time)
    lo, hi = 0.0, cfg.speed_limit
    best = None  # outcome at lo, once lo > 0
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        ok, mo = stable_at(mid)
        if ok:
            lo, best = mid, mo
        else:
            hi = mid
    if best is None:
        return SpeedLimitResult(radius, payload_mass, shaped, 0.0, False, 0.0, None)
    return SpeedLimitResult(radius, payload_mass, shaped, lo, False,
                            best.peak_swing, best.completion_time)


def _statically_inadmissible(cfg: CraneConfig) -> bool:
    rest = dynamics.SwingState(0.0, 0.0, 0.0, 0.0)
    for deg in range(360):
        if dynamics.tip_over_margin(math.radians(deg), rest, cfg) <= 0.0:
            return True
    return False


def compare_shaped_unshaped(pairs, cfg: CraneConfig,
                            analysis: AnalysisConfig | None = None
                            ) -> list[CompareRow]:
    """Paired speed-limit study: raw commands vs filtered, same payloads.

    Each (radius, mass) pair gets both bisections; the row reports the
    completion-time reduction of running at each variant's own maximum
    stable speed.  Within EQUAL_TIME_BAND of the unshaped time counts as
    "equal-time" (the filtered run still carries less swing).
    """
    analysis = analysis or AnalysisConfig()
    rows = []
    for radius, mass in pairs:
        uns = max_safe_speed(radius, mass, False, cfg, analysis=analysis)
        sha = max_safe_speed(radius, mass, True, cfg, analysis=analysis)
        if uns.maneuver_time_90deg and sha.maneuver_time_90deg:
            red = 1.0 - sha.maneuver_time_90deg / uns.maneuver_time_90deg
            if uns.capped and sha.capped:
                # both variants run the full speed limit; the residual time
                # difference is spin-up overhead, not an envelope difference
                cls = "equal-time"
            elif abs(red) < EQUAL_TIME_BAND:
                cls = "equal-time"
            elif red > 0.0:
                cls = "faster"
            else:
                cls = "slower"
        else:
            red = 0.0
            cls = "no-motion"
        rows.append(CompareRow(radius, mass, uns, sha, 100.0 * red, cls))
    return rows


# -- CSV artifacts ------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def _write_csv(path, analysis: AnalysisConfig, header, rows) -> None:
    lines = [f"# config_fingerprint={config_fingerprint(analysis)}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_load_chart_csv(path, chart, analysis: AnalysisConfig) -> None:
    _write_csv(path, analysis, ("radius_m", "boom_length_m", "max_payload_kg"),
               [(c.radius, c.boom_length, c.static_limit) for c in chart])


def write_failure_map_csv(path, chart, analysis: AnalysisConfig) -> None:
    rows = []
    for c in chart:
        for d in c.dynamic_results:
            rows.append((c.radius, c.boom_length, d.speed_fraction, d.shaped,
                         d.outcome, math.degrees(d.peak_swing),
                         d.completion_time))
    _write_csv(path, analysis, ("radius_m", "boom_length_m", "speed_fraction",
                           "shaped", "outcome", "peak_swing_deg", "time_s"), rows)


def write_speed_limits_csv(path, results, analysis: AnalysisConfig) -> None:
    _write_csv(path, analysis,
               ("radius_m", "payload_kg", "shaped", "max_safe_speed_rad_s",
                "capped", "peak_swing_deg", "time_90deg_s"),
               [(r.radius, r.payload_mass, r.shaped, r.max_safe_speed, r.capped,
                 math.degrees(r.peak_swing_at_max), r.maneuver_time_90deg)
                for r in results])


def write_compare_csv(path, rows, analysis: AnalysisConfig) -> None:
    _write_csv(path, analysis,
               ("radius_m", "payload_kg",
                "unshaped_speed_rad_s", "unshaped_time_s", "unshaped_peak_deg",
                "unshaped_capped",
                "shaped_speed_rad_s", "shaped_time_s", "shaped_peak_deg",
                "shaped_capped", "time_reduction_pct", "classification"),
               [(r.radius, r.payload_mass,
                 r.unshaped.max_safe_speed, r.unshaped.maneuver_time_90deg,
                 math.degrees(r.unshaped.peak_swing_at_max), r.unshaped.capped,
                 r.shaped.max_safe_speed, r.shaped.maneuver_time_90deg,
                 math.degrees(r.shaped.peak_swing_at_max), r.shaped.capped,
                 r.time_reduction_pct, r.classification) for r in rows])


# -- batch analysis entry points ------------------------------------------------

ANALYSIS_KINDS = ("loadchart", "failmap", "speedlimits", "compare")


def chart_mass_pairs(analysis: AnalysisConfig) -> list[tuple[float, float]]:
    """(radius, chart-limit payload) pairs at the configured boom length."""
    cfg = analysis.crane
    return [(r, static_load_limit(r, cfg.boom_length, cfg))
            for r in analysis.radius_grid if r <= cfg.boom_length]


def run_analysis(kind: str, analysis: AnalysisConfig, out_dir) -> dict[str, int]:
    """Run one batch analysis and write its CSV artifacts into out_dir.

    Returns {artifact file name: data row count}.  The same entry point
    backs the CLI subcommands and the network service, so the artifacts
    are identical no matter which front end asked.
    """
    analysis.validate()
    cfg = analysis.crane
    os.makedirs(out_dir, exist_ok=True)

    def path(name):
        return os.path.join(out_dir, name)

    rows: dict[str, int] = {}
    if kind == "loadchart":
        chart = build_load_chart(analysis.radius_grid,
                                 analysis.boom_length_grid, cfg)
        write_load_chart_csv(path("loadchart.csv"), chart, analysis)
        rows["loadchart.csv"] = len(chart)
    elif kind == "failmap":
        chart = build_load_chart(analysis.radius_grid,
                                 analysis.boom_length_grid, cfg)
        for shaped, name in ((False, "failmap_unshaped.csv"),
                             (True, "failmap_shaped.csv")):
            mapped = dynamic_failure_map(chart, analysis.speed_fractions,
                                         shaped, cfg, analysis)
            write_failure_map_csv(path(name), mapped, analysis)
            rows[name] = sum(len(c.dynamic_results) for c in mapped)
    elif kind == "speedlimits":
        results = [max_safe_speed(r, m, shaped, cfg, analysis=analysis)
                   for r, m in chart_mass_pairs(analysis)
                   for shaped in (False, True)]
        write_speed_limits_csv(path("speedlimits.csv"), results, analysis)
        rows["speedlimits.csv"] = len(results)
    elif kind == "compare":
        table = compare_shaped_unshaped(chart_mass_pairs(analysis), cfg,
                                        analysis)
        write_compare_csv(path("compare.csv"), table, analysis)
        rows["compare.csv"] = len(table)
    else:
        raise ValueError(
            f"unknown analysis kind {kind!r}; expected one of {ANALYSIS_KINDS}")
    return rows
