"""Trial execution: scenarios with obstacles, live stepping, MS/CR/CT metrics.

A trial is one slew from a start angle to a goal angle inside a scenario
that may contain circular plan-view obstacles.  Trials run either from a
precomputed command (constant rate or a planned reference) or live, one
joystick sample at a time.  Either way the product is a TrialRecord:
command log, state log, and the scalar metrics used to score a run
(peak swing, collision count, completion time, tip-over flag).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import yaml

from . import dynamics, shaper
from .config import DEFAULT_TIMESTEP, CraneConfig

HEIGHT_CLASSES = ("payload-level", "boom-level")

#: |alpha_dot| below this counts as settled when timing completion, rad/s.
SETTLED_RATE = math.radians(1.0)

#: Interactive stepping never advances more than this much per call, s.
CATCHUP_LIMIT = 0.25

#: Default shaper deflection ratio for shaped trials.
TRIAL_DEFLECTION_RATIO = 0.3

#: Swing periods observed after the goal settles before a trial closes.
TRIAL_SETTLE_PERIODS = 3.0


@dataclass(frozen=True)
class Obstacle:
    center: tuple[float, float]   # plan-view xy, m
    radius: float                 # m
    height_class: str = "payload-level"


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    crane: CraneConfig
    start_angle: float            # rad
    goal_angle: float             # rad
    goal_tolerance: float         # rad
    time_limit: float             # s
    obstacles: tuple[Obstacle, ...] = ()

    def validate(self) -> "Scenario":
        self.crane.validate()
        if self.goal_tolerance <= 0.0:
            raise ValueError(
                f"goal_tolerance must be > 0, got {self.goal_tolerance}")
        if self.time_limit <= 0.0:
            raise ValueError(f"time_limit must be > 0, got {self.time_limit}")
        for ob in self.obstacles:
            if ob.radius <= 0.0:
                raise ValueError(f"obstacle radius must be > 0, got {ob.radius}")
            if ob.height_class not in HEIGHT_CLASSES:
                raise ValueError(
                    f"height_class must be one of {HEIGHT_CLASSES}, "
                    f"got {ob.height_class!r}")
        return self


def scenario_from_mapping(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ValueError("scenario root must be a mapping")
    try:
        crane = CraneConfig(**(data.get("crane") or {}))
    except TypeError as exc:
        raise ValueError(f"bad crane block: {exc}") from None
    obstacles = []
    for ob in data.get("obstacles") or []:
        center = ob.get("center")
        if not (isinstance(center, (list, tuple)) and len(center) == 2):
            raise ValueError(f"obstacle center must be [x, y], got {center}")
        obstacles.append(Obstacle(
            center=(float(center[0]), float(center[1])),
            radius=float(ob.get("radius", 0.0)),
            height_class=str(ob.get("height_class", "payload-level")),
        ))
    try:
        return Scenario(
            scenario_id=str(data["id"]),
            crane=crane,
            start_angle=math.radians(float(data["start_angle_deg"])),
            goal_angle=math.radians(float(data["goal_angle_deg"])),
            goal_tolerance=math.radians(float(data["goal_tolerance_deg"])),
            time_limit=float(data["time_limit_s"]),
            obstacles=tuple(obstacles),
        ).validate()
    except KeyError as exc:
        raise ValueError(f"scenario is missing required field {exc}") from None


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_mapping(yaml.safe_load(fh) or {})


# -- metrics -------------------------------------------------------------------


@dataclass(frozen=True)
class TrialMetrics:
    max_swing_deg: float
    collision_count: int
    completion_time: float | None   # s; only for completed, untipped trials
    tipped: bool
    completed: bool


@dataclass(frozen=True)
class TrialRecord:
    scenario_id: str
    shaped: bool
    command_log: tuple[tuple[float, float], ...]  # (time_s, joystick value)
    trace: dynamics.SimTrace
    metrics: TrialMetrics


def collision_events(trace: dynamics.SimTrace, obstacles, radius: float) -> int:
    """Count obstacle entries over a trace.

    An event is a rising edge of "in contact" for one obstacle; staying in
    contact, however long, counts once, and each obstacle counts its own
    entries.  Payload-level obstacles test the payload plan position,
    boom-level ones the boom tip at the given slew radius.
    """
    if not obstacles or len(trace) == 0:
        return 0
    alpha = trace.column("alpha")
    tip_x, tip_y = radius * np.cos(alpha), radius * np.sin(alpha)
    pay_x, pay_y = trace.column("payload_x"), trace.column("payload_y")
    count = 0
    for ob in obstacles:
        if ob.height_class == "boom-level":
            x, y = tip_x, tip_y
        else:
            x, y = pay_x, pay_y
        inside = (x - ob.center[0]) ** 2 + (y - ob.center[1]) ** 2 <= ob.radius ** 2
        count += int(inside[0]) + int(np.count_nonzero(inside[1:] & ~inside[:-1]))
    return count


def _first_settled_time(trace: dynamics.SimTrace, goal: float,
                        tolerance: float, after: float) -> float | None:
    alpha = trace.column("alpha")
    rate = trace.column("alpha_dot")
    hits = np.flatnonzero((trace.times >= after)
                          & (np.abs(alpha - goal) <= tolerance)
                          & (np.abs(rate) <= SETTLED_RATE))
    if hits.size == 0:
        return None
    return float(trace.times[hits[0]])


def trial_metrics(scenario: Scenario, trace: dynamics.SimTrace,
                  command_log=()) -> TrialMetrics:
    """Score one closed trial.

    Completion time runs from the first nonzero command (trial start when
    the log is empty, as in scripted runs) to the first later sample with
    the slew angle inside goal_tolerance and the rate below SETTLED_RATE.
    Tip-over and validity loss void completion.
    """
    ms = math.degrees(trace.peak_swing())
    cr = collision_events(trace, scenario.obstacles, scenario.crane.radius)
    tipped = trace.status == dynamics.STATUS_TIPPED
    invalid = trace.status == dynamics.STATUS_INVALID
    first_cmd = next((t for t, v in command_log if v != 0.0), 0.0)
    settled = None if (tipped or invalid) else _first_settled_time(
        trace, scenario.goal_angle, scenario.goal_tolerance, first_cmd)
    if settled is None:
        return TrialMetrics(ms, cr, None, tipped, False)
    return TrialMetrics(ms, cr, settled - first_cmd, tipped, True)


# -- automated trials ----------------------------------------------------------


def _trial_spec(cfg: CraneConfig, deflection_ratio: float) -> shaper.ShaperSpec:
    wn = dynamics.natural_frequency(cfg.rope_length, cfg.gravity)
    return shaper.design_mumzv(wn, deflection_ratio)


def _swing_period(cfg: CraneConfig) -> float:
    return 2.0 * math.pi / dynamics.natural_frequency(cfg.rope_length, cfg.gravity)


def run_automated_trial(scenario: Scenario, rate_command, shaped: bool, *,
                        dt: float = DEFAULT_TIMESTEP,
                        deflection_ratio: float = TRIAL_DEFLECTION_RATIO
                        ) -> TrialRecord:
    """Run one scripted trial and score it.

    ``rate_command`` is a slew-rate magnitude in rad/s (constant-rate slew
    toward the goal with an automatic stop at the crossing), a planned
    VelocityReference followed open loop, or a recorded command log of
    (time, joystick) pairs replayed through the interactive pipeline.
    All failure modes end up in the metrics; nothing raises mid-trial.
    """
    scenario.validate()
    cfg = scenario.crane
    spec = _trial_spec(cfg, deflection_ratio) if shaped else None
    settle = TRIAL_SETTLE_PERIODS * _swing_period(cfg)
    direction = 1.0 if scenario.goal_angle >= scenario.start_angle else -1.0
    log: tuple[tuple[float, float], ...] = ()

    if isinstance(rate_command, shaper.VelocityReference):
        vcmd = direction * rate_command.samples
        trace = dynamics.run_rate_profile(
            cfg, vcmd, initial=dynamics.make_initial_state(cfg, scenario.start_angle),
            dt=dt, goal=scenario.goal_angle, direction=direction,
            settle_time=settle,
            max_time=min(scenario.time_limit, vcmd.size * dt + settle + dt))
    elif isinstance(rate_command, (int, float, np.floating, np.integer)):
        rate = float(rate_command)
        if rate <= 0.0:
            raise ValueError(f"rate_command must be > 0, got {rate}")
        from .stability import constant_rate_slew  # deferred, heavy module
        arc = abs(scenario.goal_angle - scenario.start_angle)
        ramp = rate / cfg.accel_gain if spec is None else (
            rate / (2.0 * deflection_ratio * cfg.accel_gain) + spec.duration)
        # the stop is triggered early by the stopping distance so the slew
        # parks inside the goal window instead of overshooting it
        if spec is None:
            lead = 0.5 * rate * rate / cfg.accel_gain
        else:
            n_pulse = shaper.shaped_pulse_steps(rate, cfg.accel_gain, spec, dt)
            delay = (float(np.dot(spec.amplitudes, spec.times))
                     / float(np.sum(spec.amplitudes)))
            lead = rate * (0.5 * n_pulse * dt + delay)
        horizon = min(scenario.time_limit,
                      arc / rate + ramp + settle + 5.0 * _swing_period(cfg))
        trace, _ = constant_rate_slew(
            cfg, rate, spec, dt=dt, start_angle=scenario.start_angle,
            goal=scenario.goal_angle - direction * lead,
            settle_time=settle, horizon=horizon)
    else:
        session = InteractiveSession(scenario, shaped, dt=dt,
                                     deflection_ratio=deflection_ratio)
        session.feed_log(rate_command)
        trace = session.trace()
        log = session.command_log()

    return TrialRecord(scenario.scenario_id, shaped, log, trace,
                       trial_metrics(scenario, trace, log))


# -- interactive sessions -------------------------------------------------------


class SessionClosed(RuntimeError):
    """Raised when stepping a session that has already tipped over."""


class InteractiveSession:
    """One live joystick-driven trial.

    The stick value is a normalized acceleration reference in [-1, 1];
    full deflection asks for the drive's torque-limit acceleration.  Each
    call advances the simulation to the caller's clock in fixed dt
    sub-steps (at most CATCHUP_LIMIT seconds per call; excess wall time is
    dropped with a warning), so state depends only on the sequence of
    (value, sub-step count) pairs and replays bit-identically.
    """

    def __init__(self, scenario: Scenario, shaped: bool, *,
                 dt: float = DEFAULT_TIMESTEP,
                 deflection_ratio: float = TRIAL_DEFLECTION_RATIO):
        scenario.validate()
        self.scenario = scenario
        self.shaped = shaped
        self._dt = dt
        cfg = scenario.crane
        spec = _trial_spec(cfg, deflection_ratio) if shaped else None
        self._pipeline = shaper.StreamingPipeline(
            spec, dt, cfg.accel_gain, cfg.speed_limit)
        self._state = dynamics.make_initial_state(cfg, alpha=scenario.start_angle)
        if self._state.tipped:
            raise ValueError("scenario starts outside the static envelope")
        self._rows: list[np.ndarray] = []
        self._events: list[tuple[float, float]] = []
        self._steps = 0
        self._clock: float | None = None
        self._carry = 0.0  # pending fraction of a sub-step
        self._saw_command = False
        self._last_rate = 0.0

    # -- introspection ----------------------------------------------------

    @property
    def state(self) -> dynamics.SimState:
        return self._state

    @property
    def tipped(self) -> bool:
        return self._state.tipped

    @property
    def sim_time(self) -> float:
        return self._steps * self._dt

    @property
    def out_of_time(self) -> bool:
        return self.sim_time >= self.scenario.time_limit

    @property
    def commanded_rate(self) -> float:
        """Latest pipeline output, rad/s (the staircase the drive tracks)."""
        return self._last_rate

    def goal_settled(self) -> bool:
        """True once the slew sits inside the goal window at low rate."""
        if not self._saw_command:
            return False
        near = abs(self._state.slew.alpha - self.scenario.goal_angle)
        return (near <= self.scenario.goal_tolerance
                and abs(self._state.slew.alpha_dot) <= SETTLED_RATE)

    # -- stepping ----------------------------------------------------------

    def step(self, joystick: float, now: float) -> dynamics.SimState:
        """Apply a stick value and advance the simulation to ``now``."""
        if self.tipped:
            raise SessionClosed("session tipped over; start a new trial")
        if not -1.0 <= joystick <= 1.0:
            raise ValueError(f"joystick value must be in [-1, 1], got {joystick}")
        if self._clock is None:
            self._clock = now
        lag = now - self._clock
        if lag < 0.0:
            raise ValueError("clock went backwards")
        if lag > CATCHUP_LIMIT:
            warnings.warn(
                f"dropping {lag - CATCHUP_LIMIT:.3f}s of catch-up time",
                RuntimeWarning, stacklevel=2)
            lag = CATCHUP_LIMIT
        self._clock = now
        # carry in sub-step units; the epsilon stops float rounding from
        # sliding a tick boundary by one sub-step
        self._carry += lag / self._dt
        n = int(self._carry + 1e-9)
        self._carry -= n
        self._apply(joystick, n)
        return self._state

    def feed_log(self, events) -> None:
        """Replay recorded (time, value) command events through the session.

        Each value holds until the next event's timestamp; the final entry
        is the end marker (command_log() emits one), so the replay covers
        exactly the span the log covers.  Advances in the same sub-steps
        as the live run that produced the log and stops early on tip-over
        or the scenario time limit.
        """
        events = sorted((float(t), float(v)) for t, v in events)
        limit_steps = int(math.ceil(self.scenario.time_limit / self._dt))
        for i, (t, value) in enumerate(events[:-1]):
            start = max(self._steps, int(round(t / self._dt)))
            end = int(round(events[i + 1][0] / self._dt))
            if self.tipped or start >= limit_steps:
                break
            self._apply(value, min(end, limit_steps) - start)

    def _apply(self, value: float, n_steps: int) -> None:
        # change-point log; a value superseded before any sub-step ran left
        # no mark on the state, so overwrite it instead of keeping both
        if self._events and self._events[-1][0] == self.sim_time:
            if value != self._events[-1][1]:
                self._events[-1] = (self.sim_time, value)
                if len(self._events) > 1 and self._events[-2][1] == value:
                    self._events.pop()
        elif value != (self._events[-1][1] if self._events else None):
            self._events.append((self.sim_time, value))
        if value != 0.0:
            self._saw_command = True
        cfg = self.scenario.crane
        for _ in range(n_steps):
            if self.tipped or self.out_of_time:
                break
            rate = self._pipeline.push(value)
            self._last_rate = rate
            self._state = dynamics.step(self._state, rate, self._dt, cfg)
            self._steps += 1
            s = self._state
            self._rows.append(np.array((
                s.slew.alpha, s.slew.alpha_dot, s.slew.alpha_acc,
                s.swing.theta1, s.swing.theta2,
                s.swing.theta1_dot, s.swing.theta2_dot,
                s.tip_margin, s.payload_xy[0], s.payload_xy[1])))

    # -- results -----------------------------------------------------------

    def command_log(self) -> tuple[tuple[float, float], ...]:
        """Change-point (time, value) pairs plus an end marker at now."""
        events = list(self._events)
        if events and events[-1][0] < self.sim_time:
            events.append((self.sim_time, events[-1][1]))
        return tuple(events)

    def trace(self) -> dynamics.SimTrace:
        if self.tipped:
            status = dynamics.STATUS_TIPPED
        elif self.goal_settled():
            status = dynamics.STATUS_COMPLETED
        else:
            status = dynamics.STATUS_RAN_OUT
        data = (np.vstack(self._rows) if self._rows
                else np.empty((0, dynamics.TRACE_WIDTH)))
        times = self._dt * np.arange(1, len(self._rows) + 1)
        return dynamics.SimTrace(times, data, self._dt, status, -1)

    def record(self) -> TrialRecord:
        trace = self.trace()
        log = self.command_log()
        return TrialRecord(self.scenario.scenario_id, self.shaped, log, trace,
                           trial_metrics(self.scenario, trace, log))


def step_interactive(session: InteractiveSession, joystick: float,
                     now: float) -> dynamics.SimState:
    """Module-level alias for InteractiveSession.step."""
    return session.step(joystick, now)


# -- exports --------------------------------------------------------------------


def write_trial_csvs(record: TrialRecord, commands_path, states_path,
                     metrics_path) -> None:
    """Paired command/state CSVs plus a one-row metrics summary."""
    with open(commands_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("time_s,joystick\n")
        for t, v in record.command_log:
            fh.write(f"{t:.9g},{v:.9g}\n")
    record.trace.to_csv(states_path)
    m = record.metrics
    with open(metrics_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("scenario_id,shaped,max_swing_deg,collisions,"
                 "completion_time_s,tipped,completed\n")
        ct = "" if m.completion_time is None else f"{m.completion_time:.9g}"
        fh.write(f"{record.scenario_id},{int(record.shaped)},"
                 f"{m.max_swing_deg:.9g},{m.collision_count},{ct},"
                 f"{int(m.tipped)},{int(m.completed)}\n")
