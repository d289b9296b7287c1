"""Rotating-frame payload swing dynamics and quasi-static tip-over margin.

Model summary
-------------
The payload hangs from the boom tip on a rope of length l.  In the frame
slewing with the boom, the two rope angles th1 (tangential, positive along
the direction of increasing slew angle) and th2 (radially outward) obey

    l*th1'' + 2*l*ad*th2' + (g - l*ad^2)*th1 + l*add*th2 + R*add = 0
    l*th2'' - 2*l*ad*th1' + (g - l*ad^2)*th2 - l*add*th1 - R*ad^2 = 0

with ad, add the slew rate and acceleration and R the boom radius.  The
Coriolis terms couple the planes; the right-hand forcing terms are the
tangential drive kick and the centrifugal pull.  Small-angle natural
frequency: wn = sqrt(g/l).

Tip-over is evaluated quasi-statically: the crane tips when, about any
edge of its square support footprint, the overturning moment of boom and
payload (including the rope swing offset) exceeds the stabilising moment
of the lower structure.  ``tipped`` latches once the margin reaches zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from ._kernels import (
    STATUS_COMPLETED,
    STATUS_INVALID,
    STATUS_RAN_OUT,
    STATUS_TIPPED,
)
from .config import CraneConfig


def natural_frequency(rope_length: float, gravity: float = 9.81) -> float:
    """Pendulum natural frequency sqrt(g/l) in rad/s.

    Values quoted in the source material for these rigs (0.908 for an
    11.89 m rope, 4.47 for the scale model) are rad/s even where labelled
    Hz; this function is rad/s throughout.
    """
    if rope_length <= 0.0:
        raise ValueError(f"rope_length must be > 0, got {rope_length}")
    if gravity <= 0.0:
        raise ValueError(f"gravity must be > 0, got {gravity}")
    return math.sqrt(gravity / rope_length)


@dataclass(frozen=True)
class SwingState:
    theta1: float = 0.0
    theta2: float = 0.0
    theta1_dot: float = 0.0
    theta2_dot: float = 0.0

    def magnitude(self) -> float:
        return math.hypot(self.theta1, self.theta2)


@dataclass(frozen=True)
class SlewState:
    alpha: float = 0.0
    alpha_dot: float = 0.0
    alpha_acc: float = 0.0


@dataclass(frozen=True)
class SimState:
    time: float
    slew: SlewState
    swing: SwingState
    tip_margin: float
    tipped: bool
    payload_xy: tuple[float, float]


def swing_derivatives(swing: SwingState, slew: SlewState, cfg: CraneConfig
                      ) -> tuple[float, float, float, float]:
    """(th1', th2', th1'', th2'') for the current swing and slew state."""
    a1, a2 = _kernels.swing_accels(
        swing.theta1, swing.theta2, swing.theta1_dot, swing.theta2_dot,
        slew.alpha_dot, slew.alpha_acc, cfg.rope_length, cfg.gravity, cfg.radius)
    return swing.theta1_dot, swing.theta2_dot, a1, a2


def tip_over_margin(alpha: float, swing: SwingState, cfg: CraneConfig) -> float:
    """Minimum stabilising-minus-overturning moment over the four footprint
    edges, N*m.  Non-positive means the crane tips."""
    return _kernels.tip_margin(
        alpha, swing.theta1, swing.theta2,
        cfg.payload_mass, cfg.structure_mass, cfg.boom_mass,
        cfg.boom_com_fraction, cfg.radius,
        cfg.footprint_half_width, cfg.structure_com_offset,
        cfg.rope_length, cfg.gravity)


def payload_position(alpha: float, swing: SwingState, cfg: CraneConfig
                     ) -> tuple[float, float]:
    return _kernels.payload_xy(alpha, swing.theta1, swing.theta2,
                               cfg.radius, cfg.rope_length)


def make_initial_state(cfg: CraneConfig, alpha: float = 0.0,
                       swing: SwingState | None = None) -> SimState:
    swing = swing or SwingState()
    margin = tip_over_margin(alpha, swing, cfg)
    return SimState(
        time=0.0,
        slew=SlewState(alpha=alpha),
        swing=swing,
        tip_margin=margin,
        tipped=margin <= 0.0,
        payload_xy=payload_position(alpha, swing, cfg),
    )


def step(state: SimState, commanded_rate: float, dt: float, cfg: CraneConfig
         ) -> SimState:
    """Advance one fixed step of dt.

    The slew drive tracks commanded_rate with acceleration clamped to
    +-cfg.accel_gain; the swing is advanced by one RK4 step with the slew
    rate and acceleration held constant over the step.  Stepping a tipped
    state is an error: the model is not valid past tip-over.
    """
    if state.tipped:
        raise ValueError("cannot step a tipped state")
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    alpha, ad, add, th1, th2, th1d, th2d = _kernels.step_once(
        state.slew.alpha, state.slew.alpha_dot,
        state.swing.theta1, state.swing.theta2,
        state.swing.theta1_dot, state.swing.theta2_dot,
        commanded_rate, dt, cfg.accel_gain,
        cfg.rope_length, cfg.gravity, cfg.radius)
    swing = SwingState(th1, th2, th1d, th2d)
    margin = tip_over_margin(alpha, swing, cfg)
    valid = abs(th1) < 0.5 * math.pi and abs(th2) < 0.5 * math.pi
    return SimState(
        time=state.time + dt,
        slew=SlewState(alpha, ad, add),
        swing=swing,
        tip_margin=margin,
        tipped=margin <= 0.0 or not valid,
        payload_xy=payload_position(alpha, swing, cfg),
    )


# -- batch runs ------------------------------------------------------------

#: Column order of SimTrace.to_csv and trial state CSVs.
CSV_COLUMNS = ("time", "alpha", "alpha_dot", "theta1", "theta2",
               "tip_margin", "payload_x", "payload_y")

#: Width of a SimTrace data row (see _kernels.TRACE_COLUMNS).
TRACE_WIDTH = _kernels.N_TRACE


@dataclass(frozen=True)
class SimTrace:
    """Fixed-rate record of a simulation run.

    ``data`` rows follow _kernels.TRACE_COLUMNS; row k is the state at
    ``times[k]``.  ``crossing_index`` is the first row at/past the goal
    angle (-1 if never reached).  ``status`` is one of the _kernels
    STATUS_* codes.
    """

    times: np.ndarray
    data: np.ndarray
    dt: float
    status: int
    crossing_index: int

    def __len__(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, _kernels.TRACE_COLUMNS.index(name)]

    @property
    def tipped(self) -> bool:
        return self.status in (_kernels.STATUS_TIPPED, _kernels.STATUS_INVALID)

    @property
    def completed(self) -> bool:
        return self.status == _kernels.STATUS_COMPLETED

    @property
    def crossing_time(self) -> float | None:
        if self.crossing_index < 0:
            return None
        return float(self.times[self.crossing_index])

    def peak_swing(self) -> float:
        """Largest total swing angle over the run, rad."""
        if len(self) == 0:
            return 0.0
        th1 = self.column("theta1")
        th2 = self.column("theta2")
        return float(np.max(np.hypot(th1, th2)))

    def final_state(self, cfg: CraneConfig) -> SimState:
        k = len(self) - 1
        row = self.data[k]
        swing = SwingState(row[3], row[4], row[5], row[6])
        return SimState(
            time=float(self.times[k]),
            slew=SlewState(row[0], row[1], row[2]),
            swing=swing,
            tip_margin=float(row[7]),
            tipped=self.tipped,
            payload_xy=(float(row[8]), float(row[9])),
        )

    def to_csv(self, path, header_lines: tuple[str, ...] = ()) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for k in range(len(self)):
                row = self.data[k]
                vals = (self.times[k], row[0], row[1], row[3], row[4],
                        row[7], row[8], row[9])
                fh.write(",".join(f"{v:.9g}" for v in vals) + "\n")


def run_rate_profile(cfg: CraneConfig, vcmd: np.ndarray, *,
                     initial: SimState | None = None,
                     dt: float,
                     hold_last: bool = False,
                     zero_after_cross: bool = False,
                     goal: float = math.inf,
                     direction: float = 1.0,
                     settle_time: float = 0.0,
                     max_time: float | None = None) -> SimTrace:
    """Run the fixed-step simulator through a commanded-rate array.

    See _kernels.run_profile for the command/termination semantics.  The
    returned trace does not include the initial state row.  max_time
    defaults to the command duration plus the settle window.
    """
    if max_time is None:
        max_time = vcmd.size * dt + settle_time + dt
    initial = initial or make_initial_state(cfg)
    if initial.tipped:
        return SimTrace(np.empty(0), np.empty((0, _kernels.N_TRACE)), dt,
                        _kernels.STATUS_TIPPED, -1)
    state0 = np.array([
        initial.slew.alpha, initial.slew.alpha_dot,
        initial.swing.theta1, initial.swing.theta2,
        initial.swing.theta1_dot, initial.swing.theta2_dot,
    ])
    max_steps = int(math.ceil(max_time / dt))
    settle_steps = int(round(settle_time / dt))
    out = np.empty((max_steps, _kernels.N_TRACE))
    n, cross_idx, status = _kernels.run_profile(
        state0, np.ascontiguousarray(vcmd, dtype=np.float64),
        hold_last, zero_after_cross, goal, direction,
        settle_steps, max_steps, dt, cfg.accel_gain,
        cfg.rope_length, cfg.gravity, cfg.radius,
        cfg.payload_mass, cfg.structure_mass, cfg.boom_mass,
        cfg.boom_com_fraction, cfg.footprint_half_width,
        cfg.structure_com_offset, out)
    times = initial.time + dt * np.arange(1, n + 1)
    return SimTrace(times, out[:n].copy(), dt, status, cross_idx)
