"""Hot numeric kernels for the 240 Hz simulation loop.

Every function here is plain scalar/array math so it can run two ways:
compiled with numba's ``@njit`` (default when numba is importable) or as
ordinary Python/NumPy.  Set the environment variable ``SLEWSAFE_NO_NUMBA=1``
before import to force the fallback path; ``benchmarks/bench_kernels.py``
times one against the other.

State vector layout used throughout: (alpha, alpha_dot, th1, th2, th1d, th2d)
with th1 the tangential and th2 the radially-outward rope swing angle.
Trace row layout: see TRACE_COLUMNS.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is an install-time dependency
    HAS_NUMBA = False

def _flag_disabled(value):
    return value.strip().lower() not in ("", "0", "false", "no")


NUMBA_ENABLED = HAS_NUMBA and not _flag_disabled(os.environ.get("SLEWSAFE_NO_NUMBA", ""))


def maybe_jit(fn):
    if NUMBA_ENABLED:
        return njit(cache=True)(fn)
    return fn


TRACE_COLUMNS = (
    "alpha", "alpha_dot", "alpha_acc",
    "theta1", "theta2", "theta1_dot", "theta2_dot",
    "tip_margin", "payload_x", "payload_y",
)
N_TRACE = len(TRACE_COLUMNS)

# run_profile status codes
STATUS_RAN_OUT = 0
STATUS_COMPLETED = 1
STATUS_TIPPED = 2
STATUS_INVALID = 3


@maybe_jit
def swing_accels(th1, th2, th1d, th2d, ad, add, l, g, R):
    # Rotating-frame rope swing; R*add / R*ad^2 are the tangential and
    # centrifugal forcing of the suspension point (R = boom radius).
    w2 = (g - l * ad * ad) / l
    a1 = -2.0 * ad * th2d - w2 * th1 - add * th2 - R * add / l
    a2 = 2.0 * ad * th1d - w2 * th2 + add * th1 + R * ad * ad / l
    return a1, a2


@maybe_jit
def rk4_swing(th1, th2, th1d, th2d, ad, add, l, g, R, dt):
    # Classical RK4 with the slew state (ad, add) held over the step.
    k1a, k1b = swing_accels(th1, th2, th1d, th2d, ad, add, l, g, R)
    h = 0.5 * dt
    k2a, k2b = swing_accels(th1 + h * th1d, th2 + h * th2d,
                            th1d + h * k1a, th2d + h * k1b, ad, add, l, g, R)
    k3a, k3b = swing_accels(th1 + h * (th1d + h * k1a), th2 + h * (th2d + h * k1b),
                            th1d + h * k2a, th2d + h * k2b, ad, add, l, g, R)
    k4a, k4b = swing_accels(th1 + dt * (th1d + h * k2a), th2 + dt * (th2d + h * k2b),
                            th1d + dt * k3a, th2d + dt * k3b, ad, add, l, g, R)
    s = dt / 6.0
    n1 = th1 + s * (th1d + 2.0 * (th1d + h * k1a) + 2.0 * (th1d + h * k2a)
                    + (th1d + dt * k3a))
    n2 = th2 + s * (th2d + 2.0 * (th2d + h * k1b) + 2.0 * (th2d + h * k2b)
                    + (th2d + dt * k3b))
    n1d = th1d + s * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    n2d = th2d + s * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    return n1, n2, n1d, n2d


@maybe_jit
def tip_margin(alpha, th1, th2, m, Ms, Mb, cfrac, R, w, ds, l, g):
    """Stabilising minus overturning moment, minimum over the four
    footprint edges (square of half width w centred on the slew axis).

    Per edge with outward normal n: boom direction projects as p, the
    slewing (tangential) direction as q.  Signed arms about the edge:
    structure c.o.m. at w + ds*p (counterweight sits opposite the boom),
    boom c.o.m. at cfrac*R*p - w, payload at R*p - w plus the rope swing
    offset l*sin(th2)*p + l*sin(th1)*q.
    """
    ca = math.cos(alpha)
    sa = math.sin(alpha)
    s2 = l * math.sin(th2)
    s1 = l * math.sin(th1)
    worst = 1e300
    for edge in range(4):
        if edge == 0:
            p, q = ca, -sa
        elif edge == 1:
            p, q = sa, ca
        elif edge == 2:
            p, q = -ca, sa
        else:
            p, q = -sa, -ca
        stabilising = Ms * (w + ds * p)
        overturning = (Mb * (cfrac * R * p - w)
                       + m * (R * p - w)
                       + m * (s2 * p + s1 * q))
        margin = g * (stabilising - overturning)
        if margin < worst:
            worst = margin
    return worst


@maybe_jit
def step_once(alpha, ad, th1, th2, th1d, th2d, cmd, dt, eta, l, g, R):
    """One fixed step: rate-tracking slew drive, then an RK4 swing step.

    The drive realises the commanded rate as fast as the torque limit
    allows: add = clamp((cmd - ad)/dt, +-eta).
    """
    add = (cmd - ad) / dt
    if add > eta:
        add = eta
    elif add < -eta:
        add = -eta
    n1, n2, n1d, n2d = rk4_swing(th1, th2, th1d, th2d, ad, add, l, g, R, dt)
    alpha = alpha + ad * dt + 0.5 * add * dt * dt
    ad = ad + add * dt
    return alpha, ad, add, n1, n2, n1d, n2d


@maybe_jit
def payload_xy(alpha, th1, th2, R, l):
    # Plan position: boom tip plus small-angle rope deflection
    # (l*th1 tangential, l*th2 radial).
    ca = math.cos(alpha)
    sa = math.sin(alpha)
    radial = R + l * th2
    return radial * ca - l * th1 * sa, radial * sa + l * th1 * ca


@maybe_jit
def run_profile(state0, vcmd, hold_last, zero_after_cross, goal, direction,
                settle_steps, max_steps, dt, eta, l, g, R,
                m, Ms, Mb, cfrac, w, ds, out):
    """Drive the simulator through a commanded-rate profile.

    vcmd holds one commanded slew rate per step; past its end the command
    is the last sample (hold_last) or zero.  When zero_after_cross is set
    the command drops to zero once alpha crosses goal in the commanded
    direction.  The run ends settle_steps after the crossing, at tip-over,
    at swing-model validity loss (|theta| >= pi/2), or at max_steps.

    Returns (rows_written, crossing_index or -1, status).  out must be a
    (max_steps, N_TRACE) array; row k is the state after step k.
    """
    alpha = state0[0]
    ad = state0[1]
    th1 = state0[2]
    th2 = state0[3]
    th1d = state0[4]
    th2d = state0[5]
    n_cmd = vcmd.shape[0]
    crossed = False
    cross_idx = -1
    status = STATUS_RAN_OUT
    k = 0
    while k < max_steps:
        if crossed and zero_after_cross:
            cmd = 0.0
        elif k < n_cmd:
            cmd = vcmd[k]
        elif hold_last and n_cmd > 0:
            cmd = vcmd[n_cmd - 1]
        else:
            cmd = 0.0
        alpha, ad, add, th1, th2, th1d, th2d = step_once(
            alpha, ad, th1, th2, th1d, th2d, cmd, dt, eta, l, g, R)
        margin = tip_margin(alpha, th1, th2, m, Ms, Mb, cfrac, R, w, ds, l, g)
        px, py = payload_xy(alpha, th1, th2, R, l)
        out[k, 0] = alpha
        out[k, 1] = ad
        out[k, 2] = add
        out[k, 3] = th1
        out[k, 4] = th2
        out[k, 5] = th1d
        out[k, 6] = th2d
        out[k, 7] = margin
        out[k, 8] = px
        out[k, 9] = py
        if not crossed and direction * (alpha - goal) >= 0.0:
            crossed = True
            cross_idx = k
        k += 1
        if margin <= 0.0:
            status = STATUS_TIPPED
            break
        if abs(th1) >= 0.5 * math.pi or abs(th2) >= 0.5 * math.pi:
            status = STATUS_INVALID
            break
        if crossed and k - cross_idx > settle_steps:
            status = STATUS_COMPLETED
            break
    return k, cross_idx, status


def warm_up() -> None:
    """Trigger JIT compilation so timed code paths run precompiled."""
    state = np.zeros(6)
    cmd = np.zeros(4)
    out = np.empty((8, N_TRACE))
    run_profile(state, cmd, True, False, 10.0, 1.0, 2, 8,
                1.0 / 240.0, 1.5, 0.57, 9.81, 0.7,
                0.5, 7.24, 2.93, 0.5, 0.1, 0.05, out)
