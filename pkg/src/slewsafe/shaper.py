"""Swing-cancelling command shaping for slew maneuvers.

The shaper used here is a three-impulse sequence with unity-magnitude
leading impulses,

    amplitudes (1, -1, 2*D_L)   at times (0, t2, t3),

designed so the impulse response of an undamped pendulum at natural
frequency wn sums to zero while the transient rope deflection is held to
the fraction D_L of the deflection a full step command would produce.
Convolving any acceleration reference with this sequence yields a command
that starts and ends motion without residual payload swing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Quantizing impulse times onto a sample grid perturbs the residual at wn.
# Taps whose quantized residual exceeds this bound are a construction error:
# the sample rate is too coarse to realise the shaper.
MAX_QUANTIZATION_RESIDUAL = 1e-3


class InfeasibleManeuver(ValueError):
    """Raised when a slew plan cannot meet its target within constraints."""


@dataclass(frozen=True)
class AccelCommand:
    """Sampled normalized acceleration reference.

    Raw references (joystick or planner output) are bounded to [-1, 1].
    Shaped commands (``shaped=True``) are superpositions of delayed copies
    and are exempt from the bound.
    """

    samples: np.ndarray
    sample_period: float
    shaped: bool = False

    def __post_init__(self):
        object.__setattr__(self, "samples",
                           np.ascontiguousarray(self.samples, dtype=np.float64))
        if self.sample_period <= 0.0:
            raise ValueError(f"sample_period must be > 0, got {self.sample_period}")
        if self.samples.size == 0:
            raise ValueError("AccelCommand requires at least one sample")
        if not self.shaped and np.max(np.abs(self.samples)) > 1.0 + 1e-12:
            raise ValueError("unshaped acceleration samples must lie in [-1, 1]")

    @property
    def duration(self) -> float:
        return self.samples.size * self.sample_period


@dataclass(frozen=True)
class VelocityReference:
    """Commanded slew-rate profile produced from an acceleration command."""

    samples: np.ndarray
    sample_period: float
    speed_limit: float
    gain: float  # rad/s^2 acceleration scale (max_torque / inertia)

    def __post_init__(self):
        object.__setattr__(self, "samples",
                           np.ascontiguousarray(self.samples, dtype=np.float64))

    @property
    def duration(self) -> float:
        return self.samples.size * self.sample_period

    def angle_covered(self) -> float:
        """Trapezoidal integral of the reference, rad."""
        if self.samples.size < 2:
            return 0.0
        return float(np.trapezoid(self.samples, dx=self.sample_period))


@dataclass(frozen=True)
class ShaperSpec:
    """Impulse sequence with design frequency and deflection ratio."""

    times: tuple[float, ...]
    amplitudes: tuple[float, ...]
    natural_frequency: float
    deflection_ratio: float | None = None

    def __post_init__(self):
        if len(self.times) != len(self.amplitudes) or not self.times:
            raise ValueError("times and amplitudes must be equal-length, non-empty")
        if self.times[0] != 0.0:
            raise ValueError(f"first impulse must be at t=0, got {self.times[0]}")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError(f"impulse times must be strictly increasing: {self.times}")
        if self.natural_frequency <= 0.0:
            raise ValueError(
                f"natural_frequency must be > 0, got {self.natural_frequency}")

    @property
    def duration(self) -> float:
        return self.times[-1]

    def to_record(self) -> str:
        """Plain-text key=value record, 9 significant digits."""
        lines = [f"natural_frequency = {self.natural_frequency:.9g}"]
        if self.deflection_ratio is not None:
            lines.append(f"deflection_ratio = {self.deflection_ratio:.9g}")
        for i, (t, a) in enumerate(zip(self.times, self.amplitudes), start=1):
            lines.append(f"t{i} = {t:.9g}")
            lines.append(f"a{i} = {a:.9g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_record(cls, text: str) -> "ShaperSpec":
        values: dict[str, float] = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            values[key.strip()] = float(val)
        times, amps = [], []
        i = 1
        while f"t{i}" in values:
            times.append(values[f"t{i}"])
            amps.append(values[f"a{i}"])
            i += 1
        return cls(times=tuple(times), amplitudes=tuple(amps),
                   natural_frequency=values["natural_frequency"],
                   deflection_ratio=values.get("deflection_ratio"))


def design_mumzv(natural_frequency: float, deflection_ratio: float) -> ShaperSpec:
    """Design the three-impulse unity-magnitude shaper.

    Parameters
    ----------
    natural_frequency : float
        Pendulum frequency wn = sqrt(g/l), rad/s.
    deflection_ratio : float
        D_L in (0, 0.5]: transient rope deflection as a fraction of the
        deflection a sustained full-step acceleration would produce.

    Returns
    -------
    ShaperSpec with amplitudes (1, -1, 2*D_L) at times

        t1 = 0
        t2 = arccos(1 - 2*D_L^2) / wn
        t3 = arccos(-D_L) / wn

    which zero both components of sum A_i * exp(j*wn*t_i):  cos(wn*t3)
    = -D_L kills the real part once cos(wn*t2) = 1 - 2*D_L^2, and the
    imaginary part follows from sin(wn*t2) = 2*D_L*sqrt(1 - D_L^2).
    At D_L = 0.5 this reduces to t2 = T/6, t3 = T/3 with a unit final
    impulse (T the swing period).
    """
    if natural_frequency <= 0.0:
        raise ValueError(
            f"natural_frequency must be > 0, got {natural_frequency}")
    if not 0.0 < deflection_ratio <= 0.5:
        raise ValueError(
            f"deflection_ratio must be in (0, 0.5], got {deflection_ratio}")
    wn = natural_frequency
    dl = deflection_ratio
    t2 = math.acos(1.0 - 2.0 * dl * dl) / wn
    t3 = math.acos(-dl) / wn
    return ShaperSpec(times=(0.0, t2, t3), amplitudes=(1.0, -1.0, 2.0 * dl),
                      natural_frequency=wn, deflection_ratio=dl)


def residual_vibration(spec: ShaperSpec, omega: float) -> float:
    """|sum A_i * exp(j*omega*t_i)|, the undamped residual amplitude ratio."""
    if omega <= 0.0:
        raise ValueError(f"omega must be > 0, got {omega}")
    t = np.asarray(spec.times)
    a = np.asarray(spec.amplitudes)
    return float(abs(np.sum(a * np.exp(1j * omega * t))))


# -- sample-grid realisation ------------------------------------------------

def impulse_taps(spec: ShaperSpec, sample_period: float, placement: str = "split"
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Realise the impulse sequence on a sample grid as (offsets, weights).

    placement="nearest" rounds each impulse to the closest sample, which
    perturbs the cancellation frequency; placement="split" (default)
    distributes each impulse over the two bracketing samples with linear
    weights, keeping the quantized residual at wn below
    MAX_QUANTIZATION_RESIDUAL for any practical rate.  Either way the
    realised residual is checked and a too-coarse grid is an error.
    """
    if sample_period <= 0.0:
        raise ValueError(f"sample_period must be > 0, got {sample_period}")
    if spec.duration < 2.0 * sample_period:
        raise ValueError(
            f"shaper span {spec.duration:.6g} s is unresolvable on a "
            f"{sample_period:.6g} s grid")
    offsets: list[int] = []
    weights: list[float] = []
    if placement == "nearest":
        for t, a in zip(spec.times, spec.amplitudes):
            offsets.append(int(round(t / sample_period)))
            weights.append(a)
    elif placement == "split":
        for t, a in zip(spec.times, spec.amplitudes):
            k = int(math.floor(t / sample_period))
            f = t / sample_period - k
            offsets.append(k)
            weights.append(a * (1.0 - f))
            if f > 0.0:
                offsets.append(k + 1)
                weights.append(a * f)
    else:
        raise ValueError(f"placement must be 'nearest' or 'split', got {placement!r}")
    off = np.asarray(offsets, dtype=np.int64)
    wts = np.asarray(weights, dtype=np.float64)
    resid = abs(np.sum(wts * np.exp(1j * spec.natural_frequency * off * sample_period)))
    if resid >= MAX_QUANTIZATION_RESIDUAL:
        raise ValueError(
            f"impulse quantization at {sample_period:.6g} s degrades the "
            f"residual to {resid:.3g} (>= {MAX_QUANTIZATION_RESIDUAL}); "
            f"use a finer sample rate or split placement")
    return off, wts


def convolve(reference: AccelCommand, spec: ShaperSpec, placement: str = "split"
             ) -> AccelCommand:
    """Convolve an acceleration reference with the impulse sequence.

    Output sample u[k] = sum_i w_i * r[k - k_i] over the grid taps, length
    extended by the shaper span plus one trailing zero so the motion it
    started can finish (the zero node lets a trapezoidal integral of the
    output capture the full area).
    """
    off, wts = impulse_taps(spec, reference.sample_period, placement)
    n = reference.samples.size
    out = np.zeros(n + int(off.max()) + 1)
    for k, wt in zip(off, wts):
        out[k:k + n] += wt * reference.samples
    return AccelCommand(out, reference.sample_period, shaped=True)


def integrate_to_velocity(command: AccelCommand, gain: float, speed_limit: float,
                          initial_rate: float = 0.0) -> VelocityReference:
    """Accumulate gain * u into a rate reference with running saturation.

    Trapezoidal accumulation, clamped to [-speed_limit, speed_limit] after
    every step so the integrator cannot wind up past the allowed rate.
    v[0] is the initial rate; v[k] pairs with sample time k * sample_period.
    """
    if gain <= 0.0:
        raise ValueError(f"gain must be > 0, got {gain}")
    if not speed_limit > 0.0:
        raise ValueError(f"speed_limit must be > 0, got {speed_limit}")
    if abs(initial_rate) > speed_limit:
        raise ValueError(
            f"initial_rate {initial_rate} exceeds speed_limit {speed_limit}")
    u = command.samples
    dt = command.sample_period
    v = np.empty_like(u)
    rate = initial_rate
    for k in range(u.size):
        if k > 0:
            rate += gain * dt * 0.5 * (u[k - 1] + u[k])
            if rate > speed_limit:
                rate = speed_limit
            elif rate < -speed_limit:
                rate = -speed_limit
        v[k] = rate
    return VelocityReference(v, dt, speed_limit, gain)


class StreamingPipeline:
    """Online joystick-to-rate pipeline for interactive stepping.

    Each pushed sample is a normalized acceleration reference in [-1, 1];
    the return value is the commanded slew rate after shaping (optional)
    and saturated trapezoidal integration.  Sample-by-sample results are
    bit-identical to replaying the same inputs, which the trial replay
    machinery relies on.
    """

    def __init__(self, spec: ShaperSpec | None, sample_period: float,
                 gain: float, speed_limit: float, initial_rate: float = 0.0):
        if spec is not None:
            off, wts = impulse_taps(spec, sample_period, "split")
            self._offsets = [int(k) for k in off]
            self._weights = [float(w) for w in wts]
            self._ring = [0.0] * (max(self._offsets) + 1)
        else:
            self._offsets = None
            self._weights = None
            self._ring = None
        self._dt = sample_period
        self._gain = gain
        self._limit = speed_limit
        self._initial_rate = initial_rate
        self.reset()

    def reset(self) -> None:
        """Forget all pushed samples, as if freshly constructed."""
        if self._ring is not None:
            self._ring = [0.0] * len(self._ring)
        self._idx = 0
        self._u_prev = 0.0
        self._rate = self._initial_rate

    @property
    def rate(self) -> float:
        return self._rate

    def push(self, reference: float) -> float:
        if self._offsets is None:
            u = reference
        else:
            n = len(self._ring)
            self._ring[self._idx % n] = reference
            u = 0.0
            for k, w in zip(self._offsets, self._weights):
                if k <= self._idx:
                    u += w * self._ring[(self._idx - k) % n]
        if self._idx > 0:
            rate = self._rate + self._gain * self._dt * 0.5 * (self._u_prev + u)
            if rate > self._limit:
                rate = self._limit
            elif rate < -self._limit:
                rate = -self._limit
            self._rate = rate
        self._idx += 1
        self._u_prev = u
        return self._rate


# -- maneuver planning -------------------------------------------------------

def _pulse_reference(amplitude: float, n_pulse: int, n_coast: int,
                     sample_period: float) -> AccelCommand:
    # zero samples at both ends: the trapezoidal integral of a nodal
    # sequence that starts and ends at zero telescopes to the plain sample
    # sum, so pulse areas (and hence final rates) come out exact
    r = np.zeros(2 + 2 * n_pulse + n_coast)
    r[1:1 + n_pulse] = amplitude
    r[1 + n_pulse + n_coast:-1] = -amplitude
    return AccelCommand(r, sample_period)


def plan_slew_command(target_angle: float, speed_limit: float, gain: float,
                      spec: ShaperSpec | None = None, *,
                      sample_period: float,
                      quantize_to_period: bool = True) -> VelocityReference:
    """Plan a rest-to-rest bang-coast-bang slew covering target_angle.

    The acceleration pulses ramp the rate to speed_limit, coast, and ramp
    back down; the coast length is solved so the trapezoidal integral of
    the returned reference matches target_angle within one sample of slew
    angle.  With a shaper the reference is convolved before integration
    and, when quantize_to_period is set, the pulse width is stretched to a
    whole number of swing periods with the amplitude scaled down to hit
    speed_limit exactly.

    target_angle == 0 returns an empty reference.  Raises
    InfeasibleManeuver when the target is smaller than the minimum
    displacement of the shaped profile.
    """
    if target_angle < 0.0:
        raise ValueError(f"target_angle must be >= 0, got {target_angle}")
    if speed_limit <= 0.0:
        raise ValueError(f"speed_limit must be > 0, got {speed_limit}")
    if gain <= 0.0:
        raise ValueError(f"gain must be > 0, got {gain}")
    if sample_period <= 0.0:
        raise ValueError(f"sample_period must be > 0, got {sample_period}")
    dt = sample_period
    if target_angle == 0.0:
        return VelocityReference(np.empty(0), dt, speed_limit, gain)

    peak = speed_limit
    if spec is None:
        ramp = peak / gain
        if peak * ramp > target_angle:  # triangular profile
            peak = math.sqrt(target_angle * gain)
            ramp = peak / gain
        n_pulse = max(1, int(math.ceil(ramp / dt)))
        amplitude = peak / (gain * n_pulse * dt)
    else:
        if spec.deflection_ratio is None:
            raise ValueError("planning requires a spec with a deflection_ratio")
        ramp = peak / (2.0 * spec.deflection_ratio * gain)
        if quantize_to_period:
            period = 2.0 * math.pi / spec.natural_frequency
            ramp = math.ceil(ramp / period - 1e-9) * period
        n_pulse = max(1, int(math.ceil(ramp / dt - 1e-9)))
        amplitude = peak / (2.0 * spec.deflection_ratio * gain * n_pulse * dt)
    if amplitude > 1.0 + 1e-9:
        raise InfeasibleManeuver(
            f"required pulse amplitude {amplitude:.4g} exceeds the unit "
            f"reference bound")
    amplitude = min(amplitude, 1.0)

    def build(n_coast: int) -> VelocityReference:
        ref = _pulse_reference(amplitude, n_pulse, n_coast, dt)
        if spec is not None:
            ref = convolve(ref, spec)
        return integrate_to_velocity(ref, gain, speed_limit)

    base = build(0)
    base_angle = base.angle_covered()
    plateau = float(np.max(base.samples)) if base.samples.size else peak
    if plateau <= 0.0:
        raise InfeasibleManeuver("planned profile never moves forward")
    if base_angle > target_angle + peak * dt:
        raise InfeasibleManeuver(
            f"target_angle {target_angle:.6g} rad is smaller than the minimum "
            f"maneuver displacement {base_angle:.6g} rad")

    # the covered angle grows monotonically with the coast length, but the
    # per-sample gain varies while the ramp-down still overlaps the shaped
    # ramp-up tail, so bracket and bisect instead of trusting one estimate
    lo, hi = 0, 16
    angle_lo = base_angle
    while build(hi).angle_covered() < target_angle:
        lo = hi
        hi *= 2
        if hi > 1 << 26:  # pragma: no cover - arithmetic guard
            raise InfeasibleManeuver("coast search ran away")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if build(mid).angle_covered() < target_angle:
            lo = mid
        else:
            hi = mid
    best = None
    for cand in (lo, hi):
        vr = build(cand)
        err = abs(vr.angle_covered() - target_angle)
        if best is None or err < best[0]:
            best = (err, vr)
    err, vr = best
    if err > peak * dt:
        raise InfeasibleManeuver(
            f"could not meet target_angle within one sample: error {err:.3g} rad")
    return vr


def shaped_pulse_steps(rate: float, gain: float, spec: ShaperSpec,
                       sample_period: float) -> int:
    """Sample count of the acceleration pulse behind a shaped rate step.

    Two lower bounds on the pulse width: the drive must have the torque
    authority for the ramp, and the first shaped rate level
    rate*t2/(2*D_L*width) must not overshoot the commanded rate itself,
    or saturation clips the pulse area and the profile lands low.
    """
    if spec.deflection_ratio is None:
        raise ValueError("rate shaping requires a spec with a deflection_ratio")
    if rate <= 0.0:
        raise ValueError(f"rate must be > 0, got {rate}")
    width = max(rate / (2.0 * spec.deflection_ratio * gain),
                spec.times[1] / (2.0 * spec.deflection_ratio))
    return max(1, int(math.ceil(width / sample_period)))


def rate_command_profile(rate: float, gain: float, speed_limit: float,
                         spec: ShaperSpec | None, sample_period: float,
                         total_steps: int, stop_step: int | None = None
                         ) -> np.ndarray:
    """Commanded-rate samples for a constant-rate slew at ``rate`` > 0.

    Unshaped: a flat rate command (the drive's own acceleration limit
    shapes the ramp); the caller stops it by zeroing after the goal.
    Shaped: an acceleration pulse sized so the shaped, integrated rate
    lands exactly on ``rate``, plus the mirrored stop pulse at
    ``stop_step`` when given.  Array has total_steps samples.
    """
    if spec is None:
        return np.full(total_steps, rate)
    dt = sample_period
    n_pulse = shaped_pulse_steps(rate, gain, spec, dt)
    amplitude = rate / (2.0 * spec.deflection_ratio * gain * n_pulse * dt)
    r = np.zeros(total_steps)
    # sample 0 stays zero so the trapezoidal integral of the pulse is exact
    r[1:min(1 + n_pulse, total_steps)] = amplitude
    if stop_step is not None:
        if stop_step < 1 or stop_step + n_pulse > total_steps:
            raise ValueError("stop_step leaves no room for the stop pulse")
        r[stop_step:stop_step + n_pulse] -= amplitude
    u = convolve(AccelCommand(r, dt), spec)
    v = integrate_to_velocity(u, gain, speed_limit)
    return v.samples[:total_steps]
