"""Reference trajectories: hover, figure-8, body-axis oscillations and the cartwheel.

All references start at the hover pose (origin, identity attitude) with zero
velocity and are C1-continuous; amplitude envelopes use the cubic smoothstep.
"""

from dataclasses import dataclass, field

import numpy as np

from .rigid_body import quat_from_axis_angle, quat_from_euler_zyx, quat_multiply

# peak body angular velocity (rad/s) targeted for each oscillation period (s);
# 1.0 s extends the trend of the measured periods
OSCILLATION_PEAK_RATES = {1.6: 2.3, 1.4: 2.8, 1.3: 3.2, 1.2: 3.5, 1.1: 4.0, 1.0: 4.5}
OSCILLATION_PERIODS = (1.6, 1.4, 1.3, 1.2, 1.1, 1.0)
AXES = {"roll": np.array([1.0, 0.0, 0.0]), "pitch": np.array([0.0, 1.0, 0.0]), "yaw": np.array([0.0, 0.0, 1.0])}


@dataclass
class Reference:
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    orientation: np.ndarray
    angular_velocity: np.ndarray
    angular_acceleration: np.ndarray


@dataclass
class TrajectorySpec:
    """Trajectory kind plus its shape parameters.

    ``kind`` is one of ``hover``, ``fig8``, ``osc`` (with ``axis`` and ``period``),
    ``cartwheel`` or ``screw`` (hover reference for the propeller-stop scenario).
    """

    kind: str
    duration: float
    period: float = None
    axis: str = "roll"
    amplitude: float = None
    cycles: int = 5
    params: dict = field(default_factory=dict)
    name: str = None

    def __post_init__(self):
        if self.kind not in ("hover", "fig8", "osc", "cartwheel", "screw"):
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")
        if self.kind == "osc":
            if self.period is None or self.period <= 0:
                raise ValueError("oscillation period must be positive")
            if self.axis not in AXES:
                raise ValueError(f"unknown axis {self.axis!r}")
            if self.amplitude is None:
                self.amplitude = oscillation_amplitude(self.period)
        if self.name is None:
            self.name = f"osc-{self.axis}-{self.period:g}" if self.kind == "osc" else self.kind


def oscillation_amplitude(period, peak_rate=None):
    """Angle amplitude whose sinusoid peaks at ``peak_rate`` for this period."""
    if peak_rate is None:
        key = min(OSCILLATION_PEAK_RATES, key=lambda p: abs(p - period))
        if abs(key - period) > 1e-9:
            raise ValueError(f"no calibrated peak rate for period {period}; pass amplitude explicitly")
        peak_rate = OSCILLATION_PEAK_RATES[key]
    return peak_rate * period / (2.0 * np.pi)


def _smoothstep(x):
    """Cubic smoothstep and its first two derivatives."""
    x = np.clip(x, 0.0, 1.0)
    inside = 0.0 < x < 1.0
    return 3 * x**2 - 2 * x**3, (6 * x - 6 * x**2) if inside else 0.0, (6 - 12 * x) if inside else 0.0


def _envelope(t, ramp, t_end=None):
    """Ramp up over ``[0, ramp]`` (and down over ``[t_end - ramp, t_end]``)."""
    s, ds, dds = _smoothstep(t / ramp)
    ds, dds = ds / ramp, dds / ramp**2
    if t_end is not None and t > t_end - ramp:
        d, dd_, ddd = _smoothstep((t_end - t) / ramp)
        s, ds, dds = d, -dd_ / ramp, ddd / ramp**2
    return s, ds, dds


def _sine(t, amp, freq, phase, env):
    """Value and two derivatives of ``amp * env(t) * sin(freq t + phase)``."""
    e, de, dde = env
    s, c = np.sin(freq * t + phase), np.cos(freq * t + phase)
    return (
        amp * e * s,
        amp * (de * s + e * freq * c),
        amp * (dde * s + 2 * de * freq * c - e * freq**2 * s),
    )


def oscillation_duration(period, cycles=5, hold=1.0):
    return (cycles + 2) * period + hold


def parse_trajectory(name, **overrides):
    """Build a :class:`TrajectorySpec` from names like ``fig8`` or ``osc-roll-1.4``."""
    if name.startswith("osc-"):
        try:
            _, axis, period = name.split("-", 2)
            period = float(period)
        except ValueError as exc:
            raise ValueError(f"bad oscillation name {name!r}; expected osc-<axis>-<period>") from exc
        cycles = overrides.pop("cycles", 5)
        duration = overrides.pop("duration", oscillation_duration(period, cycles))
        return TrajectorySpec("osc", duration, period=period, axis=axis, cycles=cycles, name=name, **overrides)
    defaults = {"hover": 10.0, "fig8": 34.0, "cartwheel": 22.0, "screw": 20.0}
    if name not in defaults:
        raise ValueError(f"unknown trajectory {name!r}")
    duration = overrides.pop("duration", defaults[name])
    return TrajectorySpec(name, duration, name=name, **overrides)


def _hover():
    z = np.zeros(3)
    return Reference(z, z.copy(), z.copy(), np.array([1.0, 0.0, 0.0, 0.0]), z.copy(), z.copy())


def _oscillation(spec, t):
    T = spec.period
    t_end = (spec.cycles + 2) * T
    env = _envelope(min(t, t_end), T, t_end)
    ang, rate, acc = _sine(min(t, t_end), spec.amplitude, 2 * np.pi / T, 0.0, env)
    axis = AXES[spec.axis]
    z = np.zeros(3)
    return Reference(z, z.copy(), z.copy(), quat_from_axis_angle(axis, ang), rate * axis, acc * axis)


def _euler_rates_to_body(angles, rates):
    roll, pitch, _ = angles
    droll, dpitch, dyaw = rates
    sr, cr, sp, cp = np.sin(roll), np.cos(roll), np.sin(pitch), np.cos(pitch)
    return np.array([droll - dyaw * sp, dpitch * cr + dyaw * cp * sr, -dpitch * sr + dyaw * cp * cr])


def _fig8_components(spec, t):
    p = {"x_amp": 0.8, "y_amp": 0.35, "period": 16.0, "roll_amp": 0.35, "pitch_amp": 0.3, "yaw_amp": 0.5, "ramp": 2.0}
    p.update(spec.params)
    W = 2 * np.pi / p["period"]
    env = _envelope(t, p["ramp"])
    x = _sine(t, p["x_amp"], W, 0.0, env)
    y = _sine(t, p["y_amp"], 2 * W, 0.0, env)
    roll = _sine(t, p["roll_amp"], 2 * W, 0.0, env)
    pitch = _sine(t, p["pitch_amp"], W, np.pi / 2, env)
    yaw = _sine(t, p["yaw_amp"], W, 0.0, env)
    return x, y, (roll, pitch, yaw)


def _fig8(spec, t):
    x, y, euler = _fig8_components(spec, t)
    angles = [e[0] for e in euler]
    rates = [e[1] for e in euler]

    def body_rate(tt):
        _, _, eu = _fig8_components(spec, tt)
        return _euler_rates_to_body([e[0] for e in eu], [e[1] for e in eu])

    h = 1e-5
    omega = _euler_rates_to_body(angles, rates)
    domega = (body_rate(t + h) - body_rate(max(t - h, 0.0))) / (t + h - max(t - h, 0.0))
    return Reference(
        np.array([x[0], y[0], 0.0]),
        np.array([x[1], y[1], 0.0]),
        np.array([x[2], y[2], 0.0]),
        quat_from_euler_zyx(*angles),
        omega,
        domega,
    )


def _cartwheel_angles(spec, t):
    p = {"pitch_rate": np.deg2rad(15.0), "spin_rate": np.deg2rad(30.0), "spin_ramp": 1.0, "pitch_angle": np.pi / 2}
    p.update(spec.params)
    t_pitch = p["pitch_angle"] / p["pitch_rate"]
    s, ds, _ = _smoothstep(t / t_pitch)
    pitch, dpitch = p["pitch_angle"] * s, p["pitch_angle"] * ds / t_pitch
    tau = t - t_pitch
    r0, Tr = p["spin_rate"], p["spin_ramp"]
    if tau <= 0:
        spin, dspin = 0.0, 0.0
    elif tau < Tr:
        x = tau / Tr
        spin, dspin = r0 * Tr * (x**3 - 0.5 * x**4), r0 * (3 * x**2 - 2 * x**3)
    else:
        spin, dspin = r0 * (0.5 * Tr + tau - Tr), r0
    return pitch, dpitch, spin, dspin


def _cartwheel_rate(spec, t):
    _, dpitch, spin, dspin = _cartwheel_angles(spec, t)
    c, s = np.cos(spin), np.sin(spin)
    # Rz(spin)^T [0, dpitch, 0] + [0, 0, dspin]
    return np.array([s * dpitch, c * dpitch, dspin])


def _cartwheel(spec, t):
    pitch, _, spin, _ = _cartwheel_angles(spec, t)
    q = quat_multiply(quat_from_axis_angle([0, 1, 0], pitch), quat_from_axis_angle([0, 0, 1], spin))
    h = 1e-5
    lo = max(t - h, 0.0)
    domega = (_cartwheel_rate(spec, t + h) - _cartwheel_rate(spec, lo)) / (t + h - lo)
    z = np.zeros(3)
    return Reference(z, z.copy(), z.copy(), q, _cartwheel_rate(spec, t), domega)


def generate_reference(spec, t):
    """Reference pose, twist and their derivatives at time ``t``."""
    if spec.kind in ("hover", "screw"):
        return _hover()
    if spec.kind == "osc":
        return _oscillation(spec, t)
    if spec.kind == "fig8":
        return _fig8(spec, t)
    return _cartwheel(spec, t)
