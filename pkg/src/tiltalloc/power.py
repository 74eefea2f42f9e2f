"""Propeller power dynamics and speed-dependent acceleration limit curves."""

import warnings
from dataclasses import dataclass

import numpy as np

from ._validation import ConfigurationError
from .units import rpm_to_rad_s


@dataclass(frozen=True)
class MotorPowerParams:
    """Motor/ESC/propeller parameters of the power balance (SI units, rad/s)."""

    efficiency: float = 0.8
    voltage: float = 23.0
    current_min: float = -17.0
    current_max: float = 17.0
    rotor_inertia: float = 4.5e-4
    drag: float = 3.5e-7
    accel_min: float = rpm_to_rad_s(-1.3e4)
    accel_max: float = rpm_to_rad_s(1.3e4)

    def __post_init__(self):
        if not 0.0 < self.efficiency < 1.0:
            raise ConfigurationError("efficiency must lie in (0, 1)")
        if self.voltage <= 0 or self.rotor_inertia <= 0 or self.drag <= 0:
            raise ConfigurationError("voltage, rotor_inertia and drag must be positive")
        if not self.current_min < 0.0 < self.current_max:
            raise ConfigurationError("current bounds must satisfy current_min < 0 < current_max")


def _power_accel(p, speed, current):
    return p.efficiency * p.voltage * current / (p.rotor_inertia * speed) - p.drag / p.rotor_inertia * speed**2


def physical_max_accel(p, speed, clamp=True):
    """Largest propeller acceleration the power balance allows at ``speed``.

    With ``clamp`` the result is capped at the ESC limit ``p.accel_max``, which is
    also returned for non-positive speeds where the raw curve is singular.
    """
    speed = np.asarray(speed, dtype=float)
    safe = np.where(speed > 0, speed, 1.0)
    raw = np.where(speed > 0, _power_accel(p, safe, p.current_max), np.inf)
    out = np.minimum(raw, p.accel_max) if clamp else np.where(speed > 0, raw, p.accel_max)
    return out[()] if out.ndim == 0 else out


def physical_min_accel(p, speed, speed_min=0.0, clamp=True):
    """Most negative acceleration at ``speed``; zero at or below ``speed_min``."""
    speed = np.asarray(speed, dtype=float)
    safe = np.where(speed > 0, speed, 1.0)
    raw = _power_accel(p, safe, p.current_min)
    if clamp:
        raw = np.maximum(raw, p.accel_min)
    out = np.where(speed > speed_min, raw, 0.0)
    return out[()] if out.ndim == 0 else out


def unclamped_max_accel_root(p):
    """Speed where the unclamped maximum acceleration crosses zero."""
    return (p.efficiency * p.voltage * p.current_max / p.drag) ** (1.0 / 3.0)


def mechanical_power(p, speed, accel, electrical=False):
    """``J w wdot + d w^3`` floored at zero; divided by efficiency when ``electrical``."""
    speed = np.asarray(speed, dtype=float)
    power = np.maximum(p.rotor_inertia * speed * np.asarray(accel, dtype=float) + p.drag * speed**3, 0.0)
    if electrical:
        power = power / p.efficiency
    return power[()] if power.ndim == 0 else power


@dataclass(frozen=True)
class LimitCurveAnchors:
    """Designer anchors fixing the nine curve coefficients (rad/s and rad/s^2).

    ``accel_high`` is the maximum acceleration at ``speed_high`` and
    ``accel_low`` the minimum acceleration at ``speed_low``.
    """

    speed_min: float
    speed_low: float
    speed_high: float
    speed_max: float
    speed_eq: float
    accel_max_at_min: float
    accel_min_at_max: float
    accel_high: float
    accel_low: float

    @classmethod
    def from_rpm(cls, **kwargs):
        return cls(**{k: rpm_to_rad_s(v) for k, v in kwargs.items()})

    @classmethod
    def reference(cls):
        """Anchor set used for the benchmark platform (RPM and RPM/s converted)."""
        return cls.from_rpm(
            speed_min=0.0,
            speed_low=900.0,
            speed_high=7800.0,
            speed_max=8700.0,
            speed_eq=5800.0,
            accel_max_at_min=12000.0,
            accel_min_at_max=-14000.0,
            accel_high=0.8 * 12000.0,
            accel_low=0.8 * -14000.0,
        )

    def ordered(self):
        return self.speed_min <= self.speed_low <= self.speed_eq <= self.speed_high <= self.speed_max


class LimitCurveSet:
    """Two-piece maximum and minimum acceleration curves.

    ``coefficients`` is ``[c00, c01, c02, c10, c11, c20, c21, c30, c31]``::

        max(w) = c00 w + c01 w^2 + c02   on [w_min, w_h]
                 c10 w^2 + c11           on [w_h, w_max]
        min(w) = c20 w^2 + c21           on [w_min, w_l]
                 c30 w^2 + c31           on [w_l, w_max]
    """

    def __init__(self, coefficients, speed_min, speed_low, speed_high, speed_max, speed_eq):
        self.coefficients = np.asarray(coefficients, dtype=float)
        if self.coefficients.shape != (9,):
            raise ValueError("expected 9 coefficients")
        self.speed_min = float(speed_min)
        self.speed_low = float(speed_low)
        self.speed_high = float(speed_high)
        self.speed_max = float(speed_max)
        self.speed_eq = float(speed_eq)

    def __repr__(self):
        return (
            f"LimitCurveSet(speed_min={self.speed_min:.6g}, speed_low={self.speed_low:.6g}, "
            f"speed_high={self.speed_high:.6g}, speed_max={self.speed_max:.6g}, speed_eq={self.speed_eq:.6g})"
        )

    def _clip(self, speed):
        return np.clip(np.asarray(speed, dtype=float), self.speed_min, self.speed_max)

    def max_accel(self, speed):
        w = self._clip(speed)
        c = self.coefficients
        out = np.where(w <= self.speed_high, c[0] * w + c[1] * w**2 + c[2], c[3] * w**2 + c[4])
        return out[()] if out.ndim == 0 else out

    def min_accel(self, speed):
        w = self._clip(speed)
        c = self.coefficients
        out = np.where(w <= self.speed_low, c[5] * w**2 + c[6], c[7] * w**2 + c[8])
        return out[()] if out.ndim == 0 else out

    def limits(self, speed):
        """``(min_accel, max_accel)`` at ``speed``."""
        return self.min_accel(speed), self.max_accel(speed)

    def midpoint(self, speed):
        return 0.5 * (self.max_accel(speed) + self.min_accel(speed))


def _constraint_system(a):
    wmin, wl, wh, wmax, wm = a.speed_min, a.speed_low, a.speed_high, a.speed_max, a.speed_eq
    M = np.array(
        [
            [wmin, wmin**2, 1, 0, 0, 0, 0, 0, 0],
            [wh, wh**2, 1, -wh**2, -1, 0, 0, 0, 0],
            [0, 0, 0, wmax**2, 1, 0, 0, 0, 0],
            [0, 0, 0, wh**2, 1, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, wmin**2, 1, 0, 0],
            [0, 0, 0, 0, 0, wl**2, 1, -wl**2, -1],
            [0, 0, 0, 0, 0, wl**2, 1, 0, 0],
            [0, 0, 0, 0, 0, 0, 0, wmax**2, 1],
            [wm, wm**2, 1, 0, 0, 0, 0, wm**2, 1],
        ],
        dtype=float,
    )
    rhs = np.array([a.accel_max_at_min, 0, 0, a.accel_high, 0, 0, a.accel_low, a.accel_min_at_max, 0], dtype=float)
    return M, rhs


def constraint_residuals(curves, anchors):
    """Residuals of the nine defining equations, in acceleration units."""
    M, rhs = _constraint_system(anchors)
    return M @ curves.coefficients - rhs


def solve_limit_curves(anchors, check_order=True):
    """Solve the 9x9 linear system fixing the curve coefficients.

    Rows: max value at ``speed_min``; max continuity at ``speed_high``; max zero at
    ``speed_max``; max value at ``speed_high``; min zero at ``speed_min``; min
    continuity at ``speed_low``; min value at ``speed_low``; min value at
    ``speed_max``; zero midpoint at ``speed_eq``. The system is solved in
    speeds scaled by ``speed_max`` and accelerations scaled by the largest
    anchor magnitude to keep it well conditioned.
    """
    if check_order and not anchors.ordered():
        raise ConfigurationError("anchors must satisfy speed_min <= speed_low <= speed_eq <= speed_high <= speed_max")
    ws = anchors.speed_max
    acc = (anchors.accel_max_at_min, anchors.accel_min_at_max, anchors.accel_high, anchors.accel_low)
    a_s = max(abs(v) for v in acc)
    if ws <= 0 or a_s <= 0:
        raise ConfigurationError("speed_max and anchor accelerations must be non-zero")
    scaled = LimitCurveAnchors(
        *(getattr(anchors, f) / ws for f in ("speed_min", "speed_low", "speed_high", "speed_max", "speed_eq")),
        *(v / a_s for v in acc),
    )
    M, rhs = _constraint_system(scaled)
    if np.linalg.cond(M) > 1e12:
        raise ConfigurationError("degenerate anchors: curve system is singular")
    c = np.linalg.solve(M, rhs)
    # undo the scaling: linear terms carry 1/ws, quadratic 1/ws^2
    powers = np.array([1, 2, 0, 2, 0, 2, 0, 2, 0])
    c = c * a_s / ws**powers
    curves = LimitCurveSet(c, anchors.speed_min, anchors.speed_low, anchors.speed_high, anchors.speed_max, anchors.speed_eq)
    grid = np.linspace(anchors.speed_min, anchors.speed_max, 513)[1:-1]
    if np.any(curves.max_accel(grid) < curves.min_accel(grid)):
        warnings.warn("solved limit curves cross: max acceleration below min acceleration", RuntimeWarning)
    return curves


class StopCurveSet:
    """Curve override that forces a rotor to decelerate and then hold at rest.

    Above ``speed_min`` the maximum acceleration is the negative constant
    ``stop_accel`` and the minimum is the base minimum floored at
    ``2 * stop_accel``; at ``speed_min`` both limits are zero.
    """

    def __init__(self, base, stop_accel=rpm_to_rad_s(-500.0)):
        if stop_accel >= 0:
            raise ConfigurationError("stop_accel must be negative")
        self.base = base
        self.stop_accel = float(stop_accel)
        self.speed_min = base.speed_min
        self.speed_max = base.speed_max
        self.speed_eq = base.speed_eq

    def max_accel(self, speed):
        w = np.asarray(speed, dtype=float)
        out = np.where(w > self.speed_min, self.stop_accel, 0.0)
        return out[()] if out.ndim == 0 else out

    def min_accel(self, speed):
        w = np.asarray(speed, dtype=float)
        out = np.where(w > self.speed_min, np.minimum(self.base.min_accel(w), 2.0 * self.stop_accel), 0.0)
        return out[()] if out.ndim == 0 else out

    def limits(self, speed):
        return self.min_accel(speed), self.max_accel(speed)

    def midpoint(self, speed):
        return 0.5 * (self.max_accel(speed) + self.min_accel(speed))


def override_for_stop(curves, stop_accel=rpm_to_rad_s(-500.0)):
    return StopCurveSet(curves, stop_accel)
