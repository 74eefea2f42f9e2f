"""Tilt-rotor platform model.

The actuator state is ``q = [alpha_0 .. alpha_{N-1}, omega_0 .. omega_{N-1}]``
(tilt angles first, rotor speeds second). Wrenches are 6-vectors laid out as
``[fx, fy, fz, tx, ty, tz]`` in the body frame. Rotor speeds are rad/s
internally; conversion to RPM happens only at I/O boundaries.

Arm ``i`` sits at ``p_i = L [cos(theta_i), sin(theta_i), 0]`` and tilts about its
radial axis ``r_i``. Its thrust direction is ``cos(alpha) e_z + sin(alpha) (r_i x e_z)``,
so with the thrust coordinate ``lambda_i`` (``omega_i`` or ``omega_i**2``) the
wrench is linear in ``u = [lambda_i sin(alpha_i), lambda_i cos(alpha_i), ...]``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import ConfigurationError, check_positive, check_vector
from .units import rpm_to_rad_s

THRUST_MODELS = ("linear", "quadratic")

# configuration defaults for servo slew and ESC acceleration caps
DEFAULT_TILT_RATE_LIMIT = 3.0
DEFAULT_ROTOR_ACCEL_LIMIT = rpm_to_rad_s(1.3e4)
DEFAULT_SPEED_MAX = rpm_to_rad_s(8800.0)


@dataclass(frozen=True)
class PlatformGeometry:
    """Arm layout, propeller coefficients and rigid-body parameters.

    ``thrust_coefficient`` defaults to the value that makes a level hover with
    untilted arms run every rotor at ``hover_speed_rpm``. ``drag_torque_coefficient``
    defaults to ``drag_ratio * thrust_coefficient``.
    """

    arm_count: int = 6
    arm_length: float = 0.3
    arm_azimuths: np.ndarray = None
    spin_directions: np.ndarray = None
    thrust_coefficient: float = None
    drag_torque_coefficient: float = None
    mass: float = 4.0
    inertia: np.ndarray = None
    gravity: float = 9.81
    thrust_model: str = "linear"
    hover_speed_rpm: float = 5800.0
    drag_ratio: float = 0.016

    def __post_init__(self):
        n = int(self.arm_count)
        if n < 3:
            raise ConfigurationError(f"arm_count must be >= 3, got {self.arm_count}")
        object.__setattr__(self, "arm_count", n)
        if self.thrust_model not in THRUST_MODELS:
            raise ConfigurationError(f"thrust_model must be one of {THRUST_MODELS}")
        check_positive(self.arm_length, "arm_length")
        check_positive(self.mass, "mass")
        check_positive(self.gravity, "gravity", strict=False)

        if self.arm_azimuths is None:
            az = np.arange(n) * 2.0 * np.pi / n
        else:
            az = check_vector(self.arm_azimuths, n, "arm_azimuths")
        if self.spin_directions is None:
            spin = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        else:
            spin = check_vector(self.spin_directions, n, "spin_directions")
            if not np.all(np.abs(spin) == 1.0):
                raise ConfigurationError("spin_directions entries must be +1 or -1")
        inertia = np.diag([0.08, 0.08, 0.14]) if self.inertia is None else np.asarray(self.inertia, dtype=float)
        if inertia.shape == (3,):
            inertia = np.diag(inertia)
        if inertia.shape != (3, 3) or not np.allclose(inertia, inertia.T):
            raise ConfigurationError("inertia must be a symmetric 3x3 matrix")
        if np.linalg.eigvalsh(inertia).min() <= 0:
            raise ConfigurationError("inertia must be positive definite")

        if self.thrust_coefficient is None:
            # zero-gravity platforms still need a usable thrust scale
            g_ref = self.gravity if self.gravity > 0 else 9.81
            kf = self.mass * g_ref / (n * self.hover_thrust_coordinate)
        else:
            kf = check_positive(self.thrust_coefficient, "thrust_coefficient")
        kd = self.drag_ratio * kf if self.drag_torque_coefficient is None else self.drag_torque_coefficient
        check_positive(kd, "drag_torque_coefficient", strict=False)

        object.__setattr__(self, "arm_azimuths", az)
        object.__setattr__(self, "spin_directions", spin)
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "thrust_coefficient", float(kf))
        object.__setattr__(self, "drag_torque_coefficient", float(kd))

    @property
    def hover_speed(self):
        """Nominal hover rotor speed in rad/s."""
        return rpm_to_rad_s(self.hover_speed_rpm)

    @property
    def hover_thrust_coordinate(self):
        w = self.hover_speed
        return w * w if self.thrust_model == "quadratic" else w

    def arm_positions(self):
        c, s = np.cos(self.arm_azimuths), np.sin(self.arm_azimuths)
        return self.arm_length * np.column_stack([c, s, np.zeros_like(c)])

    def hover_state(self):
        """Untilted arms at the speed that balances gravity for this geometry."""
        n = self.arm_count
        lam = self.mass * self.gravity / (n * self.thrust_coefficient)
        speed = np.sqrt(lam) if self.thrust_model == "quadratic" else lam
        return ActuatorState(np.zeros(n), np.full(n, speed))


@dataclass
class ActuatorState:
    """Tilt angles (rad, unwrapped) and rotor speeds (rad/s)."""

    tilt_angles: np.ndarray
    rotor_speeds: np.ndarray
    q: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.tilt_angles = check_vector(self.tilt_angles, name="tilt_angles")
        self.rotor_speeds = check_vector(self.rotor_speeds, self.tilt_angles.shape[0], "rotor_speeds")
        if np.any(self.rotor_speeds < 0):
            raise ValueError("rotor speeds must be non-negative")
        self.q = np.concatenate([self.tilt_angles, self.rotor_speeds])

    @classmethod
    def from_vector(cls, q):
        q = np.asarray(q, dtype=float)
        n = q.shape[0] // 2
        return cls(q[:n], q[n:])


@dataclass(frozen=True)
class ActuatorDynamicsModel:
    """Diagonal first-order actuator gains: tilt gains then rotor gains (1/s)."""

    gains: np.ndarray

    def __post_init__(self):
        g = check_vector(self.gains, name="gains")
        if g.shape[0] % 2 or np.any(g <= 0):
            raise ConfigurationError("gains must be 2N strictly positive entries")
        object.__setattr__(self, "gains", g)

    @classmethod
    def uniform(cls, arm_count, tilt_gain=20.0, rotor_gain=15.0):
        return cls(np.concatenate([np.full(arm_count, tilt_gain), np.full(arm_count, rotor_gain)]))


def _q_vector(q):
    return q.q if isinstance(q, ActuatorState) else np.asarray(q, dtype=float)


def _thrust_coordinate(speeds, thrust_model):
    return speeds * speeds if thrust_model == "quadratic" else speeds


def build_allocation_matrix(geom):
    """Constant 6 x 2N matrix mapping the actuation vector ``u`` to the body wrench."""
    n = geom.arm_count
    kf, kd = geom.thrust_coefficient, geom.drag_torque_coefficient
    p = geom.arm_positions()
    ez = np.array([0.0, 0.0, 1.0])
    A = np.zeros((6, 2 * n))
    for i in range(n):
        r = p[i] / geom.arm_length
        lateral = np.cross(r, ez)
        for col, direction in ((2 * i, lateral), (2 * i + 1, ez)):
            force = kf * direction
            A[:3, col] = force
            A[3:, col] = np.cross(p[i], force) + geom.spin_directions[i] * kd * direction
    return A


def actuation_vector(q, thrust_model="linear"):
    """Interleaved ``[lam_i sin(alpha_i), lam_i cos(alpha_i)]`` pairs."""
    q = _q_vector(q)
    n = q.shape[0] // 2
    alpha, lam = q[:n], _thrust_coordinate(q[n:], thrust_model)
    u = np.empty(2 * n)
    u[0::2] = lam * np.sin(alpha)
    u[1::2] = lam * np.cos(alpha)
    return u


def wrench_from_state(geom, q, allocation_matrix=None):
    """Body wrench ``A u(q)`` produced by the actuator state ``q``."""
    A = build_allocation_matrix(geom) if allocation_matrix is None else allocation_matrix
    return A @ actuation_vector(q, geom.thrust_model)


def actuation_jacobian(q, thrust_model="linear"):
    """Analytic ``du/dq`` (2N x 2N), block sparse per arm."""
    q = _q_vector(q)
    n = q.shape[0] // 2
    alpha, w = q[:n], q[n:]
    s, c = np.sin(alpha), np.cos(alpha)
    if thrust_model == "quadratic":
        lam, dlam = w * w, 2.0 * w
    else:
        lam, dlam = w, np.ones_like(w)
    D = np.zeros((2 * n, 2 * n))
    rows = np.arange(n)
    D[2 * rows, rows] = lam * c
    D[2 * rows, n + rows] = dlam * s
    D[2 * rows + 1, rows] = -lam * s
    D[2 * rows + 1, n + rows] = dlam * c
    return D


def allocation_jacobian(geom, q, allocation_matrix=None):
    """``J(q) = A D(q)``, mapping actuator rates to wrench rates."""
    A = build_allocation_matrix(geom) if allocation_matrix is None else allocation_matrix
    return A @ actuation_jacobian(q, geom.thrust_model)


def step_actuators(model, q, q_cmd, dt, speed_max=None, rate_limits=None):
    """Advance ``qdot = -K (q - q_cmd)`` exactly over ``dt``.

    ``rate_limits`` is an optional ``(low, high)`` pair of per-channel rate
    bounds emulating physical slew limits (servo speed, ESC acceleration caps);
    the bounds must bracket zero. Rotor speeds are clamped to ``[0, speed_max]``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    q = _q_vector(q)
    q_cmd = _q_vector(q_cmd)
    q_next = q_cmd + (q - q_cmd) * np.exp(-model.gains * dt)
    if rate_limits is not None:
        low, high = rate_limits
        q_next = q + np.clip(q_next - q, np.asarray(low) * dt, np.asarray(high) * dt)
    n = q.shape[0] // 2
    hi = np.inf if speed_max is None else speed_max
    q_next[n:] = np.clip(q_next[n:], 0.0, hi)
    return q_next
