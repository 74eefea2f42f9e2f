"""Differential (jerk-level) allocation with nullspace secondary objectives.

Rates are allocated from ``J(q) qdot = wdot`` through a weighted right
pseudoinverse; anything projected into the kernel of ``J`` leaves the wrench
rate untouched and is used for secondary goals.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix, check_vector
from .platform import (
    DEFAULT_ROTOR_ACCEL_LIMIT,
    DEFAULT_TILT_RATE_LIMIT,
    ActuatorDynamicsModel,
    allocation_jacobian,
    build_allocation_matrix,
    wrench_from_state,
)

DEFAULT_DAMPING = 1e-12


def weighted_pseudoinverse(J, weights=None, damping=DEFAULT_DAMPING):
    """``W^-1 J^T (J W^-1 J^T + eps I)^-1`` with ``eps = damping * trace(.) / rows``.

    ``weights`` is the diagonal of ``W`` (``None`` for identity). Scaling the
    damping with the trace keeps the result invariant to a uniform scaling of ``W``.
    """
    J = check_matrix(J, name="J")
    m, n = J.shape
    if weights is None:
        w_inv = np.ones(n)
    else:
        weights = check_vector(weights, n, "weights")
        if np.any(weights <= 0):
            raise ValueError("weights must be strictly positive")
        w_inv = 1.0 / weights
    JWi = J * w_inv
    M = JWi @ J.T
    if damping:
        M = M + (damping * np.trace(M) / m) * np.eye(m)
    return np.linalg.solve(M, JWi).T


def nullspace_projector(J, J_pinv):
    return np.eye(J.shape[1]) - J_pinv @ J


def allocate_jerk(J, jerk, weights=None, qdot_star=None, damping=DEFAULT_DAMPING, J_pinv=None):
    """Actuator rates ``J^+ wdot + (I - J^+ J) qdot*``."""
    J = check_matrix(J, name="J")
    jerk = check_vector(jerk, J.shape[0], "jerk")
    P = weighted_pseudoinverse(J, weights, damping) if J_pinv is None else J_pinv
    qdot = P @ jerk
    if qdot_star is not None:
        qdot_star = np.asarray(qdot_star, dtype=float)
        qdot = qdot + qdot_star - P @ (J @ qdot_star)
    return qdot


def build_hover_objective(q, target_speed, gain):
    """Rate target pulling every rotor toward ``target_speed``; tilt entries are zero."""
    q = np.asarray(q, dtype=float)
    n = q.shape[0] // 2
    out = np.zeros_like(q)
    out[n:] = -gain * (q[n:] - target_speed)
    return out


class ArmTrackingObjective:
    """Integral arm-rate tracking for one designated arm.

    The emitted rate target is ``rate* + k_i * integral(rate* - rate)`` with
    trapezoidal accumulation; the integral is clamped to ``+-integral_bound``.
    """

    def __init__(self, arm, arm_count, target_rate=0.0, integral_gain=5.0, integral_bound=2.0):
        if not 0 <= arm < arm_count:
            raise ValueError("arm index out of range")
        if integral_gain < 0:
            raise ValueError("integral_gain must be non-negative")
        self.arm = arm
        self.arm_count = arm_count
        self.target_rate = float(target_rate)
        self.integral_gain = float(integral_gain)
        self.integral_bound = float(integral_bound)
        self.reset()

    def reset(self):
        self.integral = 0.0
        self._last_error = None

    def update(self, rate_feedback, dt, target_rate=None):
        if dt <= 0:
            raise ValueError("dt must be positive")
        if target_rate is not None:
            self.target_rate = float(target_rate)
        error = self.target_rate - float(rate_feedback)
        prev = error if self._last_error is None else self._last_error
        self.integral = float(np.clip(self.integral + 0.5 * (prev + error) * dt, -self.integral_bound, self.integral_bound))
        self._last_error = error
        out = np.zeros(2 * self.arm_count)
        out[self.arm] = self.target_rate + self.integral_gain * self.integral
        return out


def build_arm_tracking_objective(objective, rate_feedback, dt):
    return objective.update(rate_feedback, dt)


def augment_wrench_to_jerk(jerk_gain, w_desired, w_current):
    """Jerk proportional to the wrench error, ``k_j (w_d - w(q))``."""
    return jerk_gain * (np.asarray(w_desired, dtype=float) - np.asarray(w_current, dtype=float))


def default_weights(arm_count, tilt_rate_limit, rotor_accel_limit):
    """Identity on tilt rates, ``(tilt/rotor rate scale)^2`` on rotor accelerations."""
    return np.concatenate([np.ones(arm_count), np.full(arm_count, (tilt_rate_limit / rotor_accel_limit) ** 2)])


class DifferentialAllocator(BaseEstimator):
    """Weighted differential allocation fed by a wrench command.

    The jerk comes from ``jerk_gain * (w_desired - w_feedback)`` where the
    feedback is the wrench reconstructed from the actuator state (augmented
    variant) or whatever wrench estimate the caller passes in (e.g. one built
    from measured accelerations). Setpoints are obtained by integrating the
    rates (``setpoint_mode="integrate"``) or by inverting first-order actuator
    dynamics (``"invert"``). With ``max_lead`` set, an integrated setpoint never
    leads the measured state by more than ``max_lead`` seconds at the rate limits
    (anti-windup against actuator saturation).
    """

    def __init__(
        self,
        weights=None,
        jerk_gain=20.0,
        objective="hover",
        hover_gain=2.0,
        hover_speed=None,
        tilt_rate_limit=DEFAULT_TILT_RATE_LIMIT,
        rotor_accel_limit=DEFAULT_ROTOR_ACCEL_LIMIT,
        setpoint_mode="integrate",
        actuator_gains=None,
        speed_max=None,
        damping=DEFAULT_DAMPING,
        max_lead=None,
    ):
        self.weights = weights
        self.jerk_gain = jerk_gain
        self.objective = objective
        self.hover_gain = hover_gain
        self.hover_speed = hover_speed
        self.tilt_rate_limit = tilt_rate_limit
        self.rotor_accel_limit = rotor_accel_limit
        self.setpoint_mode = setpoint_mode
        self.actuator_gains = actuator_gains
        self.speed_max = speed_max
        self.damping = damping
        self.max_lead = max_lead

    def fit(self, platform, y=None):
        if self.objective not in ("hover", "none"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.setpoint_mode not in ("integrate", "invert"):
            raise ValueError(f"unknown setpoint_mode {self.setpoint_mode!r}")
        if self.max_lead is not None and self.max_lead <= 0:
            raise ValueError("max_lead must be positive")
        n = platform.arm_count
        self.platform_ = platform
        self.n_arms_ = n
        self.allocation_matrix_ = build_allocation_matrix(platform)
        if self.weights is None:
            self.weights_ = default_weights(n, self.tilt_rate_limit, self.rotor_accel_limit)
        else:
            self.weights_ = check_vector(self.weights, 2 * n, "weights")
        self.hover_speed_ = platform.hover_speed if self.hover_speed is None else float(self.hover_speed)
        gains = self.actuator_gains
        self.dynamics_ = gains if isinstance(gains, ActuatorDynamicsModel) else (
            ActuatorDynamicsModel.uniform(n) if gains is None else ActuatorDynamicsModel(gains)
        )
        self.reset()
        return self

    def reset(self):
        self._setpoint = None

    def rates(self, w_desired, q, w_feedback=None):
        check_is_fitted(self, "allocation_matrix_")
        q = np.asarray(q, dtype=float)
        if w_feedback is None:
            w_feedback = wrench_from_state(self.platform_, q, self.allocation_matrix_)
        jerk = augment_wrench_to_jerk(self.jerk_gain, w_desired, w_feedback)
        J = allocation_jacobian(self.platform_, q, self.allocation_matrix_)
        star = build_hover_objective(q, self.hover_speed_, self.hover_gain) if self.objective == "hover" else None
        return allocate_jerk(J, jerk, self.weights_, star, self.damping)

    def command(self, w_desired, q, dt, w_feedback=None, **_):
        qdot = self.rates(w_desired, q, w_feedback)
        q = np.asarray(q, dtype=float)
        n = self.n_arms_
        limit = np.concatenate([np.full(n, self.tilt_rate_limit), np.full(n, self.rotor_accel_limit)])
        if self.setpoint_mode == "invert":
            q_cmd = q + qdot / self.dynamics_.gains
        else:
            base = q if self._setpoint is None else self._setpoint
            q_cmd = base + qdot * dt
            if self.max_lead is not None:
                bound = self.max_lead * limit
                q_cmd = np.clip(q_cmd, q - bound, q + bound)
        q_cmd[n:] = np.clip(q_cmd[n:], 0.0, np.inf if self.speed_max is None else self.speed_max)
        self._setpoint = q_cmd.copy()
        self.last_step_ = {"qdot": qdot, "saturated": bool(np.any(np.abs(qdot) > limit))}
        return q_cmd
