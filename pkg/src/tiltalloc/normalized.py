"""Rate-limit normalized allocation with uniform saturation and dynamics inversion.

Each actuator-rate channel is mapped affinely so its ``[min, max]`` range
becomes ``[-1, 1]``. Allocation happens in that normalized space, the result is
uniformly scaled back inside the unit box if needed, de-normalized, and turned
into setpoints by inverting first-order actuator dynamics.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import ConfigurationError, check_vector
from .differential import (
    DEFAULT_DAMPING,
    augment_wrench_to_jerk,
    build_hover_objective,
    weighted_pseudoinverse,
)
from .platform import (
    DEFAULT_ROTOR_ACCEL_LIMIT,
    DEFAULT_SPEED_MAX,
    DEFAULT_TILT_RATE_LIMIT,
    ActuatorDynamicsModel,
    allocation_jacobian,
    build_allocation_matrix,
    wrench_from_state,
)
from .power import LimitCurveAnchors, override_for_stop, solve_limit_curves


@dataclass
class ActuatorLimits:
    """Per-channel rate bounds (tilt rates then rotor accelerations) and rotor speed bounds."""

    rate_min: np.ndarray
    rate_max: np.ndarray
    speed_min: float = 0.0
    speed_max: float = DEFAULT_SPEED_MAX

    @classmethod
    def static(cls, arm_count, tilt_rate_limit=DEFAULT_TILT_RATE_LIMIT, rotor_accel_limit=DEFAULT_ROTOR_ACCEL_LIMIT,
               speed_min=0.0, speed_max=DEFAULT_SPEED_MAX):
        hi = np.concatenate([np.full(arm_count, tilt_rate_limit), np.full(arm_count, rotor_accel_limit)])
        return cls(-hi, hi.copy(), speed_min, speed_max)


@dataclass
class NormalizationMap:
    """Affine map ``qbar = scale * qdot - bias`` sending each channel's ``[min, max]`` to ``[-1, 1]``.

    When the channel bounds are kept, the map is evaluated as
    ``((qdot - min) - (max - qdot)) / (max - min)`` so that the bounds land on
    exactly -1 and 1 even for narrow channels far from zero.
    """

    scale: np.ndarray
    bias: np.ndarray
    rate_min: np.ndarray = None
    rate_max: np.ndarray = None

    def apply(self, qdot):
        qdot = np.asarray(qdot, dtype=float)
        if self.rate_min is None or self.rate_max is None:
            return self.scale * qdot - self.bias
        return ((qdot - self.rate_min) - (self.rate_max - qdot)) / (self.rate_max - self.rate_min)


def build_normalization(limits):
    """Diagonal scale ``2/(max-min)`` and bias ``(max+min)/(max-min)`` per channel."""
    lo = check_vector(limits.rate_min, name="rate_min")
    hi = check_vector(limits.rate_max, lo.shape[0], "rate_max")
    span = hi - lo
    if np.any(span <= 0):
        bad = np.flatnonzero(span <= 0)
        raise ConfigurationError(f"rate limits must satisfy max > min; violated on channels {bad.tolist()}")
    return NormalizationMap(scale=2.0 / span, bias=(hi + lo) / span, rate_min=lo.copy(), rate_max=hi.copy())


def allocate_normalized(J, nmap, jerk, qbar_star=None, damping=DEFAULT_DAMPING):
    """Normalized rates solving ``J N^-1 qbar = jerk - J N^-1 b`` (minimum norm plus nullspace term)."""
    J_bar = np.asarray(J, dtype=float) / nmap.scale
    jerk_bar = np.asarray(jerk, dtype=float) - J_bar @ nmap.bias
    P = weighted_pseudoinverse(J_bar, None, damping)
    qbar = P @ jerk_bar
    if qbar_star is not None:
        qbar = qbar + qbar_star - P @ (J_bar @ qbar_star)
    return qbar


def saturation_factor(qbar):
    peak = np.max(np.abs(qbar)) if len(qbar) else 0.0
    return 1.0 if peak <= 1.0 else 1.0 / peak


def saturate(qbar):
    """Scale the whole vector by ``1/max|qbar_i|`` when any entry leaves ``[-1, 1]``."""
    qbar = np.asarray(qbar, dtype=float)
    return qbar * saturation_factor(qbar)


def denormalize(nmap, qbar):
    return (np.asarray(qbar, dtype=float) + nmap.bias) / nmap.scale


def rates_to_setpoints(model, q, qdot, speed_min=0.0, speed_max=None):
    """Invert ``qdot = -K (q - q_cmd)``: ``q_cmd = q + K^-1 qdot``, rotor part clamped."""
    q = np.asarray(q, dtype=float)
    q_cmd = q + np.asarray(qdot, dtype=float) / model.gains
    n = q.shape[0] // 2
    q_cmd[n:] = np.clip(q_cmd[n:], speed_min, np.inf if speed_max is None else speed_max)
    return q_cmd


class NormalizedAllocator(BaseEstimator):
    """Augmented differential allocation normalized by actuator rate limits.

    ``limit_source="static"`` uses constant tilt-rate and rotor-acceleration
    bounds; ``"power"`` evaluates speed-dependent rotor bounds from limit curves
    at every call. ``objective`` selects the hover-speed nullspace goal or none.
    Per-rotor curve overrides (to stop a propeller) and an arm-rate tracking
    objective can be engaged after fitting.
    """

    def __init__(
        self,
        limit_source="static",
        tilt_rate_limit=DEFAULT_TILT_RATE_LIMIT,
        rotor_accel_limit=DEFAULT_ROTOR_ACCEL_LIMIT,
        curves=None,
        objective="hover",
        hover_gain=2.0,
        hover_speed=None,
        jerk_gain=20.0,
        actuator_gains=None,
        speed_min=0.0,
        speed_max=None,
        damping=DEFAULT_DAMPING,
        min_channel_width=1e-3,
    ):
        self.limit_source = limit_source
        self.tilt_rate_limit = tilt_rate_limit
        self.rotor_accel_limit = rotor_accel_limit
        self.curves = curves
        self.objective = objective
        self.hover_gain = hover_gain
        self.hover_speed = hover_speed
        self.jerk_gain = jerk_gain
        self.actuator_gains = actuator_gains
        self.speed_min = speed_min
        self.speed_max = speed_max
        self.damping = damping
        self.min_channel_width = min_channel_width

    def fit(self, platform, y=None):
        if self.limit_source not in ("static", "power"):
            raise ValueError(f"unknown limit_source {self.limit_source!r}")
        if self.objective not in ("hover", "none"):
            raise ValueError(f"unknown objective {self.objective!r}")
        n = platform.arm_count
        self.platform_ = platform
        self.n_arms_ = n
        self.allocation_matrix_ = build_allocation_matrix(platform)
        self.hover_speed_ = platform.hover_speed if self.hover_speed is None else float(self.hover_speed)
        gains = self.actuator_gains
        self.dynamics_ = gains if isinstance(gains, ActuatorDynamicsModel) else (
            ActuatorDynamicsModel.uniform(n) if gains is None else ActuatorDynamicsModel(gains)
        )
        if self.limit_source == "power":
            base = solve_limit_curves(LimitCurveAnchors.reference()) if self.curves is None else self.curves
            self.curves_ = [base] * n
            self.base_curves_ = base
            self.speed_max_ = base.speed_max if self.speed_max is None else float(self.speed_max)
        else:
            self.curves_ = None
            self.speed_max_ = DEFAULT_SPEED_MAX if self.speed_max is None else float(self.speed_max)
        self.arm_objective_ = None
        return self

    def override_rotor(self, rotor, stop_accel=None):
        """Swap rotor ``rotor``'s curves for a stop override."""
        check_is_fitted(self, "curves_")
        if self.curves_ is None:
            raise ConfigurationError("rotor overrides need limit_source='power'")
        kwargs = {} if stop_accel is None else {"stop_accel": stop_accel}
        self.curves_ = list(self.curves_)
        self.curves_[rotor] = override_for_stop(self.base_curves_, **kwargs)

    def restore_rotor(self, rotor):
        self.curves_ = list(self.curves_)
        self.curves_[rotor] = self.base_curves_

    def set_arm_objective(self, objective):
        self.arm_objective_ = objective

    def current_limits(self, q):
        check_is_fitted(self, "allocation_matrix_")
        n = self.n_arms_
        limits = ActuatorLimits.static(n, self.tilt_rate_limit, self.rotor_accel_limit, self.speed_min, self.speed_max_)
        if self.curves_ is not None:
            speeds = np.asarray(q, dtype=float)[n:]
            for i, curve in enumerate(self.curves_):
                lo, hi = curve.limits(speeds[i])
                if hi - lo < self.min_channel_width:
                    # a held rotor has zero-width bounds; keep the channel invertible
                    mid = 0.5 * (hi + lo)
                    lo, hi = mid - 0.5 * self.min_channel_width, mid + 0.5 * self.min_channel_width
                limits.rate_min[n + i], limits.rate_max[n + i] = lo, hi
        return limits

    def rates(self, w_desired, q, w_feedback=None, arm_rate_feedback=None, dt=None):
        check_is_fitted(self, "allocation_matrix_")
        q = np.asarray(q, dtype=float)
        if w_feedback is None:
            w_feedback = wrench_from_state(self.platform_, q, self.allocation_matrix_)
        jerk = augment_wrench_to_jerk(self.jerk_gain, w_desired, w_feedback)
        J = allocation_jacobian(self.platform_, q, self.allocation_matrix_)
        nmap = build_normalization(self.current_limits(q))

        qbar_star = None
        if self.objective == "hover":
            qbar_star = nmap.apply(build_hover_objective(q, self.hover_speed_, self.hover_gain))
        if self.arm_objective_ is not None:
            arm = self.arm_objective_.arm
            target = self.arm_objective_.update(0.0 if arm_rate_feedback is None else arm_rate_feedback, dt)[arm]
            if qbar_star is None:
                qbar_star = np.zeros_like(q)
            qbar_star[arm] = nmap.scale[arm] * target - nmap.bias[arm]

        qbar = allocate_normalized(J, nmap, jerk, qbar_star, self.damping)
        k_s = saturation_factor(qbar)
        qdot = denormalize(nmap, qbar * k_s)
        self.last_step_ = {"jerk": jerk, "qbar": qbar, "saturation_factor": k_s, "saturated": k_s < 1.0, "nmap": nmap}
        return qdot

    def command(self, w_desired, q, dt, w_feedback=None, arm_rate_feedback=None, **_):
        qdot = self.rates(w_desired, q, w_feedback, arm_rate_feedback, dt)
        return rates_to_setpoints(self.dynamics_, q, qdot, self.speed_min, self.speed_max_)
