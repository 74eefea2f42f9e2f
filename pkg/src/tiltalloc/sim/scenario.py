"""Closed-loop scenarios: reference -> pose controller -> allocator -> actuators -> rigid body."""

import json
from dataclasses import dataclass, field

import numpy as np

from .._validation import ConfigurationError
from ..differential import ArmTrackingObjective, DifferentialAllocator
from ..geometric import GeometricAllocator
from ..normalized import NormalizedAllocator
from ..platform import (
    DEFAULT_ROTOR_ACCEL_LIMIT,
    DEFAULT_SPEED_MAX,
    DEFAULT_TILT_RATE_LIMIT,
    ActuatorDynamicsModel,
    PlatformGeometry,
    actuation_vector,
    build_allocation_matrix,
    step_actuators,
)
from ..power import LimitCurveAnchors, MotorPowerParams, mechanical_power, solve_limit_curves
from ..units import RAD_S_TO_RPM, rpm_to_rad_s
from .controller import PoseGains, pose_controller
from .rigid_body import RigidBodyState, SimulationDiverged, quat_to_rotation, step_rigid_body
from .trajectories import TrajectorySpec, generate_reference

METHODS = ("ageom", "adiffold", "adiff", "asecond", "anosecond", "apower")
TIMESERIES_SCHEMA_VERSION = "1"
METRICS_SCHEMA_VERSION = "1"


def benchmark_platform(**overrides):
    """Default hexacopter used by the benchmark (quadratic thrust)."""
    params = {"thrust_model": "quadratic"}
    params.update(overrides)
    return PlatformGeometry(**params)


@dataclass
class PlantConfig:
    """True actuator behaviour of the simulated robot (SI units)."""

    tilt_gain: float = 20.0
    rotor_gain: float = 15.0
    tilt_rate_limit: float = DEFAULT_TILT_RATE_LIMIT
    rotor_accel_limit: float = DEFAULT_ROTOR_ACCEL_LIMIT
    speed_max: float = DEFAULT_SPEED_MAX
    # white rotor-acceleration disturbance density, rad/s^2 per sqrt(Hz); 0 disables
    rotor_accel_noise: float = 0.0
    # white tilt-rate disturbance density, rad/s per sqrt(Hz); 0 disables
    tilt_rate_noise: float = 0.0

    def dynamics(self, arm_count):
        return ActuatorDynamicsModel.uniform(arm_count, self.tilt_gain, self.rotor_gain)

    def rate_limits(self, arm_count):
        hi = np.concatenate([np.full(arm_count, self.tilt_rate_limit), np.full(arm_count, self.rotor_accel_limit)])
        return -hi, hi


@dataclass
class ScrewConfig:
    """Propeller-stop and arm-manipulation phases."""

    rotor: int = 0
    hover_time: float = 2.0
    stop_threshold_rpm: float = 30.0
    max_stop_time: float = 10.0
    stop_accel_rpm_s: float = -500.0
    # (duration s, commanded arm rate rad/s) segments of the interaction phase
    arm_profile: tuple = ((0.5, 0.0), (2.0, 0.6), (1.2, -1.0), (0.5, 0.0))
    friction_rate: float = 0.3
    integral_gain: float = 5.0
    integral_bound: float = 1.0
    recover_time: float = 10.0


@dataclass
class SimulationConfig:
    method: str
    trajectory: TrajectorySpec
    platform: PlatformGeometry = field(default_factory=benchmark_platform)
    plant: PlantConfig = field(default_factory=PlantConfig)
    motor: MotorPowerParams = field(default_factory=MotorPowerParams)
    anchors: LimitCurveAnchors = field(default_factory=LimitCurveAnchors.reference)
    gains: PoseGains = None
    allocator_params: dict = field(default_factory=dict)
    dt_sim: float = 0.001
    dt_control: float = 0.005
    fail_threshold: float = 1.0
    integrator: str = "euler"
    seed: int = 0
    initial_speed_offsets_rpm: np.ndarray = None
    accel_noise_std: float = 0.0
    screw: ScrewConfig = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.dt_sim <= 0 or self.dt_control < self.dt_sim:
            raise ConfigurationError("need 0 < dt_sim <= dt_control")
        ratio = self.dt_control / self.dt_sim
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigurationError("dt_control must be an integer multiple of dt_sim")


def make_allocator(method, platform, plant=None, anchors=None, **params):
    """Fitted allocator for one of the benchmark method names."""
    plant = PlantConfig() if plant is None else plant
    n = platform.arm_count
    gains = plant.dynamics(n)
    if method == "ageom":
        est = GeometricAllocator(speed_max=plant.speed_max)
    elif method in ("adiff", "adiffold"):
        kw = dict(
            objective="hover",
            actuator_gains=gains,
            speed_max=plant.speed_max,
            tilt_rate_limit=plant.tilt_rate_limit,
            rotor_accel_limit=plant.rotor_accel_limit,
        )
        kw.update(params)
        est = DifferentialAllocator(**kw)
    elif method in ("asecond", "anosecond", "apower"):
        kw = dict(
            limit_source="power" if method == "apower" else "static",
            objective="hover" if method == "asecond" else "none",
            actuator_gains=gains,
            tilt_rate_limit=plant.tilt_rate_limit,
            rotor_accel_limit=plant.rotor_accel_limit,
            speed_max=None if method == "apower" else plant.speed_max,
        )
        if method == "apower":
            kw["curves"] = solve_limit_curves(LimitCurveAnchors.reference() if anchors is None else anchors)
        kw.update(params)
        est = NormalizedAllocator(**kw)
    else:
        raise ConfigurationError(f"unknown method {method!r}")
    return est.fit(platform)


def _summary(values):
    if len(values) == 0:
        return {"mean": None, "q1": None, "median": None, "q3": None, "max": None}
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    return {"mean": float(np.mean(values)), "q1": float(q1), "median": float(med), "q3": float(q3), "max": float(np.max(values))}


@dataclass
class RunMetrics:
    """Per-tick time series plus aggregate statistics of one run."""

    method: str
    trajectory: str
    success: bool
    failure_time: float
    failure_reason: str
    columns: list
    timeseries: np.ndarray
    arm_count: int
    seed: int = 0
    extras: dict = field(default_factory=dict)

    def column(self, name):
        return self.timeseries[:, self.columns.index(name)]

    def rotor_speeds_rpm(self):
        return self.timeseries[:, [self.columns.index(f"omega_rpm_{i}") for i in range(self.arm_count)]]

    def aggregates(self):
        n_ticks = self.timeseries.shape[0]
        out = {
            "ticks": int(n_ticks),
            "linear_velocity_error": _summary(self.column("lin_vel_err") if n_ticks else []),
            "angular_velocity_error": _summary(self.column("ang_vel_err") if n_ticks else []),
            "position_error": _summary(self.column("pos_err") if n_ticks else []),
        }
        if n_ticks:
            speeds = self.rotor_speeds_rpm()
            tail = speeds[-max(1, n_ticks // 10):]
            dt = float(self.timeseries[1, 0] - self.timeseries[0, 0]) if n_ticks > 1 else 0.0
            power = self.column("power_total")
            out.update(
                max_rotor_speed_rpm=float(speeds.max()),
                mean_rotor_speed_rpm=float(speeds.mean()),
                end_mean_rotor_speed_rpm=float(tail.mean()),
                final_rotor_speeds_rpm=[float(v) for v in speeds[-1]],
                mean_power_w=float(power.mean()),
                total_energy_j=float(power.sum() * dt),
                saturation_events=int(self.column("saturated").sum()),
            )
        else:
            out.update(
                max_rotor_speed_rpm=None,
                mean_rotor_speed_rpm=None,
                end_mean_rotor_speed_rpm=None,
                final_rotor_speeds_rpm=[],
                mean_power_w=None,
                total_energy_j=0.0,
                saturation_events=0,
            )
        return out

    def to_dict(self, include_samples=True):
        d = {
            "schema_version": METRICS_SCHEMA_VERSION,
            "method": self.method,
            "trajectory": self.trajectory,
            "seed": self.seed,
            "success": bool(self.success),
            "failure_time": self.failure_time,
            "failure_reason": self.failure_reason,
            "aggregates": self.aggregates(),
        }
        if self.extras:
            d["extras"] = self.extras
        if include_samples:
            n_ticks = self.timeseries.shape[0]
            d["samples"] = {
                "linear_velocity_error": [float(v) for v in (self.column("lin_vel_err") if n_ticks else [])],
                "angular_velocity_error": [float(v) for v in (self.column("ang_vel_err") if n_ticks else [])],
            }
        return d

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    def write_timeseries_csv(self, path):
        header = "# schema_version=" + TIMESERIES_SCHEMA_VERSION + "\n" + ",".join(self.columns)
        np.savetxt(path, self.timeseries, delimiter=",", header=header, comments="", fmt="%.9g")


def _columns(n):
    cols = ["t", "ref_x", "ref_y", "ref_z", "x", "y", "z", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz"]
    cols += ["pos_err", "att_err", "lin_vel_err", "ang_vel_err"]
    cols += [f"alpha_{i}" for i in range(n)] + [f"omega_rpm_{i}" for i in range(n)]
    cols += [f"alpha_cmd_{i}" for i in range(n)] + [f"omega_cmd_rpm_{i}" for i in range(n)]
    cols += [f"accel_min_rpm_s_{i}" for i in range(n)] + [f"accel_max_rpm_s_{i}" for i in range(n)]
    cols += ["saturated", "saturation_factor"]
    cols += [f"power_{i}" for i in range(n)] + ["power_total", "phase"]
    return cols


class _Loop:
    """Mutable simulation context shared by the scenario drivers."""

    def __init__(self, config):
        self.cfg = config
        geom = config.platform
        n = geom.arm_count
        self.geom, self.n = geom, n
        self.A = build_allocation_matrix(geom)
        self.inertia_inv = np.linalg.inv(geom.inertia)
        self.plant_model = config.plant.dynamics(n)
        self.plant_limits = config.plant.rate_limits(n)
        self.gains = PoseGains.critically_damped(geom) if config.gains is None else config.gains
        self.allocator = make_allocator(config.method, geom, config.plant, config.anchors, **config.allocator_params)
        self.rng = np.random.default_rng(config.seed)

        q = geom.hover_state().q.copy()
        if config.initial_speed_offsets_rpm is not None:
            q[n:] = np.clip(q[n:] + rpm_to_rad_s(np.broadcast_to(config.initial_speed_offsets_rpm, (n,))), 0.0, config.plant.speed_max)
        self.q = q
        self.q_cmd = q.copy()
        self.qdot = np.zeros(2 * n)
        self.state = RigidBodyState()
        self.prev_velocity = self.state.velocity.copy()
        self.prev_omega = self.state.angular_velocity.copy()
        self.accel = np.zeros(3)
        self.ang_accel = np.zeros(3)
        self.friction = None
        self.phase = 0
        self.arm_rate_feedback = 0.0
        self.rows = []

    def wrench_estimate(self):
        """Wrench reconstructed from (optionally noisy) simulated accelerations."""
        g = self.geom
        lin = self.accel + np.array([0.0, 0.0, g.gravity])
        ang = self.ang_accel
        if self.cfg.accel_noise_std > 0:
            lin = lin + self.rng.normal(0.0, self.cfg.accel_noise_std, 3)
            ang = ang + self.rng.normal(0.0, self.cfg.accel_noise_std, 3)
        R = quat_to_rotation(self.state.orientation)
        omega = self.state.angular_velocity
        return np.concatenate([g.mass * R.T @ lin, g.inertia @ ang + np.cross(omega, g.inertia @ omega)])

    def control(self, t, spec):
        ref = generate_reference(spec, t)
        w_d = pose_controller(self.geom, self.gains, self.state, ref)
        kwargs = {"arm_rate_feedback": self.arm_rate_feedback}
        if self.cfg.method == "adiffold":
            kwargs["w_feedback"] = self.wrench_estimate()
        self.q_cmd = self.allocator.command(w_d, self.q, self.cfg.dt_control, **kwargs)
        return ref

    def record(self, t, ref):
        n, s = self.n, self.state
        R, R_ref = quat_to_rotation(s.orientation), quat_to_rotation(ref.orientation)
        pos_err = np.linalg.norm(ref.position - s.position)
        att_err = 2.0 * np.arccos(min(1.0, abs(float(ref.orientation @ s.orientation))))
        lin_err = np.linalg.norm(ref.velocity - s.velocity)
        ang_err = np.linalg.norm(s.angular_velocity - R.T @ R_ref @ ref.angular_velocity)
        if hasattr(self.allocator, "current_limits"):
            lim = self.allocator.current_limits(self.q)
            acc_lo, acc_hi = lim.rate_min[n:], lim.rate_max[n:]
        else:
            acc_lo, acc_hi = self.plant_limits[0][n:], self.plant_limits[1][n:]
        last = getattr(self.allocator, "last_step_", {})
        sat_factor = last.get("saturation_factor", 1.0)
        saturated = bool(last.get("saturated", False)) or bool(np.any(self.q[n:] >= self.cfg.plant.speed_max - 1e-9))
        power = mechanical_power(self.cfg.motor, self.q[n:], self.qdot[n:])
        self.rows.append(
            np.concatenate(
                [
                    [t],
                    ref.position,
                    s.position,
                    s.orientation,
                    s.velocity,
                    s.angular_velocity,
                    [pos_err, att_err, lin_err, ang_err],
                    self.q[:n],
                    self.q[n:] * RAD_S_TO_RPM,
                    self.q_cmd[:n],
                    self.q_cmd[n:] * RAD_S_TO_RPM,
                    acc_lo * RAD_S_TO_RPM,
                    acc_hi * RAD_S_TO_RPM,
                    [float(saturated), sat_factor],
                    power,
                    [power.sum(), self.phase],
                ]
            )
        )
        return pos_err

    def physics(self):
        cfg = self.cfg
        dt = cfg.dt_sim
        q_next = step_actuators(self.plant_model, self.q, self.q_cmd, dt, cfg.plant.speed_max, self.plant_limits)
        if self.friction is not None:
            arm, friction_rate = self.friction
            rate = (q_next[arm] - self.q[arm]) / dt
            rate = 0.0 if abs(rate) <= friction_rate else rate - np.sign(rate) * friction_rate
            q_next[arm] = self.q[arm] + rate * dt
        # motor-driven rates; the external disturbance below does no motor work
        self.qdot = (q_next - self.q) / dt
        if cfg.plant.rotor_accel_noise > 0 or cfg.plant.tilt_rate_noise > 0:
            n = self.n
            scale = np.repeat([cfg.plant.tilt_rate_noise, cfg.plant.rotor_accel_noise], n) * np.sqrt(dt)
            q_next += scale * self.rng.standard_normal(2 * n)
            q_next[n:] = np.clip(q_next[n:], 0.0, cfg.plant.speed_max)
        self.q = q_next
        wrench = self.A @ actuation_vector(q_next, self.geom.thrust_model)
        prev = self.state
        self.state = step_rigid_body(self.geom, prev, wrench, dt, cfg.integrator, self.inertia_inv)
        self.accel = (self.state.velocity - prev.velocity) / dt
        self.ang_accel = (self.state.angular_velocity - prev.angular_velocity) / dt

    def metrics(self, spec, success, failure_time, reason, extras=None):
        cols = _columns(self.n)
        data = np.vstack(self.rows) if self.rows else np.zeros((0, len(cols)))
        return RunMetrics(
            method=self.cfg.method,
            trajectory=spec.name,
            success=success,
            failure_time=failure_time,
            failure_reason=reason,
            columns=cols,
            timeseries=data,
            arm_count=self.n,
            seed=self.cfg.seed,
            extras=extras or {},
        )


def _simulate(loop, spec, duration, hook=None):
    """Run the loop for ``duration``; returns ``(success, failure_time, reason)``."""
    cfg = loop.cfg
    ratio = int(round(cfg.dt_control / cfg.dt_sim))
    n_steps = int(round(duration / cfg.dt_sim))
    for k in range(n_steps):
        t = k * cfg.dt_sim
        if k % ratio == 0:
            if hook is not None and hook(t, loop) is False:
                return True, None, None
            ref = loop.control(t, spec)
            pos_err = loop.record(t, ref)
            if not np.isfinite(pos_err) or pos_err > cfg.fail_threshold:
                return False, t, "position error exceeded fail threshold"
        try:
            loop.physics()
        except SimulationDiverged as exc:
            return False, (k + 1) * cfg.dt_sim, str(exc)
    return True, None, None


def run_scenario(config):
    """Fly ``config.trajectory`` with ``config.method`` and collect metrics.

    Divergence (position error above ``fail_threshold`` or a non-finite state)
    ends the run and is reported through ``success``/``failure_time``.
    """
    loop = _Loop(config)
    spec = config.trajectory
    success, failure_time, reason = _simulate(loop, spec, spec.duration)
    return loop.metrics(spec, success, failure_time, reason)


def run_screw_scenario(config):
    """Hover, stop one propeller, drive its arm with integral rate tracking, release.

    The phase column is 0 hover, 1 stopping, 2 interaction, 3 recovery.
    """
    if config.method != "apower":
        raise ConfigurationError("the propeller-stop scenario needs the apower method")
    sc = config.screw or ScrewConfig()
    loop = _Loop(config)
    alloc = loop.allocator
    n = loop.n
    k = sc.rotor
    objective = ArmTrackingObjective(k, n, 0.0, sc.integral_gain, sc.integral_bound)
    stop_threshold = rpm_to_rad_s(sc.stop_threshold_rpm)
    profile_end = sum(d for d, _ in sc.arm_profile)
    marks = {"stop_start": sc.hover_time, "stop_reached": None, "release": None}

    def profile_rate(tau):
        acc = 0.0
        for dur, rate in sc.arm_profile:
            acc += dur
            if tau < acc:
                return rate
        return 0.0

    def hook(t, lp):
        # control-rate state machine; returning False ends the run
        if lp.phase == 0 and t >= sc.hover_time:
            alloc.override_rotor(k, rpm_to_rad_s(sc.stop_accel_rpm_s))
            lp.phase = 1
        if lp.phase == 1:
            if lp.q[n + k] < stop_threshold:
                marks["stop_reached"] = t
                objective.reset()
                alloc.set_arm_objective(objective)
                lp.friction = (k, sc.friction_rate)
                lp.phase = 2
            elif t - sc.hover_time > sc.max_stop_time:
                marks["stop_timeout"] = t
                return False
        if lp.phase == 2:
            tau = t - marks["stop_reached"]
            if tau >= profile_end:
                alloc.set_arm_objective(None)
                alloc.restore_rotor(k)
                lp.friction = None
                marks["release"] = t
                lp.phase = 3
            else:
                objective.target_rate = profile_rate(tau)
        if lp.phase == 3 and t - marks["release"] >= sc.recover_time:
            return False
        lp.arm_rate_feedback = lp.qdot[k]
        return True

    horizon = sc.hover_time + sc.max_stop_time + profile_end + sc.recover_time + 1.0
    success, failure_time, reason = _simulate(loop, config.trajectory, horizon, hook)
    if marks.get("stop_timeout") is not None:
        success, reason = False, "rotor did not stop"
    marks["arm"] = k
    return loop.metrics(config.trajectory, success, failure_time, reason, extras={"screw": marks})
