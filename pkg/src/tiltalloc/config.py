"""YAML benchmark configuration.

Rotor speeds and accelerations are given in RPM and RPM/s, tilt rates in rad/s,
lengths in meters and times in seconds. Unknown keys are rejected so that typos
surface as :class:`ConfigurationError` rather than silently using defaults.
"""

import copy
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import yaml

from ._validation import ConfigurationError
from .power import LimitCurveAnchors, MotorPowerParams
from .sim.controller import PoseGains
from .sim.scenario import METHODS, PlantConfig, ScrewConfig, SimulationConfig, benchmark_platform
from .sim.trajectories import parse_trajectory
from .units import rpm_to_rad_s

ALLOCATOR_KEYS = {"jerk_gain", "hover_gain", "weights", "damping", "min_channel_width", "setpoint_mode", "max_lead"}
# which methods a key in the shared ``allocator`` section reaches
SHARED_KEY_METHODS = {
    "jerk_gain": ("adiffold", "adiff", "asecond", "anosecond", "apower"),
    "damping": ("adiffold", "adiff", "asecond", "anosecond", "apower"),
    "hover_gain": ("adiffold", "adiff", "asecond"),
    "weights": ("adiffold", "adiff"),
    "setpoint_mode": ("adiffold", "adiff"),
    "max_lead": ("adiffold", "adiff"),
    "min_channel_width": ("asecond", "anosecond", "apower"),
}

SCHEMA = {
    "platform": {"arm_count", "arm_length", "mass", "inertia", "gravity", "thrust_model", "hover_speed_rpm", "drag_ratio",
                 "thrust_coefficient", "drag_torque_coefficient", "arm_azimuths", "spin_directions"},
    "plant": {"tilt_gain", "rotor_gain", "tilt_rate_limit", "rotor_accel_limit_rpm_s", "speed_max_rpm", "tilt_rate_noise",
              "rotor_accel_noise_rpm_s"},
    "controller": {"position_time_constant", "attitude_time_constant", "feedforward"},
    "allocator": ALLOCATOR_KEYS,
    "methods": set(METHODS),
    "motor": {"efficiency", "voltage", "current_min", "current_max", "rotor_inertia", "drag", "accel_min_rpm_s", "accel_max_rpm_s"},
    "anchors": {"speed_min_rpm", "speed_low_rpm", "speed_high_rpm", "speed_max_rpm", "speed_eq_rpm",
                "accel_max_at_min_rpm_s", "accel_min_at_max_rpm_s", "accel_high_rpm_s", "accel_low_rpm_s"},
    "simulation": {"dt_sim", "dt_control", "fail_threshold", "integrator", "accel_noise_std"},
    "bench": {"methods", "trajectories", "seeds", "histogram_bins_rpm"},
    "trajectories": None,
    "screw": {"rotor", "hover_time", "stop_threshold_rpm", "max_stop_time", "stop_accel_rpm_s", "arm_profile",
              "friction_rate", "integral_gain", "integral_bound", "recover_time"},
}


def _check_keys(section, data, allowed):
    if not isinstance(data, dict):
        raise ConfigurationError(f"section {section!r} must be a mapping")
    unknown = set(data) - allowed
    if unknown:
        raise ConfigurationError(f"unknown keys in {section!r}: {sorted(unknown)}")


@dataclass
class BenchConfig:
    """Parsed benchmark configuration; every field is already in SI units."""

    platform: object = field(default_factory=benchmark_platform)
    plant: PlantConfig = field(default_factory=PlantConfig)
    gains: PoseGains = None
    allocator: dict = field(default_factory=dict)
    method_params: dict = field(default_factory=dict)
    motor: MotorPowerParams = field(default_factory=MotorPowerParams)
    anchors: LimitCurveAnchors = field(default_factory=LimitCurveAnchors.reference)
    dt_sim: float = 0.001
    dt_control: float = 0.005
    fail_threshold: float = 1.0
    integrator: str = "euler"
    accel_noise_std: float = 0.0
    methods: list = field(default_factory=lambda: list(METHODS))
    trajectories: list = field(default_factory=lambda: ["fig8"])
    trajectory_overrides: dict = field(default_factory=dict)
    seeds: list = field(default_factory=lambda: [0])
    histogram_bins_rpm: list = None
    screw: ScrewConfig = field(default_factory=ScrewConfig)

    def __post_init__(self):
        if self.gains is None:
            self.gains = PoseGains.critically_damped(self.platform)
        if not self.methods or not self.trajectories:
            raise ConfigurationError("need at least one method and one trajectory")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigurationError(f"unknown method {m!r}; choose from {METHODS}")

    def allocator_params(self, method):
        """Shared allocator settings that apply to ``method`` merged with its overrides."""
        params = {k: v for k, v in self.allocator.items() if method in SHARED_KEY_METHODS[k]}
        params.update(self.method_params.get(method, {}))
        return params

    def trajectory(self, name):
        return parse_trajectory(name, **copy.deepcopy(self.trajectory_overrides.get(name, {})))

    def simulation(self, method, trajectory, seed=0, **overrides):
        """:class:`SimulationConfig` for one benchmark cell."""
        spec = trajectory if not isinstance(trajectory, str) else self.trajectory(trajectory)
        kwargs = dict(
            method=method,
            trajectory=spec,
            platform=self.platform,
            plant=self.plant,
            motor=self.motor,
            anchors=self.anchors,
            gains=self.gains,
            allocator_params=self.allocator_params(method),
            dt_sim=self.dt_sim,
            dt_control=self.dt_control,
            fail_threshold=self.fail_threshold,
            integrator=self.integrator,
            seed=seed,
            accel_noise_std=self.accel_noise_std if method == "adiffold" else 0.0,
            screw=self.screw,
        )
        kwargs.update(overrides)
        return SimulationConfig(**kwargs)


def _rpm_fields(data, mapping):
    out = {}
    for key, value in data.items():
        if key in mapping:
            out[mapping[key]] = rpm_to_rad_s(float(value))
        else:
            out[key] = value
    return out


def _method_params(name, data):
    _check_keys(f"methods.{name}", data, ALLOCATOR_KEYS)
    params = dict(data)
    if "weights" in params:
        params["weights"] = np.asarray(params["weights"], dtype=float)
    return params


def config_from_dict(data):
    """Build a :class:`BenchConfig` from a parsed YAML mapping."""
    data = {} if data is None else data
    _check_keys("<root>", data, set(SCHEMA))
    for section, allowed in SCHEMA.items():
        if section in data and allowed is not None:
            _check_keys(section, data[section], allowed)
    kw = {}

    if "platform" in data:
        p = dict(data["platform"])
        p.setdefault("thrust_model", "quadratic")
        kw["platform"] = benchmark_platform(**p)
    if "plant" in data:
        kw["plant"] = PlantConfig(
            **_rpm_fields(data["plant"], {"rotor_accel_limit_rpm_s": "rotor_accel_limit", "speed_max_rpm": "speed_max",
                                        "rotor_accel_noise_rpm_s": "rotor_accel_noise"})
        )
    platform = kw.get("platform", benchmark_platform())
    if "controller" in data:
        c = data["controller"]
        kw["gains"] = PoseGains.critically_damped(
            platform,
            float(c.get("position_time_constant", 1.0)),
            float(c.get("attitude_time_constant", 0.5)),
            bool(c.get("feedforward", True)),
        )
    if "allocator" in data:
        kw["allocator"] = dict(data["allocator"])
    if "methods" in data:
        kw["method_params"] = {name: _method_params(name, v or {}) for name, v in data["methods"].items()}
    if "motor" in data:
        kw["motor"] = MotorPowerParams(**_rpm_fields(data["motor"], {"accel_min_rpm_s": "accel_min", "accel_max_rpm_s": "accel_max"}))
    if "anchors" in data:
        a = data["anchors"]
        missing = SCHEMA["anchors"] - set(a)
        if missing:
            raise ConfigurationError(f"anchors section is missing {sorted(missing)}")
        kw["anchors"] = anchors_from_dict(a)
    if "simulation" in data:
        kw.update(data["simulation"])
    if "bench" in data:
        kw.update(data["bench"])
    if "trajectories" in data:
        kw["trajectory_overrides"] = dict(data["trajectories"])
    if "screw" in data:
        s = dict(data["screw"])
        if "arm_profile" in s:
            s["arm_profile"] = tuple(tuple(map(float, seg)) for seg in s["arm_profile"])
        kw["screw"] = ScrewConfig(**s)
    try:
        return BenchConfig(**kw)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def anchors_from_dict(a):
    """Limit-curve anchors from a mapping with ``*_rpm`` / ``*_rpm_s`` keys."""
    return LimitCurveAnchors.from_rpm(**{k.rsplit("_rpm", 1)[0]: float(v) for k, v in a.items()})


def load_yaml(path):
    with open(path) as fh:
        try:
            return yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"cannot parse {path}: {exc}") from exc


def load_config(path=None):
    """Load a benchmark config file; ``None`` loads the packaged default."""
    if path is None:
        text = resources.files("tiltalloc").joinpath("data/default.yaml").read_text()
        return config_from_dict(yaml.safe_load(text))
    return config_from_dict(load_yaml(path))
