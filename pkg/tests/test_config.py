import numpy as np
import pytest

from tiltalloc import load_config
from tiltalloc._validation import ConfigurationError
from tiltalloc.config import config_from_dict
from tiltalloc.units import rpm_to_rad_s


def test_default_config_loads():
    cfg = load_config()
    assert cfg.methods == ["ageom", "adiffold", "adiff", "asecond", "anosecond", "apower"]
    assert "cartwheel" in cfg.trajectories and "fig8" in cfg.trajectories
    assert cfg.platform.thrust_model == "quadratic"
    assert cfg.plant.speed_max == pytest.approx(rpm_to_rad_s(8800.0))
    assert cfg.trajectory("fig8").duration == 48.0


def test_shared_allocator_keys_reach_only_their_methods():
    cfg = load_config()
    assert "hover_gain" in cfg.allocator_params("asecond")
    assert "hover_gain" not in cfg.allocator_params("apower")
    assert "hover_gain" not in cfg.allocator_params("anosecond")
    assert "max_lead" in cfg.allocator_params("adiff")
    assert cfg.allocator_params("ageom") == {}


def test_method_overrides_win():
    cfg = config_from_dict({"allocator": {"jerk_gain": 10.0}, "methods": {"apower": {"jerk_gain": 3.0}}})
    assert cfg.allocator_params("apower")["jerk_gain"] == 3.0
    assert cfg.allocator_params("asecond")["jerk_gain"] == 10.0


def test_rpm_units_converted():
    cfg = config_from_dict({"plant": {"rotor_accel_limit_rpm_s": 6000.0, "rotor_accel_noise_rpm_s": 60.0},
                            "motor": {"accel_max_rpm_s": 600.0}})
    assert cfg.plant.rotor_accel_limit == pytest.approx(rpm_to_rad_s(6000.0))
    assert cfg.plant.rotor_accel_noise == pytest.approx(2 * np.pi)
    assert cfg.motor.accel_max == pytest.approx(20 * np.pi)


def test_trajectory_overrides():
    cfg = config_from_dict({"trajectories": {"cartwheel": {"params": {"spin_rate": 1.5}}, "osc-roll-1.4": {"cycles": 2}}})
    assert cfg.trajectory("cartwheel").params["spin_rate"] == 1.5
    assert cfg.trajectory("osc-roll-1.4").cycles == 2
    # overrides are copied, so building a spec never mutates the config
    cfg.trajectory("cartwheel").params["spin_rate"] = 9.0
    assert cfg.trajectory("cartwheel").params["spin_rate"] == 1.5


@pytest.mark.parametrize(
    "data",
    [
        {"plant": {"tilt_gian": 3.0}},
        {"bogus": {}},
        {"bench": {"methods": ["ageom", "nope"]}},
        {"bench": {"methods": []}},
        {"anchors": {"speed_min_rpm": 0.0}},
        {"methods": {"apower": {"colour": 1}}},
        {"plant": []},
        {"simulation": {"dt_sim": 0.001, "unknown": 1}},
    ],
)
def test_invalid_configs_rejected(data):
    with pytest.raises(ConfigurationError):
        config_from_dict(data)


def test_empty_config_uses_defaults():
    cfg = config_from_dict(None)
    assert cfg.dt_sim == 0.001 and cfg.dt_control == 0.005


def test_load_config_from_file(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("bench:\n  methods: [apower]\n  trajectories: [hover]\n")
    cfg = load_config(path)
    assert cfg.methods == ["apower"] and cfg.trajectories == ["hover"]


def test_malformed_yaml(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("bench: [unclosed\n")
    with pytest.raises(ConfigurationError):
        load_config(path)
