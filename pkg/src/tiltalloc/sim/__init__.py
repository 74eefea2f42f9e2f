"""Closed-loop simulation of the tilt-rotor platform."""

from .controller import PoseGains, pose_controller
from .rigid_body import RigidBodyState, SimulationDiverged, step_rigid_body
from .scenario import (
    METHODS,
    PlantConfig,
    RunMetrics,
    ScrewConfig,
    SimulationConfig,
    benchmark_platform,
    make_allocator,
    run_scenario,
    run_screw_scenario,
)
from .stats import welch_t_test
from .trajectories import TrajectorySpec, generate_reference, parse_trajectory

__all__ = [
    "METHODS",
    "PlantConfig",
    "PoseGains",
    "RigidBodyState",
    "RunMetrics",
    "ScrewConfig",
    "SimulationConfig",
    "SimulationDiverged",
    "TrajectorySpec",
    "benchmark_platform",
    "generate_reference",
    "make_allocator",
    "parse_trajectory",
    "pose_controller",
    "run_scenario",
    "run_screw_scenario",
    "step_rigid_body",
    "welch_t_test",
]
