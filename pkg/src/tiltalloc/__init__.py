"""Control allocation for tilt-rotor aerial robots.

Geometric and differential allocators, propeller power limit curves, and a
closed-loop simulation benchmark comparing them.
"""

from ._validation import ConfigurationError
from .bench import BenchReport, CellResult, compare_errors, run_matrix, write_report
from .config import BenchConfig, config_from_dict, load_config
from .differential import (
    ArmTrackingObjective,
    DifferentialAllocator,
    allocate_jerk,
    build_hover_objective,
    nullspace_projector,
    weighted_pseudoinverse,
)
from .geometric import GeometricAllocator, allocate_geometric, extract_angles_speeds
from .normalized import (
    ActuatorLimits,
    NormalizationMap,
    NormalizedAllocator,
    build_normalization,
    denormalize,
    saturate,
)
from .platform import (
    ActuatorDynamicsModel,
    ActuatorState,
    PlatformGeometry,
    actuation_jacobian,
    allocation_jacobian,
    build_allocation_matrix,
    step_actuators,
    wrench_from_state,
)
from .power import (
    LimitCurveAnchors,
    LimitCurveSet,
    MotorPowerParams,
    mechanical_power,
    override_for_stop,
    physical_max_accel,
    physical_min_accel,
    solve_limit_curves,
)
from .units import rad_s_to_rpm, rpm_to_rad_s

__version__ = "0.1.0"

__all__ = [
    "ActuatorDynamicsModel",
    "ActuatorLimits",
    "ActuatorState",
    "ArmTrackingObjective",
    "BenchConfig",
    "BenchReport",
    "CellResult",
    "ConfigurationError",
    "DifferentialAllocator",
    "GeometricAllocator",
    "LimitCurveAnchors",
    "LimitCurveSet",
    "MotorPowerParams",
    "NormalizationMap",
    "NormalizedAllocator",
    "PlatformGeometry",
    "actuation_jacobian",
    "allocate_geometric",
    "allocate_jerk",
    "allocation_jacobian",
    "build_allocation_matrix",
    "build_hover_objective",
    "build_normalization",
    "compare_errors",
    "config_from_dict",
    "denormalize",
    "extract_angles_speeds",
    "load_config",
    "mechanical_power",
    "nullspace_projector",
    "override_for_stop",
    "physical_max_accel",
    "physical_min_accel",
    "rad_s_to_rpm",
    "rpm_to_rad_s",
    "run_matrix",
    "saturate",
    "solve_limit_curves",
    "step_actuators",
    "weighted_pseudoinverse",
    "wrench_from_state",
    "write_report",
]
