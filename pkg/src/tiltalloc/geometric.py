"""Geometric allocation: minimum-norm pseudoinverse of ``A`` plus angle/speed extraction."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import ConfigurationError, as_batch, check_vector
from .platform import build_allocation_matrix


@dataclass
class GeometricSolution:
    u: np.ndarray
    tilt_angles: np.ndarray
    rotor_speeds: np.ndarray
    feasible: bool


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


def extract_angles_speeds(u, thrust_model="linear"):
    """Per-arm ``alpha = atan2(u_2i, u_2i+1)`` and speed from the pair magnitude.

    ``atan2(0, 0)`` is 0, so an arm with no demanded thrust reports zero tilt.
    """
    u = np.asarray(u, dtype=float)
    lateral, vertical = u[..., 0::2], u[..., 1::2]
    alpha = np.arctan2(lateral, vertical)
    lam = np.hypot(lateral, vertical)
    speed = np.sqrt(lam) if thrust_model == "quadratic" else lam
    return alpha, speed


def _pinv_checked(A):
    if np.linalg.matrix_rank(A) < A.shape[0]:
        raise ConfigurationError("allocation matrix is rank deficient")
    return np.linalg.pinv(A)


def allocate_geometric(geom, w_desired, speed_max=None, allocation_matrix=None, pinv=None):
    """Map a desired wrench to tilt angles and rotor speeds through ``A^+``.

    Infeasible requests (over-speed, unreconstructable wrench, NaN) are flagged
    rather than raised so a simulation can keep stepping through them.
    """
    w = check_vector(w_desired, 6, "w_desired")
    A = build_allocation_matrix(geom) if allocation_matrix is None else allocation_matrix
    A_pinv = _pinv_checked(A) if pinv is None else pinv
    u = A_pinv @ w
    alpha, speed = extract_angles_speeds(u, geom.thrust_model)
    feasible = bool(np.all(np.isfinite(alpha)) and np.all(np.isfinite(speed)))
    if speed_max is not None and np.any(speed > speed_max):
        feasible = False
    if np.linalg.norm(A @ u - w) > 1e-6 * (1.0 + np.linalg.norm(w)):
        feasible = False
    return GeometricSolution(u=u, tilt_angles=alpha, rotor_speeds=speed, feasible=feasible)


class GeometricAllocator(BaseEstimator):
    """Estimator wrapper around :func:`allocate_geometric`.

    ``fit`` takes a :class:`~tiltalloc.platform.PlatformGeometry`; ``transform``
    maps wrenches (n x 6) to actuation vectors (n x 2N) and ``predict`` maps them
    to actuator states ``[alpha, omega]``.
    """

    def __init__(self, speed_max=None):
        self.speed_max = speed_max

    def fit(self, platform, y=None):
        self.platform_ = platform
        self.allocation_matrix_ = build_allocation_matrix(platform)
        self.pinv_ = _pinv_checked(self.allocation_matrix_)
        self.n_arms_ = platform.arm_count
        return self

    def transform(self, W):
        check_is_fitted(self, "pinv_")
        W, single = as_batch(W, 6, "W")
        U = W @ self.pinv_.T
        return U[0] if single else U

    def predict(self, W):
        U = self.transform(W)
        alpha, speed = extract_angles_speeds(U, self.platform_.thrust_model)
        return np.concatenate([alpha, speed], axis=-1)

    def command(self, w_desired, q, dt=None, **_):
        """Actuator setpoints for the control loop.

        Tilt setpoints take the shortest angular path from the current arm angle,
        rotor setpoints are clamped to ``[0, speed_max]``.
        """
        check_is_fitted(self, "pinv_")
        sol = allocate_geometric(
            self.platform_, w_desired, self.speed_max, self.allocation_matrix_, self.pinv_
        )
        n = self.n_arms_
        alpha_now = q[:n]
        alpha_cmd = alpha_now + wrap_angle(sol.tilt_angles - alpha_now)
        speed_cmd = np.clip(sol.rotor_speeds, 0.0, np.inf if self.speed_max is None else self.speed_max)
        self.last_step_ = {"feasible": sol.feasible, "saturated": not sol.feasible}
        return np.concatenate([alpha_cmd, speed_cmd])
