"""PD pose controller producing a body-frame wrench command."""

from dataclasses import dataclass

import numpy as np

from .rigid_body import quat_to_rotation


def vee(S):
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


@dataclass
class PoseGains:
    """Diagonal PD gains: position/velocity (N/m, N s/m) and attitude/rate (N m/rad, N m s/rad)."""

    position: np.ndarray
    velocity: np.ndarray
    attitude: np.ndarray
    rate: np.ndarray
    feedforward: bool = True

    @classmethod
    def critically_damped(cls, geom, position_time_constant=1.0, attitude_time_constant=0.5, feedforward=True):
        """Gains giving a double pole at ``-1/tau`` on each decoupled axis."""
        tp, ta = position_time_constant, attitude_time_constant
        m = geom.mass
        inertia = np.diag(geom.inertia)
        return cls(
            position=np.full(3, m / tp**2),
            velocity=np.full(3, 2.0 * m / tp),
            attitude=inertia / ta**2,
            rate=2.0 * inertia / ta,
            feedforward=feedforward,
        )


def attitude_error(R, R_ref):
    """``0.5 vee(R_ref^T R - R^T R_ref)``, zero when aligned."""
    return 0.5 * vee(R_ref.T @ R - R.T @ R_ref)


def pose_controller(geom, gains, state, reference):
    """Body-frame wrench ``[f, tau]`` tracking ``reference``.

    The force is the world-frame PD law plus gravity compensation rotated into
    the body frame; the torque is a PD law on the rotation error. With
    ``gains.feedforward`` the reference linear and angular accelerations are
    added through the rigid-body model.
    """
    R = quat_to_rotation(state.orientation)
    R_ref = quat_to_rotation(reference.orientation)
    e_p = reference.position - state.position
    e_v = reference.velocity - state.velocity
    f_world = gains.position * e_p + gains.velocity * e_v
    f_world[2] += geom.mass * geom.gravity
    if gains.feedforward:
        f_world = f_world + geom.mass * reference.acceleration

    omega = state.angular_velocity
    omega_ref_body = R.T @ R_ref @ reference.angular_velocity
    e_R = attitude_error(R, R_ref)
    e_w = omega - omega_ref_body
    tau = -gains.attitude * e_R - gains.rate * e_w
    if gains.feedforward:
        I = geom.inertia
        alpha_ref = R.T @ R_ref @ reference.angular_acceleration - np.cross(omega, omega_ref_body)
        tau = tau + np.cross(omega, I @ omega) + I @ alpha_ref
    return np.concatenate([R.T @ f_world, tau])
