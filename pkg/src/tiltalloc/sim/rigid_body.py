"""6-DOF rigid-body plant with unit-quaternion attitude (``[w, x, y, z]``, body to world)."""

from dataclasses import dataclass, field, replace

import numpy as np


def quat_multiply(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_to_rotation(q):
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis / np.linalg.norm(axis)])


def quat_exp(rotvec):
    """Quaternion of the rotation vector ``rotvec`` (axis * angle)."""
    angle = np.sqrt(rotvec @ rotvec)
    if angle < 1e-12:
        q = np.array([1.0, 0.5 * rotvec[0], 0.5 * rotvec[1], 0.5 * rotvec[2]])
        return q / np.sqrt(q @ q)
    s = np.sin(0.5 * angle) / angle
    return np.array([np.cos(0.5 * angle), s * rotvec[0], s * rotvec[1], s * rotvec[2]])


def quat_from_euler_zyx(roll, pitch, yaw):
    cr, sr = np.cos(roll / 2), np.sin(roll / 2)
    cp, sp = np.cos(pitch / 2), np.sin(pitch / 2)
    cy, sy = np.cos(yaw / 2), np.sin(yaw / 2)
    return np.array(
        [
            cy * cp * cr + sy * sp * sr,
            cy * cp * sr - sy * sp * cr,
            cy * sp * cr + sy * cp * sr,
            sy * cp * cr - cy * sp * sr,
        ]
    )


@dataclass
class RigidBodyState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("position", "orientation", "velocity", "angular_velocity"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    def is_finite(self):
        return bool(
            np.all(np.isfinite(self.position))
            and np.all(np.isfinite(self.orientation))
            and np.all(np.isfinite(self.velocity))
            and np.all(np.isfinite(self.angular_velocity))
        )

    def rotation(self):
        return quat_to_rotation(self.orientation)


class SimulationDiverged(RuntimeError):
    """Raised when the plant state becomes non-finite."""


def _accelerations(geom, inertia_inv, orientation, omega, wrench):
    R = quat_to_rotation(orientation)
    lin = R @ wrench[:3] / geom.mass
    lin[2] -= geom.gravity
    I = geom.inertia
    ang = inertia_inv @ (wrench[3:] - np.cross(omega, I @ omega))
    return lin, ang


def step_rigid_body(geom, state, wrench, dt, method="euler", inertia_inv=None):
    """Integrate Newton-Euler dynamics for one step with a body-frame wrench.

    ``method="euler"`` is semi-implicit Euler (velocities first, then poses with
    the updated velocities); ``"rk4"`` is classic Runge-Kutta on the full state.
    The quaternion is renormalized after every step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    wrench = np.asarray(wrench, dtype=float)
    Iinv = np.linalg.inv(geom.inertia) if inertia_inv is None else inertia_inv
    p, q, v, w = state.position, state.orientation, state.velocity, state.angular_velocity

    if method == "euler":
        lin, ang = _accelerations(geom, Iinv, q, w, wrench)
        v_next = v + lin * dt
        w_next = w + ang * dt
        p_next = p + v_next * dt
        q_next = quat_multiply(q, quat_exp(w_next * dt))
    elif method == "rk4":
        def deriv(pos, quat, vel, om):
            lin, ang = _accelerations(geom, Iinv, quat / np.linalg.norm(quat), om, wrench)
            qdot = 0.5 * quat_multiply(quat, np.concatenate([[0.0], om]))
            return vel, qdot, lin, ang

        k1 = deriv(p, q, v, w)
        k2 = deriv(*(x + 0.5 * dt * k for x, k in zip((p, q, v, w), k1)))
        k3 = deriv(*(x + 0.5 * dt * k for x, k in zip((p, q, v, w), k2)))
        k4 = deriv(*(x + dt * k for x, k in zip((p, q, v, w), k3)))
        p_next, q_next, v_next, w_next = (
            x + dt / 6.0 * (a + 2 * b + 2 * c + d) for x, a, b, c, d in zip((p, q, v, w), k1, k2, k3, k4)
        )
    else:
        raise ValueError(f"unknown integrator {method!r}")

    q_next = q_next / np.linalg.norm(q_next)
    out = replace(state, position=p_next, orientation=q_next, velocity=v_next, angular_velocity=w_next)
    if not out.is_finite():
        raise SimulationDiverged("rigid-body state became non-finite")
    return out
