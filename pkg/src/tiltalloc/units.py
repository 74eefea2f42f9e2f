"""Unit conversions used at configuration and output boundaries."""

import numpy as np

RPM_TO_RAD_S = 2.0 * np.pi / 60.0
RAD_S_TO_RPM = 60.0 / (2.0 * np.pi)


def rpm_to_rad_s(value):
    return np.asarray(value, dtype=float) * RPM_TO_RAD_S if np.ndim(value) else float(value) * RPM_TO_RAD_S


def rad_s_to_rpm(value):
    return np.asarray(value, dtype=float) * RAD_S_TO_RPM if np.ndim(value) else float(value) * RAD_S_TO_RPM
