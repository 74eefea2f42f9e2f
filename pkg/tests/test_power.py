import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiltalloc._validation import ConfigurationError
from tiltalloc.power import (
    LimitCurveAnchors,
    MotorPowerParams,
    constraint_residuals,
    mechanical_power,
    override_for_stop,
    physical_max_accel,
    physical_min_accel,
    solve_limit_curves,
    unclamped_max_accel_root,
)
from tiltalloc.units import rad_s_to_rpm, rpm_to_rad_s

ETA, VOLT, I_MAX, J_R, DRAG = 0.8, 23.0, 17.0, 4.5e-4, 3.5e-7


def scalar_max_accel(speed):
    """Independent oracle of the power-balance maximum acceleration."""
    return ETA * VOLT * I_MAX / (J_R * speed) - DRAG / J_R * speed * speed


def relative_residuals(curves, anchors):
    """Constraint residuals scaled by the largest term of each equation."""
    scale = max(abs(anchors.accel_max_at_min), abs(anchors.accel_min_at_max), abs(anchors.accel_high), abs(anchors.accel_low))
    return np.abs(constraint_residuals(curves, anchors)) / scale


@st.composite
def valid_anchors(draw):
    """Random ordered anchor sets with sign-consistent accelerations (RPM units)."""
    w_max = draw(st.floats(3000.0, 20000.0))
    w_l = draw(st.floats(0.02, 0.3)) * w_max
    w_h = draw(st.floats(0.7, 0.98)) * w_max
    w_m = draw(st.floats(0.05, 0.95)) * (w_h - w_l) + w_l
    a_max = draw(st.floats(1000.0, 30000.0))
    a_min = -draw(st.floats(1000.0, 30000.0))
    return LimitCurveAnchors.from_rpm(
        speed_min=0.0,
        speed_low=w_l,
        speed_high=w_h,
        speed_max=w_max,
        speed_eq=w_m,
        accel_max_at_min=a_max,
        accel_min_at_max=a_min,
        accel_high=draw(st.floats(0.3, 0.95)) * a_max,
        accel_low=draw(st.floats(0.3, 0.95)) * a_min,
    )


class TestPhysicalCurves:
    def test_max_accel_matches_scalar_oracle(self):
        p = MotorPowerParams(accel_max=1e9)
        w = rpm_to_rad_s(5800.0)
        assert physical_max_accel(p, w) == pytest.approx(scalar_max_accel(w), rel=1e-9)
        assert rad_s_to_rpm(physical_max_accel(p, w)) == pytest.approx(8.19e3, rel=5e-3)

    def test_zero_crossing(self):
        p = MotorPowerParams()
        root = unclamped_max_accel_root(p)
        assert root == pytest.approx(math.pow(ETA * VOLT * I_MAX / DRAG, 1.0 / 3.0), rel=1e-12)
        assert abs(physical_max_accel(p, root, clamp=False)) < 1e-6 * abs(physical_max_accel(p, 0.5 * root, clamp=False))
        assert rad_s_to_rpm(root) == pytest.approx(9.2e3, rel=1e-2)

    def test_esc_cap_and_nonpositive_speed(self):
        p = MotorPowerParams()
        assert physical_max_accel(p, 1.0) == p.accel_max
        assert physical_max_accel(p, 0.0) == p.accel_max
        assert physical_max_accel(p, -3.0, clamp=False) == p.accel_max

    def test_zero_current_is_pure_drag(self):
        p = MotorPowerParams(current_max=1e-300)
        w = np.array([100.0, 500.0, 900.0])
        np.testing.assert_allclose(physical_max_accel(p, w, clamp=False), -DRAG / J_R * w**2, rtol=1e-12)

    def test_min_accel_floor_and_no_reverse_spin(self):
        p = MotorPowerParams()
        w = np.linspace(1.0, 900.0, 50)
        lo = physical_min_accel(p, w)
        assert np.all(lo >= p.accel_min) and np.all(lo <= 0)
        assert physical_min_accel(p, 0.0) == 0.0

    @pytest.mark.parametrize("kwargs", [dict(efficiency=1.2), dict(voltage=0.0), dict(current_min=1.0), dict(drag=-1.0)])
    def test_invalid_params(self, kwargs):
        with pytest.raises(ConfigurationError):
            MotorPowerParams(**kwargs)


class TestMechanicalPower:
    def test_hover_value(self):
        p = MotorPowerParams()
        w = rpm_to_rad_s(5800.0)
        assert mechanical_power(p, w, 0.0) == pytest.approx(DRAG * w**3, rel=1e-12)
        assert mechanical_power(p, w, 0.0) == pytest.approx(78.4, rel=2e-3)

    def test_zero_speed_and_cubic_scaling(self):
        p = MotorPowerParams()
        assert mechanical_power(p, 0.0, 100.0) == 0.0
        assert mechanical_power(p, 800.0, 0.0) == pytest.approx(8 * mechanical_power(p, 400.0, 0.0), rel=1e-12)

    def test_floor_and_electrical(self):
        p = MotorPowerParams()
        assert mechanical_power(p, 600.0, -1e6) == 0.0
        assert mechanical_power(p, 600.0, 10.0, electrical=True) == pytest.approx(mechanical_power(p, 600.0, 10.0) / ETA)


class TestLimitCurves:
    def test_reference_anchors_satisfied(self):
        a = LimitCurveAnchors.reference()
        curves = solve_limit_curves(a)
        assert relative_residuals(curves, a).max() < 1e-9
        assert curves.max_accel(a.speed_min) == pytest.approx(a.accel_max_at_min, rel=1e-9)
        assert curves.max_accel(a.speed_high) == pytest.approx(a.accel_high, rel=1e-9)
        assert curves.min_accel(a.speed_low) == pytest.approx(a.accel_low, rel=1e-9)
        assert curves.min_accel(a.speed_max) == pytest.approx(a.accel_min_at_max, rel=1e-9)
        assert abs(curves.max_accel(a.speed_max)) < 1e-9 * a.accel_max_at_min
        assert curves.min_accel(a.speed_min) == 0.0
        assert abs(curves.midpoint(a.speed_eq)) < 1e-9 * a.accel_max_at_min

    def test_midpoint_single_sign_change_at_equilibrium(self):
        a = LimitCurveAnchors.reference()
        curves = solve_limit_curves(a)
        w = np.linspace(a.speed_min, a.speed_max, 20001)[1:-1]
        mid = curves.midpoint(w)
        changes = np.flatnonzero(np.diff(np.sign(mid)) != 0)
        assert len(changes) == 1
        assert abs(w[changes[0]] - a.speed_eq) < 2 * (w[1] - w[0])
        assert curves.midpoint(a.speed_eq - 1.0) > 0 > curves.midpoint(a.speed_eq + 1.0)

    def test_monotone_envelope_and_ordering(self):
        a = LimitCurveAnchors.reference()
        curves = solve_limit_curves(a)
        upper = np.linspace(a.speed_high, a.speed_max, 500)
        assert np.all(np.diff(curves.max_accel(upper)) <= 1e-9)
        lower = np.linspace(a.speed_low, a.speed_max, 500)
        assert np.all(np.diff(curves.min_accel(lower)) <= 1e-9)
        w = np.linspace(a.speed_min, a.speed_max, 1000)
        assert np.all(curves.max_accel(w) >= curves.min_accel(w))

    def test_continuity_at_breakpoints(self):
        a = LimitCurveAnchors.reference()
        curves = solve_limit_curves(a)
        c = curves.coefficients
        wh, wl = a.speed_high, a.speed_low
        assert c[0] * wh + c[1] * wh**2 + c[2] == pytest.approx(c[3] * wh**2 + c[4], rel=1e-9)
        assert c[5] * wl**2 + c[6] == pytest.approx(c[7] * wl**2 + c[8], rel=1e-9)

    @given(valid_anchors())
    @settings(max_examples=1000, deadline=None)
    def test_random_anchor_residuals(self, anchors):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            curves = solve_limit_curves(anchors)
        assert relative_residuals(curves, anchors).max() < 1e-9
        assert abs(curves.midpoint(anchors.speed_eq)) < 1e-9 * abs(anchors.accel_max_at_min)

    def test_degenerate_anchors_rejected(self):
        a = LimitCurveAnchors.reference()
        bad = LimitCurveAnchors(**{**a.__dict__, "speed_high": a.speed_max})
        with pytest.raises(ConfigurationError):
            solve_limit_curves(bad)

    def test_unordered_anchors_rejected(self):
        a = LimitCurveAnchors.reference()
        with pytest.raises(ConfigurationError):
            solve_limit_curves(LimitCurveAnchors(**{**a.__dict__, "speed_eq": a.speed_max * 1.1}))

    def test_evaluation_clamps_speed(self):
        curves = solve_limit_curves(LimitCurveAnchors.reference())
        assert curves.max_accel(1e6) == curves.max_accel(curves.speed_max)
        assert curves.min_accel(-5.0) == curves.min_accel(curves.speed_min)


class TestStopOverride:
    def test_forces_deceleration_and_holds_at_rest(self):
        curves = solve_limit_curves(LimitCurveAnchors.reference())
        stop = override_for_stop(curves)
        w = np.linspace(1.0, curves.speed_max, 200)
        assert np.all(stop.max_accel(w) < 0)
        assert np.all(stop.min_accel(w) < stop.max_accel(w))
        assert stop.limits(curves.speed_min) == (0.0, 0.0)

    def test_positive_stop_accel_rejected(self):
        curves = solve_limit_curves(LimitCurveAnchors.reference())
        with pytest.raises(ConfigurationError):
            override_for_stop(curves, 10.0)
