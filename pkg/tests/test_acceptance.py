"""Acceptance gate: one PASS/FAIL line per criterion, tolerances pinned below."""

import filecmp
import math
import os
import time
import warnings

import numpy as np
import pytest
from scipy import stats

from conftest import random_state, record_criterion
from tiltalloc import load_config
from tiltalloc.bench import failure_frontiers, frontier_ordering_holds, run_matrix
from tiltalloc.differential import allocate_jerk, weighted_pseudoinverse
from tiltalloc.normalized import ActuatorLimits, build_normalization, denormalize, saturate
from tiltalloc.platform import (
    PlatformGeometry,
    actuation_jacobian,
    actuation_vector,
    allocation_jacobian,
    wrench_from_state,
)
from tiltalloc.power import (
    LimitCurveAnchors,
    MotorPowerParams,
    constraint_residuals,
    physical_max_accel,
    solve_limit_curves,
    unclamped_max_accel_root,
)
from tiltalloc.sim import parse_trajectory, run_scenario, run_screw_scenario, welch_t_test

JACOBIAN_REL_TOL = 1e-6
JACOBIAN_RUNTIME_S = 1.0
PINV_TOL = 1e-8
PINV_RUNTIME_S = 5.0
NORMALIZATION_ENDPOINT_TOL = 4 * np.finfo(float).eps
ROUNDTRIP_TOL = 1e-12
CURVE_REL_TOL = 1e-9
RANDOM_ANCHOR_SETS = 1000
PHYSICAL_REL_TOL = 1e-9
ZERO_CROSSING_REL_TOL = 1e-6
EQUILIBRIUM_FRACTION = 0.01
EQUILIBRIUM_TIME_S = 10.0
EQUILIBRIUM_RUNTIME_S = 5.0
OSC_RUNTIME_S = 120.0
OSC_METHODS = ("ageom", "adiff", "asecond", "apower")
OSC_PERIODS = (1.6, 1.4, 1.3, 1.2, 1.1, 1.0)
ESC_SPEED_LIMIT_RPM = 8800.0
STOP_SPEED_RPM = 60.0
ARM_RATE_BOUNDS = (-1.0, 0.6)
ARM_RATE_TRACKING_TOL = 0.1
WELCH_T_TOL = 1e-6
WELCH_P_TOL = 1e-4

HOVER_RPM = 5800.0


@pytest.fixture(scope="module")
def config():
    return load_config()


def test_criterion_01_jacobian():
    rng = np.random.default_rng(1)
    geom = PlatformGeometry(thrust_model="quadratic")
    h = 1e-5
    worst_d = worst_j = 0.0
    start = time.perf_counter()
    for _ in range(100):
        q = random_state(rng)
        D = actuation_jacobian(q, geom.thrust_model)
        fd = np.empty_like(D)
        for k in range(q.size):
            e = np.zeros_like(q)
            e[k] = h * max(1.0, abs(q[k]))
            fd[:, k] = (actuation_vector(q + e, geom.thrust_model) - actuation_vector(q - e, geom.thrust_model)) / (2 * e[k])
        worst_d = max(worst_d, np.linalg.norm(fd - D) / np.linalg.norm(D))
        qdot = rng.normal(size=q.size) * np.r_[np.ones(6), 100 * np.ones(6)]
        step = h / np.abs(qdot).max() * np.abs(q).max()
        wdot_fd = (wrench_from_state(geom, q + step * qdot) - wrench_from_state(geom, q - step * qdot)) / (2 * step)
        wdot = allocation_jacobian(geom, q) @ qdot
        worst_j = max(worst_j, np.linalg.norm(wdot - wdot_fd) / np.linalg.norm(wdot))
    elapsed = time.perf_counter() - start
    ok = worst_d < JACOBIAN_REL_TOL and worst_j < JACOBIAN_REL_TOL and elapsed < JACOBIAN_RUNTIME_S
    assert record_criterion(1, "Jacobian correctness", ok,
                            f"max rel err D {worst_d:.1e}, J qdot {worst_j:.1e} (tol {JACOBIAN_REL_TOL:g}), {elapsed:.2f} s")


def test_criterion_02_pseudoinverse_nullspace():
    rng = np.random.default_rng(2)
    worst = [0.0, 0.0, 0.0]
    start = time.perf_counter()
    for _ in range(1000):
        J = rng.normal(size=(6, 12))
        w = rng.uniform(0.1, 10.0, 12)
        P = weighted_pseudoinverse(J, w)
        jerk = rng.normal(size=6)
        star = rng.normal(size=12)
        worst[0] = max(worst[0], np.linalg.norm(J @ P - np.eye(6)))
        worst[1] = max(worst[1], np.linalg.norm(J @ (np.eye(12) - P @ J)))
        worst[2] = max(worst[2], np.linalg.norm(J @ allocate_jerk(J, jerk, w, star) - jerk))
    elapsed = time.perf_counter() - start
    ok = max(worst) < PINV_TOL and elapsed < PINV_RUNTIME_S
    assert record_criterion(2, "pseudoinverse and nullspace algebra", ok,
                            f"|JJ+-I| {worst[0]:.1e}, |J(I-J+J)| {worst[1]:.1e}, jerk residual {worst[2]:.1e} "
                            f"(tol {PINV_TOL:g}), {elapsed:.2f} s")


def test_criterion_03_normalization():
    rng = np.random.default_rng(3)
    end_err = trip_err = 0.0
    scaling_ok = True
    for _ in range(1000):
        lo = rng.uniform(-2e3, 2e3, 12)
        hi = lo + rng.uniform(1e-2, 4e3, 12)
        nmap = build_normalization(ActuatorLimits(lo, hi))
        end_err = max(end_err, np.abs(nmap.apply(lo) + 1).max(), np.abs(nmap.apply(hi) - 1).max())
        qdot = rng.uniform(lo - (hi - lo), hi + (hi - lo))
        magnitude = np.maximum(np.abs(qdot), np.maximum(np.abs(lo), np.abs(hi)))
        trip_err = max(trip_err, (np.abs(denormalize(nmap, nmap.apply(qdot)) - qdot) / magnitude).max())
        qbar = rng.uniform(-3, 3, 12)
        out = saturate(qbar)
        k = out @ qbar / (qbar @ qbar)
        scaling_ok &= bool(k >= 0 and np.allclose(out, k * qbar, rtol=0, atol=1e-15) and np.abs(out).max() <= 1.0)
    ok = end_err <= NORMALIZATION_ENDPOINT_TOL and trip_err < ROUNDTRIP_TOL and scaling_ok
    assert record_criterion(3, "normalization exactness", ok,
                            f"endpoint err {end_err:.1e}, round trip {trip_err:.1e}, saturation uniform {scaling_ok}")


def _relative_residual(curves, anchors):
    scale = max(abs(anchors.accel_max_at_min), abs(anchors.accel_min_at_max), abs(anchors.accel_high), abs(anchors.accel_low))
    return np.abs(constraint_residuals(curves, anchors)).max() / scale


def test_criterion_04_limit_curve_solver():
    a = LimitCurveAnchors.reference()
    curves = solve_limit_curves(a)
    ref_res = _relative_residual(curves, a)
    w = np.linspace(a.speed_min, a.speed_max, 20001)[1:-1]
    crossings = np.flatnonzero(np.diff(np.sign(curves.midpoint(w))) != 0)
    single = len(crossings) == 1 and abs(w[crossings[0]] - a.speed_eq) <= w[1] - w[0]

    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(RANDOM_ANCHOR_SETS):
        w_max = rng.uniform(3000, 20000)
        w_l, w_h = rng.uniform(0.02, 0.3) * w_max, rng.uniform(0.7, 0.98) * w_max
        a_max, a_min = rng.uniform(1e3, 3e4), -rng.uniform(1e3, 3e4)
        anchors = LimitCurveAnchors.from_rpm(
            speed_min=0.0, speed_low=w_l, speed_high=w_h, speed_max=w_max, speed_eq=rng.uniform(w_l, w_h),
            accel_max_at_min=a_max, accel_min_at_max=a_min,
            accel_high=rng.uniform(0.3, 0.95) * a_max, accel_low=rng.uniform(0.3, 0.95) * a_min,
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            worst = max(worst, _relative_residual(solve_limit_curves(anchors), anchors))
    ok = ref_res < CURVE_REL_TOL and single and worst < CURVE_REL_TOL
    assert record_criterion(4, "limit-curve solver", ok,
                            f"reference residual {ref_res:.1e}, single midpoint crossing at equilibrium {single}, "
                            f"worst of {RANDOM_ANCHOR_SETS} random sets {worst:.1e} (tol {CURVE_REL_TOL:g})")


def test_criterion_05_physical_curve():
    eta, volt, i_max, j_r, drag = 0.8, 23.0, 17.0, 4.5e-4, 3.5e-7
    p = MotorPowerParams(efficiency=eta, voltage=volt, current_max=i_max, rotor_inertia=j_r, drag=drag)
    w = HOVER_RPM * 2.0 * math.pi / 60.0
    oracle = eta * volt * i_max / (j_r * w) - drag / j_r * w * w
    value = physical_max_accel(p, w, clamp=False)
    rel = abs(value - oracle) / abs(oracle)
    root_oracle = (eta * volt * i_max / drag) ** (1.0 / 3.0)
    root_rel = abs(unclamped_max_accel_root(p) - root_oracle) / root_oracle
    ok = rel < PHYSICAL_REL_TOL and root_rel < ZERO_CROSSING_REL_TOL
    assert record_criterion(5, "physical curve values", ok,
                            f"{value:.6g} rad/s^2 at 5800 RPM, rel err {rel:.1e}; zero crossing rel err {root_rel:.1e}")


def test_criterion_06_equilibrium_convergence(config):
    spec = parse_trajectory("hover", duration=EQUILIBRIUM_TIME_S + 1.0)
    sim = config.simulation("apower", spec, initial_speed_offsets_rpm=[1000.0, -1000.0] * 3)
    start = time.perf_counter()
    m = run_scenario(sim)
    elapsed = time.perf_counter() - start
    t = m.column("t")
    late = m.rotor_speeds_rpm()[t >= EQUILIBRIUM_TIME_S - 1e-9]
    dev = np.abs(late - HOVER_RPM).max() / HOVER_RPM
    objective_free = "hover_gain" not in config.allocator_params("apower")
    ok = m.success and objective_free and dev < EQUILIBRIUM_FRACTION and elapsed < EQUILIBRIUM_RUNTIME_S * 1.1
    assert record_criterion(6, "equilibrium convergence", ok,
                            f"max deviation after {EQUILIBRIUM_TIME_S:g} s {100 * dev:.2f}% "
                            f"(tol {100 * EQUILIBRIUM_FRACTION:g}%), {elapsed:.2f} s")


def test_criterion_07_oscillation_frontier(config):
    start = time.perf_counter()
    report = run_matrix(config, methods=list(OSC_METHODS), trajectories=[f"osc-roll-{p:g}" for p in OSC_PERIODS])
    elapsed = time.perf_counter() - start
    frontiers = failure_frontiers(report.success_grid["grid"])
    holds = frontier_ordering_holds(frontiers)
    ok = holds and elapsed < OSC_RUNTIME_S
    desc = ", ".join(f"{m} {frontiers[m]['roll'] if frontiers[m]['roll'] is not None else 'none'}" for m in OSC_METHODS)
    assert record_criterion(7, "oscillation failure-frontier ordering", ok,
                            f"slowest failing period: {desc}; {elapsed:.0f} s")


def test_criterion_08_cartwheel(config):
    runs = {m: run_scenario(config.simulation(m, "cartwheel")) for m in ("ageom", "asecond", "apower", "anosecond")}
    duration = config.trajectory("cartwheel").duration
    peak = {m: r.aggregates()["max_rotor_speed_rpm"] for m, r in runs.items()}
    ageom_fails = not runs["ageom"].success and runs["ageom"].failure_time < duration
    completes = all(runs[m].success and peak[m] < ESC_SPEED_LIMIT_RPM for m in ("asecond", "apower"))
    nosecond = runs["anosecond"]
    nosecond_ok = (not nosecond.success) or nosecond.aggregates()["saturation_events"] > 0
    ok = ageom_fails and completes and nosecond_ok
    assert record_criterion(8, "cartwheel singularity", ok,
                            f"ageom failed at {runs['ageom'].failure_time} s; peak RPM asecond {peak['asecond']:.0f}, "
                            f"apower {peak['apower']:.0f} (limit {ESC_SPEED_LIMIT_RPM:g}); anosecond success "
                            f"{nosecond.success}, saturation events {nosecond.aggregates()['saturation_events']}")


def test_criterion_09_power_drift(config):
    agg = {m: run_scenario(config.simulation(m, "fig8")).aggregates() for m in ("anosecond", "apower")}
    speed_gain = agg["anosecond"]["end_mean_rotor_speed_rpm"] / agg["apower"]["end_mean_rotor_speed_rpm"] - 1
    power_gain = agg["anosecond"]["mean_power_w"] / agg["apower"]["mean_power_w"] - 1
    ok = speed_gain > 0 and power_gain > 0
    assert record_criterion(9, "power drift on the figure-8", ok,
                            f"anosecond end speed {100 * speed_gain:+.1f}% and mean power {100 * power_gain:+.1f}% "
                            f"vs apower (reference figures 18% and 6%, not asserted)")


def test_criterion_10_propeller_stop(config):
    m = run_screw_scenario(config.simulation("apower", "screw"))
    sc = config.screw
    k, marks = sc.rotor, m.extras["screw"]
    t, phase = m.column("t"), m.column("phase")
    speed = m.column(f"omega_rpm_{k}")
    alpha = m.column(f"alpha_{k}")
    stopped = marks["stop_reached"] is not None and speed[phase == 2].max() < STOP_SPEED_RPM
    bounded = m.column("pos_err").max() < config.fail_threshold
    commands = [rate for _, rate in sc.arm_profile]
    profile_ok = min(commands) >= ARM_RATE_BOUNDS[0] and max(commands) <= ARM_RATE_BOUNDS[1]
    # second-half mean arm rate of each motion segment; holds are reported only
    errors, begin = [], marks["stop_reached"]
    for duration, rate in sc.arm_profile:
        sel = (t >= begin + 0.5 * duration) & (t < begin + duration)
        mean_rate = (alpha[sel][-1] - alpha[sel][0]) / (t[sel][-1] - t[sel][0])
        errors.append((rate, mean_rate - rate))
        begin += duration
    tracking = max(abs(e) for r, e in errors if r != 0.0)
    recovered = abs(speed[-1] - HOVER_RPM) / HOVER_RPM
    ok = m.success and stopped and bounded and profile_ok and tracking < ARM_RATE_TRACKING_TOL and recovered < 0.01
    detail = ", ".join(f"{r:+.1f}:{e:+.3f}" for r, e in errors)
    assert record_criterion(10, "propeller stop scenario", ok,
                            f"rotor {k} min {speed[phase == 2].min():.1f} RPM, max pos err {m.column('pos_err').max():.3f} m, "
                            f"arm rate errors (command:error) {detail}, final speed off {100 * recovered:.2f}%")


def test_criterion_11_welch():
    rng = np.random.default_rng(11)
    worst_t = worst_p = 0.0
    for i in range(20):
        a = rng.normal(0.0, rng.uniform(0.5, 3.0), rng.integers(3, 40))
        b = rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 3.0), rng.integers(3, 40))
        t, p = welch_t_test(a, b)
        ref = stats.ttest_ind(a, b, equal_var=False)
        worst_t = max(worst_t, abs(t - ref.statistic))
        worst_p = max(worst_p, abs(p - ref.pvalue))
    same = rng.normal(size=12)
    _, p_same = welch_t_test(same, same.copy())
    ok = worst_t < WELCH_T_TOL and worst_p < WELCH_P_TOL and p_same == 1.0
    assert record_criterion(11, "Welch test", ok,
                            f"max |dt| {worst_t:.1e}, max |dp| {worst_p:.1e} over 20 pairs; identical samples p = {p_same}")


def _tree_identical(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.funny_files:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors and all(_tree_identical(os.path.join(a, d), os.path.join(b, d)) for d in cmp.common_dirs)


def test_criterion_12_determinism(config, tmp_path):
    run_matrix(config, out_dir=tmp_path / "first")
    run_matrix(config, out_dir=tmp_path / "second")
    n_files = sum(len(files) for _, _, files in os.walk(tmp_path / "first"))
    ok = _tree_identical(tmp_path / "first", tmp_path / "second")
    assert record_criterion(12, "determinism", ok,
                            f"{len(config.methods)} methods x {len(config.trajectories)} trajectories, "
                            f"{n_files} files byte-identical {ok}")
