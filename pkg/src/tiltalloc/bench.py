"""Method x trajectory benchmark matrix and its comparison reports."""

import csv
import json
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validation import ConfigurationError
from .sim.scenario import METHODS, run_scenario, run_screw_scenario
from .sim.stats import welch_t_test

REPORT_SCHEMA_VERSION = "1"
SIGNIFICANCE_LEVEL = 0.05
# slowest to fastest; a method earlier in the tuple must fail no later than the next
FRONTIER_ORDER = (("ageom",), ("adiff",), ("asecond", "apower"))


class MonotonicityWarning(UserWarning):
    """A method failed an oscillation but completed a faster one."""


@dataclass
class CellResult:
    method: str
    trajectory: str
    seed: int
    metrics: object = None
    error: str = None

    @property
    def key(self):
        return f"{self.method}__{self.trajectory}__s{self.seed}"


@dataclass
class BenchReport:
    cells: list
    success_grid: dict
    velocity_error_summary: dict
    power_ratio: list
    speed_histograms: list
    max_rotor_speeds: list
    warnings: list = field(default_factory=list)

    def cell(self, method, trajectory, seed=0):
        for c in self.cells:
            if (c.method, c.trajectory, c.seed) == (method, trajectory, seed):
                return c
        raise KeyError((method, trajectory, seed))


def _run_cell(args):
    config, method, trajectory, seed = args
    try:
        sim = config.simulation(method, trajectory, seed)
        runner = run_screw_scenario if sim.trajectory.kind == "screw" else run_scenario
        return CellResult(method, trajectory, seed, metrics=runner(sim))
    except Exception as exc:  # noqa: BLE001 - cell failures are reported, never abort the matrix
        return CellResult(method, trajectory, seed, error=f"{type(exc).__name__}: {exc}")


def _oscillation_period(name):
    if not name.startswith("osc-"):
        return None
    try:
        return name.split("-", 2)[1], float(name.split("-", 2)[2])
    except (IndexError, ValueError):
        return None


def failure_frontiers(grid):
    """Slowest failing oscillation period per method and axis (``None`` if all pass).

    ``grid`` maps method -> trajectory -> cell dict with a ``success`` key.
    """
    out = {}
    for method, row in grid.items():
        per_axis = {}
        for traj, cell in row.items():
            parsed = _oscillation_period(traj)
            if parsed is None:
                continue
            axis, period = parsed
            per_axis.setdefault(axis, None)
            if not cell["success"]:
                cur = per_axis[axis]
                per_axis[axis] = period if cur is None else max(cur, period)
        out[method] = per_axis
    return out


def frontier_ordering_holds(frontiers, order=FRONTIER_ORDER):
    """True when each earlier method group fails at an equal-or-slower period.

    A method that completes every period counts as failing beyond the fastest one.
    Methods missing from ``frontiers`` are skipped.
    """
    axes = sorted({a for f in frontiers.values() for a in f})
    for axis in axes:
        def level(m):
            p = frontiers[m].get(axis)
            return 0.0 if p is None else p

        groups = [[m for m in g if m in frontiers] for g in order]
        groups = [g for g in groups if g]
        for slow, fast in zip(groups, groups[1:]):
            if min(level(m) for m in slow) < max(level(m) for m in fast):
                return False
    return True


def monotonicity_violations(grid):
    """Methods that fail at some period yet complete a faster one on the same axis."""
    issues = []
    for method, row in grid.items():
        by_axis = {}
        for traj, cell in row.items():
            parsed = _oscillation_period(traj)
            if parsed is not None:
                by_axis.setdefault(parsed[0], []).append((parsed[1], cell["success"]))
        for axis, items in by_axis.items():
            items.sort(reverse=True)
            failed_at = None
            for period, ok in items:
                if not ok and failed_at is None:
                    failed_at = period
                elif ok and failed_at is not None:
                    issues.append(f"{method} fails osc-{axis}-{failed_at:g} but completes osc-{axis}-{period:g}")
    return issues


def _histograms(cells, bins):
    rows = []
    for c in cells:
        if c.metrics is None or c.metrics.timeseries.shape[0] == 0:
            continue
        speeds = c.metrics.rotor_speeds_rpm().ravel()
        counts, edges = np.histogram(speeds, bins=bins)
        total = max(int(counts.sum()), 1)
        for lo, hi, n in zip(edges[:-1], edges[1:], counts):
            rows.append({"method": c.method, "trajectory": c.trajectory, "seed": c.seed, "bin_low_rpm": float(lo),
                         "bin_high_rpm": float(hi), "count": int(n), "fraction": n / total})
    return rows


def _power_ratios(cells):
    ref = {(c.trajectory, c.seed): c.metrics.aggregates()["mean_power_w"]
           for c in cells if c.method == "apower" and c.metrics is not None}
    rows = []
    for c in cells:
        if c.metrics is None:
            continue
        mean_power = c.metrics.aggregates()["mean_power_w"]
        base = ref.get((c.trajectory, c.seed))
        ratio = mean_power / base if (mean_power is not None and base) else None
        rows.append({"method": c.method, "trajectory": c.trajectory, "seed": c.seed, "mean_power_w": mean_power,
                     "apower_mean_power_w": base, "power_ratio": ratio})
    return rows


def _max_speed_traces(cells, decimation):
    rows = []
    for c in cells:
        if c.metrics is None or c.metrics.timeseries.shape[0] == 0:
            continue
        t = c.metrics.column("t")
        peak = c.metrics.rotor_speeds_rpm().max(axis=1)
        for k in range(0, len(t), decimation):
            rows.append({"method": c.method, "trajectory": c.trajectory, "seed": c.seed, "t": float(t[k]),
                         "max_rotor_speed_rpm": float(peak[k])})
    return rows


def build_report(cells, histogram_bins_rpm=None, trace_decimation=10):
    """Aggregate finished cells into the comparison tables."""
    grid, summary = {}, {}
    for c in cells:
        cell = {"seed": c.seed}
        if c.metrics is None:
            cell.update(success=False, failure_time=None, error=c.error)
        else:
            d = c.metrics.to_dict(include_samples=False)
            cell.update(success=d["success"], failure_time=d["failure_time"], error=None)
            agg = d["aggregates"]
            summary.setdefault(c.method, {})[f"{c.trajectory}__s{c.seed}"] = {
                "success": d["success"],
                "linear_velocity_error": agg["linear_velocity_error"],
                "angular_velocity_error": agg["angular_velocity_error"],
            }
        grid.setdefault(c.method, {})[c.trajectory if c.seed == 0 else f"{c.trajectory}__s{c.seed}"] = cell

    issues = monotonicity_violations(grid)
    for msg in issues:
        warnings.warn(msg, MonotonicityWarning, stacklevel=2)
    frontiers = failure_frontiers(grid)
    success_grid = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "grid": grid,
        "frontiers": frontiers,
        "frontier_ordering_holds": frontier_ordering_holds(frontiers),
        "monotonicity_warnings": issues,
    }
    bins = np.arange(0.0, 9000.0 + 1e-9, 250.0) if histogram_bins_rpm is None else np.asarray(histogram_bins_rpm, float)
    return BenchReport(
        cells=cells,
        success_grid=success_grid,
        velocity_error_summary={"schema_version": REPORT_SCHEMA_VERSION, "methods": summary},
        power_ratio=_power_ratios(cells),
        speed_histograms=_histograms(cells, bins),
        max_rotor_speeds=_max_speed_traces(cells, trace_decimation),
        warnings=issues,
    )


def run_matrix(config, methods=None, trajectories=None, seeds=None, out_dir=None, jobs=1):
    """Run every method x trajectory x seed cell and build the report.

    Cells run in a process pool when ``jobs > 1``; results are gathered in a fixed
    order, so the report does not depend on scheduling. With ``out_dir`` the
    per-cell artifacts and report files are written there.
    """
    methods = list(config.methods if methods is None else methods)
    trajectories = list(config.trajectories if trajectories is None else trajectories)
    seeds = list(config.seeds if seeds is None else seeds)
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ConfigurationError(f"unknown methods {unknown}; choose from {METHODS}")
    for name in trajectories:
        try:
            config.trajectory(name)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"trajectory {name!r}: {exc}") from exc
    tasks = [(config, m, t, s) for m in methods for t in trajectories for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_run_cell, tasks))
    else:
        cells = [_run_cell(t) for t in tasks]
    report = build_report(cells, config.histogram_bins_rpm)
    if out_dir is not None:
        write_report(report, out_dir)
    return report


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _write_csv(path, rows, fieldnames):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row[k] is None else (repr(row[k]) if isinstance(row[k], float) else row[k]))
                             for k in fieldnames})


def write_report(report, out_dir):
    """Write per-cell artifacts and the report tables under ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    cells_dir = os.path.join(out_dir, "cells")
    for c in report.cells:
        d = os.path.join(cells_dir, c.key)
        os.makedirs(d, exist_ok=True)
        if c.metrics is not None:
            c.metrics.write_timeseries_csv(os.path.join(d, "timeseries.csv"))
            c.metrics.write_json(os.path.join(d, "metrics.json"))
        else:
            _write_json(os.path.join(d, "metrics.json"), {"schema_version": REPORT_SCHEMA_VERSION, "method": c.method,
                                                          "trajectory": c.trajectory, "seed": c.seed, "error": c.error})
    _write_json(os.path.join(out_dir, "success_grid.json"), report.success_grid)
    _write_json(os.path.join(out_dir, "velocity_error_summary.json"), report.velocity_error_summary)
    _write_csv(os.path.join(out_dir, "speed_histograms.csv"), report.speed_histograms,
               ["method", "trajectory", "seed", "bin_low_rpm", "bin_high_rpm", "count", "fraction"])
    _write_csv(os.path.join(out_dir, "power_ratio.csv"), report.power_ratio,
               ["method", "trajectory", "seed", "mean_power_w", "apower_mean_power_w", "power_ratio"])
    _write_csv(os.path.join(out_dir, "max_rotor_speeds.csv"), report.max_rotor_speeds,
               ["method", "trajectory", "seed", "t", "max_rotor_speed_rpm"])


def compare_errors(metrics_a, metrics_b, alpha=SIGNIFICANCE_LEVEL):
    """Welch tests on the linear and angular velocity-error samples of two runs.

    Accepts :class:`RunMetrics` objects or their ``to_dict()`` form (as stored in
    ``metrics.json``).
    """
    def samples(m):
        d = m.to_dict() if hasattr(m, "to_dict") else m
        if "samples" not in d:
            raise ValueError("metrics carry no velocity-error samples")
        return d["samples"]

    sa, sb = samples(metrics_a), samples(metrics_b)
    out = {"alpha": alpha}
    for key, label in (("linear_velocity_error", "linear"), ("angular_velocity_error", "angular")):
        a, b = np.asarray(sa[key], float), np.asarray(sb[key], float)
        if a.size >= 2 and b.size >= 2 and np.array_equal(a, b):
            t, p = 0.0, 1.0
        else:
            t, p = welch_t_test(a, b)
        out[label] = {"t": t, "p": p, "significant": bool(p < alpha)}
    return out
