"""``tiltalloc`` command line: run benchmark matrices, tabulate limit curves, compare runs."""

import argparse
import csv
import json
import sys

import numpy as np

from ._validation import ConfigurationError
from .bench import compare_errors, run_matrix
from .config import SCHEMA, anchors_from_dict, load_config, load_yaml
from .power import MotorPowerParams, physical_max_accel, physical_min_accel, solve_limit_curves
from .units import rad_s_to_rpm, rpm_to_rad_s

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _cmd_run(args):
    config = load_config(args.config)
    report = run_matrix(config, methods=args.method or None, trajectories=args.trajectory or None,
                        out_dir=args.out, jobs=args.jobs)
    grid = report.success_grid["grid"]
    for method, row in grid.items():
        cells = " ".join(f"{t}={'ok' if c['success'] else 'FAIL'}" for t, c in row.items())
        print(f"{method}: {cells}")
    for msg in report.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    return EXIT_OK


def _cmd_curves(args):
    data = load_yaml(args.anchors) or {}
    if not isinstance(data, dict):
        raise ConfigurationError("anchors file must be a mapping")
    anchor_data = data.get("anchors", data)
    unknown = set(anchor_data) - SCHEMA["anchors"] - {"motor"}
    missing = SCHEMA["anchors"] - set(anchor_data)
    if unknown or missing:
        raise ConfigurationError(f"anchors: unknown {sorted(unknown)}, missing {sorted(missing)}")
    anchors = anchors_from_dict({k: v for k, v in anchor_data.items() if k in SCHEMA["anchors"]})
    motor_data = data.get("motor", {}) or {}
    motor = MotorPowerParams(**{
        ("accel_min" if k == "accel_min_rpm_s" else "accel_max" if k == "accel_max_rpm_s" else k):
            (rpm_to_rad_s(v) if k.endswith("_rpm_s") else v)
        for k, v in motor_data.items()
    })
    curves = solve_limit_curves(anchors)
    speeds_rpm = np.arange(rad_s_to_rpm(anchors.speed_min), rad_s_to_rpm(anchors.speed_max) + 1e-9, args.step)
    w = rpm_to_rad_s(speeds_rpm)
    cols = {
        "speed_rpm": speeds_rpm,
        "max_accel_rpm_s": rad_s_to_rpm(curves.max_accel(w)),
        "min_accel_rpm_s": rad_s_to_rpm(curves.min_accel(w)),
        "midpoint_rpm_s": rad_s_to_rpm(curves.midpoint(w)),
        "physical_max_accel_rpm_s": rad_s_to_rpm(physical_max_accel(motor, w)),
        "physical_min_accel_rpm_s": rad_s_to_rpm(physical_min_accel(motor, w)),
    }
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for row in zip(*cols.values()):
            writer.writerow([repr(float(v)) for v in row])
    return EXIT_OK


def _load_metrics(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"cannot parse {path}: {exc}") from exc


def _cmd_compare(args):
    try:
        result = compare_errors(_load_metrics(args.a), _load_metrics(args.b), alpha=args.alpha)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    print(json.dumps(result, indent=1, sort_keys=True))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="tiltalloc", description="Tilt-rotor allocation benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a method x trajectory matrix")
    run.add_argument("--config", help="YAML config (packaged default if omitted)")
    run.add_argument("--method", action="append", help="restrict to this method (repeatable)")
    run.add_argument("--trajectory", action="append", help="restrict to this trajectory (repeatable)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    run.set_defaults(func=_cmd_run)

    curves = sub.add_parser("curves", help="tabulate acceleration limit curves")
    curves.add_argument("--anchors", required=True, help="YAML file with the anchor set")
    curves.add_argument("--out", required=True, help="output CSV")
    curves.add_argument("--step", type=float, default=50.0, help="speed grid step in RPM")
    curves.set_defaults(func=_cmd_curves)

    compare = sub.add_parser("compare", help="Welch test on velocity errors of two runs")
    compare.add_argument("--a", required=True, help="metrics.json of the first run")
    compare.add_argument("--b", required=True, help="metrics.json of the second run")
    compare.add_argument("--alpha", type=float, default=0.05, help="significance level")
    compare.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
