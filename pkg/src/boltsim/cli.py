"""Command-line entry point.

    boltsim run <scenario> [--variant V] [--batch N] [--seed S]
                [--out DIR] [--serve] [--port P] [--rate-limit HZ]
                [--realtime]

The scenario argument is a JSON file path or the bare name of a packaged
scenario (nominal, exp_compliance_ab, exp_vision_fault, exp_driver_fault).
Exit status is 0 iff the spec's expected_outcome (when declared) matched.
"""

import argparse
import json
import sys

from boltsim import backend_name
from boltsim.errors import SpecError
from boltsim.gateway import DEFAULT_PORT, TelemetryGateway
from boltsim.runner import batch_summary, run_batch, run_scenario
from boltsim.scenario import (build_spec, load_document, locate,
                              resolve_variant, variant_names)


def _build_parser():
    parser = argparse.ArgumentParser(prog="boltsim",
                                     description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a scenario")
    run.add_argument("scenario", help="scenario file or packaged name")
    run.add_argument("--variant", default=None,
                     help="variant to run (default: all declared, or base)")
    run.add_argument("--batch", type=int, default=0, metavar="N",
                     help="run N seeded trials per variant")
    run.add_argument("--seed", type=int, default=None,
                     help="seed (base seed for --batch)")
    run.add_argument("--out", default=None, metavar="DIR",
                     help="directory for logs and reports")
    run.add_argument("--serve", action="store_true",
                     help="expose live telemetry on a WebSocket")
    run.add_argument("--port", type=int, default=DEFAULT_PORT)
    run.add_argument("--rate-limit", type=float, default=30.0, metavar="HZ",
                     help="telemetry broadcast rate limit")
    run.add_argument("--realtime", action="store_true",
                     help="pace the loop to wall-clock time (implied by --serve)")
    return parser


def _gateway_hello(spec):
    return {
        "name": spec.name,
        "variant": spec.variant,
        "dt": 0.002,
        "rate_limit_hz": 30.0,
        "robot": {
            "dh": [list(row) for row in spec.robot.dh_parameters],
            "tool_transform": spec.robot.tool_transform.to_flat(),
            "link_radii": list(spec.robot.link_radii),
        },
        "bolt": {
            "pose": spec.bolt.true_pose.to_flat(),
            "head_across_flats": spec.bolt.head_across_flats,
            "target_torque": spec.bolt.target_torque,
        },
        "safety": {
            "force_threshold": spec.safety.force_threshold,
            "torque_threshold": spec.safety.torque_threshold,
        },
    }


def _print_report(report):
    print(f"[{report.name}{':' + report.variant if report.variant else ''}] "
          f"seed={report.seed} outcome={report.outcome} "
          f"peak_normal={report.peak_normal_force:.2f} N "
          f"torque={report.final_bolt_torque:.3f} N.m "
          f"trips={report.safety_trip_count} t={report.sim_time:.2f} s")


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _run(args)
    except SpecError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2


def _run(args):
    doc = load_document(locate(args.scenario))
    declared = variant_names(doc)
    if args.variant is not None:
        variants = [args.variant]
    else:
        variants = declared or [None]

    print(f"kernel backend: {backend_name()}")
    expected_ok = True

    if args.batch > 0:
        seed_base = args.seed if args.seed is not None else 0
        results = run_batch(doc, args.batch, seed_base=seed_base,
                            out_dir=args.out,
                            variants=[v for v in variants if v is not None]
                            or None)
        summary = batch_summary(results)
        print(json.dumps(summary, indent=2, sort_keys=True))
        for variant, reports in sorted(results.items()):
            spec = build_spec(resolve_variant(doc, variant or None))
            if spec.expected_outcome:
                expected_ok &= all(r.outcome == spec.expected_outcome
                                   for r in reports)
        return 0 if expected_ok else 1

    for variant in variants:
        spec = build_spec(resolve_variant(doc, variant))
        gateway = None
        if args.serve:
            gateway = TelemetryGateway(port=args.port,
                                       rate_limit_hz=args.rate_limit,
                                       hello=_gateway_hello(spec)).start()
            print(f"serving ws://127.0.0.1:{gateway.port}", flush=True)
        try:
            report = run_scenario(spec, seed=args.seed, out_dir=args.out,
                                  gateway=gateway,
                                  realtime=args.realtime or args.serve)
        finally:
            if gateway is not None:
                gateway.stop()
        _print_report(report)
        if spec.expected_outcome and report.outcome != spec.expected_outcome:
            expected_ok = False
    return 0 if expected_ok else 1


if __name__ == "__main__":
    sys.exit(main())
