"""Command-line entry point: ``twinbarrier <experiment> --config FILE --out DIR``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .errors import ConfigError, TwinBarrierError
from .scenario import EXPERIMENTS, config_from_dict, emit_report, read_config_dict, run_scenario

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

# flag name -> thresholds key
THRESHOLD_FLAGS = {
    "prominence": "prominence",
    "resonance": "resonance",
    "mean_vs_max": "mean_vs_max",
    "spm_rtol": "spm_rtol",
}


HELP = {
    "amplitude_scan": "closed-form amplitudes over k, checked for unitarity and against the transfer-matrix oracle",
    "series_convergence": "partial sums of the multiple-reflection series against the closed form",
    "opaque_limit_scan": "deviation of the opaque-limit amplitudes as both barriers thicken",
    "hartman_check": "first exit time, arrival statistics and transmitted packet width at the exit face",
    "asymmetric_multipeak": "reflected and transmitted peak trains for a thin-then-opaque barrier pair",
    "resonance_scan": "|T|^2 across the packet window with the opaque-limit resonance positions",
    "filter_sweep": "transmitted momentum shift as the second barrier is widened",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario JSON file")
    common.add_argument("--out", required=True, help="output directory for CSV tables and summary.json")
    common.add_argument("--seed", type=int, help="override the seed used by randomised sweeps")
    common.add_argument("--prominence", type=float, help="peak prominence as a fraction of the global maximum")
    common.add_argument("--resonance", type=float, help="near-resonance threshold on |sin(2 phi - k(L-a))|")
    common.add_argument("--mean-vs-max", type=float, dest="mean_vs_max",
                        help="minimum |mean - first peak| in units of the peak spacing")
    common.add_argument("--spm-rtol", type=float, dest="spm_rtol",
                        help="relative tolerance for stationary-phase comparisons")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(
        prog="twinbarrier",
        description="Run one double-barrier experiment from a JSON scenario file.",
        epilog="exit status: 0 all checks pass, 1 a check failed, 2 configuration or I/O error, 3 numerical error",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="experiment")
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=HELP[name], description=HELP[name])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        data = read_config_dict(args.config)
        data["experiment"] = args.experiment
        if args.seed is not None:
            data["seed"] = args.seed
        overrides = {key: getattr(args, flag) for flag, key in THRESHOLD_FLAGS.items()
                     if getattr(args, flag) is not None}
        if overrides:
            data.setdefault("thresholds", {}).update(overrides)
        cfg = config_from_dict(data)
    except ConfigError as exc:
        print(f"twinbarrier: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        report = run_scenario(cfg)
    except TwinBarrierError as exc:
        print(f"twinbarrier: {args.experiment} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    try:
        paths = emit_report(report, args.out)
    except OSError as exc:
        print(f"twinbarrier: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    for name, ok in report.checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    for path in paths:
        logging.getLogger(__name__).info("wrote %s", path)
    return EXIT_OK if all(report.checks.values()) else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
