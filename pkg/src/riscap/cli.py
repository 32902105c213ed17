"""Command-line front end.

    riscap <experiment> [--config FILE] [--seed N] [--samples N] [--out DIR] [--threads N]

Experiments: fig2 (expansion diagnostics), fig3 (hypersphere capacities),
fig4 (rates and bounds versus power), fig5 (ensemble rate gain versus RIS
size), bounds (bound table for arbitrary channels).  Each run writes a CSV
and, except for `bounds`, an SVG figure into the output directory.

Exit codes: 0 success, 2 configuration error, 3 numerical-invariant violation.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import ConfigError, InvariantViolation, load_config, run_experiment

_EXPERIMENT_HELP = {
    "fig2": "scaled approximation errors of the high-SNR expansions",
    "fig3": "hypersphere-channel capacity per dimension vs SNR",
    "fig4": "capacity bounds and QR-SIC rates vs transmit power",
    "fig5": "mean QR-SIC rate gain over beamforming vs RIS size",
    "bounds": "bound/beamforming table for arbitrary channels",
}

_CANONICAL = {
    "fig2": "fig2_deltas",
    "fig3": "fig3_hsm_capacity",
    "fig4": "fig4_rate_vs_snr",
    "fig5": "fig5_rate_gain_vs_n",
    "bounds": "custom_bounds",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riscap", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="experiment", required=True)
    for short, canonical in _CANONICAL.items():
        p = sub.add_parser(short, aliases=[canonical], help=_EXPERIMENT_HELP[short])
        p.set_defaults(experiment=canonical)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the Monte-Carlo seed")
        p.add_argument("--samples", type=int, default=None, help="override the sample count")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (never changes results)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(
            args.experiment,
            path=args.config,
            overrides={
                "seed": args.seed,
                "samples": args.samples,
                "out": args.out,
                "threads": args.threads,
            },
        )
        paths = run_experiment(cfg)
    except ConfigError as exc:
        print(f"riscap: config error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"riscap: invariant violation: {exc}", file=sys.stderr)
        return 3
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
