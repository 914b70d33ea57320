"""Command-line entry point.

    sim bounds|converge|compare|lifetime [--config FILE] [--seed S]
        [--paper-scale] [--out DIR] [--workers N]

``sim bounds`` exits with status 2 if any analytic constant fails its
Monte Carlo check; ``sim bounds --constants`` just prints the six
closed-form constants as ``name,value`` CSV rows.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .harness import ExperimentConfig, run_experiment
from .targets import analytic_bounds

_COMPARE_PROTOCOLS = ("evenrep-h", "evenrep-p", "sponsored", "flip")


def default_config(experiment: str) -> ExperimentConfig:
    if experiment == "compare":
        return ExperimentConfig(experiment="compare", protocols=_COMPARE_PROTOCOLS)
    if experiment == "lifetime":
        return ExperimentConfig(
            experiment="lifetime",
            protocols=_COMPARE_PROTOCOLS,
            comm_radius=(0.08,),
            snapshot_every=5,
        )
    return ExperimentConfig(experiment=experiment)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description=__doc__)
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in ("bounds", "converge", "compare", "lifetime"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI config file (defaults used if omitted)")
        p.add_argument("--seed", type=int, help="override the root seed")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--workers", type=int, help="trial worker processes")
        p.add_argument(
            "--paper-scale",
            action="store_true",
            help="run the full 200-trial profile instead of the desk-scale default",
        )
        if name == "bounds":
            p.add_argument(
                "--constants",
                action="store_true",
                help="print the six closed-form constants as name,value CSV and exit",
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.experiment == "bounds" and getattr(args, "constants", False):
        ab = analytic_bounds()
        print("name,value")
        for name in ("lb_D", "lb_U", "hex_lb_D", "hex_lb_U_upper", "poisson_D", "poisson_U"):
            print(f"{name},{getattr(ab, name)!r}")
        return 0

    if args.config:
        config = ExperimentConfig.from_file(args.config)
        if config.experiment != args.experiment:
            config = replace(config, experiment=args.experiment)
    else:
        config = default_config(args.experiment)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.out:
        config = replace(config, out_dir=args.out)
    if args.workers:
        config = replace(config, workers=args.workers)
    if args.paper_scale:
        config = replace(config, trials=200)

    result = run_experiment(config)

    if args.experiment == "bounds":
        print("scenario,metric,analytic,estimate,std_error,status")
        failed = False
        for row in result:
            status = "pass" if row.passed else "fail"
            failed |= not row.passed
            print(
                f"{row.scenario},{row.metric},{row.analytic:.6f},"
                f"{row.estimate:.6f},{row.std_error:.2e},{status}"
            )
        return 2 if failed else 0

    print(f"{args.experiment}: wrote {len(result.rows)} aggregated rows to {config.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
