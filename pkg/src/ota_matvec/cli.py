"""Command line entry point: ``ota-matvec run --scenario fig4 --out fig4.csv``."""

from __future__ import annotations

import argparse
import logging
import sys

from .experiments import SCENARIOS, ConfigError, emit_csv, format_csv, load_config, run_scenario

log = logging.getLogger("ota_matvec")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ota-matvec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario and write its result rows as CSV")
    run.add_argument("--config", help="flat key = value config file")
    run.add_argument("--scenario", choices=SCENARIOS)
    run.add_argument("--trials", type=int, help="Monte-Carlo trials per sweep point")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="CSV path (default: stdout)")
    run.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE", help="override a parameter; repeatable")
    run.add_argument("--analytic-only", action="store_true", default=None,
                     help="skip Monte-Carlo rows")
    run.add_argument("--jobs", type=int, dest="n_jobs", help="worker threads for trials")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.overrides, scenario=args.scenario,
                          trials=args.trials, seed=args.seed,
                          analytic_only=args.analytic_only, n_jobs=args.n_jobs)
        log.info("running %s: %d trials, seed %d", cfg.scenario, cfg.trials, cfg.seed)
        rows = run_scenario(cfg)
        if args.out:
            emit_csv(rows, args.out)
            log.info("wrote %d rows to %s", len(rows), args.out)
        else:
            sys.stdout.write(format_csv(rows))
    except (ConfigError, OSError) as exc:
        print(f"ota-matvec: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
