#!/usr/bin/env python3
"""Run every figure scenario and write one CSV per figure.

    python3 scripts/run_all.py --out results --trials 2000 --jobs 4

Without ``--trials`` each scenario uses its default (10^4 trials per point
for NMSE curves, 10^5 for the completion-outage curves of fig2).
"""

import argparse
import logging
import time
from pathlib import Path

from ota_matvec.experiments import ExperimentConfig, emit_csv, run_scenario

FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig8")

log = logging.getLogger("run_all")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--trials", type=int, help="override trials for every scenario")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--only", nargs="+", choices=FIGURES, default=FIGURES)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.only:
        trials = args.trials
        if name == "fig3":
            trials = 0
        cfg = ExperimentConfig(name, trials=trials, seed=args.seed, n_jobs=args.jobs)
        start = time.perf_counter()
        rows = run_scenario(cfg)
        emit_csv(rows, out / f"{name}.csv")
        log.info("%s: %d rows in %.1f s", name, len(rows), time.perf_counter() - start)


if __name__ == "__main__":
    main()
