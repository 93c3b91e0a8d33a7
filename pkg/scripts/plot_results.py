#!/usr/bin/env python3
"""Draw the curves stored in result CSVs (needs the ``plots`` extra).

    python3 scripts/plot_results.py results/fig4.csv results/fig8.csv --out plots

Every (series, metric) pair becomes one line; the y axis is logarithmic
except for the fig3 panel.
"""

import argparse
from collections import defaultdict
from pathlib import Path

from ota_matvec.experiments import read_csv

LOG_X = {"L", "K", "gain_sq"}


def plot_file(path: Path, out_dir: Path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = read_csv(path)
    curves = defaultdict(list)
    for r in rows:
        curves[(r.scenario, r.metric)].append((r.sweep_value, r.value, r.std_error))

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for (series, metric), pts in sorted(curves.items()):
        pts.sort()
        x, y, se = zip(*pts)
        label = f"{series.partition(';')[2] or series} {metric}"
        if any(se):
            ax.errorbar(x, y, yerr=[2 * s for s in se], label=label, capsize=2)
        else:
            ax.plot(x, y, "--" if metric != "nmse_sim" else "-", label=label)
    sweep = rows[0].sweep_param if rows else ""
    if sweep in LOG_X:
        ax.set_xscale("log", base=2 if sweep in ("L", "K") else 10)
    if not path.stem.startswith("fig3"):
        ax.set_yscale("log")
    ax.set_xlabel(sweep)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    target = out_dir / f"{path.stem}.png"
    fig.savefig(target, dpi=150)
    plt.close(fig)
    return target


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv", nargs="+", type=Path)
    parser.add_argument("--out", type=Path, default=Path("plots"))
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for path in args.csv:
        print(plot_file(path, args.out))


if __name__ == "__main__":
    main()
