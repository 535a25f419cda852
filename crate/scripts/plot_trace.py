#!/usr/bin/env python3
"""Plot per-node scores from a vmtopsis trace.csv, with the threshold and migration times."""

import argparse
import csv
from pathlib import Path

import matplotlib.pyplot as plt


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("trace", type=Path)
    p.add_argument("--threshold", type=float, default=75.0)
    p.add_argument("-o", "--output", type=Path, help="write an image instead of showing a window")
    args = p.parse_args()

    with args.trace.open(newline="") as f:
        rows = list(csv.DictReader(f))
    times = [float(r["time_s"]) for r in rows]
    nodes = [c[: -len("_score")] for c in rows[0] if c.endswith("_score")]

    fig, ax = plt.subplots(figsize=(9, 4.5))
    for node in nodes:
        ax.plot(times, [float(r[f"{node}_score"]) for r in rows], label=node)
    ax.axhline(args.threshold, color="grey", linestyle="--", linewidth=1)

    events = args.trace.with_name("events.csv")
    if events.exists():
        with events.open(newline="") as f:
            for e in csv.DictReader(f):
                ax.axvline(float(e["end_s"]), color="black", linewidth=0.8)
                ax.annotate(f'{e["vm"]} {e["source"]}->{e["destination"]}', (float(e["end_s"]), 2), fontsize=8)

    ax.set_xlabel("time (s)")
    ax.set_ylabel("score")
    ax.set_ylim(0, 100)
    ax.legend(loc="upper left", ncol=len(nodes))
    fig.tight_layout()
    if args.output:
        fig.savefig(args.output, dpi=120)
    else:
        plt.show()


if __name__ == "__main__":
    main()
