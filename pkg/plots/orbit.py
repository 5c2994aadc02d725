#!/usr/bin/env python3
"""Project an orbit CSV onto a plane and save the figure.

Works with the gyroloop `orbit` output (t, x, y, z, vx, vy, vz, energy, mu0)
or any CSV with named columns:

    plots/orbit.py --csv orbit.csv --out orbit.png          # x-y projection
    plots/orbit.py --csv orbit.csv --x x --y z --out fig.png

Stateless: one figure per invocation.
"""

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def load_columns(path, names):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SystemExit(f"error: empty CSV '{path}'")
        rows = [row for row in reader if row]
    if not rows:
        raise SystemExit(f"error: no data rows in '{path}'")
    cols = {}
    for name in names:
        if name not in header:
            raise SystemExit(
                f"error: column '{name}' not in '{path}'; available: {', '.join(header)}"
            )
        idx = header.index(name)
        cols[name] = np.array([float(row[idx]) for row in rows])
    return cols


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--csv", required=True)
    ap.add_argument("--x", default="x", help="abscissa column (default x)")
    ap.add_argument("--y", default="y", help="ordinate column (default y)")
    ap.add_argument("--title", default=None)
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)

    cols = load_columns(args.csv, [args.x, args.y])
    xs, ys = cols[args.x], cols[args.y]

    fig, ax = plt.subplots(figsize=(4.4, 4.4))
    ax.plot(xs, ys, "-", lw=0.6, color="tab:blue")
    ax.plot(xs[:1], ys[:1], "o", ms=5, color="tab:green", label="start")
    ax.plot(xs[-1:], ys[-1:], "s", ms=5, color="tab:red", label="end")
    ax.set_xlabel(args.x)
    ax.set_ylabel(args.y)
    ax.set_aspect("equal", adjustable="datalim")
    if args.title:
        ax.set_title(args.title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8, loc="best")
    fig.savefig(args.out, dpi=150, bbox_inches="tight")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
