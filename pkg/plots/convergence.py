#!/usr/bin/env python3
"""Render a convergence figure from a scan CSV.

Reads a delimited scan produced by the gyroloop CLI (or any CSV with a
header row), fits a least-squares line to log y vs log x with the same
definition the CLI reports, draws the data with optional reference-slope
guides, and prints the fitted slope to stdout.

    plots/convergence.py --csv residual.csv --x epsilon --y residual \
        --slope-guide 2 --out fig.png

Stateless: one figure per invocation.
"""

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


class ColumnError(SystemExit):
    pass


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


def fit_loglog(xs, ys):
    """Same least-squares definition as the gyroloop CLI summary."""
    slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope), float(intercept)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--csv", required=True)
    ap.add_argument("--x", required=True, help="x column name (e.g. epsilon)")
    ap.add_argument("--y", required=True, help="y column name (e.g. residual)")
    ap.add_argument("--scale", choices=("loglog", "linlin"), default="loglog")
    ap.add_argument(
        "--slope-guide",
        type=float,
        action="append",
        default=[],
        help="draw a reference line with this log-log slope (repeatable)",
    )
    ap.add_argument("--title", default=None)
    ap.add_argument("--out", required=True, help="output image path")
    args = ap.parse_args(argv)

    cols = load_columns(args.csv, [args.x, args.y])
    xs, ys = cols[args.x], cols[args.y]

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    if args.scale == "loglog":
        order = np.argsort(xs)
        xs, ys = xs[order], ys[order]
        slope, intercept = fit_loglog(xs, ys)
        ax.loglog(xs, ys, "ko-", ms=5, label=f"data (slope {slope:.3f})")
        for guide in args.slope_guide:
            anchor = ys[0] * (xs / xs[0]) ** guide
            ax.loglog(xs, anchor, "--", lw=1, label=f"slope {guide:g} guide")
        print(f"slope = {slope:.12e}")
    else:
        ax.plot(xs, ys, "k-", lw=1)
        slope = None
    ax.set_xlabel(args.x)
    ax.set_ylabel(args.y)
    if args.title:
        ax.set_title(args.title)
    ax.grid(True, which="both", alpha=0.3)
    if args.scale == "loglog":
        ax.legend(fontsize=8)
    fig.savefig(args.out, dpi=150, bbox_inches="tight")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
