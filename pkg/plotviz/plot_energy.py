#!/usr/bin/env python3
"""Overlay time-series curves from one or more diagnostics.csv files.

Typical use: relative energy or enstrophy error curves of several runs on a
shared axis, linear or logarithmic (of the absolute value).

    plot_energy.py run_a/diagnostics.csv run_b/diagnostics.csv \\
        --column rel_energy_err --labels "with upwinding,without" \\
        --logy --out energies.png
"""

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {"figure.figsize": (7.0, 4.2), "font.size": 10, "lines.linewidth": 1.4,
         "axes.grid": True, "grid.alpha": 0.3, "svg.hashsalt": "plotviz"}
CURVE_STYLES = [
    {"color": "#00a0b0", "linestyle": "-"},        # cyan, solid
    {"color": "#6a3d9a", "linestyle": "--"},       # purple, dashed
    {"color": "#33a02c", "linestyle": ":"},        # green, dotted
    {"color": "#e31a1c", "linestyle": "-."},
]


class SchemaError(ValueError):
    pass


def read_series(path, column, xcolumn):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file")
        for col in (column, xcolumn):
            if col not in reader.fieldnames:
                raise SchemaError(
                    f"{path}: missing column {col!r} "
                    f"(have {', '.join(reader.fieldnames)})")
        xs, ys = [], []
        for row in reader:
            xs.append(float(row[xcolumn]))
            ys.append(float(row[column]))
    if not xs:
        raise SchemaError(f"{path}: no data rows beyond the header")
    return xs, ys


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csvs", nargs="+", help="diagnostics.csv files")
    parser.add_argument("--column", default="rel_energy_err",
                        help="series column (default rel_energy_err)")
    parser.add_argument("--xcolumn", default="time")
    parser.add_argument("--labels", default=None,
                        help="comma-separated curve labels")
    parser.add_argument("--logy", action="store_true",
                        help="plot |value| on a log axis")
    parser.add_argument("--title", default=None)
    parser.add_argument("--xlabel", default="time [s]")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)

    labels = (args.labels.split(",") if args.labels
              else [p for p in args.csvs])
    if len(labels) != len(args.csvs):
        print("error: need one label per input file", file=sys.stderr)
        return 2

    try:
        series = [read_series(p, args.column, args.xcolumn) for p in args.csvs]
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for (xs, ys), label, style in zip(series, labels,
                                          CURVE_STYLES * len(series)):
            if args.logy:
                ys = [abs(y) for y in ys]
            ax.plot(xs, ys, label=label, **style)
        if args.logy:
            ax.set_yscale("log")
        ax.set_xlabel(args.xlabel)
        ax.set_ylabel(args.column)
        if args.title:
            ax.set_title(args.title)
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(args.out, dpi=150, metadata={"Software": "plotviz"})
        plt.close(fig)
    return 0


if __name__ == "__main__":
    sys.exit(main())
