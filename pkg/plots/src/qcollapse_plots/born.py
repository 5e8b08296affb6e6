"""Standalone script: outcome-fraction bar chart from ensemble stats CSVs."""

from __future__ import annotations

import argparse
import sys

from .csvdata import SchemaError
from .figures import plot_born_bars


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qcollapse-plot-born",
        description="Bar chart of collapse-outcome fractions with 95% CI whiskers "
        "against the squared-amplitude prediction.",
    )
    parser.add_argument("stats", nargs="+", help="ensemble stats CSV files")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--svg", action="store_true", help="write SVG instead of PNG")
    args = parser.parse_args(argv)
    try:
        path = plot_born_bars(args.stats, args.out, fmt="svg" if args.svg else "png")
    except (SchemaError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
