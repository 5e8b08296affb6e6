"""Standalone script: Bloch-sphere trajectory panels from trajectory CSVs."""

from __future__ import annotations

import argparse
import sys

from .csvdata import SchemaError
from .figures import plot_bloch_trajectories


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qcollapse-plot-bloch",
        description="Render one 3D Bloch-sphere panel per trajectory CSV.",
    )
    parser.add_argument("csv", nargs="+", help="trajectory CSV files")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--svg", action="store_true", help="write SVG instead of PNG")
    args = parser.parse_args(argv)
    try:
        path = plot_bloch_trajectories(args.csv, args.out, fmt="svg" if args.svg else "png")
    except (SchemaError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
