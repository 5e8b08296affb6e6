"""Reader for the harness CSV formats.

Files carry ``#`` metadata lines, then a header row, then data rows.
Trajectory files must provide the documented columns (t, x, y, z,
re_c0, im_c0, re_c1, im_c1, prob0, prob1, expA, norm_drift; stochastic
files add W); stats files one row of ensemble counts and fractions.
Missing columns are reported by name.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = (
    "t", "x", "y", "z", "re_c0", "im_c0", "re_c1", "im_c1",
    "prob0", "prob1", "expA", "norm_drift",
)
STATS_COLUMNS = (
    "n_trajectories", "count_to_0", "count_to_1", "count_uncollapsed",
    "fraction_0", "ci_low", "ci_high", "born_p0", "uncollapsed_fraction",
)


class SchemaError(ValueError):
    """Input file does not match the documented column schema."""


@dataclass(frozen=True)
class CsvTable:
    path: Path
    meta: tuple
    columns: dict

    def meta_value(self, key: str, default: str | None = None) -> str | None:
        """Value of a ``key=value`` metadata line, if present."""
        prefix = f"{key}="
        for line in self.meta:
            if line.startswith(prefix):
                return line[len(prefix):]
        return default


def read_table(path) -> CsvTable:
    p = Path(path)
    meta: list[str] = []
    header: list[str] | None = None
    rows: list[list[str]] = []
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise SchemaError(f"cannot read {p}: {e}") from e
    for line in text.splitlines():
        if not line:
            continue
        if line.startswith("#"):
            meta.append(line[1:].strip())
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append(line.split(","))
    if header is None or not rows:
        raise SchemaError(f"{p}: no header/data rows found")
    columns: dict = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        try:
            columns[name] = np.array([float(v) for v in raw])
        except ValueError:
            columns[name] = np.array(raw, dtype=object)
    return CsvTable(path=p, meta=tuple(meta), columns=columns)


def _require(table: CsvTable, names) -> None:
    missing = [n for n in names if n not in table.columns]
    if missing:
        raise SchemaError(
            f"{table.path}: missing column{'s' if len(missing) > 1 else ''} "
            + ", ".join(repr(m) for m in missing)
        )


def read_trajectory(path) -> CsvTable:
    """A deterministic or stochastic trajectory file."""
    table = read_table(path)
    _require(table, TRAJECTORY_COLUMNS)
    return table


def read_stats(path) -> CsvTable:
    """An ensemble stats file (one row per ensemble)."""
    table = read_table(path)
    _require(table, STATS_COLUMNS)
    return table
