"""Delimited output files and their round-trip reader.

Every file starts with metadata lines prefixed ``#`` (package version,
run parameters, and exactly one timestamp line), then a CSV header row,
then data rows.  Floats are written with ``repr`` so re-reading a file
reproduces the exact binary values; rerunning with the same config and
seed reproduces the file byte for byte except for the timestamp line.

Column schemas
--------------
deterministic / figure-reproduction trajectories:
    t, x, y, z, re_c0, im_c0, re_c1, im_c1, prob0, prob1, expA, norm_drift
stochastic trajectories: the same plus ``W`` (cumulative Wiener path)
sweep summaries:
    gamma, regime, eig0_re, eig0_im, eig1_re, eig1_im, collapsed,
    target_index, collapse_time, final_x, final_y, final_z
ensemble outcomes:
    trajectory, outcome (0/1 eigenstate index, -1 uncollapsed),
    final_z, collapse_time
ensemble stats (one row):
    n_trajectories, count_to_0, count_to_1, count_uncollapsed,
    fraction_0, ci_low, ci_high, born_p0, uncollapsed_fraction
"""

from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analysis import EnsembleStats, GammaSummary
from .core import ValidationError
from .deterministic import Trajectory
from .stochastic import StochasticTrajectory

TRAJECTORY_COLUMNS = (
    "t", "x", "y", "z", "re_c0", "im_c0", "re_c1", "im_c1",
    "prob0", "prob1", "expA", "norm_drift",
)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _header_lines(kind: str, meta: dict) -> list[str]:
    from . import __version__

    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    lines = [f"# qcollapse {__version__} {kind}", f"# generated: {stamp}"]
    for key, value in meta.items():
        lines.append(f"# {key}={value}")
    return lines


def _write(path, lines) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return p


def _trajectory_rows(traj) -> list[str]:
    c0, c1 = traj.states[:, 0], traj.states[:, 1]
    cols = [
        traj.times,
        traj.bloch[:, 0], traj.bloch[:, 1], traj.bloch[:, 2],
        c0.real, c0.imag, c1.real, c1.imag,
        np.abs(c0) ** 2, np.abs(c1) ** 2,
        traj.expa, traj.norm_drift,
    ]
    return ["\n".join(",".join(_fmt(col[i]) for col in cols) for i in range(traj.times.size))]


def write_trajectory_csv(path, traj: Trajectory, meta: dict) -> Path:
    """Deterministic-run CSV in the documented column schema (n = 2 only)."""
    if traj.states is None:
        raise ValidationError("trajectory has no recorded states; integrate the state form")
    lines = _header_lines("deterministic", meta)
    lines.append(",".join(TRAJECTORY_COLUMNS))
    lines.extend(_trajectory_rows(traj))
    return _write(path, lines)


def write_stochastic_csv(path, traj: StochasticTrajectory, meta: dict) -> Path:
    """Stochastic-run CSV: trajectory schema plus the cumulative noise path."""
    c0, c1 = traj.states[:, 0], traj.states[:, 1]
    x = 2.0 * (c0 * c1.conj()).real
    y = -2.0 * (c0 * c1.conj()).imag
    z = np.abs(c0) ** 2 - np.abs(c1) ** 2
    cols = [
        traj.times, x, y, z,
        c0.real, c0.imag, c1.real, c1.imag,
        np.abs(c0) ** 2, np.abs(c1) ** 2,
        traj.expa, traj.norm_drift, traj.wiener_path,
    ]
    lines = _header_lines("stochastic", meta)
    lines.append(",".join(TRAJECTORY_COLUMNS + ("W",)))
    lines.append("\n".join(",".join(_fmt(col[i]) for col in cols) for i in range(traj.times.size)))
    return _write(path, lines)


def write_sweep_csv(path, rows: list[GammaSummary], meta: dict) -> Path:
    lines = _header_lines("sweep", meta)
    lines.append(
        "gamma,regime,eig0_re,eig0_im,eig1_re,eig1_im,collapsed,"
        "target_index,collapse_time,final_x,final_y,final_z"
    )
    for r in rows:
        e0, e1 = r.regime.eigenvalues
        lines.append(",".join([
            _fmt(r.gamma),
            r.regime.regime.value,
            _fmt(e0.real), _fmt(e0.imag), _fmt(e1.real), _fmt(e1.imag),
            _fmt(r.collapse.collapsed),
            _fmt(-1 if r.collapse.target_index is None else r.collapse.target_index),
            _fmt(float("nan") if r.collapse.collapse_time is None else r.collapse.collapse_time),
            _fmt(r.final_bloch[0]), _fmt(r.final_bloch[1]), _fmt(r.final_bloch[2]),
        ]))
    return _write(path, lines)


def write_outcomes_csv(path, batch, meta: dict) -> Path:
    """Per-trajectory collapse outcomes of an ensemble run."""
    lines = _header_lines("ensemble-outcomes", meta)
    lines.append("trajectory,outcome,final_z,collapse_time")
    n = batch.target.size
    lines.append("\n".join(
        ",".join([
            str(j),
            str(int(batch.target[j])),
            _fmt(batch.final_z[j]),
            _fmt(batch.collapse_time[j]),
        ])
        for j in range(n)
    ))
    return _write(path, lines)


def write_stats_csv(path, stats: EnsembleStats, meta: dict) -> Path:
    """One-row summary of an ensemble run (consumed by the plotting scripts)."""
    lines = _header_lines("ensemble-stats", meta)
    lines.append(
        "n_trajectories,count_to_0,count_to_1,count_uncollapsed,"
        "fraction_0,ci_low,ci_high,born_p0,uncollapsed_fraction"
    )
    lines.append(",".join([
        str(stats.n_trajectories),
        str(stats.count_to_0),
        str(stats.count_to_1),
        str(stats.count_uncollapsed),
        _fmt(stats.fraction_0),
        _fmt(stats.ci_low),
        _fmt(stats.ci_high),
        _fmt(stats.born_p0),
        _fmt(stats.uncollapsed_fraction),
    ]))
    return _write(path, lines)


def read_csv(path) -> tuple[list[str], dict[str, np.ndarray]]:
    """Read back any file written by this module.

    Returns (metadata lines without the ``#`` prefix, columns by name).
    Numeric columns come back as float arrays; non-numeric ones (e.g.
    ``regime``) as object arrays of strings.
    """
    meta: list[str] = []
    header: list[str] | None = None
    rows: list[list[str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                meta.append(line[1:].strip())
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append(line.split(","))
    if header is None:
        raise ValidationError(f"{path}: no header row found")
    columns: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        try:
            columns[name] = np.array([float(v) for v in raw])
        except ValueError:
            columns[name] = np.array(raw, dtype=object)
    return meta, columns
