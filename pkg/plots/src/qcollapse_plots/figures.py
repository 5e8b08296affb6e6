"""Figure rendering: Bloch-sphere trajectories, probability series, outcome bars.

All rendering is deterministic: the Agg backend, a fixed style, a fixed
SVG hash salt, and no embedded dates, so identical inputs give identical
image bytes in both PNG and SVG.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .csvdata import CsvTable, read_stats, read_trajectory

plt.rcParams.update(
    {
        "figure.dpi": 120,
        "savefig.dpi": 120,
        "font.size": 9,
        "axes.titlesize": 10,
        "axes.labelsize": 9,
        "legend.fontsize": 8,
        "svg.hashsalt": "qcollapse-plots",
    }
)

SOLID = "#1f4e79"
DASHED = "#b03a2e"


@dataclass(frozen=True)
class FigureSpec:
    """What to render: input files, layout, and output destination."""

    csv_paths: tuple
    out: Path
    fmt: str = "png"
    title: str = ""

    def __post_init__(self):
        object.__setattr__(self, "csv_paths", tuple(Path(p) for p in self.csv_paths))
        object.__setattr__(self, "out", Path(self.out))
        if self.fmt not in ("png", "svg"):
            raise ValueError(f"format must be png or svg, got {self.fmt!r}")
        for p in self.csv_paths:
            if not p.exists():
                raise FileNotFoundError(f"input CSV does not exist: {p}")

    @property
    def out_path(self) -> Path:
        if self.out.suffix.lower() == f".{self.fmt}":
            return self.out
        return self.out.with_suffix(f".{self.fmt}")


def _grid(n: int) -> tuple[int, int]:
    if n <= 1:
        return 1, 1
    cols = 2 if n <= 4 else 3
    rows = int(np.ceil(n / cols))
    return rows, cols


def _panel_label(table: CsvTable) -> str:
    gamma = table.meta_value("gamma")
    if gamma is not None:
        return f"coupling = {float(gamma):g}"
    return table.path.stem


def _save(fig, spec: FigureSpec) -> Path:
    out = spec.out_path
    out.parent.mkdir(parents=True, exist_ok=True)
    # Date-free metadata keeps reruns byte-identical.
    fig.savefig(out, format=spec.fmt, metadata={"Date": None} if spec.fmt == "svg" else None)
    plt.close(fig)
    return out


def plot_bloch_trajectories(csv_paths, out, fmt: str = "png") -> Path:
    """One 3D Bloch-sphere panel per trajectory file, start point marked."""
    spec = FigureSpec(csv_paths=tuple(csv_paths), out=out, fmt=fmt)
    tables = [read_trajectory(p) for p in spec.csv_paths]
    rows, cols = _grid(len(tables))
    fig = plt.figure(figsize=(3.2 * cols, 3.2 * rows))
    theta = np.linspace(0, 2 * np.pi, 60)
    phi = np.linspace(0, np.pi, 30)
    for i, table in enumerate(tables):
        ax = fig.add_subplot(rows, cols, i + 1, projection="3d")
        xs = np.outer(np.cos(theta), np.sin(phi))
        ys = np.outer(np.sin(theta), np.sin(phi))
        zs = np.outer(np.ones_like(theta), np.cos(phi))
        ax.plot_wireframe(xs, ys, zs, color="0.85", linewidth=0.3, rstride=4, cstride=4)
        c = table.columns
        ax.plot(c["x"], c["y"], c["z"], color=SOLID, linewidth=1.0)
        ax.scatter([c["x"][0]], [c["y"][0]], [c["z"][0]], color=DASHED, s=25, marker="o")
        ax.set_title(_panel_label(table))
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_zlabel("z")
        ax.set_box_aspect((1, 1, 1))
        for axis in (ax.xaxis, ax.yaxis, ax.zaxis):
            axis.set_ticks([-1, 0, 1])
    fig.tight_layout()
    return _save(fig, spec)


def plot_probability_series(csv_paths, out, fmt: str = "png") -> Path:
    """Occupation probabilities over time: prob0 solid, prob1 dashed."""
    spec = FigureSpec(csv_paths=tuple(csv_paths), out=out, fmt=fmt)
    tables = [read_trajectory(p) for p in spec.csv_paths]
    rows, cols = _grid(len(tables))
    fig, axes = plt.subplots(rows, cols, figsize=(3.6 * cols, 2.4 * rows), squeeze=False)
    for i, table in enumerate(tables):
        ax = axes[i // cols][i % cols]
        c = table.columns
        ax.plot(c["t"], c["prob0"], color=SOLID, linestyle="-", label="P(state 0)")
        ax.plot(c["t"], c["prob1"], color=DASHED, linestyle="--", label="P(state 1)")
        ax.set_ylim(-0.05, 1.05)
        ax.set_xlabel("t (s)")
        ax.set_ylabel("probability")
        ax.set_title(_panel_label(table))
        ax.legend(loc="center right")
    for j in range(len(tables), rows * cols):
        axes[j // cols][j % cols].set_axis_off()
    fig.tight_layout()
    return _save(fig, spec)


def plot_born_bars(stats_paths, out, fmt: str = "png") -> Path:
    """Collapse-outcome fractions with 95% CI whiskers against the
    squared-amplitude prediction (dashed reference per bar)."""
    spec = FigureSpec(csv_paths=tuple(stats_paths), out=out, fmt=fmt)
    tables = [read_stats(p) for p in spec.csv_paths]
    labels, fractions, err_lo, err_hi, predictions = [], [], [], [], []
    for table in tables:
        c = table.columns
        for r in range(c["fraction_0"].size):
            labels.append(table.path.stem if c["fraction_0"].size == 1 else f"{table.path.stem}[{r}]")
            fractions.append(c["fraction_0"][r])
            err_lo.append(c["fraction_0"][r] - c["ci_low"][r])
            err_hi.append(c["ci_high"][r] - c["fraction_0"][r])
            predictions.append(c["born_p0"][r])
    xs = np.arange(len(fractions))
    fig, ax = plt.subplots(figsize=(1.6 + 1.2 * len(fractions), 3.2))
    ax.bar(xs, fractions, width=0.6, color=SOLID, alpha=0.85,
           yerr=[err_lo, err_hi], capsize=4, label="measured fraction to state 0")
    for x, p in zip(xs, predictions):
        ax.hlines(p, x - 0.38, x + 0.38, color=DASHED, linestyle="--",
                  label="squared-amplitude prediction" if x == 0 else None)
    ax.set_xticks(xs)
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("fraction collapsing to state 0")
    ax.legend(loc="upper right")
    fig.tight_layout()
    return _save(fig, spec)
