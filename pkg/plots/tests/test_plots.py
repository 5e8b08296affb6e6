"""Figure pipeline over the documented CSV formats, including the chained
acceptance check: harness figure runs -> plot scripts -> stable images."""

import shutil
import subprocess
import sys

import numpy as np
import pytest

from qcollapse_plots.bloch import main as bloch_main
from qcollapse_plots.born import main as born_main
from qcollapse_plots.csvdata import SchemaError, read_stats, read_trajectory
from qcollapse_plots.figures import (
    FigureSpec,
    plot_bloch_trajectories,
    plot_born_bars,
    plot_probability_series,
)
from qcollapse_plots.probabilities import main as prob_main

TRAJ_HEADER = "t,x,y,z,re_c0,im_c0,re_c1,im_c1,prob0,prob1,expA,norm_drift"


def write_synthetic_trajectory(path, n=50, gamma=2.0, constant_pole=False):
    """A schema-conforming trajectory: a spiral toward the pole, or a fixed point."""
    t = np.linspace(0.0, 1.0, n)
    if constant_pole:
        z = np.ones(n)
        x = y = np.zeros(n)
    else:
        z = np.tanh(4.0 * t)
        r = np.sqrt(np.maximum(0.0, 1.0 - z**2))
        x = r * np.cos(6.0 * t)
        y = r * np.sin(6.0 * t)
    prob0 = (1.0 + z) / 2.0
    prob1 = (1.0 - z) / 2.0
    c0 = np.sqrt(prob0)
    c1 = np.sqrt(prob1)
    lines = [f"# qcollapse 0.1.0 deterministic", f"# gamma={gamma!r}", TRAJ_HEADER]
    for i in range(n):
        row = [t[i], x[i], y[i], z[i], c0[i], 0.0, c1[i], 0.0, prob0[i], prob1[i], z[i], 0.0]
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_synthetic_stats(path, fraction=0.5, born=0.5, n=10000):
    half = 1.96 * np.sqrt(fraction * (1 - fraction) / n)
    lines = [
        "# qcollapse 0.1.0 ensemble-stats",
        "n_trajectories,count_to_0,count_to_1,count_uncollapsed,"
        "fraction_0,ci_low,ci_high,born_p0,uncollapsed_fraction",
        ",".join(
            [
                str(n),
                str(int(fraction * n)),
                str(n - int(fraction * n)),
                "0",
                repr(float(fraction)),
                repr(float(fraction - half)),
                repr(float(fraction + half)),
                repr(float(born)),
                "0.0",
            ]
        ),
    ]
    path.write_text("\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------- csv layer


def test_reader_roundtrip(tmp_path):
    p = write_synthetic_trajectory(tmp_path / "traj.csv")
    table = read_trajectory(p)
    assert table.columns["t"].size == 50
    assert table.meta_value("gamma") == "2.0"


def test_missing_column_named(tmp_path):
    p = tmp_path / "bad.csv"
    text = write_synthetic_trajectory(tmp_path / "ok.csv").read_text()
    lines = text.splitlines()
    header = lines[2].split(",")
    zi = header.index("z")
    out = lines[:2]
    out.append(",".join(c for c in header if c != "z"))
    for row in lines[3:]:
        vals = row.split(",")
        out.append(",".join(v for i, v in enumerate(vals) if i != zi))
    p.write_text("\n".join(out) + "\n")
    with pytest.raises(SchemaError, match="missing column 'z'"):
        read_trajectory(p)


def test_stats_reader(tmp_path):
    p = write_synthetic_stats(tmp_path / "stats.csv", fraction=0.75, born=0.75)
    table = read_stats(p)
    assert table.columns["fraction_0"][0] == 0.75


# ------------------------------------------------------------- figure layer


def test_figure_spec_validates(tmp_path):
    p = write_synthetic_trajectory(tmp_path / "t.csv")
    with pytest.raises(ValueError, match="png or svg"):
        FigureSpec(csv_paths=(p,), out=tmp_path / "o", fmt="pdf")
    with pytest.raises(FileNotFoundError):
        FigureSpec(csv_paths=(tmp_path / "missing.csv",), out=tmp_path / "o")


def test_bloch_panels_four_files(tmp_path):
    paths = [
        write_synthetic_trajectory(tmp_path / f"g{i}.csv", gamma=g)
        for i, g in enumerate((0.5, 1.0, 2.0, 100.0))
    ]
    out = plot_bloch_trajectories(paths, tmp_path / "bloch.png")
    assert out.exists() and out.stat().st_size > 10_000


def test_bloch_single_constant_trajectory(tmp_path):
    p = write_synthetic_trajectory(tmp_path / "pole.csv", constant_pole=True)
    out = plot_bloch_trajectories([p], tmp_path / "pole.png")
    assert out.exists() and out.stat().st_size > 0


def test_probability_series(tmp_path):
    p = write_synthetic_trajectory(tmp_path / "t.csv")
    out = plot_probability_series([p], tmp_path / "prob.png")
    assert out.exists() and out.stat().st_size > 0


def test_born_bars(tmp_path):
    a = write_synthetic_stats(tmp_path / "plus.csv", fraction=0.5, born=0.5)
    b = write_synthetic_stats(tmp_path / "tilted.csv", fraction=0.748, born=0.75)
    out = plot_born_bars([a, b], tmp_path / "born.png")
    assert out.exists() and out.stat().st_size > 0


def test_images_byte_stable(tmp_path):
    p = write_synthetic_trajectory(tmp_path / "t.csv")
    for fmt in ("png", "svg"):
        a = plot_probability_series([p], tmp_path / f"a.{fmt}", fmt=fmt)
        b = plot_probability_series([p], tmp_path / f"b.{fmt}", fmt=fmt)
        assert a.read_bytes() == b.read_bytes(), fmt


def test_cli_entry_points(tmp_path, capsys):
    p = write_synthetic_trajectory(tmp_path / "t.csv")
    s = write_synthetic_stats(tmp_path / "s.csv")
    assert bloch_main([str(p), "--out", str(tmp_path / "b.png")]) == 0
    assert prob_main([str(p), "--out", str(tmp_path / "p.svg"), "--svg"]) == 0
    assert born_main([str(s), "--out", str(tmp_path / "bars.png")]) == 0
    assert (tmp_path / "p.svg").exists()
    capsys.readouterr()


def test_cli_missing_column_exit_one(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("# x\nt,x\n0.0,1.0\n")
    assert bloch_main([str(bad), "--out", str(tmp_path / "b.png")]) == 1
    assert "missing column" in capsys.readouterr().err


# -------------------------------------------------- chained acceptance (8)


@pytest.fixture(scope="module")
def harness_outputs(tmp_path_factory):
    """Real CSVs from the simulation harness, via its public CLI."""
    out = tmp_path_factory.mktemp("fig1")
    exe = shutil.which("qcollapse")
    cmd = [exe, "figure1", "--out-dir", str(out)] if exe else [
        sys.executable, "-m", "qcollapse.cli", "figure1", "--out-dir", str(out)
    ]
    subprocess.run(cmd, check=True, capture_output=True)
    return out


def test_acceptance_8_plot_pipeline(harness_outputs, tmp_path):
    out = harness_outputs
    csvs = [out / f"figure1_gamma_{g}.csv" for g in ("0.5", "1", "2", "100")]
    for p in csvs:
        assert p.exists()

    bloch_png = plot_bloch_trajectories(csvs, tmp_path / "fig_bloch.png")
    prob_png = plot_probability_series(csvs, tmp_path / "fig_prob.png")
    assert bloch_png.stat().st_size > 10_000
    assert prob_png.stat().st_size > 10_000

    # qualitative features of the data driving the panels: oscillation at
    # weak coupling, monotone convergence at strong coupling
    weak = read_trajectory(csvs[0]).columns
    assert weak["prob0"].max() - weak["prob0"].min() > 0.4
    assert abs(weak["prob0"][0] - 0.5) < 1e-9
    strong = read_trajectory(csvs[3]).columns
    assert strong["prob0"][-1] > 0.999
    assert np.all(np.diff(strong["prob0"]) > -1e-9)

    # byte-stable across reruns
    again_b = plot_bloch_trajectories(csvs, tmp_path / "fig_bloch2.png")
    again_p = plot_probability_series(csvs, tmp_path / "fig_prob2.png")
    ok = (
        bloch_png.read_bytes() == again_b.read_bytes()
        and prob_png.read_bytes() == again_p.read_bytes()
    )
    print(f"ACCEPTANCE 8 (figure pipeline, qualitative features, byte-stable): {'PASS' if ok else 'FAIL'}")
    assert ok
