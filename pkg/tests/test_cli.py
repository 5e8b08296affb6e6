"""Config parsing, CSV round trips, and the command-line interface."""

import numpy as np
import pytest

import qcollapse as qc
from qcollapse.cli import main, run_figure1
from qcollapse.config import ConfigError, parse_config
from qcollapse.output import read_csv

MINIMAL_DET = """
mode = "deterministic"

[hamiltonian]
omega = 1.0
gamma = 2.0
h0 = "sigma_x"
collapse_op = "sigma_z"

[initial]
amplitudes = [[1.0, 0.0], [1.0, 0.0]]

[integrator]
t_end = 1.0
"""

STOCH = """
mode = "stochastic"

[hamiltonian]
omega = 0.0
gamma = 0.0
h0 = "zero"
collapse_op = "sigma_z"

[initial]
bloch = [1.0, 0.0, 0.0]

[integrator]
t_end = 0.2
record_stride = 10

[noise]
collapse_rate = 10.0
seed = 42
dt = 1e-3
"""

ENSEMBLE = """
mode = "ensemble"

[hamiltonian]
omega = 0.0
gamma = 0.0
h0 = "zero"
collapse_op = "sigma_z"

[initial]
amplitudes = [[1.0, 0.0], [1.0, 0.0]]

[integrator]
t_end = 1.0

[noise]
collapse_rate = 10.0
seed = 7
dt = 1e-3

[ensemble]
n_trajectories = 200
"""

SWEEP = """
mode = "sweep"

[hamiltonian]
omega = 1.0
gamma = 1.0
h0 = "sigma_x"
collapse_op = "sigma_z"

[initial]
bloch = [1.0, 0.0, 0.0]

[integrator]
t_end = 3.0

[sweep]
gammas = [0.5, 100.0, -100.0]
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def strip_timestamp(path):
    lines = path.read_text().splitlines()
    return [ln for ln in lines if not ln.startswith("# generated:")]


# ------------------------------------------------------------- parse_config


def test_parse_minimal_deterministic_defaults(tmp_path):
    cfg = parse_config(write(tmp_path, MINIMAL_DET))
    assert cfg.mode == "deterministic"
    assert cfg.integrator.dt is None  # resolved to the default rule at run time
    assert cfg.integrator.record_stride == 1
    assert cfg.integrator.norm_drift_tolerance == 1e-8
    assert cfg.out_dir == "." and cfg.prefix == "deterministic"
    assert np.allclose(cfg.initial.amplitudes, np.array([1, 1]) / np.sqrt(2))


def test_parse_degenerate_collapse_op_named(tmp_path):
    bad = MINIMAL_DET.replace('collapse_op = "sigma_z"', 'collapse_op = "identity"')
    with pytest.raises(ConfigError, match="degenerate collapse operator"):
        parse_config(write(tmp_path, bad))


def test_parse_string_gamma_names_field(tmp_path):
    bad = MINIMAL_DET.replace("gamma = 2.0", 'gamma = "100"')
    with pytest.raises(ConfigError, match=r"hamiltonian\.gamma.*expected number"):
        parse_config(write(tmp_path, bad))


def test_parse_unknown_key_rejected(tmp_path):
    bad = MINIMAL_DET + "\n[integrator2]\nx = 1\n"
    with pytest.raises(ConfigError, match="unknown key 'integrator2'"):
        parse_config(write(tmp_path, bad))
    bad2 = MINIMAL_DET.replace("t_end = 1.0", "t_end = 1.0\ntend = 2.0")
    with pytest.raises(ConfigError, match="unknown key 'tend'"):
        parse_config(write(tmp_path, bad2))


def test_parse_collects_all_errors(tmp_path):
    bad = (
        MINIMAL_DET.replace("gamma = 2.0", 'gamma = "x"')
        .replace("omega = 1.0", 'omega = "y"')
        .replace("t_end = 1.0", "t_end = -1.0")
    )
    with pytest.raises(ConfigError) as exc:
        parse_config(write(tmp_path, bad))
    joined = str(exc.value)
    assert "hamiltonian.gamma" in joined
    assert "hamiltonian.omega" in joined
    assert "t_end" in joined
    assert len(exc.value.errors) >= 3


def test_parse_matrix_rows_and_complex_entries(tmp_path):
    text = MINIMAL_DET.replace(
        'h0 = "sigma_x"', "h0 = [[0.0, [0.0, -1.0]], [[0.0, 1.0], 0.0]]"
    )
    cfg = parse_config(write(tmp_path, text))
    assert np.allclose(cfg.spec.h0, qc.SIGMA_Y)


def test_parse_malformed_toml(tmp_path):
    with pytest.raises(ConfigError, match="malformed TOML"):
        parse_config(write(tmp_path, "mode = [unclosed"))


def test_parse_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config("/nonexistent/nowhere.toml")


def test_parse_bloch_must_be_unit(tmp_path):
    bad = STOCH.replace("bloch = [1.0, 0.0, 0.0]", "bloch = [0.5, 0.0, 0.0]")
    with pytest.raises(ConfigError, match="unit vector"):
        parse_config(write(tmp_path, bad))


# ---------------------------------------------------------------- CLI runs


def test_validate_ok(tmp_path, capsys):
    assert main(["validate", str(write(tmp_path, MINIMAL_DET))]) == 0
    assert "config OK" in capsys.readouterr().out


def test_validate_bad_exit_one(tmp_path, capsys):
    bad = MINIMAL_DET.replace("gamma = 2.0", 'gamma = "100"')
    assert main(["validate", str(write(tmp_path, bad))]) == 1
    assert "hamiltonian.gamma" in capsys.readouterr().err


def test_unknown_subcommand_usage_exit_one(capsys):
    assert main(["frobnicate"]) == 1
    err = capsys.readouterr().err
    assert "usage:" in err


def test_deterministic_run_and_roundtrip(tmp_path):
    cfg = write(tmp_path, MINIMAL_DET)
    assert main(["deterministic", str(cfg), "--out-dir", str(tmp_path / "out")]) == 0
    meta, cols = read_csv(tmp_path / "out" / "deterministic.csv")
    assert list(cols) == list(
        ("t", "x", "y", "z", "re_c0", "im_c0", "re_c1", "im_c1", "prob0", "prob1", "expA", "norm_drift")
    )
    assert cols["t"][0] == 0.0
    assert cols["prob0"][0] == pytest.approx(0.5)
    assert np.all(np.abs(cols["prob0"] + cols["prob1"] - 1.0) < 1e-12)
    assert any(m.startswith("qcollapse") for m in meta)


def test_deterministic_byte_stable_modulo_timestamp(tmp_path):
    cfg = write(tmp_path, MINIMAL_DET)
    assert main(["deterministic", str(cfg), "--out-dir", str(tmp_path / "a")]) == 0
    assert main(["deterministic", str(cfg), "--out-dir", str(tmp_path / "b")]) == 0
    a = strip_timestamp(tmp_path / "a" / "deterministic.csv")
    b = strip_timestamp(tmp_path / "b" / "deterministic.csv")
    assert a == b


def test_deterministic_bad_dt_exit_two(tmp_path, capsys):
    cfg = write(tmp_path, MINIMAL_DET)
    assert main(["deterministic", str(cfg), "--dt", "0.3", "--out-dir", str(tmp_path)]) == 2
    assert "step size too large" in capsys.readouterr().err


def test_mode_mismatch_exit_one(tmp_path, capsys):
    cfg = write(tmp_path, MINIMAL_DET)
    assert main(["stochastic", str(cfg), "--out-dir", str(tmp_path)]) == 1


def test_stochastic_run_seed_override(tmp_path):
    cfg = write(tmp_path, STOCH)
    assert main(["stochastic", str(cfg), "--out-dir", str(tmp_path / "a")]) == 0
    assert main(["stochastic", str(cfg), "--out-dir", str(tmp_path / "b")]) == 0
    assert main(["stochastic", str(cfg), "--seed", "43", "--out-dir", str(tmp_path / "c")]) == 0
    a = strip_timestamp(tmp_path / "a" / "stochastic.csv")
    b = strip_timestamp(tmp_path / "b" / "stochastic.csv")
    c = strip_timestamp(tmp_path / "c" / "stochastic.csv")
    assert a == b
    assert a != c
    meta, cols = read_csv(tmp_path / "a" / "stochastic.csv")
    assert "W" in cols
    assert cols["W"][0] == 0.0
    assert any("prng=" in m for m in meta)


def test_ensemble_run_outputs(tmp_path, capsys):
    cfg = write(tmp_path, ENSEMBLE)
    assert main(["ensemble", str(cfg), "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "fraction_0=" in out
    _, outcomes = read_csv(tmp_path / "ensemble_outcomes.csv")
    assert outcomes["trajectory"].size == 200
    assert set(np.unique(outcomes["outcome"])).issubset({-1.0, 0.0, 1.0})
    _, stats = read_csv(tmp_path / "ensemble_stats.csv")
    assert stats["n_trajectories"][0] == 200
    assert (
        stats["count_to_0"][0] + stats["count_to_1"][0] + stats["count_uncollapsed"][0] == 200
    )
    assert stats["born_p0"][0] == pytest.approx(0.5)


def test_sweep_run(tmp_path, capsys):
    cfg = write(tmp_path, SWEEP)
    assert main(["sweep", str(cfg), "--out-dir", str(tmp_path)]) == 0
    _, cols = read_csv(tmp_path / "sweep.csv")
    by_gamma = {g: i for i, g in enumerate(cols["gamma"])}
    assert cols["regime"][by_gamma[0.5]] == "oscillatory"
    assert cols["collapsed"][by_gamma[0.5]] == 0.0
    assert cols["regime"][by_gamma[100.0]] == "collapsing"
    assert cols["collapsed"][by_gamma[100.0]] == 1.0
    assert cols["target_index"][by_gamma[100.0]] == 0.0
    assert cols["target_index"][by_gamma[-100.0]] == 1.0


def test_figure1_outputs(tmp_path):
    result = run_figure1(out_dir=tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "figure1_gamma_0.5.csv",
        "figure1_gamma_1.csv",
        "figure1_gamma_100.csv",
        "figure1_gamma_2.csv",
        "figure1_summary.csv",
    ]
    for gamma, path in result["paths"].items():
        _, cols = read_csv(path)
        assert cols["t"][0] == 0.0
        assert (cols["x"][0], cols["y"][0], cols["z"][0]) == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)
    rows = {r.gamma: r for r in result["summaries"]}
    assert rows[0.5].regime.regime is qc.Regime.OSCILLATORY
    assert not rows[0.5].collapse.collapsed
    assert rows[1.0].regime.regime is qc.Regime.EXCEPTIONAL
    assert rows[100.0].collapse.collapsed and rows[100.0].collapse.target_index == 0


def test_figure1_cli_exit_zero(tmp_path, capsys):
    assert main(["figure1", "--out-dir", str(tmp_path)]) == 0
    assert "figure1_summary.csv" in capsys.readouterr().out
