"""Command-line harness.

Subcommands:
    validate       check a config file and report every problem
    deterministic  integrate the norm-preserving non-unitary flow
    stochastic     integrate one noise realization of the localization SDE
    ensemble       collapse-outcome statistics over many realizations
    sweep          deterministic runs over a list of couplings
    figure1        canned four-coupling demonstration runs (no config needed)

Exit codes: 0 success, 1 validation/config error, 2 runtime or numerical
error.  All outputs are CSV files with ``#`` metadata headers; rerunning
with identical config and seed reproduces them byte for byte except for
the single timestamp line.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import GammaSummary, gamma_sweep, run_ensemble_detailed
from .config import ConfigError, ScenarioConfig, apply_overrides, parse_config
from .core import (
    SIGMA_X,
    SIGMA_Z,
    HamiltonianSpec,
    NumericsError,
    QCollapseError,
    ValidationError,
    normalize,
)
from .deterministic import (
    IntegratorConfig,
    classify_regime,
    default_dt,
    detect_collapse,
    integrate_deterministic,
)
from .output import (
    write_outcomes_csv,
    write_stats_csv,
    write_stochastic_csv,
    write_sweep_csv,
    write_trajectory_csv,
)
from .stochastic import PRNG_NAME, simulate_stochastic

FIGURE1_GAMMAS = (0.5, 1.0, 2.0, 100.0)
_OSC_PERIOD = 2.0 * np.pi / np.sqrt(3.0)  # projective period at gamma = 0.5
FIGURE1_T_END = {0.5: 3.0 * _OSC_PERIOD, 1.0: 10.0, 2.0: 3.0, 100.0: 0.05}


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage errors, per the CLI contract."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="qcollapse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qcollapse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, needs_config=True):
        p = sub.add_parser(name, help=help_)
        if needs_config:
            p.add_argument("config", help="TOML scenario file")
            p.add_argument("--seed", type=int, default=None, help="override noise seed")
            p.add_argument("--dt", type=float, default=None, help="override step size")
            p.add_argument("--t-end", type=float, default=None, help="override horizon")
        p.add_argument("--out-dir", default=None, help="override output directory")
        return p

    add("validate", "validate a config file and exit")
    add("deterministic", "run the deterministic non-unitary evolution")
    add("stochastic", "run one stochastic localization trajectory")
    add("ensemble", "run an ensemble and report outcome statistics")
    add("sweep", "deterministic runs over sweep.gammas")
    add("figure1", "canned four-coupling demonstration", needs_config=False)
    return parser


def _load(args, expected_mode: str) -> ScenarioConfig:
    cfg = parse_config(args.config)
    if cfg.mode != expected_mode:
        raise ConfigError([f"config mode is {cfg.mode!r} but the {expected_mode!r} subcommand was invoked"])
    return apply_overrides(
        cfg,
        seed=getattr(args, "seed", None),
        out_dir=args.out_dir,
        dt=getattr(args, "dt", None),
        t_end=getattr(args, "t_end", None),
    )


def _spec_meta(spec: HamiltonianSpec) -> dict:
    return {
        "omega": repr(spec.omega),
        "gamma": repr(spec.gamma),
        "hbar": repr(spec.hbar),
    }


def cmd_validate(args) -> int:
    cfg = parse_config(args.config)
    print(f"config OK: mode={cfg.mode}")
    return 0


def cmd_deterministic(args) -> int:
    cfg = _load(args, "deterministic")
    traj = integrate_deterministic(cfg.initial, cfg.spec, cfg.integrator)
    dt = cfg.integrator.dt if cfg.integrator.dt is not None else default_dt(cfg.spec, cfg.integrator.t_end)
    meta = _spec_meta(cfg.spec) | {
        "dt": repr(dt),
        "t_end": repr(cfg.integrator.t_end),
        "record_stride": str(cfg.integrator.record_stride),
    }
    path = write_trajectory_csv(Path(cfg.out_dir) / f"{cfg.prefix}.csv", traj, meta)
    report = detect_collapse(traj)
    print(f"wrote {path}")
    print(f"regime={classify_regime(cfg.spec).regime.value} collapsed={report.collapsed}")
    return 0


def cmd_stochastic(args) -> int:
    cfg = _load(args, "stochastic")
    traj = simulate_stochastic(
        cfg.initial, cfg.spec, cfg.noise, cfg.integrator.t_end,
        record_stride=cfg.integrator.record_stride,
    )
    meta = _spec_meta(cfg.spec) | {
        "collapse_rate": repr(cfg.noise.collapse_rate),
        "seed": str(cfg.noise.seed),
        "stream": str(traj.stream),
        "scheme": cfg.noise.scheme,
        "sde_dt": repr(cfg.noise.dt),
        "t_end": repr(cfg.integrator.t_end),
        "prng": PRNG_NAME,
    }
    path = write_stochastic_csv(Path(cfg.out_dir) / f"{cfg.prefix}.csv", traj, meta)
    print(f"wrote {path}")
    return 0


def cmd_ensemble(args) -> int:
    cfg = _load(args, "ensemble")
    stats, batch = run_ensemble_detailed(
        cfg.initial,
        cfg.spec,
        cfg.noise,
        cfg.integrator.t_end,
        cfg.ensemble.n_trajectories,
        epsilon=cfg.ensemble.epsilon,
        checkpoint_times=cfg.ensemble.checkpoints,
    )
    meta = _spec_meta(cfg.spec) | {
        "collapse_rate": repr(cfg.noise.collapse_rate),
        "seed": str(cfg.noise.seed),
        "scheme": cfg.noise.scheme,
        "sde_dt": repr(cfg.noise.dt),
        "t_end": repr(cfg.integrator.t_end),
        "n_trajectories": str(cfg.ensemble.n_trajectories),
        "epsilon": repr(cfg.ensemble.epsilon),
        "prng": PRNG_NAME,
    }
    out = Path(cfg.out_dir)
    p1 = write_outcomes_csv(out / f"{cfg.prefix}_outcomes.csv", batch, meta)
    p2 = write_stats_csv(out / f"{cfg.prefix}_stats.csv", stats, meta)
    print(f"wrote {p1}")
    print(f"wrote {p2}")
    print(f"n_trajectories={stats.n_trajectories}")
    print(f"count_to_0={stats.count_to_0} count_to_1={stats.count_to_1} uncollapsed={stats.count_uncollapsed}")
    print(f"fraction_0={stats.fraction_0!r} ci95=[{stats.ci_low!r}, {stats.ci_high!r}]")
    print(f"born_p0={stats.born_p0!r}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args, "sweep")
    rows = gamma_sweep(
        cfg.initial, cfg.spec.h0, cfg.spec.collapse_op, cfg.spec.omega,
        cfg.sweep_gammas, cfg.integrator,
    )
    meta = {
        "omega": repr(cfg.spec.omega),
        "hbar": repr(cfg.spec.hbar),
        "t_end": repr(cfg.integrator.t_end),
        "gammas": " ".join(repr(g) for g in cfg.sweep_gammas),
    }
    path = write_sweep_csv(Path(cfg.out_dir) / f"{cfg.prefix}.csv", rows, meta)
    print(f"wrote {path}")
    for r in rows:
        print(
            f"gamma={r.gamma:g} regime={r.regime.regime.value} "
            f"collapsed={r.collapse.collapsed} target={r.collapse.target_index}"
        )
    return 0


def run_figure1(out_dir=".", prefix="figure1") -> dict:
    """Four canned demonstration runs: the drive sigma_x against collapse
    operator sigma_z from the equal superposition, at couplings 0.5, 1,
    2 and 100 (omega = 1, hbar = 1).

    Writes one trajectory CSV per coupling plus a summary CSV with the
    regime classification and collapse outcome of each run.  Returns the
    written paths and the summary rows.
    """
    initial = normalize([1.0, 1.0])
    out = Path(out_dir)
    paths = {}
    summaries = []
    for gamma in FIGURE1_GAMMAS:
        spec = HamiltonianSpec(omega=1.0, h0=SIGMA_X, collapse_op=SIGMA_Z, gamma=gamma)
        t_end = FIGURE1_T_END[gamma]
        cfg = IntegratorConfig(t_end=t_end)
        traj = integrate_deterministic(initial, spec, cfg)
        dt = default_dt(spec, t_end)
        meta = _spec_meta(spec) | {"dt": repr(dt), "t_end": repr(t_end), "record_stride": "1"}
        path = write_trajectory_csv(out / f"{prefix}_gamma_{gamma:g}.csv", traj, meta)
        paths[gamma] = path
        summaries.append(
            GammaSummary(
                gamma=gamma,
                regime=classify_regime(spec),
                collapse=detect_collapse(traj),
                final_bloch=tuple(float(v) for v in traj.bloch[-1]),
            )
        )
    summary_path = write_sweep_csv(
        out / f"{prefix}_summary.csv",
        summaries,
        {"omega": "1.0", "hbar": "1.0", "initial": "equal superposition (1,0,0)"},
    )
    return {"paths": paths, "summary_path": summary_path, "summaries": summaries}


def cmd_figure1(args) -> int:
    result = run_figure1(out_dir=args.out_dir or ".")
    for gamma in FIGURE1_GAMMAS:
        print(f"wrote {result['paths'][gamma]}")
    print(f"wrote {result['summary_path']}")
    for r in result["summaries"]:
        print(
            f"gamma={r.gamma:g} regime={r.regime.regime.value} "
            f"collapsed={r.collapse.collapsed} target={r.collapse.target_index}"
        )
    return 0


_COMMANDS = {
    "validate": cmd_validate,
    "deterministic": cmd_deterministic,
    "stochastic": cmd_stochastic,
    "ensemble": cmd_ensemble,
    "sweep": cmd_sweep,
    "figure1": cmd_figure1,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return 1
    except NumericsError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 2
    except ValidationError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return 1
    except QCollapseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 2


def run() -> int:
    return main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(run())
