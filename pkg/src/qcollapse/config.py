"""Scenario configuration files.

Configs are TOML: human-editable key/value pairs with nested sections,
one file per run.  Parsing is strict in both directions: every key the
schema does not know is rejected (typos fail loudly instead of being
ignored), and validation reports *all* problems found, not just the
first one.

Schema (sections by run mode):

    mode = "deterministic" | "stochastic" | "ensemble" | "sweep" | "figure1"

    [hamiltonian]            # all modes but figure1
    omega = 1.0              # drive angular frequency (1/s)
    gamma = 2.0              # coupling of the anti-Hermitian part (1/s)
    h0 = "sigma_x"           # Hermitian drive: named matrix or row list
    collapse_op = "sigma_z"  # Hermitian, non-degenerate
    hbar = 1.0               # optional, fixed numerical convention

    [initial]                # exactly one of the two
    amplitudes = [[1.0, 0.0], [1.0, 0.0]]   # [re, im] per entry, normalized on load
    # bloch = [1.0, 0.0, 0.0]               # unit Bloch vector (pure state)

    [integrator]             # deterministic/ensemble/stochastic/sweep
    t_end = 3.0              # horizon for every run mode
    dt = 0.0025              # optional; default 0.01/max(|omega|, |gamma|*gap)
    record_stride = 1
    norm_drift_tolerance = 1e-8

    [noise]                  # stochastic/ensemble
    collapse_rate = 10.0     # CSL rate (1/s)
    seed = 0
    scheme = "ito"           # or "stratonovich"
    dt = 1e-4                # SDE step

    [ensemble]               # ensemble mode
    n_trajectories = 10000
    epsilon = 1e-3
    checkpoints = [0.5, 1.0]

    [sweep]                  # sweep mode
    gammas = [0.5, 1.0, 2.0, 100.0]

    [output]                 # optional everywhere
    out_dir = "out"
    prefix = "run"

Matrices are either one of the names "sigma_x", "sigma_y", "sigma_z",
"zero", "identity", or a list of rows whose entries are numbers (real)
or two-element [re, im] lists.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import SIGMA_X, SIGMA_Y, SIGMA_Z, HamiltonianSpec, StateVector, ValidationError, normalize
from .deterministic import IntegratorConfig
from .stochastic import _SCHEMES, NoiseConfig

MODES = ("deterministic", "stochastic", "ensemble", "sweep", "figure1")

_NAMED_MATRICES = {
    "sigma_x": SIGMA_X,
    "sigma_y": SIGMA_Y,
    "sigma_z": SIGMA_Z,
    "zero": np.zeros((2, 2), dtype=complex),
    "identity": np.eye(2, dtype=complex),
}


class ConfigError(ValidationError):
    """Carries every validation problem found in one config file."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid config:\n" + "\n".join(f"  - {e}" for e in self.errors))


@dataclass(frozen=True)
class EnsembleSettings:
    n_trajectories: int
    epsilon: float = 1e-3
    checkpoints: tuple = ()


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully validated run description; every field ready to execute."""

    mode: str
    spec: HamiltonianSpec | None
    initial: StateVector | None
    integrator: IntegratorConfig | None
    noise: NoiseConfig | None
    ensemble: EnsembleSettings | None
    sweep_gammas: tuple | None
    out_dir: str = "."
    prefix: str = ""


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def add(self, msg: str):
        self.errors.append(msg)

    def number(self, table, section, key, default=None, required=False):
        if key not in table:
            if required:
                self.add(f"{section}.{key}: required")
            return default
        v = table[key]
        if not _is_number(v):
            self.add(f"{section}.{key}: expected number, got {type(v).__name__} ({v!r})")
            return default
        return float(v)

    def integer(self, table, section, key, default=None, required=False):
        if key not in table:
            if required:
                self.add(f"{section}.{key}: required")
            return default
        v = table[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.add(f"{section}.{key}: expected integer, got {type(v).__name__} ({v!r})")
            return default
        return v

    def string(self, table, section, key, default=None, required=False, choices=None):
        if key not in table:
            if required:
                self.add(f"{section}.{key}: required")
            return default
        v = table[key]
        if not isinstance(v, str):
            self.add(f"{section}.{key}: expected string, got {type(v).__name__} ({v!r})")
            return default
        if choices is not None and v not in choices:
            self.add(f"{section}.{key}: must be one of {choices}, got {v!r}")
            return default
        return v

    def unknown_keys(self, table, section, allowed):
        for key in table:
            if key not in allowed:
                self.add(f"unknown key {key!r} in section [{section}]")


def _parse_matrix(value, section, key, errs: _Collector):
    if isinstance(value, str):
        if value in _NAMED_MATRICES:
            return _NAMED_MATRICES[value]
        errs.add(f"{section}.{key}: unknown matrix name {value!r} "
                 f"(known: {sorted(_NAMED_MATRICES)})")
        return None
    if not isinstance(value, list) or not value:
        errs.add(f"{section}.{key}: expected a matrix name or list of rows")
        return None
    n = len(value)
    out = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != n:
            errs.add(f"{section}.{key}: row {i} must be a list of {n} entries")
            return None
        for j, entry in enumerate(row):
            if _is_number(entry):
                out[i, j] = float(entry)
            elif (
                isinstance(entry, list)
                and len(entry) == 2
                and all(_is_number(x) for x in entry)
            ):
                out[i, j] = complex(float(entry[0]), float(entry[1]))
            else:
                errs.add(f"{section}.{key}[{i}][{j}]: expected number or [re, im] pair, got {entry!r}")
                return None
    return out


def _parse_initial(table, errs: _Collector) -> StateVector | None:
    errs.unknown_keys(table, "initial", {"amplitudes", "bloch"})
    has_amp, has_bloch = "amplitudes" in table, "bloch" in table
    if has_amp == has_bloch:
        errs.add("initial: give exactly one of 'amplitudes' or 'bloch'")
        return None
    if has_amp:
        raw = table["amplitudes"]
        if not isinstance(raw, list) or len(raw) < 2:
            errs.add("initial.amplitudes: expected a list of at least two [re, im] pairs")
            return None
        amps = []
        for i, entry in enumerate(raw):
            if _is_number(entry):
                amps.append(complex(float(entry), 0.0))
            elif isinstance(entry, list) and len(entry) == 2 and all(_is_number(x) for x in entry):
                amps.append(complex(float(entry[0]), float(entry[1])))
            else:
                errs.add(f"initial.amplitudes[{i}]: expected number or [re, im] pair, got {entry!r}")
                return None
        try:
            return normalize(np.array(amps))
        except ValidationError as e:
            errs.add(f"initial.amplitudes: {e}")
            return None
    raw = table["bloch"]
    if not (isinstance(raw, list) and len(raw) == 3 and all(_is_number(x) for x in raw)):
        errs.add("initial.bloch: expected [x, y, z] numbers")
        return None
    x, y, z = (float(v) for v in raw)
    r = x * x + y * y + z * z
    if abs(r - 1.0) > 1e-6:
        errs.add(f"initial.bloch: must be a unit vector (pure state), got |v|^2 = {r!r}")
        return None
    c0 = np.sqrt(max(0.0, (1.0 + z) / 2.0))
    if c0 > 1e-12:
        amps = np.array([c0, (x + 1j * y) / (2.0 * c0)])
    else:
        amps = np.array([0.0, 1.0], dtype=complex)
    return normalize(amps)


_SECTIONS_BY_MODE = {
    "deterministic": {"hamiltonian", "initial", "integrator", "output"},
    "stochastic": {"hamiltonian", "initial", "integrator", "noise", "output"},
    "ensemble": {"hamiltonian", "initial", "integrator", "noise", "ensemble", "output"},
    "sweep": {"hamiltonian", "initial", "integrator", "sweep", "output"},
    "figure1": {"output"},
}
_REQUIRED_BY_MODE = {
    "deterministic": {"hamiltonian", "initial", "integrator"},
    "stochastic": {"hamiltonian", "initial", "integrator", "noise"},
    "ensemble": {"hamiltonian", "initial", "integrator", "noise", "ensemble"},
    "sweep": {"hamiltonian", "initial", "integrator", "sweep"},
    "figure1": set(),
}


def parse_config_data(data: dict) -> ScenarioConfig:
    """Validate an already-loaded TOML table into a ScenarioConfig.

    Raises :class:`ConfigError` carrying the full list of problems.
    """
    errs = _Collector()
    if not isinstance(data, dict):
        raise ConfigError(["config root must be a table"])
    mode = errs.string(data, "(top level)", "mode", required=True, choices=MODES)
    allowed_sections = _SECTIONS_BY_MODE.get(mode, set.union(*map(set, _SECTIONS_BY_MODE.values())))
    errs.unknown_keys(data, "(top level)", {"mode"} | allowed_sections)
    if mode is not None:
        for sect in _REQUIRED_BY_MODE[mode]:
            if sect not in data:
                errs.add(f"mode {mode!r} requires section [{sect}]")

    spec = None
    if "hamiltonian" in data:
        h = data["hamiltonian"]
        errs.unknown_keys(h, "hamiltonian", {"omega", "gamma", "h0", "collapse_op", "hbar", "degeneracy_tolerance"})
        omega = errs.number(h, "hamiltonian", "omega", required=True)
        gamma = errs.number(h, "hamiltonian", "gamma", required=True)
        hbar = errs.number(h, "hamiltonian", "hbar", default=1.0)
        degtol = errs.number(h, "hamiltonian", "degeneracy_tolerance", default=1e-9)
        h0 = _parse_matrix(h.get("h0"), "hamiltonian", "h0", errs) if "h0" in h else errs.add("hamiltonian.h0: required")
        a = (
            _parse_matrix(h.get("collapse_op"), "hamiltonian", "collapse_op", errs)
            if "collapse_op" in h
            else errs.add("hamiltonian.collapse_op: required")
        )
        if omega is not None and gamma is not None and h0 is not None and a is not None:
            try:
                spec = HamiltonianSpec(
                    omega=omega, h0=h0, collapse_op=a, gamma=gamma, hbar=hbar,
                    degeneracy_tolerance=degtol,
                )
            except ValidationError as e:
                errs.add(f"hamiltonian: {e}")

    initial = _parse_initial(data["initial"], errs) if "initial" in data else None
    if initial is not None and spec is not None and initial.n != spec.n:
        errs.add(f"initial state has {initial.n} amplitudes but matrices are {spec.n}x{spec.n}")

    integrator = None
    if "integrator" in data:
        it = data["integrator"]
        errs.unknown_keys(it, "integrator", {"t_end", "dt", "record_stride", "norm_drift_tolerance"})
        t_end = errs.number(it, "integrator", "t_end", required=True)
        dt = errs.number(it, "integrator", "dt")
        stride = errs.integer(it, "integrator", "record_stride", default=1)
        tol = errs.number(it, "integrator", "norm_drift_tolerance", default=1e-8)
        if t_end is not None:
            try:
                integrator = IntegratorConfig(
                    t_end=t_end, dt=dt, record_stride=stride, norm_drift_tolerance=tol
                )
            except ValidationError as e:
                errs.add(f"integrator: {e}")

    noise = None
    if "noise" in data:
        nt = data["noise"]
        errs.unknown_keys(nt, "noise", {"collapse_rate", "seed", "scheme", "dt"})
        rate = errs.number(nt, "noise", "collapse_rate", required=True)
        seed = errs.integer(nt, "noise", "seed", default=0)
        scheme = errs.string(nt, "noise", "scheme", default="ito", choices=_SCHEMES)
        ndt = errs.number(nt, "noise", "dt", required=True)
        if rate is not None and ndt is not None and scheme is not None:
            try:
                noise = NoiseConfig(collapse_rate=rate, seed=seed, dt=ndt, scheme=scheme)
            except ValidationError as e:
                errs.add(f"noise: {e}")

    ensemble = None
    if "ensemble" in data:
        et = data["ensemble"]
        errs.unknown_keys(et, "ensemble", {"n_trajectories", "epsilon", "checkpoints"})
        ntraj = errs.integer(et, "ensemble", "n_trajectories", required=True)
        eps = errs.number(et, "ensemble", "epsilon", default=1e-3)
        cps = et.get("checkpoints", [])
        if not isinstance(cps, list) or not all(_is_number(c) for c in cps):
            errs.add("ensemble.checkpoints: expected a list of numbers")
            cps = []
        if ntraj is not None:
            if ntraj < 1:
                errs.add(f"ensemble.n_trajectories: must be >= 1, got {ntraj}")
            else:
                ensemble = EnsembleSettings(
                    n_trajectories=ntraj, epsilon=eps, checkpoints=tuple(float(c) for c in cps)
                )

    sweep_gammas = None
    if "sweep" in data:
        st = data["sweep"]
        errs.unknown_keys(st, "sweep", {"gammas"})
        gd = st.get("gammas")
        if gd is None:
            errs.add("sweep.gammas: required")
        elif not isinstance(gd, list) or not gd or not all(_is_number(g) for g in gd):
            errs.add("sweep.gammas: expected a non-empty list of numbers")
        else:
            sweep_gammas = tuple(float(g) for g in gd)

    out_dir, prefix = ".", mode or "run"
    if "output" in data:
        ot = data["output"]
        errs.unknown_keys(ot, "output", {"out_dir", "prefix"})
        out_dir = errs.string(ot, "output", "out_dir", default=".") or "."
        prefix = errs.string(ot, "output", "prefix", default=prefix) or prefix

    if errs.errors:
        raise ConfigError(errs.errors)
    return ScenarioConfig(
        mode=mode,
        spec=spec,
        initial=initial,
        integrator=integrator,
        noise=noise,
        ensemble=ensemble,
        sweep_gammas=sweep_gammas,
        out_dir=out_dir,
        prefix=prefix,
    )


def parse_config(path) -> ScenarioConfig:
    """Load and validate a TOML scenario file."""
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as e:
        raise ConfigError([f"cannot read {p}: {e}"]) from e
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as e:
        raise ConfigError([f"malformed TOML in {p}: {e}"]) from e
    return parse_config_data(data)


def apply_overrides(cfg: ScenarioConfig, seed=None, out_dir=None, dt=None, t_end=None) -> ScenarioConfig:
    """Apply command-line overrides on top of a parsed config.

    ``dt`` replaces the step of whichever integrator the mode uses (the
    RK4 step for deterministic modes, the SDE step for stochastic ones);
    ``t_end`` replaces the horizon; ``seed`` the noise seed.
    """
    if seed is not None and cfg.noise is not None:
        cfg = replace(cfg, noise=NoiseConfig(
            collapse_rate=cfg.noise.collapse_rate, seed=int(seed), dt=cfg.noise.dt, scheme=cfg.noise.scheme,
        ))
    if dt is not None:
        if cfg.mode in ("stochastic", "ensemble") and cfg.noise is not None:
            cfg = replace(cfg, noise=NoiseConfig(
                collapse_rate=cfg.noise.collapse_rate, seed=cfg.noise.seed, dt=float(dt), scheme=cfg.noise.scheme,
            ))
        elif cfg.integrator is not None:
            cfg = replace(cfg, integrator=replace(cfg.integrator, dt=float(dt)))
    if t_end is not None and cfg.integrator is not None:
        cfg = replace(cfg, integrator=replace(cfg.integrator, t_end=float(t_end)))
    if out_dir is not None:
        cfg = replace(cfg, out_dir=str(out_dir))
    return cfg
