"""Coarse-grained stochastic dynamics: the CSL equation for one operator.

Replacing the deterministic coupling by white noise turns the
norm-preserving non-unitary flow into a stochastic localization
equation.  With X = A - <A> and collapse rate Gamma, the Ito form is

    dpsi = [-1j*omega*H0*dt - (Gamma/2)*X^2*dt + sqrt(Gamma)*X*dW] psi

and the equivalent Stratonovich form (the one the coarse-graining map
produces directly) is

    dpsi = [-1j*omega*H0 - Gamma*(X^2 - <X^2>)] psi dt + sqrt(Gamma)*X psi o dW.

The Ito equation is integrated by Euler-Maruyama, the Stratonovich one
by the stochastic Heun (predictor-corrector midpoint) scheme; both
renormalize after every step and record the pre-renormalization norm
error, which vanishes only in the continuum limit.

Noise streams come from the counter-based Philox generator keyed by
(base_seed, trajectory_index), so trajectory j of an ensemble is
bit-for-bit the same no matter how many other trajectories run, and a
single re-simulated trajectory reproduces its ensemble twin exactly.

Averaging the Ito equation over noise gives a master equation in
Lindblad form,

    drho/dt = -1j*omega*[H0, rho] + Gamma*(A rho A - 0.5*{A^2, rho}),

implemented here as the independent oracle for ensemble statistics:
under it <A> is conserved for omega = 0 (the martingale property behind
Born-rule outcome frequencies) and coherences decay at rate
Gamma*(lambda0-lambda1)^2/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DensityMatrix,
    DimensionMismatchError,
    HamiltonianSpec,
    NumericsError,
    StateVector,
    ValidationError,
    normalize,
)
from .deterministic import _expval, _matvec

PRNG_NAME = f"philox4x64 (numpy.random.Philox, numpy {np.__version__})"

ITO = "ito"
STRATONOVICH = "stratonovich"
_SCHEMES = (ITO, STRATONOVICH)

_NOISE_BLOCK = 1024  # steps of noise generated per trajectory at a time


@dataclass(frozen=True)
class NoiseConfig:
    """Noise parameters of one stochastic run.

    ``collapse_rate`` is the CSL rate Gamma (1/s), ``scheme`` selects the
    Ito (Euler-Maruyama) or Stratonovich (Heun) integrator, and ``seed``
    is the 64-bit base key of the Philox noise streams.
    """

    collapse_rate: float
    seed: int
    dt: float
    scheme: str = ITO

    def __post_init__(self):
        if isinstance(self.collapse_rate, bool) or not isinstance(
            self.collapse_rate, (int, float, np.integer, np.floating)
        ) or self.collapse_rate < 0:
            raise ValidationError(f"collapse_rate must be >= 0, got {self.collapse_rate!r}")
        object.__setattr__(self, "collapse_rate", float(self.collapse_rate))
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise ValidationError(f"seed must be an integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        if not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt!r}")
        object.__setattr__(self, "dt", float(self.dt))
        if self.scheme not in _SCHEMES:
            raise ValidationError(f"scheme must be one of {_SCHEMES}, got {self.scheme!r}")


@dataclass(frozen=True, eq=False)
class StochasticTrajectory:
    """One noise realization: sampled states plus the noise path that made it.

    Bit-for-bit reproducible from (initial state, spec, NoiseConfig,
    trajectory index); ``prng`` records the generator this relies on.
    """

    times: np.ndarray
    states: np.ndarray
    expa: np.ndarray
    wiener_path: np.ndarray
    norm_drift: np.ndarray
    seed: int
    stream: int
    scheme: str
    dt: float
    prng: str = PRNG_NAME

    @property
    def z(self) -> np.ndarray:
        """Bloch z when n = 2."""
        return (np.abs(self.states[:, 0]) ** 2 - np.abs(self.states[:, 1]) ** 2).real


def _philox(seed: int, stream: int) -> np.random.Generator:
    key = np.array([seed % 2**64, stream % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def wiener_increments(seed: int, n_steps: int, dt: float, stream: int = 0) -> np.ndarray:
    """i.i.d. normal(0, dt) increments from the Philox stream (seed, stream).

    The same (seed, stream, n_steps, dt) always produces the identical
    sequence, and a prefix of a longer sequence equals the shorter one.
    """
    if n_steps < 1:
        raise ValidationError(f"n_steps must be >= 1, got {n_steps!r}")
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt!r}")
    return _philox(seed, stream).standard_normal(n_steps) * np.sqrt(dt)


# --------------------------------------------------------------------------
# Step kernels.  All broadcast over a leading batch axis; apsi and expa are
# the collapse-operator application and normalized expectation for the
# *input* state, precomputed by the caller so each state is touched once.
# --------------------------------------------------------------------------


def _ito_increment(psi, apsi, expa, spec_arrays, rate, dw, dt):
    omega, h0, a, use_h0 = spec_arrays
    xpsi = apsi - expa[..., None] * psi
    x2psi = _matvec(a, xpsi) - expa[..., None] * xpsi
    dpsi = (-0.5 * rate * dt) * x2psi + (np.sqrt(rate) * dw)[..., None] * xpsi
    if use_h0:
        dpsi = dpsi - (1j * omega * dt) * _matvec(h0, psi)
    return psi + dpsi


def _strat_drift_sigma(psi, apsi, expa, spec_arrays, rate):
    omega, h0, a, use_h0 = spec_arrays
    xpsi = apsi - expa[..., None] * psi
    x2psi = _matvec(a, xpsi) - expa[..., None] * xpsi
    nrm2 = (psi.conj() * psi).sum(axis=-1).real
    expx2 = (psi.conj() * x2psi).sum(axis=-1).real / nrm2
    b = -rate * (x2psi - expx2[..., None] * psi)
    if use_h0:
        b = b - (1j * omega) * _matvec(h0, psi)
    return b, np.sqrt(rate) * xpsi


def _heun_increment(psi, apsi, expa, spec_arrays, rate, dw, dt):
    a = spec_arrays[2]
    b1, g1 = _strat_drift_sigma(psi, apsi, expa, spec_arrays, rate)
    pred = psi + b1 * dt + g1 * dw[..., None]
    apsi2 = _matvec(a, pred)
    expa2 = _expval(a, pred)
    b2, g2 = _strat_drift_sigma(pred, apsi2, expa2, spec_arrays, rate)
    return psi + (0.5 * dt) * (b1 + b2) + (0.5 * dw)[..., None] * (g1 + g2)


_KERNELS = {ITO: _ito_increment, STRATONOVICH: _heun_increment}


def _spec_arrays(spec: HamiltonianSpec):
    use_h0 = spec.omega != 0.0 and bool(spec.h0.any())
    return (spec.omega, spec.h0, spec.collapse_op, use_h0)


def ito_csl_step(psi: StateVector, spec: HamiltonianSpec, rate: float, dw: float, dt: float) -> StateVector:
    """One Euler-Maruyama step of the Ito localization equation, renormalized."""
    arrs = _spec_arrays(spec)
    p = psi.amplitudes
    apsi = _matvec(spec.collapse_op, p)
    expa = _expval(spec.collapse_op, p)
    out = _ito_increment(p, apsi, expa, arrs, float(rate), np.float64(dw), float(dt))
    if not np.all(np.isfinite(out)):
        raise NumericsError("non-finite state after Ito step; reduce dt")
    return normalize(out)


def stratonovich_step(psi: StateVector, spec: HamiltonianSpec, rate: float, dw: float, dt: float) -> StateVector:
    """One stochastic-Heun step of the Stratonovich form, renormalized."""
    arrs = _spec_arrays(spec)
    p = psi.amplitudes
    apsi = _matvec(spec.collapse_op, p)
    expa = _expval(spec.collapse_op, p)
    out = _heun_increment(p, apsi, expa, arrs, float(rate), np.float64(dw), float(dt))
    if not np.all(np.isfinite(out)):
        raise NumericsError("non-finite state after Stratonovich step; reduce dt")
    return normalize(out)


@dataclass(frozen=True, eq=False)
class EnsembleBatch:
    """Raw result of propagating many noise realizations in lockstep.

    ``states`` has shape (n_record, n_traj, n); ``expa``, ``wiener`` and
    ``drift`` have shape (n_record, n_traj).  Collapse bookkeeping (the
    sustained |z| >= 1 - epsilon criterion, evaluated at every
    integration step) is exposed through ``collapsed``, ``target`` and
    ``collapse_time``; entries of ``target``/``collapse_time`` are -1/NaN
    for uncollapsed trajectories.
    """

    times: np.ndarray
    states: np.ndarray
    expa: np.ndarray
    wiener: np.ndarray
    drift: np.ndarray
    final_z: np.ndarray
    collapsed: np.ndarray
    target: np.ndarray
    collapse_time: np.ndarray
    seed: int
    scheme: str
    dt: float


def _record_steps_from_times(record_times, dt: float, n_steps: int) -> np.ndarray:
    idx = {0, n_steps}
    for t in record_times or ():
        k = int(round(float(t) / dt))
        idx.add(min(max(k, 0), n_steps))
    return np.array(sorted(idx), dtype=int)


def propagate_ensemble(
    initial: StateVector,
    spec: HamiltonianSpec,
    noise: NoiseConfig,
    t_end: float,
    n_trajectories: int,
    record_times=None,
    epsilon: float = 1e-3,
    stream_offset: int = 0,
) -> EnsembleBatch:
    """Propagate n_trajectories noise realizations of one initial state.

    All trajectories march in lockstep as one (n_traj, n) block; the
    noise for lane j comes from the Philox stream keyed
    (noise.seed, stream_offset + j), generated in blocks.  Recording
    happens at t = 0, at each requested time snapped to the step grid,
    and at the final step.  Collapse is tracked at every step via the
    sustained |z| >= 1 - epsilon criterion (n = 2 only).
    """
    if initial.n != spec.n:
        raise DimensionMismatchError(f"state has n = {initial.n} but spec has n = {spec.n}")
    if n_trajectories < 1:
        raise ValidationError(f"n_trajectories must be >= 1, got {n_trajectories!r}")
    if not t_end > 0:
        raise ValidationError(f"t_end must be positive, got {t_end!r}")
    track_z = spec.n == 2
    dt = noise.dt
    rate = noise.collapse_rate
    n_steps = max(1, int(np.ceil(t_end / dt - 1e-9)))
    rec = _record_steps_from_times(record_times, dt, n_steps)
    kernel = _KERNELS[noise.scheme]
    arrs = _spec_arrays(spec)
    a = spec.collapse_op
    if track_z:
        eigs = spec.collapse_eigenvalues()
        lam_sum, lam_gap = float(eigs[0] + eigs[1]), float(eigs[0] - eigs[1])

    ntr, n = n_trajectories, spec.n
    psi = np.broadcast_to(initial.amplitudes, (ntr, n)).copy()
    gens = [_philox(noise.seed, stream_offset + j) for j in range(ntr)]
    sqrt_dt = np.sqrt(dt)
    wiener = np.zeros(ntr)
    last_drift = np.zeros(ntr)

    m = rec.size
    out_states = np.empty((m, ntr, n), dtype=complex)
    out_expa = np.empty((m, ntr))
    out_wiener = np.empty((m, ntr))
    out_drift = np.empty((m, ntr))
    times = rec * dt

    in_run = np.zeros(ntr, dtype=bool)
    run_start = np.full(ntr, np.nan)
    z = np.zeros(ntr)

    noise_buf = None
    buf_base = 0  # global step index of noise_buf[:, 0]
    pos = 0
    for k in range(n_steps + 1):
        apsi = _matvec(a, psi)
        expa = _expval(a, psi)
        if track_z:
            z = (2.0 * expa - lam_sum) / lam_gap
            mask = np.abs(z) >= 1.0 - epsilon
            run_start = np.where(mask & ~in_run, k * dt, run_start)
            in_run = mask
        if pos < m and rec[pos] == k:
            out_states[pos] = psi
            out_expa[pos] = expa
            out_wiener[pos] = wiener
            out_drift[pos] = last_drift
            pos += 1
        if k == n_steps:
            break
        if noise_buf is None or k - buf_base >= noise_buf.shape[1]:
            width = min(_NOISE_BLOCK, n_steps - k)
            noise_buf = np.empty((ntr, width))
            for j, g in enumerate(gens):
                noise_buf[j] = g.standard_normal(width)
            buf_base = k
        dw = noise_buf[:, k - buf_base] * sqrt_dt
        wiener = wiener + dw
        psi = kernel(psi, apsi, expa, arrs, rate, dw, dt)
        nrm = np.sqrt((psi.conj() * psi).sum(axis=-1).real)
        last_drift = np.abs(nrm - 1.0)
        if not np.all(np.isfinite(psi)):
            raise NumericsError(f"non-finite state at t = {(k + 1) * dt!r} (step {k + 1}); reduce dt")
        psi = psi / nrm[..., None]

    collapsed = in_run.copy()
    target = np.where(collapsed, np.where(z > 0, 0, 1), -1)
    collapse_time = np.where(collapsed, run_start, np.nan)
    return EnsembleBatch(
        times=times,
        states=out_states,
        expa=out_expa,
        wiener=out_wiener,
        drift=out_drift,
        final_z=z if track_z else np.full(ntr, np.nan),
        collapsed=collapsed,
        target=target,
        collapse_time=collapse_time,
        seed=noise.seed,
        scheme=noise.scheme,
        dt=dt,
    )


def simulate_stochastic(
    initial: StateVector,
    spec: HamiltonianSpec,
    noise: NoiseConfig,
    t_end: float,
    record_stride: int = 1,
    trajectory_index: int = 0,
) -> StochasticTrajectory:
    """Integrate one noise realization and record every ``record_stride`` steps.

    The trajectory is the (seed, trajectory_index) member of the ensemble:
    running it alone or as part of :func:`propagate_ensemble` gives
    bit-identical samples.
    """
    if record_stride < 1:
        raise ValidationError(f"record_stride must be >= 1, got {record_stride!r}")
    dt = noise.dt
    n_steps = max(1, int(np.ceil(t_end / dt - 1e-9)))
    record_times = (np.arange(0, n_steps + 1, record_stride) * dt).tolist()
    # A single run is a one-lane ensemble on the (seed, trajectory_index)
    # stream, so both code paths are literally the same floating-point ops.
    batch = propagate_ensemble(
        initial,
        spec,
        noise,
        t_end,
        1,
        record_times=record_times,
        stream_offset=trajectory_index,
    )
    return StochasticTrajectory(
        times=batch.times,
        states=batch.states[:, 0, :],
        expa=batch.expa[:, 0],
        wiener_path=batch.wiener[:, 0],
        norm_drift=batch.drift[:, 0],
        seed=noise.seed,
        stream=trajectory_index,
        scheme=noise.scheme,
        dt=dt,
    )


def lindblad_rhs(rho, spec: HamiltonianSpec, rate: float) -> np.ndarray:
    """drho/dt of the noise-averaged master equation (Lindblad form).

    Valid for pure or mixed rho; the result is traceless and preserves
    Hermiticity, which is what rules out superluminal signalling in the
    averaged dynamics.
    """
    r = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if r.shape != spec.h0.shape:
        raise DimensionMismatchError(f"rho has shape {r.shape} but spec has n = {spec.n}")
    a = spec.collapse_op
    a2 = a @ a
    out = rate * (a @ r @ a - 0.5 * (a2 @ r + r @ a2))
    if spec.omega != 0.0:
        out = out - 1j * spec.omega * (spec.h0 @ r - r @ spec.h0)
    return out


def integrate_lindblad(
    rho0: DensityMatrix,
    spec: HamiltonianSpec,
    rate: float,
    record_times,
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    """RK4-integrate the averaged master equation; the ensemble oracle.

    Returns (times, rhos) with rhos of shape (len(times), n, n), sampled
    at the requested times snapped to the step grid.
    """
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt!r}")
    t_max = max(float(t) for t in record_times)
    n_steps = max(1, int(np.ceil(t_max / dt - 1e-9))) if t_max > 0 else 0
    rec = _record_steps_from_times(record_times, dt, n_steps) if n_steps else np.array([0])
    r = np.array(rho0.entries, dtype=complex)
    out = np.empty((rec.size, r.shape[0], r.shape[1]), dtype=complex)
    pos = 0
    for k in range(n_steps + 1):
        if pos < rec.size and rec[pos] == k:
            out[pos] = r
            pos += 1
        if k == n_steps:
            break
        k1 = lindblad_rhs(r, spec, rate)
        k2 = lindblad_rhs(r + 0.5 * dt * k1, spec, rate)
        k3 = lindblad_rhs(r + 0.5 * dt * k2, spec, rate)
        k4 = lindblad_rhs(r + dt * k3, spec, rate)
        r = r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return rec * dt, out
