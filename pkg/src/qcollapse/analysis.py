"""Ensemble statistics over the stochastic dynamics.

The claim under test: when the localization noise acts alone (omega = 0
or a drive commuting with the collapse operator), the fraction of noise
realizations that end up in a given collapse eigenstate equals the
squared amplitude of the initial state on that eigenstate.  This module
measures outcome frequencies with binomial confidence intervals,
compares them to those squared amplitudes, and checks the ensemble-mean
density matrix against direct integration of the averaged (Lindblad)
master equation, which serves as the independent oracle.

Uncollapsed-at-horizon trajectories are counted separately and excluded
from the outcome fractions; folding them into either outcome would bias
the comparison and nothing in the model says where they belong.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DegenerateOperatorError,
    DensityMatrix,
    DimensionMismatchError,
    HamiltonianSpec,
    StateVector,
    ValidationError,
)
from .deterministic import (
    CollapseReport,
    IntegratorConfig,
    RegimeReport,
    classify_regime,
    detect_collapse,
    integrate_deterministic,
)
from .stochastic import (
    EnsembleBatch,
    NoiseConfig,
    StochasticTrajectory,
    integrate_lindblad,
    propagate_ensemble,
)


@dataclass(frozen=True)
class EnsembleStats:
    """Aggregate collapse statistics of one stochastic ensemble.

    ``fraction_0`` and its 95% confidence interval are computed over
    *collapsed* trajectories only; ``born_p0`` is the squared amplitude
    of the initial state on the lambda0 eigenstate, the prediction the
    fraction is compared against.  ``z_mean``/``z_var`` are moments of
    the Bloch z at ``checkpoint_times``.
    """

    n_trajectories: int
    count_to_0: int
    count_to_1: int
    count_uncollapsed: int
    fraction_0: float
    ci_low: float
    ci_high: float
    born_p0: float
    checkpoint_times: tuple
    z_mean: tuple
    z_var: tuple
    base_seed: int

    def __post_init__(self):
        total = self.count_to_0 + self.count_to_1 + self.count_uncollapsed
        if total != self.n_trajectories:
            raise ValidationError("outcome counts must sum to n_trajectories")
        if not 0.0 <= self.fraction_0 <= 1.0:
            raise ValidationError(f"fraction_0 out of range: {self.fraction_0!r}")

    @property
    def uncollapsed_fraction(self) -> float:
        return self.count_uncollapsed / self.n_trajectories


@dataclass(frozen=True, eq=False)
class LindbladComparison:
    """Per-checkpoint deviation of the ensemble mean from the master equation.

    ``deviation`` is the Frobenius norm of (mean rho - reference rho) and
    ``standard_error`` the Monte-Carlo error of the mean on the same
    scale (root of summed entrywise variances over N).
    """

    times: np.ndarray
    deviation: np.ndarray
    standard_error: np.ndarray
    mean_rho: np.ndarray
    reference_rho: np.ndarray
    n_trajectories: int


@dataclass(frozen=True)
class GammaSummary:
    """One row of a coupling sweep."""

    gamma: float
    regime: RegimeReport
    collapse: CollapseReport
    final_bloch: tuple


def born_probabilities(initial: StateVector, collapse_op) -> tuple[float, float]:
    """Squared amplitudes of the initial state on the collapse eigenstates.

    Returned as (p0, p1) with p0 belonging to the larger eigenvalue;
    p0 + p1 = 1 for a two-level state.
    """
    a = np.asarray(collapse_op, dtype=complex)
    if a.shape != (2, 2):
        raise DimensionMismatchError(f"born_probabilities needs a 2x2 operator, got {a.shape}")
    if initial.n != 2:
        raise DimensionMismatchError(f"born_probabilities needs n = 2, got {initial.n}")
    if not np.allclose(a, a.conj().T, rtol=0.0, atol=1e-12):
        raise ValidationError("collapse operator is not Hermitian within 1e-12")
    eigvals, eigvecs = np.linalg.eigh(a)
    if eigvals[1] - eigvals[0] <= 1e-9:
        raise DegenerateOperatorError(
            f"degenerate collapse operator: eigenvalue gap {eigvals[1] - eigvals[0]:.3e}"
        )
    p0 = float(np.abs(np.vdot(eigvecs[:, 1], initial.amplitudes)) ** 2)
    p1 = float(np.abs(np.vdot(eigvecs[:, 0], initial.amplitudes)) ** 2)
    return p0, p1


def _binomial_ci(successes: int, trials: int) -> tuple[float, float, float]:
    """Normal-approximation 95% interval for a binomial fraction."""
    if trials == 0:
        return 0.0, 0.0, 0.0
    f = successes / trials
    half = 1.959963984540054 * np.sqrt(f * (1.0 - f) / trials)
    return f, max(0.0, f - half), min(1.0, f + half)


def run_ensemble(
    initial: StateVector,
    spec: HamiltonianSpec,
    noise: NoiseConfig,
    t_end: float,
    n_trajectories: int,
    epsilon: float = 1e-3,
    checkpoint_times: Sequence[float] = (),
) -> EnsembleStats:
    """Collapse-outcome statistics over n_trajectories noise realizations.

    Each trajectory is classified by the sustained |z| >= 1 - epsilon
    criterion evaluated at every integration step; the aggregation is a
    deterministic function of (initial, spec, noise config), so rerunning
    with the same base seed reproduces the stats exactly.
    """
    stats, _ = run_ensemble_detailed(
        initial, spec, noise, t_end, n_trajectories, epsilon, checkpoint_times
    )
    return stats


def run_ensemble_detailed(
    initial: StateVector,
    spec: HamiltonianSpec,
    noise: NoiseConfig,
    t_end: float,
    n_trajectories: int,
    epsilon: float = 1e-3,
    checkpoint_times: Sequence[float] = (),
) -> tuple[EnsembleStats, EnsembleBatch]:
    """As :func:`run_ensemble`, also returning the raw per-trajectory batch."""
    if n_trajectories < 1:
        raise ValidationError(f"n_trajectories must be >= 1, got {n_trajectories!r}")
    batch = propagate_ensemble(
        initial,
        spec,
        noise,
        t_end,
        n_trajectories,
        record_times=tuple(checkpoint_times),
        epsilon=epsilon,
    )
    n0 = int(np.count_nonzero(batch.target == 0))
    n1 = int(np.count_nonzero(batch.target == 1))
    nu = n_trajectories - n0 - n1
    fraction, lo, hi = _binomial_ci(n0, n0 + n1)
    p0, _ = born_probabilities(initial, spec.collapse_op)

    eigs = spec.collapse_eigenvalues()
    lam_sum, lam_gap = float(eigs[0] + eigs[1]), float(eigs[0] - eigs[1])
    zs = (2.0 * batch.expa - lam_sum) / lam_gap
    snapped = batch.times
    z_mean, z_var, kept = [], [], []
    for t in checkpoint_times:
        i = int(np.argmin(np.abs(snapped - t)))
        kept.append(float(snapped[i]))
        z_mean.append(float(np.mean(zs[i])))
        z_var.append(float(np.var(zs[i])))
    stats = EnsembleStats(
        n_trajectories=n_trajectories,
        count_to_0=n0,
        count_to_1=n1,
        count_uncollapsed=nu,
        fraction_0=fraction,
        ci_low=lo,
        ci_high=hi,
        born_p0=p0,
        checkpoint_times=tuple(kept),
        z_mean=tuple(z_mean),
        z_var=tuple(z_var),
        base_seed=noise.seed,
    )
    return stats, batch


def _mean_rho_and_se(states: np.ndarray) -> tuple[np.ndarray, float]:
    """Ensemble mean projector and the Monte-Carlo error of that mean."""
    n_traj = states.shape[0]
    rhos = states[:, :, None] * states[:, None, :].conj()
    mean = rhos.mean(axis=0)
    var = np.mean(np.abs(rhos - mean) ** 2, axis=0)
    se = float(np.sqrt(var.sum() / n_traj))
    return mean, se


def compare_to_lindblad(
    ensemble: Sequence[StochasticTrajectory] | EnsembleBatch,
    spec: HamiltonianSpec,
    rate: float,
    checkpoint_times: Sequence[float] | None = None,
    reference_dt: float | None = None,
) -> LindbladComparison:
    """Frobenius deviation of the ensemble-mean rho from the averaged equation.

    The reference is RK4 integration of the Lindblad-form master
    equation started from the ensemble-mean density matrix at the first
    recorded sample.  Accepts either a list of trajectories (recorded on
    a common grid) or an :class:`EnsembleBatch`.
    """
    if isinstance(ensemble, EnsembleBatch):
        times = ensemble.times
        states = ensemble.states  # (m, n_traj, n)
        n_traj = states.shape[1]
        state_block = states.transpose(1, 0, 2)
    else:
        if len(ensemble) == 0:
            raise ValidationError("empty ensemble")
        times = ensemble[0].times
        for tr in ensemble:
            if tr.times.shape != times.shape or not np.array_equal(tr.times, times):
                raise ValidationError("ensemble trajectories must share one time grid")
        n_traj = len(ensemble)
        state_block = np.stack([tr.states for tr in ensemble])  # (n_traj, m, n)
    if n_traj == 0:
        raise ValidationError("empty ensemble")

    if checkpoint_times is None:
        idx = np.arange(times.size)
    else:
        idx = np.array([int(np.argmin(np.abs(times - t))) for t in checkpoint_times])
    sel_times = times[idx]

    means, ses = [], []
    for i in idx:
        mean, se = _mean_rho_and_se(state_block[:, i, :])
        means.append(mean)
        ses.append(se)
    mean_rho = np.array(means)

    rho0 = mean_rho[0] if idx[0] == 0 else _mean_rho_and_se(state_block[:, 0, :])[0]
    if reference_dt is None:
        scale = max(1.0, abs(rate), abs(spec.omega))
        reference_dt = 1e-3 / scale
    t_rel = sel_times - times[0]
    ref_times, ref_rhos = integrate_lindblad(
        DensityMatrix(rho0), spec, rate, t_rel.tolist(), reference_dt
    )
    # the reference run also records t=0 and its own final step; keep the
    # requested checkpoints only, matched by time
    picked = np.array([int(np.argmin(np.abs(ref_times - t))) for t in t_rel])
    ref = ref_rhos[picked]

    deviation = np.array([float(np.linalg.norm(mean_rho[i] - ref[i])) for i in range(idx.size)])
    return LindbladComparison(
        times=sel_times,
        deviation=deviation,
        standard_error=np.array(ses),
        mean_rho=mean_rho,
        reference_rho=ref,
        n_trajectories=n_traj,
    )


def gamma_sweep(
    initial: StateVector,
    h0,
    collapse_op,
    omega: float,
    gamma_values: Sequence[float],
    config: IntegratorConfig,
    epsilon: float = 1e-3,
) -> list[GammaSummary]:
    """Deterministic runs over a list of couplings, one summary row each."""
    if len(gamma_values) == 0:
        raise ValidationError("gamma_values must be non-empty")
    rows = []
    for g in gamma_values:
        spec = HamiltonianSpec(omega=omega, h0=h0, collapse_op=collapse_op, gamma=float(g))
        regime = classify_regime(spec)
        traj = integrate_deterministic(initial, spec, config)
        report = detect_collapse(traj, epsilon)
        rows.append(
            GammaSummary(
                gamma=float(g),
                regime=regime,
                collapse=report,
                final_bloch=tuple(float(v) for v in traj.bloch[-1]),
            )
        )
    return rows
