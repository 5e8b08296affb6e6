"""Ensemble statistics, collapse-outcome frequencies, master-equation oracle."""

import numpy as np
import pytest

import qcollapse as qc

SX, SZ = qc.SIGMA_X, qc.SIGMA_Z
H0_OFF = np.zeros((2, 2))
PLUS = qc.normalize([1, 1])


def spec_free():
    return qc.HamiltonianSpec(omega=0.0, h0=H0_OFF, collapse_op=SZ, gamma=0.0)


# -------------------------------------------------------- squared amplitudes


def test_born_probabilities_equal_superposition():
    assert qc.born_probabilities(PLUS, SZ) == pytest.approx((0.5, 0.5))


def test_born_probabilities_eigenstate():
    assert qc.born_probabilities(qc.normalize([1, 0]), SZ) == pytest.approx((1.0, 0.0))


def test_born_probabilities_tilted():
    psi = qc.normalize([np.cos(np.pi / 6), np.sin(np.pi / 6)])
    p0, p1 = qc.born_probabilities(psi, SZ)
    assert (p0, p1) == pytest.approx((0.75, 0.25))
    assert p0 + p1 == pytest.approx(1.0, abs=1e-12)


def test_born_probabilities_nontrivial_basis():
    # for A = sigma_x the lambda0 eigenstate is |+>, so |+> gives p0 = 1
    assert qc.born_probabilities(PLUS, SX)[0] == pytest.approx(1.0)


def test_born_probabilities_degenerate_rejected():
    with pytest.raises(qc.DegenerateOperatorError):
        qc.born_probabilities(PLUS, np.eye(2))


# ------------------------------------------------------------ run_ensemble


def test_ensemble_eigenstate_fraction_is_exactly_one():
    noise = qc.NoiseConfig(collapse_rate=10.0, seed=4, dt=1e-3)
    stats = qc.run_ensemble(qc.normalize([1, 0]), spec_free(), noise, t_end=0.2, n_trajectories=50)
    assert stats.count_to_0 == 50
    assert stats.fraction_0 == 1.0
    assert stats.count_uncollapsed == 0
    assert stats.born_p0 == pytest.approx(1.0)


def test_ensemble_reproducible_from_seed():
    noise = qc.NoiseConfig(collapse_rate=10.0, seed=21, dt=5e-4)
    a = qc.run_ensemble(PLUS, spec_free(), noise, t_end=1.0, n_trajectories=300, checkpoint_times=[0.5])
    b = qc.run_ensemble(PLUS, spec_free(), noise, t_end=1.0, n_trajectories=300, checkpoint_times=[0.5])
    assert a == b


def test_ensemble_counts_and_moments():
    noise = qc.NoiseConfig(collapse_rate=10.0, seed=21, dt=5e-4)
    stats = qc.run_ensemble(PLUS, spec_free(), noise, t_end=1.0, n_trajectories=300, checkpoint_times=[0.0, 1.0])
    assert stats.count_to_0 + stats.count_to_1 + stats.count_uncollapsed == 300
    assert stats.ci_low <= stats.fraction_0 <= stats.ci_high
    assert stats.z_mean[0] == pytest.approx(0.0, abs=1e-12)  # initial |+>
    assert stats.z_var[0] == pytest.approx(0.0, abs=1e-12)
    assert stats.z_var[1] == pytest.approx(1.0, rel=0.1)  # fully split at Gamma*t = 10


def test_ensemble_born_fraction_within_three_sigma():
    # statistical acceptance: a single 3-sigma failure is tolerated once,
    # two consecutive failures are a real failure
    psi = qc.normalize([np.cos(np.pi / 6), np.sin(np.pi / 6)])
    n = 2000
    band = 3.0 * np.sqrt(0.75 * 0.25 / n)

    def trial(seed):
        noise = qc.NoiseConfig(collapse_rate=10.0, seed=seed, dt=5e-4)
        stats = qc.run_ensemble(psi, spec_free(), noise, t_end=2.0, n_trajectories=n)
        assert stats.count_uncollapsed / n < 0.01
        return abs(stats.fraction_0 - 0.75) < band

    assert trial(814) or trial(815)


def test_ensemble_stats_count_invariant_enforced():
    with pytest.raises(qc.ValidationError):
        qc.EnsembleStats(
            n_trajectories=10,
            count_to_0=5,
            count_to_1=4,
            count_uncollapsed=2,
            fraction_0=0.5,
            ci_low=0.4,
            ci_high=0.6,
            born_p0=0.5,
            checkpoint_times=(),
            z_mean=(),
            z_var=(),
            base_seed=0,
        )


# ----------------------------------------------------- Lindblad comparison


def test_compare_constant_ensemble_zero_deviation():
    e0 = qc.normalize([1, 0])
    noise = qc.NoiseConfig(collapse_rate=2.0, seed=5, dt=1e-3)
    trajs = [
        qc.simulate_stochastic(e0, spec_free(), noise, 0.2, record_stride=50, trajectory_index=j)
        for j in range(100)
    ]
    cmp = qc.compare_to_lindblad(trajs, spec_free(), 2.0)
    assert np.all(cmp.deviation < 1e-12)
    assert cmp.n_trajectories == 100


def test_compare_rejects_empty_ensemble():
    with pytest.raises(qc.ValidationError, match="empty ensemble"):
        qc.compare_to_lindblad([], spec_free(), 1.0)


def test_compare_unitary_case_bounded_by_truncation():
    spec = qc.HamiltonianSpec(omega=1.0, h0=SX, collapse_op=SZ, gamma=0.0)
    noise = qc.NoiseConfig(collapse_rate=0.0, seed=6, dt=1e-4)
    batch = qc.propagate_ensemble(PLUS, spec, noise, 0.5, 100, record_times=[0.25, 0.5])
    cmp = qc.compare_to_lindblad(batch, spec, 0.0, checkpoint_times=[0.25, 0.5])
    assert np.all(cmp.deviation < 1e-6)


def test_compare_offdiagonal_decay_matches_prediction():
    noise = qc.NoiseConfig(collapse_rate=1.0, seed=31, dt=1e-3)
    batch = qc.propagate_ensemble(PLUS, spec_free(), noise, 0.5, 2000, record_times=[0.5])
    cmp = qc.compare_to_lindblad(batch, spec_free(), 1.0, checkpoint_times=[0.5])
    measured = abs(cmp.mean_rho[-1][0, 1])
    predicted = 0.5 * np.exp(-1.0)
    assert measured == pytest.approx(predicted, rel=0.05)
    assert abs(cmp.reference_rho[-1][0, 1]) == pytest.approx(predicted, rel=1e-6)


def test_compare_deviation_scales_like_inverse_sqrt_n():
    # quadrupling the ensemble should halve the Monte-Carlo deviation;
    # averaged over 16 independent repeats to tame the chi fluctuations
    cps = [0.08, 0.16, 0.24]

    def avg_dev(n, seeds):
        tot = 0.0
        for s in seeds:
            noise = qc.NoiseConfig(collapse_rate=1.0, seed=s, dt=2e-3)
            b = qc.propagate_ensemble(PLUS, spec_free(), noise, 0.25, n, record_times=cps)
            tot += qc.compare_to_lindblad(b, spec_free(), 1.0, checkpoint_times=cps).deviation.sum()
        return tot / len(seeds)

    ratio = avg_dev(2000, range(5100, 5116)) / avg_dev(500, range(5000, 5016))
    assert 0.35 <= ratio <= 0.65


# ----------------------------------------------------------- coupling sweep


def test_gamma_sweep_rows():
    cfg = qc.IntegratorConfig(t_end=3.0)
    rows = qc.gamma_sweep(PLUS, SX, SZ, 1.0, [0.5, 100.0, -100.0], cfg)
    by_gamma = {r.gamma: r for r in rows}
    assert by_gamma[0.5].regime.regime is qc.Regime.OSCILLATORY
    assert not by_gamma[0.5].collapse.collapsed
    assert by_gamma[100.0].regime.regime is qc.Regime.COLLAPSING
    assert by_gamma[100.0].collapse.collapsed and by_gamma[100.0].collapse.target_index == 0
    assert by_gamma[-100.0].collapse.collapsed and by_gamma[-100.0].collapse.target_index == 1


def test_gamma_sweep_rejects_empty():
    with pytest.raises(qc.ValidationError):
        qc.gamma_sweep(PLUS, SX, SZ, 1.0, [], qc.IntegratorConfig(t_end=1.0))
