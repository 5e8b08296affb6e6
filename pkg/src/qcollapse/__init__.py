"""Two-level collapse dynamics: deterministic non-unitary evolution and
its coarse-grained stochastic (CSL) counterpart, with ensemble statistics
and a command-line harness."""

from .core import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    BlochVector,
    DegenerateOperatorError,
    DensityMatrix,
    DimensionMismatchError,
    HamiltonianSpec,
    NullStateError,
    NumericsError,
    QCollapseError,
    StateVector,
    TwoLevelParams,
    ValidationError,
    bloch_to_density,
    density_to_bloch,
    expectation,
    normalize,
    state_to_bloch,
    state_to_density,
    to_collapse_eigenbasis,
)
from .deterministic import (
    CollapseReport,
    IntegratorConfig,
    Regime,
    RegimeReport,
    Trajectory,
    analytic_z_strong_coupling,
    classify_regime,
    default_dt,
    detect_collapse,
    integrate_bloch,
    integrate_deterministic,
    rhs_bloch,
    rhs_density,
    rhs_state,
)
from .stochastic import (
    ITO,
    PRNG_NAME,
    STRATONOVICH,
    EnsembleBatch,
    NoiseConfig,
    StochasticTrajectory,
    integrate_lindblad,
    ito_csl_step,
    lindblad_rhs,
    propagate_ensemble,
    simulate_stochastic,
    stratonovich_step,
    wiener_increments,
)
from .analysis import (
    EnsembleStats,
    GammaSummary,
    LindbladComparison,
    born_probabilities,
    compare_to_lindblad,
    gamma_sweep,
    run_ensemble,
    run_ensemble_detailed,
)

__version__ = "0.1.0"
