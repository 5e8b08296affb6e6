"""Deterministic non-unitary, norm-preserving evolution of a pure state.

The state-vector equation of motion is

    dpsi/dt = [-1j*omega*H0 + gamma*(A - <A>)] psi,        <A> = <psi|A|psi>

which is the normalized flow of the linear (but non-unitary) evolution
generated by H = hbar*omega*H0 + 1j*gamma*A.  The subtraction of <A>
makes the right-hand side tangent to the unit sphere, so the norm is an
exact invariant of the continuous flow.  Equivalent forms implemented
here: the density-matrix equation

    drho/dt = -1j*omega*[H0, rho] + gamma*{A, rho} - 2*gamma*Tr(rho A)*rho

and, for n = 2 in the collapse operator's eigenbasis, the Bloch-vector
system (gap = lambda0 - lambda1):

    dx/dt = -omega*(a0 - d0)*y - 2*omega*b0i*z - gamma*gap*x*z
    dy/dt =  omega*(a0 - d0)*x - 2*omega*b0r*z - gamma*gap*y*z
    dz/dt =  2*omega*b0i*x + 2*omega*b0r*y - gamma*gap*(z*z - 1)

Integration is classic fixed-step RK4.  The state integrator
renormalizes after every step and records the pre-renormalization drift
|norm - 1| (a per-step O(dt^5) quantity) as a convergence diagnostic;
the Bloch integrator runs without renormalization so that staying on
the sphere is itself a check.

For gamma*gap >> omega the z component follows the closed form
z(t) = tanh(gamma*gap*t): superpositions decay into the eigenstate of
the collapse operator selected by the sign of gamma.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import (
    BlochVector,
    DensityMatrix,
    DimensionMismatchError,
    HamiltonianSpec,
    NumericsError,
    StateVector,
    TwoLevelParams,
    ValidationError,
    state_to_bloch,
    to_collapse_eigenbasis,
)

SPHERE_DRIFT_TOL = 1e-7


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integrator settings.

    ``dt=None`` selects the default step 0.01 / max(|omega|, |gamma|*gap),
    i.e. one percent of the fastest timescale in the problem.
    """

    t_end: float
    dt: float | None = None
    record_stride: int = 1
    norm_drift_tolerance: float = 1e-8

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValidationError(f"t_end must be positive, got {self.t_end!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt!r}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValidationError(f"record_stride must be an integer >= 1, got {self.record_stride!r}")
        object.__setattr__(self, "record_stride", int(self.record_stride))
        if not self.norm_drift_tolerance > 0:
            raise ValidationError("norm_drift_tolerance must be positive")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded time series of one deterministic run.

    ``states`` is None for Bloch-only integrations.  ``norm_drift`` holds
    the pre-renormalization |norm - 1| of the step ending at each sample
    (state runs) or the accumulated sphere deviation (Bloch runs).
    """

    times: np.ndarray
    bloch: np.ndarray
    expa: np.ndarray
    norm_drift: np.ndarray
    states: np.ndarray | None = None

    def __post_init__(self):
        m = self.times.size
        if not (self.bloch.shape == (m, 3) and self.expa.size == m and self.norm_drift.size == m):
            raise ValidationError("trajectory arrays must have matching lengths")
        if self.states is not None and self.states.shape[0] != m:
            raise ValidationError("trajectory arrays must have matching lengths")
        if m > 1 and not np.all(np.diff(self.times) > 0):
            raise ValidationError("trajectory times must be strictly increasing")

    @property
    def z(self) -> np.ndarray:
        return self.bloch[:, 2]


@dataclass(frozen=True)
class CollapseReport:
    """Outcome of the collapse criterion |z| >= 1 - epsilon held to the end."""

    collapsed: bool
    target_index: int | None = None
    collapse_time: float | None = None

    def __post_init__(self):
        if self.collapsed and (self.target_index is None or self.collapse_time is None):
            raise ValidationError("collapsed report requires target_index and collapse_time")


class Regime(enum.Enum):
    """Spectral character of the total Hamiltonian for a two-level spec."""

    OSCILLATORY = "oscillatory"
    EXCEPTIONAL = "exceptional"
    COLLAPSING = "collapsing"


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    eigenvalues: tuple[complex, complex]


# --------------------------------------------------------------------------
# Right-hand sides.  The array kernels broadcast over a leading batch axis
# so that one trajectory and an ensemble of trajectories share identical
# floating-point paths; matrix products are written as explicit
# multiply-and-sum reductions to keep results independent of batch shape.
# --------------------------------------------------------------------------


def _matvec(m: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """m @ psi over the last axis of psi, batched over leading axes."""
    return (m * psi[..., None, :]).sum(axis=-1)


def _expval(m: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Normalized real expectation <psi|m|psi>/<psi|psi>, batched."""
    mpsi = _matvec(m, psi)
    num = (psi.conj() * mpsi).sum(axis=-1).real
    den = (psi.conj() * psi).sum(axis=-1).real
    return num / den


def _rhs_state_array(psi: np.ndarray, omega: float, h0: np.ndarray, a: np.ndarray, gamma: float) -> np.ndarray:
    expa = _expval(a, psi)
    out = gamma * (_matvec(a, psi) - expa[..., None] * psi)
    if omega != 0.0:
        out = out - 1j * omega * _matvec(h0, psi)
    return out


def rhs_state(psi: StateVector, spec: HamiltonianSpec) -> np.ndarray:
    """dpsi/dt of the norm-preserving non-unitary flow (units 1/s).

    The result is orthogonal to psi in the real sense
    (Re<psi|dpsi/dt> = 0), which is exactly the norm-preservation
    property of the flow.
    """
    if psi.n != spec.n:
        raise DimensionMismatchError(f"state has n = {psi.n} but spec has n = {spec.n}")
    return _rhs_state_array(psi.amplitudes, spec.omega, spec.h0, spec.collapse_op, spec.gamma)


def rhs_density(rho: DensityMatrix, spec: HamiltonianSpec, purity_tol: float = 1e-8) -> np.ndarray:
    """drho/dt of the equivalent pure-state density-matrix flow (1/s).

    Only pure states evolve under this nonlinear equation; a mixed rho
    (purity < 1) is rejected.  The result is traceless and Hermitian.
    """
    if rho.n != spec.n:
        raise DimensionMismatchError(f"rho has n = {rho.n} but spec has n = {spec.n}")
    if not rho.is_pure(purity_tol):
        raise ValidationError(
            f"rho is not a pure state: trace(rho^2) = {rho.purity()!r}; "
            "the nonlinear flow is defined for pure states only"
        )
    h0, a = spec.h0, spec.collapse_op
    r = rho.entries
    comm = h0 @ r - r @ h0
    anti = a @ r + r @ a
    tr_ra = (r @ a).trace().real
    return -1j * spec.omega * comm + spec.gamma * anti - 2.0 * spec.gamma * tr_ra * r


def rhs_bloch(v: BlochVector, params: TwoLevelParams, omega: float, gamma: float) -> tuple[float, float, float]:
    """(dx/dt, dy/dt, dz/dt) on the Bloch sphere (1/s).

    On the unit sphere the velocity is tangent: v . dv/dt = 0 identically.
    """
    out = _rhs_bloch_array(np.array([v.x, v.y, v.z]), params, omega, gamma)
    return float(out[0]), float(out[1]), float(out[2])


def _rhs_bloch_array(v: np.ndarray, params: TwoLevelParams, omega: float, gamma: float) -> np.ndarray:
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    ad = params.a0 - params.d0
    gg = gamma * params.gap
    dx = -omega * (ad * y + 2.0 * params.b0i * z) - gg * x * z
    dy = omega * (ad * x - 2.0 * params.b0r * z) - gg * y * z
    dz = omega * (2.0 * params.b0i * x + 2.0 * params.b0r * y) - gg * (z * z - 1.0)
    return np.stack([dx, dy, dz], axis=-1)


def default_dt(spec: HamiltonianSpec, t_end: float) -> float:
    """Default step: one percent of the fastest timescale in the spec."""
    eigs = spec.collapse_eigenvalues()
    gap = float(eigs[0] - eigs[-1])
    scale = max(abs(spec.omega), abs(spec.gamma) * gap)
    if scale <= 0.0:
        return t_end / 100.0
    return min(0.01 / scale, t_end)


def _resolve_steps(t_end: float, dt: float) -> int:
    n = int(np.ceil(t_end / dt - 1e-9))
    return max(n, 1)


def _record_indices(n_steps: int, stride: int) -> np.ndarray:
    idx = np.arange(0, n_steps + 1, stride)
    if idx[-1] != n_steps:
        idx = np.append(idx, n_steps)
    return idx


def _rk4_step(f, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _integrate_states_batch(
    psi0: np.ndarray,
    spec: HamiltonianSpec,
    config: IntegratorConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """RK4 with per-step renormalization on a (batch, n) block of states.

    Returns (times, states, drift) with shapes (m,), (m, batch, n), (m, batch).
    """
    dt = config.dt if config.dt is not None else default_dt(spec, config.t_end)
    n_steps = _resolve_steps(config.t_end, dt)
    rec = _record_indices(n_steps, config.record_stride)
    omega, gamma = spec.omega, spec.gamma
    h0, a = spec.h0, spec.collapse_op

    def f(y):
        return _rhs_state_array(y, omega, h0, a, gamma)

    psi = np.array(psi0, dtype=complex)
    batch_shape = psi.shape[:-1]
    m = rec.size
    states = np.empty((m,) + psi.shape, dtype=complex)
    drift = np.zeros((m,) + batch_shape)
    times = rec * dt

    pos = 0
    if rec[pos] == 0:
        states[pos] = psi
        pos += 1
    last_drift = np.zeros(batch_shape)
    for k in range(1, n_steps + 1):
        psi = _rk4_step(f, psi, dt)
        nrm = np.sqrt((psi.conj() * psi).sum(axis=-1).real)
        last_drift = np.abs(nrm - 1.0)
        worst = float(np.max(last_drift))
        if not np.isfinite(worst) or not np.all(np.isfinite(psi)):
            raise NumericsError(f"non-finite state at t = {k * dt!r} (step {k}); reduce dt")
        if worst > config.norm_drift_tolerance:
            raise NumericsError(
                f"step size too large: norm drift {worst:.3e} exceeds "
                f"{config.norm_drift_tolerance:.3e} at t = {k * dt!r} (dt = {dt!r})"
            )
        psi = psi / nrm[..., None]
        if pos < m and rec[pos] == k:
            states[pos] = psi
            drift[pos] = last_drift
            pos += 1
    return times, states, drift


def integrate_deterministic(
    initial: StateVector,
    spec: HamiltonianSpec,
    config: IntegratorConfig,
) -> Trajectory:
    """Integrate the state-vector flow with RK4 and per-step renormalization.

    Raises :class:`NumericsError` if the pre-renormalization norm drift of
    any step exceeds ``config.norm_drift_tolerance`` (the step is too
    large for the requested tolerance) or if the state leaves the
    representable range.
    """
    if initial.n != spec.n:
        raise DimensionMismatchError(f"state has n = {initial.n} but spec has n = {spec.n}")
    times, states, drift = _integrate_states_batch(initial.amplitudes[None, :], spec, config)
    states = states[:, 0, :]
    drift = drift[:, 0]
    a = spec.collapse_op
    expa = _expval(a, states)
    if spec.n == 2:
        cross = states[:, 0] * states[:, 1].conj()
        bloch = np.stack(
            [
                2.0 * cross.real,
                -2.0 * cross.imag,
                np.abs(states[:, 0]) ** 2 - np.abs(states[:, 1]) ** 2,
            ],
            axis=-1,
        )
    else:
        bloch = np.full((times.size, 3), np.nan)
    return Trajectory(times=times, bloch=bloch, expa=expa, norm_drift=drift, states=states)


def integrate_bloch(
    initial: BlochVector,
    params: TwoLevelParams,
    omega: float,
    gamma: float,
    config: IntegratorConfig,
) -> Trajectory:
    """Integrate the Bloch-vector system with RK4 and no renormalization.

    Staying on the unit sphere is a property of the exact flow, so the
    recorded ``norm_drift`` (here the accumulated |norm - 1| of the Bloch
    vector) doubles as an integration-quality diagnostic; drift beyond
    ``SPHERE_DRIFT_TOL`` aborts the run.
    """
    dt = config.dt
    if dt is None:
        scale = max(abs(omega), abs(gamma) * params.gap)
        dt = min(0.01 / scale, config.t_end) if scale > 0 else config.t_end / 100.0
    n_steps = _resolve_steps(config.t_end, dt)
    rec = _record_indices(n_steps, config.record_stride)

    def f(y):
        return _rhs_bloch_array(y, params, omega, gamma)

    v = np.array([initial.x, initial.y, initial.z])
    m = rec.size
    out = np.empty((m, 3))
    drift = np.zeros(m)
    times = rec * dt
    pos = 0
    if rec[pos] == 0:
        out[pos] = v
        drift[pos] = abs(float(np.linalg.norm(v)) - 1.0)
        pos += 1
    for k in range(1, n_steps + 1):
        v = _rk4_step(f, v, dt)
        if not np.all(np.isfinite(v)):
            raise NumericsError(f"non-finite Bloch vector at t = {k * dt!r} (step {k}); reduce dt")
        dev = abs(float(np.linalg.norm(v)) - 1.0)
        if dev > SPHERE_DRIFT_TOL:
            raise NumericsError(
                f"step size too large: sphere drift {dev:.3e} exceeds {SPHERE_DRIFT_TOL:.3e} "
                f"at t = {k * dt!r} (dt = {dt!r})"
            )
        if pos < m and rec[pos] == k:
            out[pos] = v
            drift[pos] = dev
            pos += 1
    lam_mid = 0.5 * (params.lambda0 + params.lambda1)
    expa = lam_mid + 0.5 * params.gap * out[:, 2]
    return Trajectory(times=times, bloch=out, expa=expa, norm_drift=drift, states=None)


def analytic_z_strong_coupling(
    t,
    gamma: float,
    omega: float,
    lambda0: float,
    lambda1: float,
    omega_normalized: bool = False,
):
    """Closed-form z(t) = tanh(rate * t) of the strong-coupling limit.

    The rate that follows from the Bloch system is gamma*(lambda0-lambda1).
    ``omega_normalized=True`` divides the rate by omega instead (an
    alternative convention that coincides with the default at omega = 1).
    Monotone in t, with z -> sign(gamma) as t -> inf.
    """
    if not lambda0 > lambda1:
        raise ValidationError(f"requires lambda0 > lambda1, got {lambda0!r} <= {lambda1!r}")
    rate = gamma * (lambda0 - lambda1)
    if omega_normalized:
        rate = rate / omega
    return np.tanh(rate * np.asarray(t, dtype=float))


def classify_regime(spec: HamiltonianSpec) -> RegimeReport:
    """Classify a two-level spec by the spectrum of its total Hamiltonian.

    Eigenvalues are computed from the 2x2 characteristic polynomial.  A
    uniform imaginary offset (proportional to the identity component of
    the anti-Hermitian part) only rescales the norm, which renormalization
    removes, so the classification looks at the trace-centered spectrum:
    real-split eigenvalues precess (oscillatory), an imaginary split
    selects one growing direction (collapsing), and a coalesced pair is
    the exceptional boundary case.
    """
    if spec.n != 2:
        raise DimensionMismatchError(f"regime classification needs n = 2, got n = {spec.n}")
    m = spec.total_hamiltonian() / spec.hbar
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    root = np.sqrt(complex(tr * tr - 4.0 * det))  # eigenvalue gap
    eig = ((tr + root) / 2.0, (tr - root) / 2.0)
    scale = max(1.0, float(np.linalg.norm(m)))
    if abs(root) <= 1e-6 * scale:
        regime = Regime.EXCEPTIONAL
    elif abs(root.imag) / 2.0 > 1e-10 * scale:
        regime = Regime.COLLAPSING
    else:
        regime = Regime.OSCILLATORY
    return RegimeReport(regime=regime, eigenvalues=(complex(eig[0]), complex(eig[1])))


def detect_collapse(traj: Trajectory, epsilon: float = 1e-3) -> CollapseReport:
    """Decide whether a trajectory has collapsed onto a collapse eigenstate.

    Collapsed means |z| >= 1 - epsilon from some sample onward through
    the final sample ("sustained"), which rejects transient crossings of
    an oscillatory trajectory.  The target index follows the sign of the
    final z (index 0 is the lambda0 eigenstate at z = +1).
    """
    if traj.times.size == 0:
        raise ValidationError("empty trajectory")
    if not 0.0 < epsilon < 1.0:
        raise ValidationError(f"epsilon must be in (0, 1), got {epsilon!r}")
    z = traj.z
    inside = np.abs(z) >= 1.0 - epsilon
    if not inside[-1]:
        return CollapseReport(collapsed=False)
    below = np.nonzero(~inside)[0]
    start = 0 if below.size == 0 else int(below[-1]) + 1
    target = 0 if z[-1] > 0 else 1
    return CollapseReport(
        collapsed=True,
        target_index=target,
        collapse_time=float(traj.times[start]),
    )
