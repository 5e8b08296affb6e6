"""Quantum-state primitives for two-level collapse dynamics.

Complex state vectors, density matrices, and Bloch vectors for n-level
systems (n = 2 for everything interesting here), plus the non-Hermitian
Hamiltonian specification

    H = hbar * omega * H0 + 1j * gamma * A

with Hermitian H0 (the unitary drive) and Hermitian A (the collapse
operator).  The anti-Hermitian part ``1j * gamma * A`` is what makes the
evolution non-unitary; every dynamics module builds on the conventions
fixed here.

Basis convention: the eigenvector of the collapse operator with the
*larger* eigenvalue ``lambda0`` is basis index 0 and sits at Bloch
z = +1.  The collapse operator must be non-degenerate: with equal
eigenvalues the non-unitary term acts like a multiple of the identity
and the collapse mechanism disappears, so degeneracy is rejected up
front as a hard validation error.

All types are immutable after construction and all operations are pure
functions, so everything here is safe to share across threads or
processes without coordination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12
DEGENERACY_TOL = 1e-9
NORM_TOL = 1e-9
BLOCH_NORM_TOL = 1e-9

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

for _m in (SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.setflags(write=False)


class QCollapseError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(QCollapseError):
    """Bad input: invalid state, matrix, or configuration value."""


class NullStateError(ValidationError):
    """Zero vector where a physical state was required."""


class DegenerateOperatorError(ValidationError):
    """Collapse operator with (numerically) coinciding eigenvalues."""


class DimensionMismatchError(ValidationError):
    """Operands with incompatible Hilbert-space dimensions."""


class NumericsError(QCollapseError):
    """Runtime numerical failure: NaN/Inf states or excessive norm drift."""


def _as_complex_matrix(m, name: str) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise ValidationError(f"{name} must be at least 2x2, got shape {arr.shape}")
    return arr


def _require_hermitian(m: np.ndarray, name: str, tol: float = HERMITICITY_TOL) -> None:
    if not np.allclose(m, m.conj().T, rtol=0.0, atol=tol):
        raise ValidationError(f"{name} is not Hermitian within {tol}")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm complex state vector, the fundamental dynamical object."""

    amplitudes: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if arr.size < 2:
            raise ValidationError(f"state vector needs n >= 2 amplitudes, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("state vector has non-finite amplitudes")
        nrm2 = float(np.sum(np.abs(arr) ** 2))
        if abs(nrm2 - 1.0) > 2.0 * NORM_TOL:
            raise ValidationError(
                f"state vector is not normalized: |norm^2 - 1| = {abs(nrm2 - 1.0):.3e}"
            )
        object.__setattr__(self, "amplitudes", _freeze(arr))

    @property
    def n(self) -> int:
        return self.amplitudes.size


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace density matrix (pure or mixed)."""

    entries: np.ndarray

    def __post_init__(self):
        arr = _as_complex_matrix(self.entries, "density matrix")
        _require_hermitian(arr, "density matrix")
        tr = arr.trace().real
        if abs(tr - 1.0) > NORM_TOL:
            raise ValidationError(f"density matrix trace {tr!r} is not 1 within {NORM_TOL}")
        object.__setattr__(self, "entries", _freeze(arr))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def purity(self) -> float:
        """trace(rho^2); equals 1 for pure states."""
        return float((self.entries @ self.entries).trace().real)

    def is_pure(self, tol: float = 1e-8) -> bool:
        return abs(self.purity() - 1.0) <= tol


@dataclass(frozen=True)
class BlochVector:
    """Real (x, y, z) representation of a two-level density matrix.

    Pure states lie on the unit sphere, mixed states strictly inside.
    """

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValidationError(f"Bloch component {name} is not finite: {v!r}")
            object.__setattr__(self, name, float(v))
        if self.norm_sq() > 1.0 + BLOCH_NORM_TOL:
            raise ValidationError(
                f"Bloch vector lies outside the unit ball: |v|^2 = {self.norm_sq()!r}"
            )

    def norm_sq(self) -> float:
        return self.x * self.x + self.y * self.y + self.z * self.z

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """Defines H = hbar*omega*H0 + 1j*gamma*A and validates both matrices.

    Parameters
    ----------
    omega : float
        Angular frequency (1/s) multiplying the Hermitian drive ``h0``.
    h0 : array_like
        Hermitian drive Hamiltonian (dimensionless).
    collapse_op : array_like
        Hermitian collapse operator with pairwise-distinct eigenvalues;
        its eigenstates are the attractors of the non-unitary dynamics.
    gamma : float
        Coupling constant (1/s) of the anti-Hermitian part.  Its sign
        selects which eigenstate the strong-coupling dynamics targets.
    hbar : float
        Fixed to 1 by convention; ``omega`` carries the physical scale.
    degeneracy_tolerance : float
        Minimum allowed gap between eigenvalues of ``collapse_op``.
    """

    omega: float
    h0: np.ndarray
    collapse_op: np.ndarray
    gamma: float
    hbar: float = 1.0
    degeneracy_tolerance: float = DEGENERACY_TOL

    def __post_init__(self):
        for name in ("omega", "gamma", "hbar", "degeneracy_tolerance"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not np.isfinite(v):
                raise ValidationError(f"{name} must be a finite real number, got {v!r}")
            object.__setattr__(self, name, float(v))
        h0 = _as_complex_matrix(self.h0, "h0")
        a = _as_complex_matrix(self.collapse_op, "collapse_op")
        if h0.shape != a.shape:
            raise DimensionMismatchError(
                f"h0 has shape {h0.shape} but collapse_op has shape {a.shape}"
            )
        _require_hermitian(h0, "h0")
        _require_hermitian(a, "collapse_op")
        eigs = np.linalg.eigvalsh(a)
        gap = float(np.min(np.diff(eigs)))
        if gap <= self.degeneracy_tolerance:
            raise DegenerateOperatorError(
                "degenerate collapse operator: eigenvalue gap "
                f"{gap:.3e} <= {self.degeneracy_tolerance:.3e}"
            )
        object.__setattr__(self, "h0", _freeze(h0))
        object.__setattr__(self, "collapse_op", _freeze(a))

    @property
    def n(self) -> int:
        return self.h0.shape[0]

    def collapse_eigenvalues(self) -> np.ndarray:
        """Eigenvalues of the collapse operator, descending (lambda0 first)."""
        return np.linalg.eigvalsh(self.collapse_op)[::-1]

    def total_hamiltonian(self) -> np.ndarray:
        """The non-Hermitian total Hamiltonian hbar*omega*H0 + 1j*gamma*A."""
        return self.hbar * self.omega * self.h0 + 1j * self.gamma * self.collapse_op


@dataclass(frozen=True)
class TwoLevelParams:
    """Drive-Hamiltonian entries in the eigenbasis of the collapse operator.

    In that basis the collapse operator is diag(lambda0, lambda1) with
    lambda0 > lambda1, and the drive is
    [[a0, b0r + 1j*b0i], [b0r - 1j*b0i, d0]].
    """

    a0: float
    b0r: float
    b0i: float
    d0: float
    lambda0: float
    lambda1: float

    def __post_init__(self):
        for name in ("a0", "b0r", "b0i", "d0", "lambda0", "lambda1"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.lambda0 > self.lambda1:
            raise DegenerateOperatorError(
                "degenerate collapse operator: requires lambda0 > lambda1, got "
                f"{self.lambda0!r} <= {self.lambda1!r}"
            )

    @property
    def gap(self) -> float:
        return self.lambda0 - self.lambda1


def normalize(phi) -> StateVector:
    """Project an arbitrary nonzero complex vector onto the unit sphere.

    Idempotent in the strict bit-for-bit sense: vectors already unit-norm
    to within a few ulps are returned unchanged, so normalizing twice
    gives the identical result as normalizing once.
    """
    arr = np.asarray(phi, dtype=complex).reshape(-1)
    if arr.size < 2:
        raise ValidationError(f"state vector needs n >= 2 amplitudes, got {arr.size}")
    nrm = float(np.linalg.norm(arr))
    if nrm == 0.0:
        raise NullStateError("null state: cannot normalize the zero vector")
    if not np.isfinite(nrm):
        raise ValidationError("cannot normalize a non-finite vector")
    if abs(nrm - 1.0) > 8.0 * np.finfo(float).eps:
        arr = arr / nrm
    return StateVector(arr)


def expectation(operator, psi: StateVector) -> float:
    """<psi| operator |psi> for a Hermitian operator; always real."""
    op = _as_complex_matrix(operator, "operator")
    if op.shape[0] != psi.n:
        raise DimensionMismatchError(
            f"operator is {op.shape[0]}x{op.shape[0]} but state has dimension {psi.n}"
        )
    return float(np.vdot(psi.amplitudes, op @ psi.amplitudes).real)


def state_to_density(psi: StateVector) -> DensityMatrix:
    """Pure-state projector |psi><psi|."""
    c = psi.amplitudes
    return DensityMatrix(np.outer(c, c.conj()))


def state_to_bloch(psi: StateVector) -> BlochVector:
    """Bloch vector of a two-level pure state.

    Basis state 0 maps to (0, 0, 1); the equal superposition
    (1, 1)/sqrt(2) maps to (1, 0, 0).
    """
    if psi.n != 2:
        raise DimensionMismatchError(f"Bloch representation needs n = 2, got n = {psi.n}")
    c0, c1 = psi.amplitudes
    cross = c0 * np.conj(c1)
    return BlochVector(
        x=2.0 * cross.real,
        y=-2.0 * cross.imag,
        z=abs(c0) ** 2 - abs(c1) ** 2,
    )


def bloch_to_density(v: BlochVector) -> DensityMatrix:
    """Two-level density matrix 0.5*[[1+z, x-iy], [x+iy, 1-z]]."""
    rho = 0.5 * np.array(
        [
            [1.0 + v.z, v.x - 1j * v.y],
            [v.x + 1j * v.y, 1.0 - v.z],
        ],
        dtype=complex,
    )
    return DensityMatrix(rho)


def density_to_bloch(rho: DensityMatrix) -> BlochVector:
    """Inverse of :func:`bloch_to_density`; round-trips to 1e-12."""
    if rho.n != 2:
        raise DimensionMismatchError(f"Bloch representation needs n = 2, got n = {rho.n}")
    e = rho.entries
    return BlochVector(
        x=2.0 * e[0, 1].real,
        y=-2.0 * e[0, 1].imag,
        z=(e[0, 0] - e[1, 1]).real,
    )


def _fix_column_phases(u: np.ndarray) -> np.ndarray:
    """Rotate each column's global phase so its largest entry is real positive."""
    out = u.copy()
    for j in range(u.shape[1]):
        k = int(np.argmax(np.abs(out[:, j])))
        pivot = out[k, j]
        if pivot != 0:
            out[:, j] *= np.conj(pivot) / abs(pivot)
    return out


def to_collapse_eigenbasis(spec: HamiltonianSpec) -> tuple[TwoLevelParams, np.ndarray]:
    """Rewrite a two-level spec in the eigenbasis of the collapse operator.

    Returns
    -------
    params : TwoLevelParams
        Drive entries and collapse eigenvalues in the new basis, ordered
        so that lambda0 > lambda1 (index 0 is the z = +1 pole).
    basis : np.ndarray
        Unitary whose columns are the collapse-operator eigenvectors in
        the original basis; states transform as ``psi_new = basis.conj().T @ psi``
        and operators as ``m_new = basis.conj().T @ m @ basis``.
    """
    if spec.n != 2:
        raise DimensionMismatchError(f"two-level parameterization needs n = 2, got {spec.n}")
    eigvals, eigvecs = np.linalg.eigh(spec.collapse_op)  # ascending
    lam0, lam1 = float(eigvals[1]), float(eigvals[0])
    if lam0 - lam1 <= spec.degeneracy_tolerance:
        raise DegenerateOperatorError(
            f"degenerate collapse operator: eigenvalue gap {lam0 - lam1:.3e}"
        )
    basis = _fix_column_phases(eigvecs[:, ::-1])
    h0p = basis.conj().T @ spec.h0 @ basis
    params = TwoLevelParams(
        a0=h0p[0, 0].real,
        b0r=h0p[0, 1].real,
        b0i=h0p[0, 1].imag,
        d0=h0p[1, 1].real,
        lambda0=lam0,
        lambda1=lam1,
    )
    return params, _freeze(basis)
