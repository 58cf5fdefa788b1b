"""Dense pure states and density matrices, expectation metrics, Born sampling.

Tolerances follow the package-wide convention: construction checks Hermiticity
and unit trace at 1e-10; sampling clamps eigenvalue round-off above -1e-9 and
treats anything more negative as a bug.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import pauli
from .errors import DimensionMismatchError, NumericalInvariantError
from .seeding import rng_from

HERM_ATOL = 1e-10
TRACE_ATOL = 1e-10
NEG_EIG_CLAMP = 1e-9


def _nqubits_of(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if 2 ** n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True)
class PureState:
    """State vector with unit 2-norm (checked at 1e-12)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm {norm} deviates from 1 beyond 1e-12")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def nqubits(self) -> int:
        return _nqubits_of(self.amplitudes.size)

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace matrix over the register.

    Positivity is not verified on construction (it costs a diagonalization);
    sampling and the validate() helper enforce it where it matters.
    """

    data: np.ndarray
    nqubits: int = field(default=-1)

    def __post_init__(self):
        mat = np.asarray(self.data, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("density matrix must be square")
        n = _nqubits_of(mat.shape[0])
        if self.nqubits == -1:
            object.__setattr__(self, "nqubits", n)
        elif self.nqubits != n:
            raise DimensionMismatchError(
                f"matrix of dim {mat.shape[0]} is not on {self.nqubits} qubits"
            )
        herm_drift = np.abs(mat - mat.conj().T).max()
        if herm_drift > HERM_ATOL:
            raise NumericalInvariantError(f"Hermiticity drift {herm_drift:.3e}")
        tr = mat.trace()
        if abs(tr - 1.0) > TRACE_ATOL:
            raise NumericalInvariantError(f"trace {tr} deviates from 1")
        mat = mat.copy()
        mat.flags.writeable = False
        object.__setattr__(self, "data", mat)

    @classmethod
    def from_pure(cls, psi: PureState) -> "DensityMatrix":
        return cls(psi.projector())

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def purity(self) -> float:
        return float(np.real(np.einsum("ij,ji->", self.data, self.data)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.data)

    def validate(self) -> None:
        """Raise if any eigenvalue lies below the -1e-10 positivity floor."""
        lo = self.eigenvalues().min()
        if lo < -1e-10:
            raise NumericalInvariantError(f"negative eigenvalue {lo:.3e}")


def plus_state(nqubits: int, cap: int = pauli.DEFAULT_QUBIT_CAP) -> PureState:
    """Uniform-superposition product state, amplitude 2**(-N/2) everywhere."""
    if nqubits < 1:
        raise ValueError("need at least one qubit")
    pauli._check_cap(nqubits, cap)
    dim = 2 ** nqubits
    return PureState(np.full(dim, dim ** -0.5, dtype=complex))


def _check_same_register(dim: int, observable: pauli.PauliSum) -> None:
    if 2 ** observable.nqubits != dim:
        raise DimensionMismatchError(
            f"observable on {observable.nqubits} qubits against dim-{dim} state"
        )


def expectation(rho: DensityMatrix, observable: pauli.PauliSum) -> float:
    """Tr[rho H]; the imaginary part must be round-off (<= 1e-10)."""
    _check_same_register(rho.dim, observable)
    if observable.is_diagonal:
        val = np.dot(np.real(np.diag(rho.data)), pauli.realize_diagonal(observable))
        return float(val)
    mat = pauli.realize(observable)
    val = np.einsum("ij,ji->", rho.data, mat)
    if abs(val.imag) > 1e-10:
        raise NumericalInvariantError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def variance(rho: DensityMatrix, observable: pauli.PauliSum) -> float:
    """Tr[rho H^2] - Tr[rho H]^2, clamped at zero for round-off."""
    _check_same_register(rho.dim, observable)
    if observable.is_diagonal:
        d = pauli.realize_diagonal(observable)
        p = np.real(np.diag(rho.data))
        second = float(np.dot(p, d * d))
        first = float(np.dot(p, d))
    else:
        mat = pauli.realize(observable)
        hrho = mat @ rho.data
        second = float(np.real(np.einsum("ij,ji->", mat, hrho)))
        first = float(np.real(hrho.trace()))
    var = second - first * first
    if var < -1e-9:
        raise NumericalInvariantError(f"variance {var:.3e} below round-off floor")
    return max(var, 0.0)


def fidelity_pure(psi: PureState, rho: DensityMatrix) -> float:
    """Overlap <psi|rho|psi>, real in [0, 1] up to 1e-10."""
    if psi.amplitudes.size != rho.dim:
        raise DimensionMismatchError("state and density matrix sizes differ")
    val = np.real(psi.amplitudes.conj() @ rho.data @ psi.amplitudes)
    if val > 1.0 + 1e-10 or val < -1e-10:
        raise NumericalInvariantError(f"fidelity {val} outside [0, 1]")
    return float(min(max(val, 0.0), 1.0))


def born_distribution(
    rho: DensityMatrix, observable: pauli.PauliSum
) -> tuple[np.ndarray, np.ndarray]:
    """Outcome probabilities and energies of measuring H's eigenbasis on rho.

    For an I/Z-only observable the eigenbasis is computational and outcome k
    labels bitstring k (qubit 0 = most significant bit). Otherwise outcome k
    labels the k-th eigenvector of the realized matrix.
    """
    _check_same_register(rho.dim, observable)
    if observable.is_diagonal:
        probs = np.real(np.diag(rho.data)).copy()
        energies = pauli.realize_diagonal(observable)
    else:
        evals, evecs = np.linalg.eigh(pauli.realize(observable))
        probs = np.real(np.einsum("ij,jk,ki->i", evecs.conj().T, rho.data, evecs))
        energies = evals
    lo = probs.min()
    if lo < -NEG_EIG_CLAMP:
        raise NumericalInvariantError(
            f"outcome probability {lo:.3e} below the -1e-9 clamp floor"
        )
    probs = np.clip(probs, 0.0, None)
    total = probs.sum()
    if abs(total - 1.0) > 1e-8:
        raise NumericalInvariantError(f"probabilities sum to {total}")
    return probs / total, energies


def sample_outcomes(
    rho: DensityMatrix,
    observable: pauli.PauliSum,
    shots: int,
    seed: int,
) -> list[tuple[int, float]]:
    """Draw i.i.d. measurement outcomes (label, energy) under the Born rule."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs, energies = born_distribution(rho, observable)
    rng = rng_from(seed)
    labels = rng.choice(probs.size, size=shots, p=probs)
    return [(int(k), float(energies[k])) for k in labels]
