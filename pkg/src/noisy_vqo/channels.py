"""Quantum channels in Kraus form.

Covers the ideal parametric unitary exp(-i theta X), the noise models used
throughout (per-qubit sigma_z dephasing written in the "depolarising" naming
of the problem domain, Gaussian parameter jitter, thermal relaxation), channel
application, and Choi-based two-sided bounds on the diamond distance.

Note on naming: z_depolarizing keeps the domain's historical name although its
form is dephasing-like, (1-eta) rho + eta Z rho Z per qubit. Nothing here
assumes it contracts X/Y/Z uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import pauli
from .errors import DimensionMismatchError, NumericalInvariantError, QubitCapError
from .seeding import rng_from
from .states import DensityMatrix

COMPLETENESS_ATOL = 1e-9
REPAIR_DRIFT_ATOL = 1e-8

_I2 = np.eye(2, dtype=complex)
_Z2 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive trace-preserving map, sum_k K rho K^dag."""

    kraus_ops: tuple[np.ndarray, ...]
    dim: int

    def __post_init__(self):
        ops = []
        acc = np.zeros((self.dim, self.dim), dtype=complex)
        for op in self.kraus_ops:
            op = np.asarray(op, dtype=complex)
            if op.shape != (self.dim, self.dim):
                raise DimensionMismatchError(
                    f"Kraus operator shape {op.shape} != ({self.dim}, {self.dim})"
                )
            op = op.copy()
            op.flags.writeable = False
            ops.append(op)
            acc += op.conj().T @ op
        drift = np.abs(acc - np.eye(self.dim)).max()
        if drift > COMPLETENESS_ATOL:
            raise NumericalInvariantError(
                f"Kraus completeness violated by {drift:.3e}"
            )
        object.__setattr__(self, "kraus_ops", tuple(ops))

    @cached_property
    def diagonal_mask(self) -> np.ndarray | None:
        """Elementwise action mask when every Kraus operator is diagonal."""
        for op in self.kraus_ops:
            if np.abs(op - np.diag(np.diag(op))).max() > 0.0:
                return None
        mask = np.zeros((self.dim, self.dim), dtype=complex)
        for op in self.kraus_ops:
            d = np.diag(op)
            mask += np.outer(d, d.conj())
        mask.flags.writeable = False
        return mask


def apply_matrix(channel: KrausChannel, mat: np.ndarray) -> np.ndarray:
    """Linear action of the channel on an arbitrary matrix (no repair)."""
    if mat.shape != (channel.dim, channel.dim):
        raise DimensionMismatchError("matrix dimension does not match channel")
    mask = channel.diagonal_mask
    if mask is not None:
        return mat * mask
    out = np.zeros_like(mat, dtype=complex)
    for op in channel.kraus_ops:
        out += op @ mat @ op.conj().T
    return out


def apply(channel: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    """Apply to a state, with Hermiticity repair and trace renormalization.

    Drift beyond 1e-8 (either Hermiticity or trace) is an error rather than
    something to silently absorb.
    """
    out = apply_matrix(channel, rho.data)
    herm_drift = np.abs(out - out.conj().T).max()
    tr = out.trace()
    if herm_drift > REPAIR_DRIFT_ATOL or abs(tr - 1.0) > REPAIR_DRIFT_ATOL:
        raise NumericalInvariantError(
            f"channel application drift: herm {herm_drift:.3e}, trace {tr}"
        )
    out = (out + out.conj().T) / (2.0 * tr.real)
    return DensityMatrix(out)


def unitary_channel(generator: pauli.PauliSum, theta: float) -> KrausChannel:
    """Conjugation by exp(-i theta X) for a realized generator X."""
    dim = 2 ** generator.nqubits
    if generator.is_diagonal:
        u = np.exp(-1j * theta * pauli.realize_diagonal(generator))
        mat = np.diag(u)
    else:
        evals, evecs = np.linalg.eigh(pauli.realize(generator))
        mat = (evecs * np.exp(-1j * theta * evals)) @ evecs.conj().T
    drift = np.abs(mat @ mat.conj().T - np.eye(dim)).max()
    if drift > 1e-10:
        raise NumericalInvariantError(f"unitary drift {drift:.3e}")
    return KrausChannel((mat,), dim)


def z_depolarizing(eta: float, nqubits: int = 1) -> KrausChannel:
    """Per-qubit pair {sqrt(1-eta) I, sqrt(eta) Z}, tensored across qubits."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    ops = [np.ones((1, 1), dtype=complex)]
    for _ in range(nqubits):
        grown = []
        for op in ops:
            grown.append(np.kron(op, np.sqrt(1.0 - eta) * _I2))
            grown.append(np.kron(op, np.sqrt(eta) * _Z2))
        ops = grown
    ops = [op for op in ops if np.abs(op).max() > 0.0]
    return KrausChannel(tuple(ops), 2 ** nqubits)


def fluctuation_strength(sigma: float) -> float:
    """Mixing weight eta = (1 - exp(-2 sigma^2)) / 2 of Gaussian jitter."""
    if sigma < 0.0:
        raise ValueError("sigma must be >= 0")
    return (1.0 - np.exp(-2.0 * sigma ** 2)) / 2.0


def _require_involutory(generator: pauli.PauliSum) -> np.ndarray:
    mat = pauli.realize(generator)
    drift = np.abs(mat @ mat - np.eye(mat.shape[0])).max()
    if drift > 1e-10:
        raise ValueError(
            f"generator does not square to identity (drift {drift:.3e})"
        )
    return mat


def gaussian_fluctuation_channel(
    generator: pauli.PauliSum, sigma: float
) -> KrausChannel:
    """Averaging exp(-i v X) over v ~ Normal(0, sigma^2) for involutory X.

    The average collapses to the two-operator mixture
    (1-eta) rho + eta X rho X with eta = (1 - exp(-2 sigma^2)) / 2,
    which reduces to the identity channel as sigma -> 0.
    """
    mat = _require_involutory(generator)
    eta = fluctuation_strength(sigma)
    dim = mat.shape[0]
    ops = [np.sqrt(1.0 - eta) * np.eye(dim, dtype=complex)]
    if eta > 0.0:
        ops.append(np.sqrt(eta) * mat)
    return KrausChannel(tuple(ops), dim)


def thermal_relaxation(t1: float, t2: float, gate_time: float) -> KrausChannel:
    """Single-qubit energy relaxation toward |0> plus coherence decay.

    Populations relax with probability 1 - exp(-t/T1); off-diagonals decay by
    exp(-t/T2) overall, which requires T2 <= 2 T1. Zero temperature: the fixed
    point as t -> infinity is |0><0|.
    """
    if not t1 > 0.0:
        raise ValueError("T1 must be positive")
    if not 0.0 < t2 <= 2.0 * t1:
        raise ValueError(f"need 0 < T2 <= 2*T1, got T1={t1}, T2={t2}")
    if gate_time < 0.0:
        raise ValueError("gate time must be >= 0")
    gamma = 1.0 - np.exp(-gate_time / t1)
    dephase_rate = 1.0 / t2 - 1.0 / (2.0 * t1)
    p_phi = (1.0 - np.exp(-gate_time * dephase_rate)) / 2.0
    amp = [
        np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=complex),
        np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex),
    ]
    deph = [np.sqrt(1.0 - p_phi) * _I2, np.sqrt(p_phi) * _Z2]
    ops = [d @ a for d in deph for a in amp]
    ops = [op for op in ops if np.abs(op).max() > 1e-15]
    return KrausChannel(tuple(ops), 2)


# --------------------------------------------------------------------------
# Local embedding: act with a small channel on selected qubits of a register.
# Row axes of the reshaped (2,)*2N tensor are qubits 0..N-1, column axes
# N..2N-1; qubit 0 is the most significant bit.
# --------------------------------------------------------------------------


def _left_mul_local(op, mat, qubits, nqubits):
    k = len(qubits)
    t = mat.reshape((2,) * (2 * nqubits))
    opt = op.reshape((2,) * (2 * k))
    res = np.tensordot(opt, t, axes=(tuple(range(k, 2 * k)), tuple(qubits)))
    return np.moveaxis(res, tuple(range(k)), tuple(qubits)).reshape(mat.shape)


def _right_mul_local(op, mat, qubits, nqubits):
    k = len(qubits)
    t = mat.reshape((2,) * (2 * nqubits))
    opt = op.reshape((2,) * (2 * k))
    cols = tuple(nqubits + q for q in qubits)
    res = np.tensordot(t, opt, axes=(cols, tuple(range(k))))
    n_axes = 2 * nqubits
    return np.moveaxis(res, tuple(range(n_axes - k, n_axes)), cols).reshape(mat.shape)


def embed_local(op: np.ndarray, qubits, nqubits: int) -> np.ndarray:
    """Dense (op on qubits) tensor (identity elsewhere)."""
    return _left_mul_local(op, np.eye(2 ** nqubits, dtype=complex), qubits, nqubits)


def apply_local_kraus(mat, kraus_ops, qubits, nqubits: int) -> np.ndarray:
    """sum_k (K_k (x) I) mat (K_k (x) I)^dag with K acting on `qubits`."""
    out = np.zeros(mat.shape, dtype=complex)
    for op in kraus_ops:
        out += _right_mul_local(
            op.conj().T, _left_mul_local(op, mat, qubits, nqubits), qubits, nqubits
        )
    return out


def superop_1q(kraus_ops) -> np.ndarray:
    """(2,2,2,2) tensor S[i,k,j,l] = sum_K K[i,k] K*[j,l] for one-qubit maps."""
    s = np.zeros((2, 2, 2, 2), dtype=complex)
    for op in kraus_ops:
        s += np.einsum("ik,jl->ikjl", op, op.conj())
    return s


def superop_1q_matrix(kraus_ops) -> np.ndarray:
    """4x4 row-vectorized form sum_K kron(K, K*) of a one-qubit map."""
    s = np.zeros((4, 4), dtype=complex)
    for op in kraus_ops:
        s += np.kron(op, op.conj())
    return s


def apply_superop_1q(mat, superop, qubit: int, nqubits: int) -> np.ndarray:
    """Apply a single-qubit map to a register matrix via one small matmul."""
    if superop.shape == (2, 2, 2, 2):
        s4 = superop.transpose(0, 2, 1, 3).reshape(4, 4)
    else:
        s4 = superop
    pre = 2 ** qubit
    post = 2 ** (nqubits - qubit - 1)
    t = mat.reshape(pre, 2, post, pre, 2, post)
    t = t.transpose(1, 4, 0, 2, 3, 5).reshape(4, -1)
    out = (s4 @ t).reshape(2, 2, pre, post, pre, post)
    return out.transpose(2, 0, 3, 4, 1, 5).reshape(mat.shape)


# --------------------------------------------------------------------------
# Choi representation and channel-distance bounds.
# --------------------------------------------------------------------------


def choi(channel: KrausChannel, cap: int = pauli.DEFAULT_QUBIT_CAP) -> np.ndarray:
    """Choi matrix J = sum_ij |i><j| (x) E(|i><j|); trace d, PSD."""
    if channel.dim ** 2 > 2 ** cap:
        raise QubitCapError(
            f"Choi dimension {channel.dim ** 2} exceeds the 2^{cap} cap"
        )
    d = channel.dim
    out = np.zeros((d * d, d * d), dtype=complex)
    for op in channel.kraus_ops:
        w = op.T.reshape(-1)
        out += np.outer(w, w.conj())
    return out


def choi_of_map(apply_fn, dim: int) -> np.ndarray:
    """Choi matrix of an arbitrary linear map given as a callable on matrices."""
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    basis = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            basis[i, j] = 1.0
            block = apply_fn(basis)
            out[i * dim : (i + 1) * dim, j * dim : (j + 1) * dim] = block
            basis[i, j] = 0.0
    return out


def kraus_from_choi(choi_matrix: np.ndarray, dim: int, tol: float = 1e-10) -> KrausChannel:
    """Extract a minimal Kraus set from a Choi matrix (eigenvectors above tol)."""
    evals, evecs = np.linalg.eigh(choi_matrix)
    floor = tol * max(evals.max(), 1.0)
    ops = []
    for val, vec in zip(evals, evecs.T):
        if val > floor:
            ops.append(np.sqrt(val) * vec.reshape(dim, dim).T)
    return KrausChannel(tuple(ops), dim)


def trace_norm(mat: np.ndarray) -> float:
    """Sum of singular values; eigenvalue path for Hermitian input."""
    if np.abs(mat - mat.conj().T).max() < 1e-12:
        return float(np.abs(np.linalg.eigvalsh(mat)).sum())
    return float(np.linalg.svd(mat, compute_uv=False).sum())


def channel_distance_bounds(
    a: KrausChannel, b: KrausChannel
) -> tuple[float, float]:
    """Two-sided bracket of the diamond distance from the Choi trace norm.

    ||J(A)-J(B)||_1 / d  <=  ||A-B||_diamond  <=  ||J(A)-J(B)||_1.
    """
    if a.dim != b.dim:
        raise DimensionMismatchError("channels act on different dimensions")
    tn = trace_norm(choi(a) - choi(b))
    return tn / a.dim, tn


def monte_carlo_fluctuation_check(
    generator: pauli.PauliSum, sigma: float, samples: int, seed: int
) -> float:
    """Trace distance between the sampled jitter channel and its closed form.

    Averages exp(-i v X) rho exp(i v X) over v ~ Normal(0, sigma^2) on the
    maximally entangled probe and compares Choi states; the gap shrinks like
    1/sqrt(samples).
    """
    if samples < 100:
        raise ValueError("need at least 100 samples")
    mat = _require_involutory(generator)
    dim = mat.shape[0]
    evals, evecs = np.linalg.eigh(mat)
    draws = rng_from(seed).normal(0.0, sigma, size=samples)
    j_emp = np.zeros((dim * dim, dim * dim), dtype=complex)
    for v in draws:
        u = (evecs * np.exp(-1j * v * evals)) @ evecs.conj().T
        w = u.T.reshape(-1)
        j_emp += np.outer(w, w.conj())
    j_emp /= samples
    j_ana = choi(gaussian_fluctuation_channel(generator, sigma))
    return 0.5 * trace_norm(j_emp - j_ana) / dim
