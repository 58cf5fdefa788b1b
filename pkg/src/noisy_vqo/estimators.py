"""Gradient machinery for noisy parametric circuits.

The state derivative defines a Hermitian operator L through
d(rho) = (L rho + rho L) / 2 (the symmetric logarithmic derivative); the
gradient of Tr[rho H] is then the expectation of the observable
g = (L H + H L)/2 + lambda L for any baseline lambda, and the quantum Fisher
information Tr[rho L^2] caps the second moment of every unbiased estimator
considered here. Three sampling strategies are provided:

* "sld": measure the eigenbasis of g, one observable per component;
* "ld":  measure the cost eigenbasis and weight outcomes by the exact
         score E_y * d(log p(y)) (probabilities come from the simulator);
* "hadamard": ancilla interferometry for the analytic gradient, valid for
         noiseless circuits only.

shots = 0 is the exact-expectation sentinel for every estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import pauli
from .circuits import ParametricCircuit, evolve, evolve_with_derivatives
from .errors import (
    DimensionMismatchError,
    EstimatorUnsupportedError,
    NumericalInvariantError,
)
from .pauli import PauliSum
from .seeding import rng_from
from .states import DensityMatrix, born_distribution, sample_outcomes

SLD_KIND = "sld"
LD_KIND = "ld"
HADAMARD_KIND = "hadamard"
ESTIMATOR_KINDS = (SLD_KIND, LD_KIND, HADAMARD_KIND)

SUPPORT_CUTOFF_REL = 1e-12
PROB_FLOOR = 1e-14


@dataclass(frozen=True)
class SldResult:
    """Hermitian solution L of d(rho) = (L rho + rho L)/2 on rho's support."""

    operator: np.ndarray
    support_dim: int
    qfi: float


@dataclass(frozen=True)
class GradientSample:
    """One stochastic gradient estimate with its measurement budget.

    shots_used counts register measurements: the SLD estimator spends
    shots per component (P observables), the LD estimator spends shots
    total (one outcome feeds all components), the Hadamard estimator spends
    shots per interferometric term.
    """

    values: np.ndarray
    estimator_kind: str
    shots_used: int


def _as_matrix(rho) -> np.ndarray:
    return rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)


def _sld_core(evals: np.ndarray, dmat: np.ndarray) -> tuple[np.ndarray, int, float]:
    """L in rho's eigenbasis, retained-pair count, and the Fisher information."""
    evals = np.clip(evals, 0.0, None)
    pair_sums = evals[:, None] + evals[None, :]
    cutoff = SUPPORT_CUTOFF_REL * pair_sums.max()
    keep = pair_sums > cutoff
    lbar = np.zeros_like(dmat)
    np.divide(2.0 * dmat, pair_sums, out=lbar, where=keep)
    qfi = float(np.sum(2.0 * np.abs(dmat[keep]) ** 2 / pair_sums[keep]))
    return lbar, int(keep.sum()), qfi


def solve_sld(rho, drho: np.ndarray) -> SldResult:
    """Solve the symmetric logarithmic derivative equation by spectral division.

    Matrix elements across the kernel of rho are set to zero (Moore-Penrose
    convention), which keeps the Fisher information finite for noisy states.
    """
    rho = _as_matrix(rho)
    drho = np.asarray(drho)
    if drho.shape != rho.shape:
        raise DimensionMismatchError("drho shape does not match rho")
    if np.abs(drho - drho.conj().T).max() > 1e-8:
        raise ValueError("drho is not Hermitian within 1e-8")
    if abs(np.trace(drho)) > 1e-8:
        raise ValueError("drho is not traceless within 1e-8")
    evals, evecs = np.linalg.eigh(rho)
    dmat = evecs.conj().T @ drho @ evecs
    lbar, support_dim, qfi = _sld_core(evals, dmat)
    op = evecs @ lbar @ evecs.conj().T
    op = (op + op.conj().T) / 2.0
    return SldResult(op, support_dim, qfi)


def qfi_vector(circuit: ParametricCircuit, theta) -> np.ndarray:
    """Per-parameter quantum Fisher information of the evolved state."""
    rho, derivs = evolve_with_derivatives(circuit, theta)
    evals, evecs = np.linalg.eigh(rho.data)
    out = np.empty(len(derivs))
    for j, drho in enumerate(derivs):
        dmat = evecs.conj().T @ drho @ evecs
        _, _, out[j] = _sld_core(evals, dmat)
    return out


def _observable_matrix(observable) -> np.ndarray:
    if isinstance(observable, PauliSum):
        return pauli.realize(observable)
    return np.asarray(observable)


def gradient_observable(observable, sld: SldResult, baseline: float) -> np.ndarray:
    """Hermitian g = (L H + H L)/2 + lambda L; Tr[rho g] is baseline-free."""
    hmat = _observable_matrix(observable)
    lop = sld.operator
    if hmat.shape != lop.shape:
        raise DimensionMismatchError("observable and SLD dimensions differ")
    g = (lop @ hmat + hmat @ lop) / 2.0 + baseline * lop
    return (g + g.conj().T) / 2.0


def second_moment(rho, observable_matrix: np.ndarray) -> float:
    """Exact E[m^2] when measuring the observable's eigenbasis: Tr[rho g^2]."""
    rho = _as_matrix(rho)
    return float(np.real(np.einsum("ij,jk,ki->", rho, observable_matrix,
                                   observable_matrix)))


def optimal_baseline(rho, observable, sld: SldResult) -> float:
    """Variance-minimizing baseline -<{L, {H, L}}> / (4 QFI).

    E[g^2] is an exact parabola in the baseline with curvature QFI, so this
    is its vertex; undefined when the QFI vanishes.
    """
    if sld.qfi <= 1e-12:
        raise ValueError("baseline undefined: QFI is numerically zero")
    rho = _as_matrix(rho)
    hmat = _observable_matrix(observable)
    lop = sld.operator
    inner = hmat @ lop + lop @ hmat
    outer = lop @ inner + inner @ lop
    return float(-np.real(np.einsum("ij,ji->", rho, outer)) / (4.0 * sld.qfi))


def _resolve_baseline(policy, rho, hmat, sld: SldResult) -> float:
    if isinstance(policy, (int, float)):
        return float(policy)
    if policy == "zero":
        return 0.0
    if policy == "optimal":
        if sld.qfi <= 1e-12:
            return 0.0
        return optimal_baseline(rho, hmat, sld)
    raise ValueError(f"unknown baseline policy {policy!r}")


def exact_gradient(circuit: ParametricCircuit, theta, observable) -> np.ndarray:
    """Exact gradient Tr[H d(rho)/d(theta_j)] from derivative propagation."""
    hmat = _observable_matrix(observable)
    _, derivs = evolve_with_derivatives(circuit, theta)
    return np.array(
        [float(np.real(np.einsum("ij,ji->", hmat, d))) for d in derivs]
    )


def sample_sld_gradient(
    circuit: ParametricCircuit,
    theta,
    observable,
    shots: int,
    lambda_policy="zero",
    seed: int = 0,
) -> GradientSample:
    """Born-sample the eigenvalues of each gradient observable g_j.

    Component j uses the derived stream (seed, j) so components can be drawn
    in parallel.
    """
    if shots == 0:
        return GradientSample(
            exact_gradient(circuit, theta, observable), SLD_KIND, 0
        )
    if shots < 0:
        raise ValueError("shots must be >= 0")
    hmat = _observable_matrix(observable)
    rho, derivs = evolve_with_derivatives(circuit, theta)
    evals, evecs = np.linalg.eigh(rho.data)
    values = np.empty(len(derivs))
    for j, drho in enumerate(derivs):
        dmat = evecs.conj().T @ drho @ evecs
        lbar, support_dim, qfi = _sld_core(evals, dmat)
        op = evecs @ lbar @ evecs.conj().T
        sld = SldResult((op + op.conj().T) / 2.0, support_dim, qfi)
        lam = _resolve_baseline(lambda_policy, rho.data, hmat, sld)
        gobs = gradient_observable(hmat, sld, lam)
        outs, basis = np.linalg.eigh(gobs)
        probs = np.real(np.einsum("ij,jk,ki->i", basis.conj().T, rho.data, basis))
        probs = np.clip(probs, 0.0, None)
        probs /= probs.sum()
        draws = rng_from(seed, j).choice(outs.size, size=shots, p=probs)
        values[j] = outs[draws].mean()
    return GradientSample(values, SLD_KIND, shots * len(derivs))


def _cost_basis(rho: DensityMatrix, observable, derivs):
    """Probabilities, energies and per-parameter probability derivatives."""
    if isinstance(observable, PauliSum) and observable.is_diagonal:
        probs = np.real(np.diag(rho.data))
        energies = pauli.realize_diagonal(observable)
        dprobs = np.array([np.real(np.diag(d)) for d in derivs])
    else:
        hmat = _observable_matrix(observable)
        energies, basis = np.linalg.eigh(hmat)
        rot = basis.conj().T
        probs = np.real(np.einsum("ij,jk,ki->i", rot, rho.data, basis))
        dprobs = np.array(
            [np.real(np.einsum("ij,jk,ki->i", rot, d, basis)) for d in derivs]
        )
    lo = probs.min()
    if lo < -1e-9:
        raise NumericalInvariantError(f"outcome probability {lo:.3e}")
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    return probs, energies, dprobs


def sample_ld_gradient(
    circuit: ParametricCircuit, theta, observable, shots: int, seed: int = 0
) -> GradientSample:
    """Score-function estimator: draw y ~ p(y), emit E_y d_j p(y) / p(y).

    One register measurement feeds every component; probability derivatives
    come from the exact simulator state, which is what keeps the estimator
    unbiased: sum_y p g = sum_y E_y d p = dC.
    """
    rho, derivs = evolve_with_derivatives(circuit, theta)
    probs, energies, dprobs = _cost_basis(rho, observable, derivs)
    if shots == 0:
        return GradientSample(dprobs @ energies, LD_KIND, 0)
    if shots < 0:
        raise ValueError("shots must be >= 0")
    draws = rng_from(seed).choice(probs.size, size=shots, p=probs)
    values = np.zeros(len(derivs))
    for y in draws:
        if probs[y] < PROB_FLOOR:
            raise NumericalInvariantError(
                f"sampled outcome {y} has probability {probs[y]:.3e} < {PROB_FLOOR}"
            )
        values += energies[y] * dprobs[:, y] / probs[y]
    return GradientSample(values / shots, LD_KIND, shots)


# --------------------------------------------------------------------------
# Hadamard-test estimator (noiseless circuits).
# --------------------------------------------------------------------------

_RX_HALF = np.array([[1.0, -1.0j], [-1.0j, 1.0]], dtype=complex) / np.sqrt(2.0)


def _hadamard_terms(circuit: ParametricCircuit, theta, observable):
    """Interferometric term table: (weight, exact P(outcome 0)) per term.

    For each parameter k, generator term Q and cost term Pv, runs the
    ancilla circuit: ancilla in |+>, register in psi0; gates 1..k; Q
    controlled on the ancilla; gates k+1..P; Pv controlled; a pi/2 x-rotation
    on the ancilla; measure the ancilla. The state is tracked as the two
    ancilla branches of the (N+1)-qubit register.
    """
    theta = np.asarray(theta, dtype=float)
    hsum = observable if isinstance(observable, PauliSum) else None
    if hsum is None:
        raise EstimatorUnsupportedError(
            "the interferometric estimator needs a Pauli-sum observable"
        )
    unitaries = [g.dense_unitary(t) for g, t in zip(circuit.gates, theta)]
    psi0 = circuit.initial_state.amplitudes
    nparams = circuit.nparams
    # prefix[k] = state after gates 1..k
    prefix = [psi0]
    for u in unitaries:
        prefix.append(u @ prefix[-1])
    terms = []
    for k in range(nparams):
        gen = circuit.gates[k].generator
        for beta, qstring in gen.terms:
            qmat = pauli.realize(PauliSum(((1.0, qstring),), gen.nqubits))
            for alpha, pstring in hsum.terms:
                pmat = pauli.realize(PauliSum(((1.0, pstring),), hsum.nqubits))
                upper = prefix[k + 1].copy()          # ancilla |0> branch
                lower = qmat @ prefix[k + 1]          # ancilla |1> branch
                for u in unitaries[k + 1 :]:
                    upper = u @ upper
                    lower = u @ lower
                lower = pmat @ lower
                # pi/2 x-rotation mixes the branches; P(0) reads the Im part.
                b0 = (_RX_HALF[0, 0] * upper + _RX_HALF[0, 1] * lower) / np.sqrt(2.0)
                b1 = (_RX_HALF[1, 0] * upper + _RX_HALF[1, 1] * lower) / np.sqrt(2.0)
                p0 = float(np.real(np.vdot(b0, b0)))
                norm = p0 + float(np.real(np.vdot(b1, b1)))
                if abs(norm - 1.0) > 1e-9:
                    raise NumericalInvariantError(f"branch norm drift {norm - 1.0:.3e}")
                terms.append((k, beta * alpha, p0))
    return terms


def hadamard_test_gradient(
    circuit: ParametricCircuit, theta, observable, shots: int, seed: int = 0
) -> GradientSample:
    """Analytic-gradient estimator built from generalized interferometric tests.

    Each term contributes -2 w (1 - 2 P(0)); with exact P(0) (shots = 0) the
    recombination equals the derivative-propagation gradient. Noisy circuits
    are rejected: with non-unitary gates the construction is biased.
    """
    if not circuit.is_noiseless:
        raise EstimatorUnsupportedError(
            "interferometric gradient requires a noiseless circuit"
        )
    if shots < 0:
        raise ValueError("shots must be >= 0")
    terms = _hadamard_terms(circuit, theta, observable)
    values = np.zeros(circuit.nparams)
    for idx, (k, weight, p0) in enumerate(terms):
        if shots == 0:
            p_hat = p0
        else:
            p_hat = rng_from(seed, idx).binomial(shots, p0) / shots
        values[k] += -2.0 * weight * (1.0 - 2.0 * p_hat)
    used = 0 if shots == 0 else shots * len(terms)
    return GradientSample(values, HADAMARD_KIND, used)


def sample_gradient(
    circuit: ParametricCircuit,
    theta,
    observable,
    kind: str,
    shots: int,
    lambda_policy="zero",
    seed: int = 0,
) -> GradientSample:
    """Dispatch on estimator kind; shots = 0 returns the exact gradient."""
    if kind not in ESTIMATOR_KINDS:
        raise ValueError(f"unknown estimator kind {kind!r}")
    if kind == SLD_KIND:
        return sample_sld_gradient(circuit, theta, observable, shots,
                                   lambda_policy, seed)
    if kind == LD_KIND:
        return sample_ld_gradient(circuit, theta, observable, shots, seed)
    return hadamard_test_gradient(circuit, theta, observable, shots, seed)


def sample_cost(
    circuit: ParametricCircuit, theta, observable, shots: int = 200, seed: int = 0
) -> float:
    """Mean of `shots` Born-sampled cost eigenvalues at this parameter point."""
    rho = evolve(circuit, theta)
    outcomes = sample_outcomes(rho, observable, shots, seed)
    return float(np.mean([e for _, e in outcomes]))


def exact_cost(circuit: ParametricCircuit, theta, observable) -> float:
    """Tr[rho(theta) H] without sampling."""
    rho = evolve(circuit, theta)
    if isinstance(observable, PauliSum):
        probs, energies = born_distribution(rho, observable)
        return float(probs @ energies)
    hmat = np.asarray(observable)
    return float(np.real(np.einsum("ij,ji->", rho.data, hmat)))
