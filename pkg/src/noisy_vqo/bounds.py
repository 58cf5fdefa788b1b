"""Error and convergence bounds for noisy variational optimization.

Quantities evaluated here:

* the excess cost Err = C_noisy(vartheta) - C_ideal(theta);
* a depth-linear composition ("peeling") upper bound on Err built from
  per-gate channel distances, evaluated with the Choi trace-norm upper
  bound of the diamond distance so every inequality stays valid;
* the fidelity upper bound 2 ||H|| sqrt(1 - <psi|rho|psi>);
* gradient-estimator second moments max_theta E[||g||^2] over a declared
  probe set, and their quantum-Fisher-information cap
  sqrt(P) ||H|| max sqrt(QFI_j);
* the assembled convergence right-hand side Err + R G / sqrt(I).

The max over all parameters that appears in the theory is uncomputable; it
is replaced by a seeded low-discrepancy probe set plus the optimizer
endpoints, and the probe protocol is recorded in every report.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize as sp_optimize
from scipy.stats import qmc

from . import channels, estimators, pauli
from .circuits import ParametricCircuit, evolve, evolve_with_derivatives, pure_evolve
from .errors import DimensionMismatchError
from .pauli import PauliSum
from .seeding import rng_from
from .states import DensityMatrix, PureState, fidelity_pure

ENUMERATION_QUBIT_CAP = 10
EMPIRICAL_FALLBACK_SHOTS = 100_000


def _norm_inf(observable) -> float:
    if isinstance(observable, PauliSum):
        return pauli.op_norm_inf(observable)
    evals = np.linalg.eigvalsh(np.asarray(observable))
    return float(max(abs(evals[0]), abs(evals[-1])))


def cost_error(
    circuit_noisy: ParametricCircuit,
    vartheta,
    circuit_ideal: ParametricCircuit,
    theta,
    observable,
) -> float:
    """Signed difference between the noisy and noiseless costs.

    Zero when the circuits coincide and the parameters match; bounded in
    magnitude by 2 ||H||_inf always.
    """
    if circuit_noisy.nqubits != circuit_ideal.nqubits:
        raise DimensionMismatchError("circuits act on different registers")
    noisy = estimators.exact_cost(circuit_noisy, vartheta, observable)
    ideal = estimators.exact_cost(circuit_ideal, theta, observable)
    return noisy - ideal


@dataclass(frozen=True)
class PeelingBound:
    """Depth-linear bound in both its sum and P-times-max forms."""

    sum_form: float
    pmax_form: float
    per_gate: tuple[float, ...]


def peeling_upper(
    channels_noisy, channels_ideal, observable
) -> PeelingBound:
    """||H||_inf times the telescoped per-gate Choi upper bounds.

    Uses the upper member of the Choi bracket for each per-gate diamond
    distance, so the result upper-bounds the true telescoping bound and
    therefore still dominates the measured Err.
    """
    channels_noisy = list(channels_noisy)
    channels_ideal = list(channels_ideal)
    if len(channels_noisy) != len(channels_ideal):
        raise DimensionMismatchError(
            f"{len(channels_noisy)} noisy gates vs {len(channels_ideal)} ideal"
        )
    hnorm = _norm_inf(observable)
    per_gate = []
    for noisy, ideal in zip(channels_noisy, channels_ideal):
        _, upper = channels.channel_distance_bounds(noisy, ideal)
        per_gate.append(upper)
    per_gate = tuple(per_gate)
    total = hnorm * float(np.sum(per_gate))
    pmax = hnorm * len(per_gate) * (max(per_gate) if per_gate else 0.0)
    return PeelingBound(total, pmax, per_gate)


def fidelity_upper(psi: PureState, rho: DensityMatrix, observable) -> float:
    """2 ||H||_inf sqrt(1 - <psi|rho|psi>); zero iff the overlap is one."""
    overlap = fidelity_pure(psi, rho)
    return 2.0 * _norm_inf(observable) * float(np.sqrt(max(1.0 - overlap, 0.0)))


# --------------------------------------------------------------------------
# Probe sets and second moments.
# --------------------------------------------------------------------------


def sobol_probes(nparams: int, count: int, seed: int) -> np.ndarray:
    """Low-discrepancy points in [0, 2 pi)^P, reproducible from the seed."""
    sampler = qmc.Halton(d=nparams, scramble=True, seed=rng_from(seed, "probes"))
    return 2.0 * np.pi * sampler.random(count)


@dataclass(frozen=True)
class ProbeMoments:
    """Per-probe second-moment data shared by the scan and the bounds."""

    qfi: np.ndarray       # (probes, P)
    sld_sq: np.ndarray    # (probes, P), E[g_j^2] at the chosen baseline
    ld_sq: np.ndarray     # (probes, P)


def probe_moments(
    circuit: ParametricCircuit, observable, probes, lambda_policy="zero"
) -> ProbeMoments:
    """Exact per-component second moments and QFI at each probe point."""
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    hmat = (
        pauli.realize(observable)
        if isinstance(observable, PauliSum)
        else np.asarray(observable)
    )
    nprobes, nparams = probes.shape
    qfi = np.empty((nprobes, nparams))
    sld_sq = np.empty((nprobes, nparams))
    ld_sq = np.empty((nprobes, nparams))
    for i, theta in enumerate(probes):
        rho, derivs = evolve_with_derivatives(circuit, theta)
        evals, evecs = np.linalg.eigh(rho.data)
        probs, energies, dprobs = estimators._cost_basis(rho, observable, derivs)
        usable = probs > estimators.PROB_FLOOR
        for j, drho in enumerate(derivs):
            dmat = evecs.conj().T @ drho @ evecs
            lbar, support, qfi_j = estimators._sld_core(evals, dmat)
            qfi[i, j] = qfi_j
            lop = evecs @ lbar @ evecs.conj().T
            sld = estimators.SldResult((lop + lop.conj().T) / 2.0, support, qfi_j)
            lam = estimators._resolve_baseline(lambda_policy, rho.data, hmat, sld)
            gobs = estimators.gradient_observable(hmat, sld, lam)
            sld_sq[i, j] = estimators.second_moment(rho, gobs)
            ld_sq[i, j] = float(
                np.sum(
                    energies[usable] ** 2
                    * dprobs[j, usable] ** 2
                    / probs[usable]
                )
            )
    return ProbeMoments(qfi, sld_sq, ld_sq)


@dataclass(frozen=True)
class SecondMomentEstimate:
    """max_theta sqrt(E[||g||^2]) over the probe set; exact unless flagged."""

    value: float
    exact: bool


def _empirical_probe_moment(
    circuit, observable, probes, estimator_kind, lambda_policy, seed
) -> float:
    worst = 0.0
    shots = EMPIRICAL_FALLBACK_SHOTS
    for i, theta in enumerate(probes):
        rng = rng_from(seed, "g2-fallback", i)
        rho, derivs = evolve_with_derivatives(circuit, theta)
        if estimator_kind == estimators.LD_KIND:
            probs, energies, dprobs = estimators._cost_basis(rho, observable, derivs)
            draws = rng.choice(probs.size, size=shots, p=probs)
            keep = probs[draws] > estimators.PROB_FLOOR
            draws = draws[keep]
            sq = np.zeros(len(derivs))
            for j in range(len(derivs)):
                g = energies[draws] * dprobs[j, draws] / probs[draws]
                sq[j] = np.mean(g ** 2)
            worst = max(worst, float(sq.sum()))
            continue
        evals, evecs = np.linalg.eigh(rho.data)
        hmat = (
            pauli.realize(observable)
            if isinstance(observable, PauliSum)
            else np.asarray(observable)
        )
        total = 0.0
        for j, drho in enumerate(derivs):
            dmat = evecs.conj().T @ drho @ evecs
            lbar, support, qfi_j = estimators._sld_core(evals, dmat)
            lop = evecs @ lbar @ evecs.conj().T
            sld = estimators.SldResult((lop + lop.conj().T) / 2.0, support, qfi_j)
            lam = estimators._resolve_baseline(lambda_policy, rho.data, hmat, sld)
            gobs = estimators.gradient_observable(hmat, sld, lam)
            outs, basis = np.linalg.eigh(gobs)
            p = np.real(np.einsum("ij,jk,ki->i", basis.conj().T, rho.data, basis))
            p = np.clip(p, 0.0, None)
            p /= p.sum()
            total += float(np.mean(outs[rng.choice(outs.size, size=shots, p=p)] ** 2))
        worst = max(worst, total)
    return worst


def g2_empirical(
    circuit: ParametricCircuit,
    observable,
    probes,
    estimator_kind: str = estimators.SLD_KIND,
    lambda_policy="zero",
    seed: int = 0,
) -> SecondMomentEstimate:
    """Largest gradient second moment over the probes, as a square root.

    Exact enumeration up to the qubit cap; above it, a sampled moment with
    the exact flag cleared.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if probes.size == 0:
        raise ValueError("probe set is empty")
    if estimator_kind not in (estimators.SLD_KIND, estimators.LD_KIND):
        raise ValueError(f"no second-moment path for estimator {estimator_kind!r}")
    if circuit.nqubits <= ENUMERATION_QUBIT_CAP:
        moments = probe_moments(circuit, observable, probes, lambda_policy)
        table = moments.sld_sq if estimator_kind == estimators.SLD_KIND else moments.ld_sq
        return SecondMomentEstimate(float(np.sqrt(table.sum(axis=1).max())), True)
    worst = _empirical_probe_moment(
        circuit, observable, probes, estimator_kind, lambda_policy, seed
    )
    return SecondMomentEstimate(float(np.sqrt(worst)), False)


def g2_qfi_upper(circuit: ParametricCircuit, observable, probes) -> float:
    """sqrt(P) ||H||_inf max over probes and components of sqrt(QFI_j)."""
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if probes.size == 0:
        raise ValueError("probe set is empty")
    worst = 0.0
    for theta in probes:
        worst = max(worst, float(estimators.qfi_vector(circuit, theta).max()))
    return float(
        np.sqrt(circuit.nparams) * _norm_inf(observable) * np.sqrt(worst)
    )


# --------------------------------------------------------------------------
# Optimum search and report assembly.
# --------------------------------------------------------------------------


def optimize_cost(
    circuit: ParametricCircuit,
    observable,
    restarts: int = 8,
    seed: int = 0,
    maxiter: int = 500,
    extra_starts=(),
) -> tuple[np.ndarray, float]:
    """Best (theta, cost) from quasi-Newton descent with exact gradients.

    Multi-start: low-discrepancy points plus any supplied warm starts. This
    is report plumbing, not the stochastic optimizer under study.
    """
    hmat = (
        pauli.realize(observable)
        if isinstance(observable, PauliSum)
        else np.asarray(observable)
    )

    def fun(theta):
        rho, derivs = evolve_with_derivatives(circuit, theta)
        cost = float(np.real(np.einsum("ij,ji->", rho.data, hmat)))
        grad = np.array(
            [float(np.real(np.einsum("ij,ji->", hmat, d))) for d in derivs]
        )
        return cost, grad

    starts = [np.asarray(s, dtype=float) for s in extra_starts]
    starts.extend(sobol_probes(circuit.nparams, restarts, seed))
    best_theta, best_cost = None, np.inf
    for start in starts:
        res = sp_optimize.minimize(
            fun, start, jac=True, method="L-BFGS-B",
            options={"maxiter": maxiter, "gtol": 1e-9, "ftol": 1e-14},
        )
        if res.fun < best_cost:
            best_theta, best_cost = res.x, float(res.fun)
    return best_theta, best_cost


@dataclass(frozen=True)
class BoundReport:
    """Every bound of the error analysis evaluated on one noisy circuit.

    g2_empirical and g2_qfi_upper are stored on the G scale, i.e. as
    max_theta sqrt(E[||g||^2]) and its cap, so assembled_rhs adds
    R * g2_qfi_upper / sqrt(I) directly.
    """

    err: float
    err_peeling_upper: float
    err_peeling_pmax: float
    err_fidelity_upper: float
    g2_empirical: float
    g2_qfi_upper: float
    g2_exact: bool
    estimator_kind: str
    probe_set_size: int
    seed: int
    r_constant: float
    theta_opt: np.ndarray
    vartheta_opt: np.ndarray

    def assembled_rhs(self, iterations: int, r_constant: float | None = None) -> float:
        return assembled_bound(self, r_constant or self.r_constant, iterations)

    def crossover_iterations(self, r_constant: float | None = None) -> float:
        """Iteration count where the statistical term equals the noise term."""
        r = r_constant or self.r_constant
        if self.err <= 0.0:
            return np.inf
        return (r * self.g2_qfi_upper / self.err) ** 2

    def to_flat(self) -> dict:
        """Flat key-value record for the CSV writer."""
        return {
            "err": self.err,
            "err_peeling_upper": self.err_peeling_upper,
            "err_peeling_pmax": self.err_peeling_pmax,
            "err_fidelity_upper": self.err_fidelity_upper,
            "g2_empirical": self.g2_empirical,
            "g2_qfi_upper": self.g2_qfi_upper,
            "g2_exact": int(self.g2_exact),
            "estimator_kind": self.estimator_kind,
            "probe_set_size": self.probe_set_size,
            "seed": self.seed,
            "r_constant": self.r_constant,
        }


def assembled_bound(report: BoundReport, r_constant: float, iterations: int) -> float:
    """Err estimate plus R G / sqrt(I); non-increasing in I, increasing in R."""
    if iterations < 1:
        raise ValueError("iteration count must be >= 1")
    if r_constant <= 0.0:
        raise ValueError("R must be positive")
    return report.err + r_constant * report.g2_qfi_upper / np.sqrt(iterations)


def default_r_constant(nparams: int) -> float:
    """Half-diameter pi sqrt(P) of the periodic parameter box."""
    return float(np.pi * np.sqrt(nparams))


def build_report(
    circuit_noisy: ParametricCircuit,
    observable,
    probe_count: int = 64,
    estimator_kind: str = estimators.SLD_KIND,
    lambda_policy="zero",
    seed: int = 0,
    restarts: int = 8,
    maxiter: int = 500,
    extra_starts=(),
) -> BoundReport:
    """Optimize both arms, evaluate every bound, assemble the report.

    Err uses best-found optima (noiseless via exact-gradient multi-start
    descent, noisy warm-started from the noiseless solution). A negative
    err is reported as-is rather than clamped.
    """
    circuit_ideal = circuit_noisy.noiseless()
    theta_opt, _ = optimize_cost(
        circuit_ideal, observable, restarts=restarts, seed=seed,
        maxiter=maxiter, extra_starts=extra_starts,
    )
    vartheta_opt, _ = optimize_cost(
        circuit_noisy, observable, restarts=restarts, seed=seed,
        maxiter=maxiter, extra_starts=tuple(extra_starts) + (theta_opt,),
    )
    err = cost_error(circuit_noisy, vartheta_opt, circuit_ideal, theta_opt, observable)

    noisy_channels = [
        g.channel(t) for g, t in zip(circuit_noisy.gates, vartheta_opt)
    ]
    ideal_channels = [
        g.ideal_channel(t) for g, t in zip(circuit_ideal.gates, theta_opt)
    ]
    peel = peeling_upper(noisy_channels, ideal_channels, observable)

    psi = pure_evolve(circuit_ideal, theta_opt)
    rho = evolve(circuit_noisy, vartheta_opt)
    fid_upper = fidelity_upper(psi, rho, observable)

    probes = np.vstack(
        [
            sobol_probes(circuit_noisy.nparams, probe_count, seed),
            theta_opt,
            vartheta_opt,
        ]
    )
    moment = g2_empirical(
        circuit_noisy, observable, probes, estimator_kind, lambda_policy, seed
    )
    qfi_cap = g2_qfi_upper(circuit_noisy, observable, probes)

    return BoundReport(
        err=err,
        err_peeling_upper=peel.sum_form,
        err_peeling_pmax=peel.pmax_form,
        err_fidelity_upper=fid_upper,
        g2_empirical=moment.value,
        g2_qfi_upper=qfi_cap,
        g2_exact=moment.exact,
        estimator_kind=estimator_kind,
        probe_set_size=probes.shape[0],
        seed=seed,
        r_constant=default_r_constant(circuit_noisy.nparams),
        theta_opt=np.asarray(theta_opt),
        vartheta_opt=np.asarray(vartheta_opt),
    )
