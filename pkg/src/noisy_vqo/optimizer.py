"""Stochastic gradient descent over circuit parameters, fully traced.

The update rule is theta(i+1) = theta(i) - alpha_i g(theta(i)) with g an
unbiased shot-sampled gradient estimate (exact when shots = 0). The
reported estimate of the optimum is the iterate average
theta_avg = (1/I) sum_i theta(i), whose exact noisy cost is stored on the
trace. Every random draw comes from streams derived from (seed, trial,
iteration, batch index), so a (config, seed) pair fully determines a run.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import bounds, estimators
from .circuits import ParametricCircuit
from .errors import DivergenceError, EstimatorUnsupportedError
from .seeding import rng_from

DIVERGENCE_NORM = 1e3
INIT_HALF_WIDTH = np.pi / 8


@dataclass(frozen=True)
class OptimizerConfig:
    """Run settings; learning_rate None selects alpha = R / (G sqrt(I)).

    With the schedule, R defaults to pi sqrt(P) (half-diameter of the
    periodic parameter box) and G to the Fisher-information cap of the
    gradient norm evaluated on a small seeded probe set.
    """

    iterations: int
    estimator_kind: str = estimators.SLD_KIND
    shots: int = 200
    batch: int = 1
    learning_rate: float | None = 0.05
    rate_constant: float | None = None
    gradient_bound: float | None = None
    lambda_policy: str | float = "zero"
    seed: int = 0
    init: str = "zero"

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("need at least one iteration")
        if self.batch < 1:
            raise ValueError("batch size must be >= 1")
        if self.shots < 0:
            raise ValueError("shots must be >= 0 (0 = exact mode)")
        if self.learning_rate is not None and self.learning_rate <= 0.0:
            raise ValueError("constant learning rate must be positive")
        if self.learning_rate is None:
            if self.rate_constant is not None and self.rate_constant <= 0.0:
                raise ValueError("R must be positive")
            if self.gradient_bound is not None and self.gradient_bound <= 0.0:
                raise ValueError("G must be positive")
        if self.estimator_kind not in estimators.ESTIMATOR_KINDS:
            raise ValueError(f"unknown estimator kind {self.estimator_kind!r}")
        if self.init not in ("zero", "uniform"):
            raise ValueError(f"unknown initialization policy {self.init!r}")


@dataclass(frozen=True)
class RunTrace:
    """Per-iteration record of one optimization run."""

    thetas: np.ndarray              # (I, P) iterates
    costs_sampled: np.ndarray       # (I,)
    grad_norms_sampled: np.ndarray  # (I,)
    alphas: np.ndarray              # (I,)
    theta_avg: np.ndarray           # iterate average
    final_cost_avg: float           # exact noisy cost at theta_avg
    seed: int
    config: OptimizerConfig

    @property
    def iterations(self) -> int:
        return self.thetas.shape[0]

    @property
    def nparams(self) -> int:
        return self.thetas.shape[1]

    def csv_header(self) -> list[str]:
        names = ["iter", "cost_sampled", "grad_norm_sampled"]
        names += [f"theta_{j + 1}" for j in range(self.nparams)]
        return names

    def csv_rows(self):
        for i in range(self.iterations):
            yield (
                i + 1,
                self.costs_sampled[i],
                self.grad_norms_sampled[i],
                *self.thetas[i],
            )


def _initial_theta(circuit, config: OptimizerConfig) -> np.ndarray:
    # Derived from the master seed only: parallel trials share the start
    # and differ by measurement stochasticity alone.
    if config.init == "zero":
        return np.zeros(circuit.nparams)
    rng = rng_from(config.seed, "init")
    return rng.uniform(-INIT_HALF_WIDTH, INIT_HALF_WIDTH, circuit.nparams)


def _resolve_alpha(circuit, observable, config: OptimizerConfig) -> float:
    if config.learning_rate is not None:
        return config.learning_rate
    r_constant = config.rate_constant or bounds.default_r_constant(circuit.nparams)
    g_bound = config.gradient_bound
    if g_bound is None:
        probes = bounds.sobol_probes(circuit.nparams, 16, config.seed)
        g_bound = bounds.g2_qfi_upper(circuit, observable, probes)
    if g_bound <= 0.0:
        raise ValueError("gradient-norm bound is zero; schedule undefined")
    return r_constant / (g_bound * np.sqrt(config.iterations))


def sgd_run(
    circuit: ParametricCircuit,
    observable,
    config: OptimizerConfig,
    seed_path=(),
) -> RunTrace:
    """One seeded descent; deterministic given (config, seed_path).

    With shots = 0 and a constant rate this is plain gradient descent. The
    run aborts with a diagnostic if the parameter norm passes 1e3.
    """
    if (
        config.estimator_kind == estimators.HADAMARD_KIND
        and not circuit.is_noiseless
    ):
        raise EstimatorUnsupportedError(
            "the interferometric estimator cannot drive a noisy circuit"
        )
    alpha = _resolve_alpha(circuit, observable, config)
    theta = _initial_theta(circuit, config)
    nparams = circuit.nparams

    thetas = np.empty((config.iterations, nparams))
    costs = np.empty(config.iterations)
    norms = np.empty(config.iterations)
    alphas = np.full(config.iterations, alpha)

    for i in range(config.iterations):
        thetas[i] = theta
        if config.shots == 0:
            costs[i] = estimators.exact_cost(circuit, theta, observable)
            grad = estimators.exact_gradient(circuit, theta, observable)
        else:
            costs[i] = estimators.sample_cost(
                circuit, theta, observable, config.shots,
                seed=rng_from(config.seed, *seed_path, i, "cost").integers(2 ** 62),
            )
            acc = np.zeros(nparams)
            for m in range(config.batch):
                sample = estimators.sample_gradient(
                    circuit, theta, observable,
                    config.estimator_kind, config.shots,
                    config.lambda_policy,
                    seed=rng_from(config.seed, *seed_path, i, m).integers(2 ** 62),
                )
                acc += sample.values
            grad = acc / config.batch
        norms[i] = np.linalg.norm(grad)
        theta = theta - alpha * grad
        norm = np.linalg.norm(theta)
        if norm > DIVERGENCE_NORM:
            raise DivergenceError(
                f"parameter norm {norm:.3e} exceeded {DIVERGENCE_NORM:.0e} "
                f"at iteration {i + 1} (alpha={alpha}, |g|={norms[i]:.3e})"
            )

    theta_avg = thetas.mean(axis=0)
    final_cost = estimators.exact_cost(circuit, theta_avg, observable)
    return RunTrace(
        thetas=thetas,
        costs_sampled=costs,
        grad_norms_sampled=norms,
        alphas=alphas,
        theta_avg=theta_avg,
        final_cost_avg=final_cost,
        seed=config.seed,
        config=config,
    )


def averaged_accuracy(trace: RunTrace, exact_opt_cost: float) -> float:
    """Exact noisy cost of the iterate average minus the supplied optimum."""
    return trace.final_cost_avg - exact_opt_cost


@dataclass(frozen=True)
class TrialSummary:
    """Per-iteration statistics across trials (normal-approximation 95% CI)."""

    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    trials: int


def summarize_trials(traces) -> TrialSummary:
    table = np.vstack([t.costs_sampled for t in traces])
    mean = table.mean(axis=0)
    if table.shape[0] > 1:
        half = 1.96 * table.std(axis=0, ddof=1) / np.sqrt(table.shape[0])
    else:
        half = np.zeros_like(mean)
    return TrialSummary(mean, mean - half, mean + half, table.shape[0])


def multi_trial(
    circuit: ParametricCircuit,
    observable,
    config: OptimizerConfig,
    trials: int,
) -> tuple[list[RunTrace], TrialSummary]:
    """Repeat the run with per-trial derived seeds and summarize the costs."""
    if trials < 1:
        raise ValueError("need at least one trial")
    traces = [
        sgd_run(circuit, observable, config, seed_path=("trial", t))
        for t in range(trials)
    ]
    return traces, summarize_trials(traces)
