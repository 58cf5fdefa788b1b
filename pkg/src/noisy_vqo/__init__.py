"""Density-matrix simulation and stochastic optimization of noisy
parametric quantum circuits, with the error and convergence bounds that
relate estimator second moments to the quantum Fisher information."""

from .bounds import (
    BoundReport,
    assembled_bound,
    build_report,
    cost_error,
    fidelity_upper,
    g2_empirical,
    g2_qfi_upper,
    peeling_upper,
    sobol_probes,
)
from .channels import (
    KrausChannel,
    apply,
    channel_distance_bounds,
    choi,
    gaussian_fluctuation_channel,
    monte_carlo_fluctuation_check,
    thermal_relaxation,
    unitary_channel,
    z_depolarizing,
)
from .circuits import (
    DeviceNoise,
    GaussianFluctuation,
    NoNoise,
    NoisyGate,
    ParametricCircuit,
    QaoaSpec,
    ThermalRelaxationNoise,
    ZDepolarizing,
    build_qaoa,
    evolve,
    evolve_with_derivatives,
    ising_ring,
    pure_evolve,
    qaoa_ramp_start,
    transverse_mixer,
)
from .device_noise import NoiseTable, ingest_noise_table
from .errors import (
    ConfigError,
    DimensionMismatchError,
    DivergenceError,
    EstimatorUnsupportedError,
    NoisyVqoError,
    NumericalInvariantError,
    QubitCapError,
)
from .estimators import (
    GradientSample,
    SldResult,
    exact_cost,
    exact_gradient,
    gradient_observable,
    hadamard_test_gradient,
    optimal_baseline,
    qfi_vector,
    sample_cost,
    sample_gradient,
    sample_ld_gradient,
    sample_sld_gradient,
    solve_sld,
)
from .optimizer import (
    OptimizerConfig,
    RunTrace,
    TrialSummary,
    averaged_accuracy,
    multi_trial,
    sgd_run,
)
from .pauli import (
    PauliString,
    PauliSum,
    format_pauli_sum,
    min_eigenvalue,
    op_norm_inf,
    parse_pauli_sum,
    realize,
    realize_diagonal,
)
from .states import (
    DensityMatrix,
    PureState,
    expectation,
    fidelity_pure,
    plus_state,
    sample_outcomes,
    variance,
)

__all__ = [name for name in dir() if not name.startswith("_")]
