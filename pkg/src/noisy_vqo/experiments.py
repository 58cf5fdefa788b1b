"""Experiment harness: config ingestion, seeded runs, CSV/manifest/figure emission.

Five commands are exposed through the CLI:

* qfi-scan          estimator second moments, their QFI cap, and the excess
                    cost at the optimum, against dephasing strength;
* landscape         cost and variance over the first two angles, noiseless
                    versus noisy;
* convergence       paired noiseless/device-noise stochastic optimization at
                    several noise scale factors;
* bounds-audit      every inequality of the bounds module on random
                    instances, with measured slack;
* channel-validate  closed-form jitter channel against quadrature and
                    Monte-Carlo averaging.

Every run is a pure function of (config, seed): the manifest echoes both, and
re-running with them reproduces the CSVs bitwise.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import bounds, estimators, pauli, plots, reporting
from .channels import choi, gaussian_fluctuation_channel, monte_carlo_fluctuation_check
from .circuits import (
    DeviceNoise,
    NoisyGate,
    ParametricCircuit,
    QaoaSpec,
    ZDepolarizing,
    build_qaoa,
    evolve,
    ising_ring,
    pure_evolve,
    qaoa_ramp_start,
)
from .device_noise import NoiseTable, ingest_noise_table, noise_table_from_dict
from .errors import ConfigError
from .optimizer import OptimizerConfig, multi_trial
from .pauli import PauliString, PauliSum
from .seeding import rng_from
from .states import expectation, variance

try:  # package version for manifests
    from importlib.metadata import version as _pkg_version

    VERSION = _pkg_version("noisy-vqo")
except Exception:  # pragma: no cover
    VERSION = "unknown"

EXPERIMENT_KINDS = (
    "qfi-scan",
    "landscape",
    "convergence",
    "bounds-audit",
    "channel-validate",
)

LAYER_DECOMPOSITION_NOTE = (
    "device noise: each cost layer is decomposed into per-edge two-qubit "
    "gates and each mixer layer into per-qubit gates; a depolarizing mask "
    "plus thermal relaxation attaches to the qubits each elementary gate "
    "touches"
)


@dataclass
class ExperimentResult:
    kind: str
    out_dir: str
    csv_paths: list[str] = field(default_factory=list)
    figure_paths: list[str] = field(default_factory=list)
    manifest_path: str = ""
    data: dict = field(default_factory=dict)
    ok: bool = True


# --------------------------------------------------------------------------
# Config plumbing.
# --------------------------------------------------------------------------


def _merge(defaults: dict, override: dict | None) -> dict:
    if override is None:
        return dict(defaults)
    if not isinstance(override, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(override) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    merged = dict(defaults)
    merged.update(override)
    return merged


def _as_int(cfg: dict, key: str, minimum: int | None = None) -> int:
    value = cfg[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if isinstance(value, float) and not value.is_integer():
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    return value


def _as_float(
    cfg: dict, key: str, minimum: float | None = None, maximum: float | None = None
) -> float:
    value = cfg[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    value = float(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{key} must be <= {maximum}, got {value}")
    return value


def _as_float_list(cfg: dict, key: str, minimum=None, maximum=None) -> list[float]:
    raw = cfg[key]
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ConfigError(f"{key} must be a non-empty list")
    out = []
    for i, v in enumerate(raw):
        probe = {key: v}
        out.append(_as_float(probe, key, minimum, maximum))
    return out


def _manifest(kind: str, out_dir: str, config: dict, seed: int, outputs, notes) -> str:
    payload = {
        "command": kind,
        "version": VERSION,
        "seed": seed,
        "config": config,
        "outputs": [os.path.basename(p) for p in outputs],
        "notes": notes,
    }
    return reporting.write_manifest(
        os.path.join(out_dir, kind.replace("-", "_") + "_manifest.json"), payload
    )


# --------------------------------------------------------------------------
# qfi-scan
# --------------------------------------------------------------------------

QFI_SCAN_DEFAULTS = {
    "nqubits": 6,
    "layers": 10,
    "eta_grid": [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4],
    "probes": 64,
    "lambda_policy": "zero",
    "restarts": 2,
    "maxiter": 250,
    "ramp_amplitude": 0.75,
    "seed": 7,
}


def run_qfi_scan(
    config: dict | None = None,
    out_dir: str = "results",
    seed: int | None = None,
    full: bool = False,
) -> ExperimentResult:
    cfg = _merge(QFI_SCAN_DEFAULTS, config)
    if seed is not None:
        cfg["seed"] = seed
    nqubits = _as_int(cfg, "nqubits", 3)
    layers = _as_int(cfg, "layers", 1)
    probes_count = _as_int(cfg, "probes", 1)
    restarts = _as_int(cfg, "restarts", 1)
    maxiter = _as_int(cfg, "maxiter", 10)
    etas = _as_float_list(cfg, "eta_grid", 0.0, 1.0)
    amplitude = _as_float(cfg, "ramp_amplitude", 0.0)
    master = _as_int(cfg, "seed")
    lambda_policy = cfg["lambda_policy"]

    ring = ising_ring(nqubits)
    spec = QaoaSpec(nqubits, layers, ring)
    ideal = build_qaoa(spec)
    nparams = spec.nparams
    hnorm = pauli.op_norm_inf(ring)

    # One probe set shared by every row of the scan.
    probes = bounds.sobol_probes(nparams, probes_count, master)
    ramp = qaoa_ramp_start(layers, amplitude)
    theta_opt, cost_opt = bounds.optimize_cost(
        ideal, ring, restarts=restarts, seed=master, maxiter=maxiter,
        extra_starts=(ramp,),
    )

    rows = []
    table = {"eta": [], "g2_sqrt_LD": [], "g2_sqrt_SLD": [], "qfi_bound": [],
             "err_opt": []}
    warm = theta_opt
    for eta in etas:
        circuit = build_qaoa(spec, ZDepolarizing(eta))
        moments = bounds.probe_moments(circuit, ring, probes, lambda_policy)
        g_sld = float(np.sqrt(moments.sld_sq.sum(axis=1).max()))
        g_ld = float(np.sqrt(moments.ld_sq.sum(axis=1).max()))
        qfi_bound = float(np.sqrt(nparams) * hnorm * np.sqrt(moments.qfi.max()))
        vartheta, cost_noisy = bounds.optimize_cost(
            circuit, ring, restarts=restarts, seed=master, maxiter=maxiter,
            extra_starts=(warm, theta_opt),
        )
        warm = vartheta
        err = cost_noisy - cost_opt
        rows.append((eta, g_ld, g_sld, qfi_bound, err))
        for key, value in zip(table, rows[-1]):
            table[key].append(value)

    out_csv = reporting.write_csv(
        os.path.join(out_dir, "qfi_scan.csv"),
        ["eta", "g2_sqrt_LD", "g2_sqrt_SLD", "qfi_bound", "err_opt"],
        rows,
    )
    fig = plots.qfi_scan_figure(table, os.path.join(out_dir, "qfi_scan.png"))
    manifest = _manifest(
        "qfi-scan", out_dir, cfg, master, [out_csv, fig],
        {
            "probe_protocol": f"{probes_count} scrambled low-discrepancy points "
                              "in [0, 2pi)^P, shared across rows",
            "optimum_search": "quasi-Newton exact-gradient multi-start, warm-"
                              "started along the eta grid",
            "noiseless_cost_opt": cost_opt,
        },
    )
    return ExperimentResult(
        "qfi-scan", out_dir, [out_csv], [fig], manifest,
        data={"table": table, "theta_opt": theta_opt, "cost_opt": cost_opt},
    )


# --------------------------------------------------------------------------
# landscape
# --------------------------------------------------------------------------

LANDSCAPE_DEFAULTS = {
    "nqubits": 6,
    "layers": 1,
    "eta": 0.2,
    "gamma_points": 41,
    "gamma_max": math.pi,
    "beta_points": 41,
    "beta_max": math.pi / 2,
    "fixed_value": 0.0,
    "seed": 7,
}


def run_landscape(
    config: dict | None = None,
    out_dir: str = "results",
    seed: int | None = None,
    full: bool = False,
) -> ExperimentResult:
    cfg = _merge(LANDSCAPE_DEFAULTS, config)
    if seed is not None:
        cfg["seed"] = seed
    nqubits = _as_int(cfg, "nqubits", 3)
    layers = _as_int(cfg, "layers", 1)
    eta = _as_float(cfg, "eta", 0.0, 1.0)
    gamma_points = _as_int(cfg, "gamma_points", 2)
    beta_points = _as_int(cfg, "beta_points", 2)
    gamma_max = _as_float(cfg, "gamma_max", 1e-9)
    beta_max = _as_float(cfg, "beta_max", 1e-9)
    fixed_value = _as_float(cfg, "fixed_value")
    master = _as_int(cfg, "seed")

    ring = ising_ring(nqubits)
    spec = QaoaSpec(nqubits, layers, ring)
    gammas = np.linspace(0.0, gamma_max, gamma_points)
    betas = np.linspace(0.0, beta_max, beta_points)

    arms = {}
    csv_paths = []
    for arm, circuit in (
        ("noiseless", build_qaoa(spec)),
        ("noisy", build_qaoa(spec, ZDepolarizing(eta))),
    ):
        cost_grid = np.empty((gamma_points, beta_points))
        var_grid = np.empty((gamma_points, beta_points))
        rows = []
        for i, g in enumerate(gammas):
            for j, b in enumerate(betas):
                theta = np.full(spec.nparams, fixed_value)
                theta[0] = g
                theta[1] = b
                rho = evolve(circuit, theta)
                cost_grid[i, j] = expectation(rho, ring)
                var_grid[i, j] = variance(rho, ring)
                rows.append((g, b, cost_grid[i, j], var_grid[i, j]))
        arms[arm] = (cost_grid, var_grid)
        csv_paths.append(
            reporting.write_csv(
                os.path.join(out_dir, f"landscape_{arm}.csv"),
                ["gamma1", "beta1", "cost", "variance"],
                rows,
            )
        )

    fig = plots.landscape_figure(
        gammas, betas, arms, os.path.join(out_dir, "landscape.png")
    )
    manifest = _manifest(
        "landscape", out_dir, cfg, master, csv_paths + [fig],
        {"remaining_parameters": f"fixed at {fixed_value}"},
    )
    return ExperimentResult(
        "landscape", out_dir, csv_paths, [fig], manifest,
        data={"gammas": gammas, "betas": betas, "arms": arms},
    )


# --------------------------------------------------------------------------
# convergence
# --------------------------------------------------------------------------

CONVERGENCE_DEFAULTS = {
    "nqubits": 6,
    "layers": 3,
    "factors": [2.0, 4.0, 10.0],
    "trials": 10,
    "iterations": 300,
    "shots": 200,
    # null selects the schedule alpha = R / (G sqrt(I)) per arm, with G from
    # the Fisher-information cap; it keeps per-step parameter travel
    # comparable across noise strengths.
    "learning_rate": None,
    "estimator": "sld",
    "lambda_policy": "zero",
    "batch": 1,
    "init": "zero",
    "noise_table": {},
    "noise_table_path": None,
    "seed": 7,
}

FULL_NQUBITS = 8


def run_convergence(
    config: dict | None = None,
    out_dir: str = "results",
    seed: int | None = None,
    full: bool = False,
) -> ExperimentResult:
    cfg = _merge(CONVERGENCE_DEFAULTS, config)
    if seed is not None:
        cfg["seed"] = seed
    if full:
        cfg["nqubits"] = FULL_NQUBITS
    nqubits = _as_int(cfg, "nqubits", 3)
    layers = _as_int(cfg, "layers", 1)
    trials = _as_int(cfg, "trials", 1)
    iterations = _as_int(cfg, "iterations", 1)
    shots = _as_int(cfg, "shots", 1)
    batch = _as_int(cfg, "batch", 1)
    if cfg["learning_rate"] is None:
        learning_rate = None  # schedule alpha = R / (G sqrt(I))
    else:
        learning_rate = _as_float(cfg, "learning_rate", 1e-12)
    factors = _as_float_list(cfg, "factors", 0.0)
    master = _as_int(cfg, "seed")
    if cfg["estimator"] not in estimators.ESTIMATOR_KINDS:
        raise ConfigError(f"unknown estimator {cfg['estimator']!r}")
    if cfg["init"] not in ("zero", "uniform"):
        raise ConfigError(f"unknown init policy {cfg['init']!r}")

    if cfg["noise_table_path"]:
        base_table = ingest_noise_table(cfg["noise_table_path"])
    else:
        base_table = noise_table_from_dict(cfg["noise_table"] or {})

    ring = ising_ring(nqubits)
    spec = QaoaSpec(nqubits, layers, ring)
    opt_cfg = OptimizerConfig(
        iterations=iterations,
        estimator_kind=cfg["estimator"],
        shots=shots,
        batch=batch,
        learning_rate=learning_rate,
        lambda_policy=cfg["lambda_policy"],
        seed=master,
        init=cfg["init"],
    )

    noiseless_traces, noiseless_summary = multi_trial(
        build_qaoa(spec), ring, opt_cfg, trials
    )

    csv_paths = []
    per_factor = {}
    for factor in factors:
        noisy_circuit = build_qaoa(spec, DeviceNoise(base_table.scaled(factor)))
        noisy_traces, noisy_summary = multi_trial(noisy_circuit, ring, opt_cfg, trials)
        per_factor[factor] = {
            "noiseless": (noiseless_traces, noiseless_summary),
            "noisy": (noisy_traces, noisy_summary),
        }
        tag = ("%g" % factor).replace(".", "p")
        rows = []
        for arm, (traces, _) in per_factor[factor].items():
            for t, trace in enumerate(traces):
                for i in range(trace.iterations):
                    rows.append((i + 1, arm, t, trace.costs_sampled[i]))
        csv_paths.append(
            reporting.write_csv(
                os.path.join(out_dir, f"convergence_f{tag}.csv"),
                ["iter", "arm", "trial", "cost_sampled"],
                rows,
            )
        )
        summary_rows = []
        for arm, (_, summary) in per_factor[factor].items():
            for i in range(summary.mean.size):
                summary_rows.append(
                    (i + 1, arm, summary.mean[i], summary.ci_low[i], summary.ci_high[i])
                )
        csv_paths.append(
            reporting.write_csv(
                os.path.join(out_dir, f"convergence_f{tag}_summary.csv"),
                ["iter", "arm", "mean", "ci_low", "ci_high"],
                summary_rows,
            )
        )

    fig = plots.convergence_figure(
        per_factor, os.path.join(out_dir, "convergence.png")
    )
    manifest = _manifest(
        "convergence", out_dir, cfg, master, csv_paths + [fig],
        {
            "layer_decomposition": LAYER_DECOMPOSITION_NOTE,
            "confidence_interval": "mean +/- 1.96 stderr across trials per iteration",
            "noiseless_arm": "shared across factors (does not depend on f)",
        },
    )
    return ExperimentResult(
        "convergence", out_dir, csv_paths, [fig], manifest,
        data={"per_factor": per_factor, "config": opt_cfg},
    )


# --------------------------------------------------------------------------
# bounds-audit
# --------------------------------------------------------------------------

BOUNDS_AUDIT_DEFAULTS = {
    "nqubits": 3,
    "layers": 2,
    "eta": 0.1,
    "instances": 100,
    "eta_max": 0.4,
    "depth_sweep": [2, 4, 6, 8],
    "probes": 16,
    "restarts": 4,
    "maxiter": 300,
    "seed": 7,
}

SLACK_FLOOR = -1e-9


def _depth_chain(depth: int, eta: float) -> ParametricCircuit:
    gate = NoisyGate(PauliSum.from_terms([(1.0, "Z")]), ZDepolarizing(eta))
    return ParametricCircuit((gate,) * depth, 1)


def run_bounds_audit(
    config: dict | None = None,
    out_dir: str = "results",
    seed: int | None = None,
    full: bool = False,
) -> ExperimentResult:
    cfg = _merge(BOUNDS_AUDIT_DEFAULTS, config)
    if seed is not None:
        cfg["seed"] = seed
    nqubits = _as_int(cfg, "nqubits", 2)
    if nqubits > 4:
        raise ConfigError("bounds audit is a small-instance check (nqubits <= 4)")
    layers = _as_int(cfg, "layers", 1)
    instances = _as_int(cfg, "instances", 1)
    eta = _as_float(cfg, "eta", 0.0, 1.0)
    eta_max = _as_float(cfg, "eta_max", 0.0, 1.0)
    depth_sweep = [int(p) for p in cfg["depth_sweep"]]
    probes_count = _as_int(cfg, "probes", 1)
    master = _as_int(cfg, "seed")

    if nqubits >= 3:
        ham = ising_ring(nqubits)
    else:
        ham = PauliSum.from_terms([(1.0, "Z" * nqubits)])
    spec = QaoaSpec(nqubits, layers, ham)
    ideal = build_qaoa(spec)
    hnorm = pauli.op_norm_inf(ham)
    rng = rng_from(master, "audit")

    fid_slacks, peel_slacks, range_slacks = [], [], []
    for _ in range(instances):
        inst_eta = rng.uniform(0.0, eta_max)
        noisy = build_qaoa(spec, ZDepolarizing(inst_eta))
        theta = rng.uniform(0.0, 2.0 * np.pi, spec.nparams)
        vartheta = rng.uniform(0.0, 2.0 * np.pi, spec.nparams)
        err = bounds.cost_error(noisy, vartheta, ideal, theta, ham)
        psi = pure_evolve(ideal, theta)
        rho = evolve(noisy, vartheta)
        fid_slacks.append(bounds.fidelity_upper(psi, rho, ham) - err)
        peel = bounds.peeling_upper(
            [g.channel(t) for g, t in zip(noisy.gates, vartheta)],
            [g.ideal_channel(t) for g, t in zip(ideal.gates, theta)],
            ham,
        )
        peel_slacks.append(peel.sum_form - err)
        range_slacks.append(2.0 * hnorm - abs(err))

    # Depth sweep: homogeneous single-qubit chain must scale exactly linearly.
    base = bounds.peeling_upper(
        [g.channel(0.3) for g in _depth_chain(depth_sweep[0], eta).gates],
        [g.ideal_channel(0.3) for g in _depth_chain(depth_sweep[0], eta).gates],
        PauliSum.from_terms([(1.0, "Z")]),
    ).sum_form
    linear_dev = 0.0
    for depth in depth_sweep[1:]:
        chain = _depth_chain(depth, eta)
        value = bounds.peeling_upper(
            [g.channel(0.3) for g in chain.gates],
            [g.ideal_channel(0.3) for g in chain.gates],
            PauliSum.from_terms([(1.0, "Z")]),
        ).sum_form
        expected = base * depth / depth_sweep[0]
        linear_dev = max(linear_dev, abs(value - expected))

    # Second-moment caps and the assembled bound on the configured instance.
    noisy_main = build_qaoa(spec, ZDepolarizing(eta))
    probes = bounds.sobol_probes(spec.nparams, probes_count, master)
    qfi_cap = bounds.g2_qfi_upper(noisy_main, ham, probes)
    g2_slacks = {}
    for kind in (estimators.SLD_KIND, estimators.LD_KIND):
        est = bounds.g2_empirical(noisy_main, ham, probes, kind)
        g2_slacks[kind] = qfi_cap - est.value
    report = bounds.build_report(
        noisy_main, ham,
        probe_count=probes_count, seed=master,
        restarts=_as_int(cfg, "restarts", 1), maxiter=_as_int(cfg, "maxiter", 10),
    )
    iter_slack = report.assembled_rhs(100) - report.assembled_rhs(400)
    r_slack = bounds.assembled_bound(report, 2.0, 100) - bounds.assembled_bound(
        report, 1.0, 100
    )

    rows = [
        ("err_le_fidelity_upper", min(fid_slacks), instances),
        ("err_le_peeling_upper", min(peel_slacks), instances),
        ("abs_err_le_2norm", min(range_slacks), instances),
        ("peeling_linear_in_depth", -linear_dev, len(depth_sweep)),
        ("g2_sld_le_qfi_bound", g2_slacks[estimators.SLD_KIND], probes_count),
        ("g2_ld_le_qfi_bound", g2_slacks[estimators.LD_KIND], probes_count),
        ("assembled_nonincreasing_in_iterations", iter_slack, 1),
        ("assembled_nondecreasing_in_r", r_slack, 1),
        ("report_err_le_fidelity", report.err_fidelity_upper - report.err, 1),
        ("report_err_le_peeling", report.err_peeling_upper - report.err, 1),
        ("report_g2_le_qfi", report.g2_qfi_upper - report.g2_empirical, 1),
    ]
    audit_rows = [
        (name, slack, count, int(slack >= SLACK_FLOOR)) for name, slack, count in rows
    ]
    ok = all(bool(r[3]) for r in audit_rows)

    csv_path = reporting.write_csv(
        os.path.join(out_dir, "bounds_audit.csv"),
        ["inequality", "min_slack", "instances", "pass"],
        audit_rows,
    )
    report_path = reporting.write_flat_record(
        os.path.join(out_dir, "bound_report.csv"), report.to_flat()
    )
    fig = plots.bounds_audit_figure(
        [(r[0], r[1]) for r in audit_rows], os.path.join(out_dir, "bounds_audit.png")
    )
    manifest = _manifest(
        "bounds-audit", out_dir, cfg, master, [csv_path, report_path, fig],
        {"slack_floor": SLACK_FLOOR},
    )
    return ExperimentResult(
        "bounds-audit", out_dir, [csv_path, report_path], [fig], manifest,
        data={"rows": audit_rows, "report": report}, ok=ok,
    )


# --------------------------------------------------------------------------
# channel-validate
# --------------------------------------------------------------------------

CHANNEL_VALIDATE_DEFAULTS = {
    "generators": ["Z", "XX"],
    "sigma_grid": [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0],
    "samples": 10000,
    "quad_nodes": 32,
    "quad_tol": 1e-8,
    "mc_tol": 0.05,
    "seed": 7,
}


def quadrature_choi(generator: PauliSum, sigma: float, nodes: int) -> np.ndarray:
    """Gauss-Hermite average of the jittered unitary's Choi matrix."""
    mat = pauli.realize(generator)
    evals, evecs = np.linalg.eigh(mat)
    x, w = np.polynomial.hermite.hermgauss(nodes)
    dim = mat.shape[0]
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for xi, wi in zip(x, w):
        v = np.sqrt(2.0) * sigma * xi
        u = (evecs * np.exp(-1j * v * evals)) @ evecs.conj().T
        vec = u.T.reshape(-1)
        out += (wi / np.sqrt(np.pi)) * np.outer(vec, vec.conj())
    return out


def run_channel_validate(
    config: dict | None = None,
    out_dir: str = "results",
    seed: int | None = None,
    full: bool = False,
) -> ExperimentResult:
    cfg = _merge(CHANNEL_VALIDATE_DEFAULTS, config)
    if seed is not None:
        cfg["seed"] = seed
    samples = _as_int(cfg, "samples", 100)
    nodes = _as_int(cfg, "quad_nodes", 2)
    quad_tol = _as_float(cfg, "quad_tol", 0.0)
    mc_tol = _as_float(cfg, "mc_tol", 0.0)
    sigmas = _as_float_list(cfg, "sigma_grid", 0.0)
    master = _as_int(cfg, "seed")
    generators = cfg["generators"]
    if not isinstance(generators, list) or not generators:
        raise ConfigError("generators must be a non-empty list of Pauli strings")

    rows = []
    table = {"generator": [], "sigma": [], "eta": [], "quad_maxdiff": [],
             "mc_distance": []}
    ok = True
    for axes in generators:
        try:
            gen = PauliSum.from_terms([(1.0, PauliString(str(axes)))])
        except ValueError as exc:
            raise ConfigError(f"bad generator {axes!r}: {exc}") from exc
        for k, sigma in enumerate(sigmas):
            analytic = choi(gaussian_fluctuation_channel(gen, sigma))
            quad = quadrature_choi(gen, sigma, nodes)
            quad_diff = float(np.abs(analytic - quad).max())
            mc = monte_carlo_fluctuation_check(
                gen, sigma, samples,
                seed=int(rng_from(master, "mc", axes, k).integers(2 ** 62)),
            )
            eta = float((1.0 - np.exp(-2.0 * sigma ** 2)) / 2.0)
            rows.append((axes, sigma, eta, quad_diff, mc, samples))
            for key, value in zip(table, (axes, sigma, eta, quad_diff, mc)):
                table[key].append(value)
            if quad_diff > quad_tol or mc > mc_tol:
                ok = False

    csv_path = reporting.write_csv(
        os.path.join(out_dir, "channel_validate.csv"),
        ["generator", "sigma", "eta", "quad_maxdiff", "mc_distance", "samples"],
        rows,
    )
    fig = plots.channel_validate_figure(
        table, os.path.join(out_dir, "channel_validate.png")
    )
    manifest = _manifest(
        "channel-validate", out_dir, cfg, master, [csv_path, fig],
        {"quad_tol": quad_tol, "mc_tol": mc_tol},
    )
    return ExperimentResult(
        "channel-validate", out_dir, [csv_path], [fig], manifest,
        data={"table": table}, ok=ok,
    )


RUNNERS = {
    "qfi-scan": run_qfi_scan,
    "landscape": run_landscape,
    "convergence": run_convergence,
    "bounds-audit": run_bounds_audit,
    "channel-validate": run_channel_validate,
}
