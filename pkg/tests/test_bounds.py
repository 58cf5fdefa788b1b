import numpy as np
import pytest

from noisy_vqo import bounds, estimators, pauli
from noisy_vqo.circuits import (
    NoisyGate,
    ParametricCircuit,
    QaoaSpec,
    ZDepolarizing,
    build_qaoa,
    evolve,
    ising_ring,
    pure_evolve,
)
from noisy_vqo.errors import DimensionMismatchError
from noisy_vqo.pauli import PauliSum
from noisy_vqo.states import DensityMatrix, PureState


def test_cost_error_zero_for_identical_arms():
    ring = ising_ring(3)
    circ = build_qaoa(QaoaSpec(3, 1, ring))
    theta = np.array([0.4, 0.2])
    assert bounds.cost_error(circ, theta, circ, theta, ring) == pytest.approx(0.0)


def test_cost_error_fully_mixed_arm():
    # A diagonal rotation followed by total dephasing leaves |+> maximally
    # mixed, so the noisy cost vanishes for a traceless observable.
    z = PauliSum.from_terms([(1.0, "Z")])
    x = PauliSum.from_terms([(1.0, "X")])
    noisy = ParametricCircuit((NoisyGate(z, ZDepolarizing(0.5)),), 1)
    ideal = ParametricCircuit((NoisyGate(x),), 1)
    theta = np.array([0.8])
    ideal_cost = estimators.exact_cost(ideal, theta, x)
    err = bounds.cost_error(noisy, theta, ideal, theta, x)
    assert err == pytest.approx(-ideal_cost, abs=1e-10)


def test_cost_error_magnitude_bound():
    rng = np.random.default_rng(0)
    ring = ising_ring(3)
    hnorm = pauli.op_norm_inf(ring)
    ideal = build_qaoa(QaoaSpec(3, 2, ring))
    for _ in range(5):
        noisy = build_qaoa(QaoaSpec(3, 2, ring), ZDepolarizing(rng.uniform(0, 0.5)))
        err = bounds.cost_error(
            noisy, rng.uniform(0, 2 * np.pi, 4), ideal, rng.uniform(0, 2 * np.pi, 4),
            ring,
        )
        assert abs(err) <= 2 * hnorm + 1e-12


def test_peeling_zero_for_ideal_gates():
    ring = ising_ring(3)
    circ = build_qaoa(QaoaSpec(3, 1, ring))
    theta = [0.3, 0.8]
    chans = [g.ideal_channel(t) for g, t in zip(circ.gates, theta)]
    peel = bounds.peeling_upper(chans, chans, ring)
    assert peel.sum_form == pytest.approx(0.0, abs=1e-9)
    assert peel.pmax_form == pytest.approx(0.0, abs=1e-9)


def test_peeling_homogeneous_forms_coincide():
    z = PauliSum.from_terms([(1.0, "Z")])
    gate = NoisyGate(z, ZDepolarizing(0.2))
    depth = 5
    noisy = [gate.channel(0.4)] * depth
    ideal = [gate.ideal_channel(0.4)] * depth
    peel = bounds.peeling_upper(noisy, ideal, z)
    assert peel.sum_form == pytest.approx(peel.pmax_form, abs=1e-10)
    assert peel.sum_form == pytest.approx(depth * peel.per_gate[0], abs=1e-10)


def test_peeling_single_qubit_dephasing_value():
    # Choi upper bound of identity vs one-qubit dephasing is 4*eta; a chain
    # of P such gates gives ||H|| * P * 4 eta.
    eta, depth = 0.15, 4
    z = PauliSum.from_terms([(1.0, "Z")])
    gate = NoisyGate(z, ZDepolarizing(eta))
    peel = bounds.peeling_upper(
        [gate.channel(0.7)] * depth, [gate.ideal_channel(0.7)] * depth, z
    )
    assert peel.sum_form == pytest.approx(1.0 * depth * 4 * eta, abs=1e-9)


def test_peeling_count_mismatch():
    z = PauliSum.from_terms([(1.0, "Z")])
    gate = NoisyGate(z)
    with pytest.raises(DimensionMismatchError):
        bounds.peeling_upper([gate.ideal_channel(0.1)], [], z)


def test_fidelity_upper_examples():
    z6 = PauliSum.from_terms([(6.0, "Z")])
    psi = PureState(np.array([1.0, 0.0], dtype=complex))
    pure = DensityMatrix(psi.projector())
    assert bounds.fidelity_upper(psi, pure, z6) == pytest.approx(0.0, abs=1e-9)

    rho = DensityMatrix(np.diag([0.75, 0.25]).astype(complex))
    assert bounds.fidelity_upper(psi, rho, z6) == pytest.approx(
        2 * 6 * np.sqrt(0.25), abs=1e-12
    )


def test_error_bound_chain_random_instances():
    rng = np.random.default_rng(1)
    for _ in range(15):
        nq = int(rng.integers(3, 5))
        layers = int(rng.integers(1, 3))
        ring = ising_ring(nq)
        ideal = build_qaoa(QaoaSpec(nq, layers, ring))
        noisy = build_qaoa(QaoaSpec(nq, layers, ring),
                           ZDepolarizing(float(rng.uniform(0, 0.4))))
        theta = rng.uniform(0, 2 * np.pi, 2 * layers)
        vartheta = rng.uniform(0, 2 * np.pi, 2 * layers)
        err = bounds.cost_error(noisy, vartheta, ideal, theta, ring)
        fid = bounds.fidelity_upper(
            pure_evolve(ideal, theta), evolve(noisy, vartheta), ring
        )
        assert err <= fid + 1e-9
        peel = bounds.peeling_upper(
            [g.channel(t) for g, t in zip(noisy.gates, vartheta)],
            [g.ideal_channel(t) for g, t in zip(ideal.gates, theta)],
            ring,
        )
        assert err <= peel.sum_form + 1e-9
        assert peel.sum_form <= peel.pmax_form + 1e-9


def test_g2_zero_hamiltonian():
    circ = build_qaoa(QaoaSpec(3, 1, ising_ring(3)), ZDepolarizing(0.1))
    zero = PauliSum((), 3)
    probes = bounds.sobol_probes(2, 4, seed=0)
    out = bounds.g2_empirical(circ, zero, probes, estimators.SLD_KIND)
    assert out.value == pytest.approx(0.0, abs=1e-12)
    assert out.exact


def test_g2_dual_path_single_parameter_pure():
    # E[g^2] at lambda = 0 via outcome enumeration equals the matrix trace.
    zero = PureState(np.array([1.0, 0.0], dtype=complex))
    circ = ParametricCircuit(
        (NoisyGate(PauliSum.from_terms([(1.0, "X")])),), 1, zero
    )
    z = PauliSum.from_terms([(1.0, "Z")])
    theta = np.array([0.45])
    from noisy_vqo.circuits import evolve_with_derivatives

    rho, derivs = evolve_with_derivatives(circ, theta)
    sld = estimators.solve_sld(rho, derivs[0])
    gobs = estimators.gradient_observable(z, sld, 0.0)
    trace_path = estimators.second_moment(rho, gobs)
    outs, basis = np.linalg.eigh(gobs)
    probs = np.clip(
        np.real(np.einsum("ij,jk,ki->i", basis.conj().T, rho.data, basis)), 0, None
    )
    enum_path = float(np.dot(probs / probs.sum(), outs ** 2))
    assert trace_path == pytest.approx(enum_path, abs=1e-9)
    est = bounds.g2_empirical(circ, z, theta.reshape(1, 1), estimators.SLD_KIND)
    assert est.value == pytest.approx(np.sqrt(trace_path), abs=1e-9)


def test_g2_qfi_upper_single_qubit_value():
    zero = PureState(np.array([1.0, 0.0], dtype=complex))
    x = PauliSum.from_terms([(1.0, "X")])
    circ = ParametricCircuit((NoisyGate(x),), 1, zero)
    z = PauliSum.from_terms([(1.0, "Z")])
    probes = np.linspace(0.1, 1.4, 5).reshape(-1, 1)
    cap = bounds.g2_qfi_upper(circ, z, probes)
    assert cap == pytest.approx(2.0, abs=1e-9)  # sqrt(1) * 1 * sqrt(4)
    moment = bounds.g2_empirical(circ, z, probes, estimators.SLD_KIND)
    assert moment.value <= cap + 1e-9

    # doubling the parameter count with an idle gate scales the cap by sqrt(2)
    circ2 = ParametricCircuit((NoisyGate(x), NoisyGate(PauliSum((), 1))), 1, zero)
    probes2 = np.hstack([probes, np.zeros_like(probes)])
    cap2 = bounds.g2_qfi_upper(circ2, z, probes2)
    assert cap2 == pytest.approx(np.sqrt(2) * cap, abs=1e-9)


def test_g2_empirical_caps_by_qfi_for_both_kinds():
    ring = ising_ring(3)
    probes = bounds.sobol_probes(4, 12, seed=3)
    for eta in (0.0, 0.2, 0.4):
        circ = build_qaoa(QaoaSpec(3, 2, ring), ZDepolarizing(eta))
        cap = bounds.g2_qfi_upper(circ, ring, probes)
        for kind in (estimators.SLD_KIND, estimators.LD_KIND):
            got = bounds.g2_empirical(circ, ring, probes, kind)
            assert got.exact
            assert got.value <= cap + 1e-9


def test_g2_empirical_fallback_flag(monkeypatch):
    monkeypatch.setattr(bounds, "ENUMERATION_QUBIT_CAP", 0)
    monkeypatch.setattr(bounds, "EMPIRICAL_FALLBACK_SHOTS", 2000)
    circ = build_qaoa(QaoaSpec(3, 1, ising_ring(3)), ZDepolarizing(0.1))
    probes = bounds.sobol_probes(2, 2, seed=1)
    out = bounds.g2_empirical(circ, ising_ring(3), probes, estimators.LD_KIND)
    assert not out.exact
    assert out.value > 0.0


def test_probes_validation_and_determinism():
    a = bounds.sobol_probes(4, 16, seed=9)
    b = bounds.sobol_probes(4, 16, seed=9)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (16, 4)
    assert a.min() >= 0.0 and a.max() < 2 * np.pi
    circ = build_qaoa(QaoaSpec(3, 1, ising_ring(3)))
    with pytest.raises(ValueError):
        bounds.g2_empirical(circ, ising_ring(3), np.empty((0, 2)),
                            estimators.SLD_KIND)
    with pytest.raises(ValueError):
        bounds.g2_qfi_upper(circ, ising_ring(3), np.empty((0, 2)))


def _quick_report():
    ring = ising_ring(3)
    noisy = build_qaoa(QaoaSpec(3, 1, ring), ZDepolarizing(0.15))
    return bounds.build_report(
        noisy, ring, probe_count=8, seed=11, restarts=3, maxiter=200
    )


def test_report_inequalities_and_assembly():
    report = _quick_report()
    assert report.err <= report.err_fidelity_upper + 1e-9
    assert report.err <= report.err_peeling_upper + 1e-9
    assert report.g2_empirical <= report.g2_qfi_upper + 1e-9
    assert report.probe_set_size == 10  # 8 probes + both optima

    # I -> infinity leaves the noise term alone
    assert report.assembled_rhs(10 ** 12) == pytest.approx(report.err, abs=1e-4)
    # I = 1, R = 1 gives err + G
    assert bounds.assembled_bound(report, 1.0, 1) == pytest.approx(
        report.err + report.g2_qfi_upper, abs=1e-12
    )
    # monotone in I, monotone in R
    vals = [report.assembled_rhs(i) for i in (1, 4, 16, 64)]
    assert all(x >= y - 1e-12 for x, y in zip(vals, vals[1:]))
    assert bounds.assembled_bound(report, 2.0, 16) >= bounds.assembled_bound(
        report, 1.0, 16
    )
    with pytest.raises(ValueError):
        report.assembled_rhs(0)
    with pytest.raises(ValueError):
        bounds.assembled_bound(report, -1.0, 5)


def test_report_crossover():
    report = _quick_report()
    if report.err > 0:
        i_star = report.crossover_iterations()
        r = report.r_constant
        stat = r * report.g2_qfi_upper / np.sqrt(i_star)
        assert stat == pytest.approx(report.err, rel=1e-9)


def test_report_flat_record():
    report = _quick_report()
    flat = report.to_flat()
    assert set(flat) >= {
        "err", "err_peeling_upper", "err_fidelity_upper", "g2_empirical",
        "g2_qfi_upper", "probe_set_size", "seed", "r_constant",
    }


def test_default_r_constant():
    assert bounds.default_r_constant(4) == pytest.approx(np.pi * 2.0)
