import numpy as np
import pytest

from noisy_vqo import pauli, states
from noisy_vqo.circuits import (
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
from noisy_vqo.device_noise import NoiseTable
from noisy_vqo.errors import ConfigError, DimensionMismatchError
from noisy_vqo.pauli import PauliSum
from noisy_vqo.states import expectation, fidelity_pure


def finite_difference_gap(circuit, theta, step=1e-5):
    _, derivs = evolve_with_derivatives(circuit, theta)
    worst = 0.0
    for j in range(len(theta)):
        shift = np.zeros_like(theta)
        shift[j] = step
        numeric = (
            evolve(circuit, theta + shift).data - evolve(circuit, theta - shift).data
        ) / (2 * step)
        worst = max(worst, np.abs(numeric - derivs[j]).max())
    return worst


def test_ising_ring_terms():
    ring = ising_ring(3)
    assert sorted(s.axes for _, s in ring.terms) == ["IZZ", "ZIZ", "ZZI"]
    assert all(c == 1.0 for c, _ in ring.terms)
    with pytest.raises(ValueError):
        ising_ring(2)


def test_ising_ring_ground_state():
    assert pauli.min_eigenvalue(ising_ring(4)) == -4.0
    # even rings: the minimum is achieved by the two alternating bitstrings
    diag = pauli.realize_diagonal(ising_ring(6))
    minima = np.flatnonzero(diag == diag.min())
    assert sorted(minima.tolist()) == [0b010101, 0b101010]


def test_transverse_mixer_ground_state_is_plus():
    mixer = transverse_mixer(3)
    mat = pauli.realize(mixer)
    plus = states.plus_state(3).amplitudes
    np.testing.assert_allclose(mat @ plus, -3.0 * plus, atol=1e-12)


def test_build_qaoa_parameter_counts():
    assert build_qaoa(QaoaSpec(8, 3, ising_ring(8))).nparams == 6
    assert build_qaoa(QaoaSpec(6, 10, ising_ring(6))).nparams == 20


def test_build_qaoa_zero_angles_is_plus_state():
    ring = ising_ring(4)
    circ = build_qaoa(QaoaSpec(4, 2, ring))
    rho = evolve(circ, np.zeros(4))
    assert expectation(rho, ring) == pytest.approx(0.0, abs=1e-12)
    assert fidelity_pure(states.plus_state(4), rho) == pytest.approx(1.0)


def test_qaoa_spec_validation():
    ring = ising_ring(3)
    with pytest.raises(ValueError):
        QaoaSpec(3, 0, ring)
    with pytest.raises(ValueError):
        QaoaSpec(3, 1, transverse_mixer(3))  # non-diagonal cost
    with pytest.raises(DimensionMismatchError):
        QaoaSpec(4, 1, ring)


def test_noiseless_evolution_is_pure():
    ring = ising_ring(4)
    circ = build_qaoa(QaoaSpec(4, 2, ring))
    rng = np.random.default_rng(0)
    for _ in range(3):
        rho = evolve(circ, rng.uniform(-np.pi, np.pi, 4))
        assert rho.purity() == pytest.approx(1.0, abs=1e-9)


def test_reverse_unitaries_restore_initial_state():
    ring = ising_ring(3)
    circ = build_qaoa(QaoaSpec(3, 2, ring))
    inverse_gates = tuple(
        NoisyGate(g.generator, NoNoise(), g.label + "_inv")
        for g in reversed(circ.gates)
    )
    loop = ParametricCircuit(circ.gates + inverse_gates, 3)
    rng = np.random.default_rng(1)
    theta = rng.uniform(-1, 1, 4)
    rho = evolve(loop, np.concatenate([theta, -theta[::-1]]))
    assert fidelity_pure(circ.initial_state, rho) == pytest.approx(1.0, abs=1e-9)


def test_depolarized_evolution_loses_purity():
    ring = ising_ring(3)
    circ = build_qaoa(QaoaSpec(3, 1, ring), ZDepolarizing(0.5))
    rho = evolve(circ, np.array([0.4, 0.0]))
    assert rho.purity() < 1.0 - 1e-6


@pytest.mark.parametrize(
    "noise",
    [
        NoNoise(),
        ZDepolarizing(0.15),
        GaussianFluctuation(0.25),
        ThermalRelaxationNoise(5.0, 7.0, 0.3),
        DeviceNoise(NoiseTable().scaled(4)),
    ],
)
def test_derivatives_match_finite_differences(noise):
    ring = ising_ring(3)
    circ = build_qaoa(QaoaSpec(3, 2, ring), noise)
    rng = np.random.default_rng(2)
    theta = rng.uniform(-1, 1, 4)
    assert finite_difference_gap(circ, theta) < 1e-6


def test_derivatives_traceless_hermitian():
    ring = ising_ring(3)
    circ = build_qaoa(QaoaSpec(3, 2, ring), ZDepolarizing(0.2))
    _, derivs = evolve_with_derivatives(circ, np.array([0.3, -0.4, 0.9, 0.1]))
    for d in derivs:
        assert abs(np.trace(d)) < 1e-9
        assert np.abs(d - d.conj().T).max() < 1e-12


def test_single_gate_derivative_analytic():
    # d/dtheta of exp(-i theta Z)|+><+|exp(i theta Z) at 0 is -i[Z, |+><+|].
    gate = NoisyGate(PauliSum.from_terms([(1.0, "Z")]))
    circ = ParametricCircuit((gate,), 1)
    _, derivs = evolve_with_derivatives(circ, np.zeros(1))
    z = np.diag([1.0, -1.0])
    plus = np.full((2, 2), 0.5)
    np.testing.assert_allclose(derivs[0], -1j * (z @ plus - plus @ z), atol=1e-12)


def test_zero_generator_parameter_has_zero_derivative():
    ring = ising_ring(3)
    idle = NoisyGate(PauliSum((), 3), label="idle")
    circ = ParametricCircuit(
        (NoisyGate(ring, label="g"), idle), 3
    )
    _, derivs = evolve_with_derivatives(circ, np.array([0.7, 0.3]))
    assert np.abs(derivs[1]).max() == 0.0


def test_gradient_matches_cost_finite_difference():
    ring = ising_ring(3)
    circ = build_qaoa(QaoaSpec(3, 3, ring), ZDepolarizing(0.1))
    rng = np.random.default_rng(3)
    theta = rng.uniform(-1, 1, 6)
    _, derivs = evolve_with_derivatives(circ, theta)
    hmat = pauli.realize(ring)
    step = 1e-5
    for j in range(6):
        shift = np.zeros(6)
        shift[j] = step
        numeric = (
            expectation(evolve(circ, theta + shift), ring)
            - expectation(evolve(circ, theta - shift), ring)
        ) / (2 * step)
        analytic = float(np.real(np.einsum("ij,ji->", hmat, derivs[j])))
        assert analytic == pytest.approx(numeric, abs=1e-6)


def test_depolarizing_commutes_through_diagonal_circuit():
    # With diagonal generators the dephasing mask and the unitary commute.
    ring = ising_ring(3)
    before = ParametricCircuit(
        (NoisyGate(ring, ZDepolarizing(0.2)), NoisyGate(ring, ZDepolarizing(0.3))), 3
    )
    # manual reversed ordering: noise first, then unitary
    theta = np.array([0.5, -0.8])
    rho = states.plus_state(3).projector()
    for gate, t in zip(before.gates, theta):
        mask_op, unitary_op = None, None
        rho_a = gate.bind(t).apply_linear(rho.copy())
        # reversed: apply noise mask then the unitary
        from noisy_vqo.circuits import _zdep_mask, _Exponential

        mask = _zdep_mask(gate.noise.eta, range(3), 3)
        expo = _Exponential(gate.generator, 3)
        rho_b = expo.bind(t)(rho * mask)
        np.testing.assert_allclose(rho_a, rho_b, atol=1e-10)
        rho = rho_a


def test_theta_length_mismatch():
    circ = build_qaoa(QaoaSpec(3, 1, ising_ring(3)))
    with pytest.raises(DimensionMismatchError):
        evolve(circ, np.zeros(3))


def test_device_noise_rejects_many_body_terms():
    three_body = PauliSum.from_terms([(1.0, "ZZZ")])
    spec = QaoaSpec(3, 1, three_body)
    with pytest.raises(ConfigError):
        build_qaoa(spec, DeviceNoise(NoiseTable()))


def test_pure_evolve_matches_density_evolution():
    ring = ising_ring(3)
    circ = build_qaoa(QaoaSpec(3, 2, ring))
    rng = np.random.default_rng(4)
    theta = rng.uniform(-1, 1, 4)
    psi = pure_evolve(circ, theta)
    rho = evolve(circ, theta)
    assert fidelity_pure(psi, rho) == pytest.approx(1.0, abs=1e-10)
    noisy = build_qaoa(QaoaSpec(3, 1, ring), ZDepolarizing(0.1))
    with pytest.raises(ConfigError):
        pure_evolve(noisy, np.zeros(2))


def test_gate_channel_forms():
    ring = ising_ring(3)
    noisy_gate = NoisyGate(ring, ZDepolarizing(0.2))
    ch = noisy_gate.channel(0.6)
    # Kraus form reproduces the pipeline action
    rng = np.random.default_rng(5)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho = (a @ a.conj().T) / np.trace(a @ a.conj().T)
    from noisy_vqo.channels import apply_matrix

    np.testing.assert_allclose(
        apply_matrix(ch, rho), noisy_gate.bind(0.6).apply_linear(rho), atol=1e-9
    )
    ideal = noisy_gate.ideal_channel(0.6)
    assert len(ideal.kraus_ops) == 1


def test_gaussian_single_string_matches_channel_average():
    # One-string unit-coefficient generator takes the exact averaged form.
    gen = PauliSum.from_terms([(1.0, "XZ")])
    gate = NoisyGate(gen, GaussianFluctuation(0.4))
    circ = ParametricCircuit((gate,), 2)
    theta = np.array([0.7])
    rho = evolve(circ, theta).data
    from noisy_vqo.channels import fluctuation_strength

    eta = fluctuation_strength(0.4)
    mat = pauli.realize(gen)
    u = channels_unitary(mat, 0.7)
    base = u @ states.plus_state(2).projector() @ u.conj().T
    expected = (1 - eta) * base + eta * mat @ base @ mat
    np.testing.assert_allclose(rho, expected, atol=1e-10)


def channels_unitary(mat, theta):
    evals, evecs = np.linalg.eigh(mat)
    return (evecs * np.exp(-1j * theta * evals)) @ evecs.conj().T


def test_mc_gaussian_seeded_and_deterministic():
    ring = ising_ring(3)
    spec = QaoaSpec(3, 1, ring)
    a = evolve(build_qaoa(spec, GaussianFluctuation(0.3, mc_seed=1)), [0.4, 0.2])
    b = evolve(build_qaoa(spec, GaussianFluctuation(0.3, mc_seed=1)), [0.4, 0.2])
    c = evolve(build_qaoa(spec, GaussianFluctuation(0.3, mc_seed=2)), [0.4, 0.2])
    np.testing.assert_array_equal(a.data, b.data)
    assert np.abs(a.data - c.data).max() > 0.0


def test_mc_gaussian_converges_to_analytic_for_single_string():
    # Monte-Carlo path (forced by a scaled coefficient repeated twice) is a
    # mixture of unitaries; with many samples it approaches the quadrature
    # answer for the layer generator.
    gen = PauliSum.from_terms([(1.0, "ZZI"), (1.0, "IZZ"), (1.0, "ZIZ")])
    gate_mc = NoisyGate(gen, GaussianFluctuation(0.2, mc_samples=4096, mc_seed=3))
    circ = ParametricCircuit((gate_mc,), 3)
    rho_mc = evolve(circ, np.array([0.5])).data

    # quadrature oracle over the jitter of the full layer unitary
    mat = pauli.realize(gen)
    base = states.plus_state(3).projector()
    nodes, weights = np.polynomial.hermite.hermgauss(40)
    expected = np.zeros_like(base)
    for x, w in zip(nodes, weights):
        v = 0.5 + np.sqrt(2) * 0.2 * x
        u = channels_unitary(mat, v)
        expected += (w / np.sqrt(np.pi)) * (u @ base @ u.conj().T)
    assert np.abs(rho_mc - expected).max() < 0.02


def test_ramp_start_layout():
    theta = qaoa_ramp_start(4, amplitude=1.0)
    np.testing.assert_allclose(theta[0::2], [0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(theta[1::2], [0.75, 0.5, 0.25, 0.0])
