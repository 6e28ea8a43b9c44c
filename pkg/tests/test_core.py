"""Gate, state, channel and metric tests for the dense simulator core."""

import numpy as np
import pytest

from varqsim.channels import (
    NoiseChannel,
    NoiseModel,
    apply_channel,
    compose_stochastic,
    depolarizing_1q,
    depolarizing_2q,
)
from varqsim.gates import GateInstance, cz, hadamard, zz_rot
from varqsim.paulis import PAULI_LABELS, PauliString
from varqsim.states import (
    DensityOperator,
    PureState,
    apply_gate,
    apply_pauli_word,
    clip_small_negative_eigenvalues,
    expectation,
    expectation_pure,
    trace_distance,
)

RNG = np.random.default_rng(20240811)


def random_density(n, rng):
    d = 1 << n
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = m @ m.conj().T
    return DensityOperator(n, m / np.trace(m))


def random_cptp_channel(n_targets, n_kraus, rng):
    """Stinespring construction: orthonormal block columns of a random
    isometry reshape into a Kraus set."""
    d = 1 << n_targets
    g = rng.normal(size=(d * n_kraus, d)) + 1j * rng.normal(size=(d * n_kraus, d))
    q, _ = np.linalg.qr(g)
    kraus = [q[i * d : (i + 1) * d, :] for i in range(n_kraus)]
    return NoiseChannel(tuple(range(n_targets)), kraus=tuple(kraus))


ALL_GATES = [
    GateInstance("i", (0,)),
    GateInstance("h", (0,)),
    GateInstance("x", (0,)),
    GateInstance("y", (0,)),
    GateInstance("z", (0,)),
    GateInstance("phase_rot", (0,), angle=0.37),
    GateInstance("flip_rot", (0,), angle=-1.21),
    GateInstance("zz_rot", (0, 1), angle=0.83),
    GateInstance("cz", (0, 1)),
    GateInstance("cnot", (0, 1)),
    GateInstance("cpauli", (0, 1, 2), word=PauliString("XZ")),
]


class TestGates:
    @pytest.mark.parametrize("gate", ALL_GATES, ids=lambda g: g.kind)
    def test_unitarity(self, gate):
        """Every gate matrix satisfies max|U^dag U - I| < 1e-12."""
        u = gate.matrix()
        np.testing.assert_allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=1e-12)

    def test_hadamard_on_zero(self):
        """H|0> = (|0> + |1>)/sqrt(2)."""
        out = apply_gate(PureState.zero(1), hadamard(0))
        np.testing.assert_allclose(out.amplitudes, np.array([1, 1]) / np.sqrt(2), atol=1e-15)

    def test_controlled_phase_squares_to_identity(self):
        """Applying CZ twice on |++> returns |++>."""
        s = apply_gate(apply_gate(PureState.zero(2), hadamard(0)), hadamard(1))
        out = apply_gate(apply_gate(s, cz(0, 1)), cz(0, 1))
        np.testing.assert_allclose(out.amplitudes, s.amplitudes, atol=1e-14)

    def test_zz_rotation_phase_on_00(self):
        """ZZ rotation is diagonal: e^{i pi/4} on |00> (Z (x) Z eigenvalue +1)."""
        out = apply_gate(PureState.zero(2), zz_rot(np.pi / 4, 0, 1))
        np.testing.assert_allclose(out.amplitudes[0], np.exp(1j * np.pi / 4), atol=1e-15)

    def test_gate_norm_preserved(self):
        """Random gate sequences keep the state normalised to 1e-12."""
        rng = np.random.default_rng(3)
        s = PureState.zero(3)
        for _ in range(60):
            g = ALL_GATES[rng.integers(len(ALL_GATES))]
            if max(g.targets) < 3:
                s = apply_gate(s, g)
            assert abs(s.norm() - 1) < 1e-12

    def test_target_out_of_range(self):
        with pytest.raises(IndexError):
            apply_gate(PureState.zero(1), hadamard(3))

    def test_cpauli_matches_kron_construction(self):
        """Controlled word = |0><0| (x) I + |1><1| (x) (P1 (x) P2)."""
        g = GateInstance("cpauli", (2, 1, 0), word=PauliString("YZ"))
        s = PureState(3, (np.arange(8) + 1.0) / np.linalg.norm(np.arange(8) + 1.0))
        out = apply_gate(s, g)
        y, z = PauliString("Y").matrix(), PauliString("Z").matrix()
        # control=qubit2 (most significant index bit), word Y on q1, Z on q0
        full = np.zeros((8, 8), dtype=complex)
        full[:4, :4] = np.eye(4)
        full[4:, 4:] = np.kron(y, z)
        np.testing.assert_allclose(out.amplitudes, full @ s.amplitudes, atol=1e-14)


class TestPauliStrings:
    def test_pauli_product_table(self):
        """Single-qubit products reproduce X Y = iZ and cyclic relations."""
        x, y, z = PauliString("X"), PauliString("Y"), PauliString("Z")
        assert (x * y).labels == "Z" and (x * y).coefficient == 1j
        assert (y * z).labels == "X" and (y * z).coefficient == 1j
        assert (z * x).labels == "Y" and (z * x).coefficient == 1j
        assert (x * x).labels == "I" and (x * x).coefficient == 1

    def test_word_matrix_little_endian(self):
        """labels[0] acts on qubit 0 = least significant index bit."""
        w = PauliString("XI")  # X on qubit 0
        expected = np.kron(np.eye(2), PauliString("X").matrix())
        np.testing.assert_allclose(w.matrix(), expected)

    def test_self_inverse_up_to_phase(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            labels = "".join(rng.choice(list(PAULI_LABELS), size=3))
            w = PauliString(labels)
            np.testing.assert_allclose(w.matrix() @ w.matrix(), np.eye(8), atol=1e-14)

    def test_apply_word_matches_matrix(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            labels = "".join(rng.choice(list(PAULI_LABELS), size=3))
            w = PauliString(labels, coefficient=1j)
            amps = rng.normal(size=8) + 1j * rng.normal(size=8)
            amps /= np.linalg.norm(amps)
            via_op = apply_pauli_word(PureState(3, amps), w).amplitudes
            np.testing.assert_allclose(via_op, w.matrix() @ amps, atol=1e-13)


class TestChannels:
    def test_depolarizing_on_zero_state(self):
        """One-qubit depolarizing sends |0><0| to diag(1-2e/3, 2e/3)."""
        out = apply_channel(DensityOperator.zero(1), depolarizing_1q(0.3, 0))
        np.testing.assert_allclose(np.diag(out.matrix).real, [0.8, 0.2], atol=1e-14)

    def test_zero_rate_is_identity(self):
        rho = random_density(2, np.random.default_rng(1))
        out = apply_channel(rho, depolarizing_2q(0.0, 0, 1))
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-15)

    def test_full_two_qubit_depolarizing_gives_maximally_mixed(self):
        """eps = 15/16 is the uniform 16-Pauli mixture: any rho -> I/4."""
        rho = random_density(2, np.random.default_rng(2))
        out = apply_channel(rho, depolarizing_2q(15 / 16, 0, 1))
        np.testing.assert_allclose(out.matrix, np.eye(4) / 4, atol=1e-12)

    def test_cptp_preservation_bulk(self):
        """Trace and Hermiticity survive 10^4 random CPTP channels."""
        rng = np.random.default_rng(11)
        worst_trace = worst_herm = 0.0
        for _ in range(10_000):
            n = int(rng.integers(1, 3))
            rho = random_density(n, rng)
            ch = random_cptp_channel(n, int(rng.integers(1, 4)), rng)
            out = apply_channel(rho, ch)
            worst_trace = max(worst_trace, abs(out.trace() - 1.0))
            worst_herm = max(worst_herm, np.abs(out.matrix - out.matrix.conj().T).max())
        assert worst_trace < 1e-12
        assert worst_herm < 1e-12

    def test_non_cptp_rejected(self):
        with pytest.raises(ValueError, match="trace preserving"):
            NoiseChannel((0,), kraus=(np.eye(2) * 0.9,))

    def test_stochastic_probabilities_validated(self):
        with pytest.raises(ValueError, match="summing to 1"):
            NoiseChannel((0,), pauli_terms=((0.5, "I"), (0.4, "X")))

    def test_composition_convolves_error_weight(self):
        """Composing depolarizing(e) with depolarizing(e') gives the exact
        rate e + e' - 4 e e' / 3."""
        e1, e2 = 0.013, 0.021
        comp = compose_stochastic(depolarizing_1q(e1, 0), depolarizing_1q(e2, 0))
        expected = e1 + e2 - 4 * e1 * e2 / 3
        assert comp.uniform_rate == pytest.approx(expected, abs=1e-15)


class TestNoiseModel:
    def test_rate_ladder(self):
        nm = NoiseModel.from_two_qubit_rate(0.001)
        assert nm.eps1 == nm.eps_init == nm.p0 == nm.p1 == pytest.approx(0.0001)

    def test_boost_raises_effective_rates(self):
        nm = NoiseModel.from_two_qubit_rate(0.001, boost=2.0)
        ch = nm.gate_channel((0, 1))
        assert ch.uniform_rate == pytest.approx(0.002, abs=3e-6)

    def test_invalid_rates_rejected(self):
        with pytest.raises(ValueError):
            NoiseModel(eps1=1.5)
        with pytest.raises(ValueError):
            NoiseModel(eps1=0.8, boost=2.0)

    def test_measurement_map(self):
        nm = NoiseModel(p0=0.1, p1=0.2)
        assert nm.measurement_map(0.5) == pytest.approx(0.1 + 0.7 * 0.5)


class TestTraceDistance:
    def test_identical_states(self):
        rho = random_density(2, np.random.default_rng(3))
        assert trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-14)

    def test_orthogonal_pure_states(self):
        assert trace_distance(PureState.basis(1, 0), PureState.basis(1, 1)) == pytest.approx(1.0)

    def test_zero_versus_plus(self):
        """D(|0><0|, |+><+|) = 1/sqrt(2) from the 2x2 eigenvalues."""
        plus = apply_gate(PureState.zero(1), hadamard(0))
        assert trace_distance(PureState.zero(1), plus) == pytest.approx(1 / np.sqrt(2))

    def test_triangle_inequality(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            a, b, c = (random_density(2, rng) for _ in range(3))
            assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-12

    def test_unitary_invariance(self):
        """D(U rho U^dag, U rho' U^dag) = D(rho, rho')."""
        rng = np.random.default_rng(8)
        for _ in range(50):
            a, b = random_density(2, rng), random_density(2, rng)
            g = GateInstance("zz_rot", (0, 1), angle=float(rng.uniform(-3, 3)))
            ua = apply_gate(a, g)
            ub = apply_gate(b, g)
            assert trace_distance(ua, ub) == pytest.approx(trace_distance(a, b), abs=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            trace_distance(DensityOperator.zero(1), DensityOperator.zero(2))


class TestExpectation:
    def test_z_on_zero(self):
        assert expectation(PauliString("Z"), DensityOperator.zero(1)) == pytest.approx(1.0)

    def test_traceless_on_maximally_mixed(self):
        assert expectation(PauliString("X"), DensityOperator.maximally_mixed(1)) == pytest.approx(0.0)

    def test_x_on_plus_after_depolarizing(self):
        """<X> on |+><+| after eps = 0.075 depolarizing drops to 0.9."""
        plus = apply_gate(PureState.zero(1), hadamard(0)).to_density()
        out = apply_channel(plus, depolarizing_1q(0.075, 0))
        assert expectation(PauliString("X"), out) == pytest.approx(0.9, abs=1e-12)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError):
            expectation(PauliString("X", coefficient=1j), DensityOperator.zero(1))

    def test_pure_matches_density(self):
        rng = np.random.default_rng(9)
        amps = rng.normal(size=4) + 1j * rng.normal(size=4)
        amps /= np.linalg.norm(amps)
        psi = PureState(2, amps)
        w = PauliString("XZ")
        assert expectation_pure(w, psi) == pytest.approx(expectation(w, psi.to_density()), abs=1e-12)


class TestEigenvalueClipping:
    def test_small_negative_clipped(self):
        m = np.diag([1.0 + 5e-11, -5e-11]).astype(complex)
        out = clip_small_negative_eigenvalues(DensityOperator(1, m))
        assert np.linalg.eigvalsh(out.matrix).min() >= 0

    def test_large_negative_rejected(self):
        m = np.diag([1.1, -0.1]).astype(complex)
        with pytest.raises(ValueError):
            clip_small_negative_eigenvalues(DensityOperator(1, m))
