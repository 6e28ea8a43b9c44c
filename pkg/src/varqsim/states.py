"""Exact dense pure states and density operators on a few qubits.

Qubit 0 is the least significant bit of the amplitude index.  All
operations return new objects; nothing mutates in place, so values can be
shared freely across parallel evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gates import GateInstance
from .paulis import PauliString, pauli_matrix_1q

ATOL_NORM = 1e-12
ATOL_EIG = 1e-10


def _axis_of(qubit: int, n: int) -> int:
    return n - 1 - qubit


def apply_matrix_vec(amps: np.ndarray, mat: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """Apply ``mat`` (big-endian in target order) to a state-vector array."""
    m = len(targets)
    t = amps.reshape((2,) * n)
    mt = mat.reshape((2,) * (2 * m))
    axes = [_axis_of(q, n) for q in targets]
    out = np.tensordot(mt, t, axes=(list(range(m, 2 * m)), axes))
    out = np.moveaxis(out, list(range(m)), axes)
    return out.reshape(-1)


def apply_matrix_dm(rho: np.ndarray, mat: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """U rho U^dagger on a density-matrix array."""
    m = len(targets)
    t = rho.reshape((2,) * (2 * n))
    mt = mat.reshape((2,) * (2 * m))
    ket_axes = [_axis_of(q, n) for q in targets]
    bra_axes = [n + a for a in ket_axes]
    out = np.tensordot(mt, t, axes=(list(range(m, 2 * m)), ket_axes))
    out = np.moveaxis(out, list(range(m)), ket_axes)
    out = np.tensordot(mt.conj(), out, axes=(list(range(m, 2 * m)), bra_axes))
    out = np.moveaxis(out, list(range(m)), bra_axes)
    d = 1 << n
    return out.reshape(d, d)


@dataclass(frozen=True)
class PureState:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n_qubits,):
            raise ValueError("amplitude length must be 2**n_qubits")
        object.__setattr__(self, "amplitudes", amps)

    @staticmethod
    def zero(n_qubits: int) -> "PureState":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[0] = 1.0
        return PureState(n_qubits, amps)

    @staticmethod
    def basis(n_qubits: int, index: int) -> "PureState":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return PureState(n_qubits, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def assert_normalized(self, atol: float = ATOL_NORM) -> None:
        if abs(self.norm() - 1.0) > atol:
            raise ValueError(f"state norm {self.norm()} deviates from 1")

    def to_density(self) -> "DensityOperator":
        a = self.amplitudes
        return DensityOperator(self.n_qubits, np.outer(a, a.conj()))

    def inner(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityOperator:
    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = 1 << self.n_qubits
        if m.shape != (d, d):
            raise ValueError("density matrix must be 2**n x 2**n")
        object.__setattr__(self, "matrix", m)

    @staticmethod
    def zero(n_qubits: int) -> "DensityOperator":
        return PureState.zero(n_qubits).to_density()

    @staticmethod
    def maximally_mixed(n_qubits: int) -> "DensityOperator":
        d = 1 << n_qubits
        return DensityOperator(n_qubits, np.eye(d, dtype=complex) / d)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def validate(self, atol: float = ATOL_NORM, eig_floor: float = ATOL_EIG) -> None:
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > atol:
            raise ValueError("density matrix not Hermitian")
        if abs(np.trace(m) - 1.0) > atol:
            raise ValueError(f"trace {np.trace(m)} deviates from 1")
        w = np.linalg.eigvalsh(m)
        if w.min() < -eig_floor:
            raise ValueError(f"negative eigenvalue {w.min()}")


State = PureState | DensityOperator


def apply_gate(state: State, gate: GateInstance) -> State:
    """Apply one gate (unitary) to a pure state or density operator."""
    n = state.n_qubits
    if any(not 0 <= q < n for q in gate.targets):
        raise IndexError(f"gate targets {gate.targets} out of range for {n} qubits")
    mat = gate.matrix()
    if isinstance(state, PureState):
        return PureState(n, apply_matrix_vec(state.amplitudes, mat, gate.targets, n))
    return DensityOperator(n, apply_matrix_dm(state.matrix, mat, gate.targets, n))


def apply_gates(state: State, gates) -> State:
    for g in gates:
        state = apply_gate(state, g)
    return state


def apply_pauli_word(state: State, word: PauliString) -> State:
    """Apply a register-wide Pauli word (including its coefficient)."""
    n = state.n_qubits
    if word.n_qubits != n:
        raise ValueError("word length must match qubit count")
    support = word.support
    if not support:
        if isinstance(state, PureState):
            return PureState(n, word.coefficient * state.amplitudes)
        return DensityOperator(n, abs(word.coefficient) ** 2 * state.matrix)
    local = np.eye(1, dtype=complex)
    for q in support:
        local = np.kron(local, pauli_matrix_1q(word.labels[q]))
    local = word.coefficient * local
    if isinstance(state, PureState):
        return PureState(n, apply_matrix_vec(state.amplitudes, local, tuple(support), n))
    return DensityOperator(n, apply_matrix_dm(state.matrix, local, tuple(support), n))


def expectation(obs: PauliString, rho: DensityOperator) -> float:
    """Tr(obs * rho) for a Hermitian Pauli observable."""
    if not obs.is_hermitian():
        raise ValueError("observable must have a real coefficient")
    if obs.n_qubits != rho.n_qubits:
        raise ValueError("observable and state size mismatch")
    val = complex(np.trace(obs.matrix() @ rho.matrix))
    if abs(val.imag) > 1e-10:
        raise AssertionError(f"expectation has imaginary part {val.imag}")
    return float(val.real)


def expectation_pure(obs: PauliString, psi: PureState) -> float:
    if not obs.is_hermitian():
        raise ValueError("observable must have a real coefficient")
    shifted = apply_pauli_word(psi, obs)
    val = psi.inner(shifted)
    if abs(val.imag) > 1e-10:
        raise AssertionError(f"expectation has imaginary part {val.imag}")
    return float(val.real)


def trace_distance(a: DensityOperator | PureState, b: DensityOperator | PureState) -> float:
    """D(a, b) = (1/2) Tr|a - b|."""
    am = a.to_density().matrix if isinstance(a, PureState) else a.matrix
    bm = b.to_density().matrix if isinstance(b, PureState) else b.matrix
    if am.shape != bm.shape:
        raise ValueError("dimension mismatch")
    w = np.linalg.eigvalsh(am - bm)
    return float(0.5 * np.sum(np.abs(w)))


def clip_small_negative_eigenvalues(rho: DensityOperator, floor: float = ATOL_EIG) -> DensityOperator:
    """Zero out eigenvalues in [-floor, 0) from roundoff; larger negativity
    is a genuine error."""
    w, v = np.linalg.eigh(rho.matrix)
    if w.min() < -floor:
        raise ValueError(f"eigenvalue {w.min()} below clipping floor")
    w = np.clip(w, 0.0, None)
    m = (v * w) @ v.conj().T
    m /= np.trace(m).real
    return DensityOperator(rho.n_qubits, m)
