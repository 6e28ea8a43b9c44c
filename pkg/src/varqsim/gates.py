"""Quantum gate instances and their dense matrices.

The gate set is the machine model used throughout: Hadamard, the Paulis,
phase rotations exp(i*theta*Z), flip rotations exp(i*theta*X), two-qubit
exp(i*theta*Z(x)Z), controlled-phase, controlled-NOT, and
controlled-Pauli-word gates (control qubit listed first).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .paulis import PauliString, pauli_matrix_1q

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_I2 = np.eye(2, dtype=complex)

SINGLE_QUBIT_KINDS = frozenset({"i", "h", "x", "y", "z", "phase_rot", "flip_rot"})
TWO_QUBIT_KINDS = frozenset({"zz_rot", "cz", "cnot"})


@dataclass(frozen=True)
class GateInstance:
    """One gate applied to explicit target qubits.

    kind: 'h' | 'x' | 'y' | 'z' | 'phase_rot' | 'flip_rot' | 'zz_rot'
          | 'cz' | 'cnot' | 'cpauli'
    targets: qubit indices; for controlled gates the control comes first.
    angle: rotation angle in radians for the parameterised kinds.
    word: Pauli word applied to targets[1:] for kind 'cpauli'.
    noisy: whether the executor attaches a machine-noise channel after
           this gate (twirl wrap gates are inserted noiseless by default).
    """

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None
    word: PauliString | None = None
    noisy: bool = True

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.kind in SINGLE_QUBIT_KINDS and len(self.targets) != 1:
            raise ValueError(f"{self.kind} takes one target")
        if self.kind in TWO_QUBIT_KINDS and len(self.targets) != 2:
            raise ValueError(f"{self.kind} takes two targets")
        if self.kind == "cpauli":
            if self.word is None:
                raise ValueError("cpauli needs a Pauli word")
            if len(self.targets) != 1 + self.word.n_qubits:
                raise ValueError("cpauli targets must be control + word qubits")

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    def matrix(self) -> np.ndarray:
        cached = self.__dict__.get("_matrix")
        if cached is None:
            cached = self._build_matrix()
            object.__setattr__(self, "_matrix", cached)
        return cached

    def _build_matrix(self) -> np.ndarray:
        """Dense matrix on the target qubits; basis index of a target tuple
        (t0, t1, ...) puts t0 in the most significant position."""
        k = self.kind
        if k == "i":
            return _I2.copy()
        if k == "h":
            return _H.copy()
        if k in ("x", "y", "z"):
            return pauli_matrix_1q(k.upper())
        if k == "phase_rot":
            return np.diag([np.exp(1j * self.angle), np.exp(-1j * self.angle)])
        if k == "flip_rot":
            c, s = math.cos(self.angle), math.sin(self.angle)
            return np.array([[c, 1j * s], [1j * s, c]])
        if k == "zz_rot":
            p, m = np.exp(1j * self.angle), np.exp(-1j * self.angle)
            return np.diag([p, m, m, p])
        if k == "cz":
            return np.diag([1, 1, 1, -1]).astype(complex)
        if k == "cnot":
            m = np.eye(4, dtype=complex)
            m[2:, 2:] = pauli_matrix_1q("X")
            return m
        if k == "cpauli":
            # word.labels[i] acts on targets[1 + i]; build big-endian in
            # target order (targets[1] most significant after the control)
            u = np.eye(1, dtype=complex)
            for lab in self.word.labels:
                u = np.kron(u, pauli_matrix_1q(lab))
            u = self.word.coefficient * u
            d = u.shape[0]
            out = np.zeros((2 * d, 2 * d), dtype=complex)
            out[:d, :d] = np.eye(d)
            out[d:, d:] = u
            return out
        raise ValueError(f"unknown gate kind {k!r}")


def hadamard(q: int) -> GateInstance:
    return GateInstance("h", (q,))


def pauli_gate(label: str, q: int, noisy: bool = True) -> GateInstance:
    return GateInstance(label.lower(), (q,), noisy=noisy)


def phase_rot(theta: float, q: int) -> GateInstance:
    return GateInstance("phase_rot", (q,), angle=theta)


def flip_rot(theta: float, q: int) -> GateInstance:
    return GateInstance("flip_rot", (q,), angle=theta)


def zz_rot(theta: float, q0: int, q1: int) -> GateInstance:
    return GateInstance("zz_rot", (q0, q1), angle=theta)


def cz(control: int, target: int) -> GateInstance:
    return GateInstance("cz", (control, target))


def cnot(control: int, target: int) -> GateInstance:
    return GateInstance("cnot", (control, target))


def controlled_pauli(control: int, word: PauliString, word_qubits: tuple[int, ...]) -> GateInstance:
    """Controlled application of ``word``; word.labels[i] acts on word_qubits[i]."""
    if len(word_qubits) != word.n_qubits:
        raise ValueError("word length must match word_qubits")
    return GateInstance("cpauli", (control, *word_qubits), word=word)


def controlled_register_word(control: int, word: PauliString) -> GateInstance:
    """Controlled register-wide Pauli word, restricted to its support.

    ``word`` is given over the full register; identity sites are dropped so
    the controlled gate touches only control + support qubits.
    """
    support = word.support
    if not support:
        # controlled identity: a phase on the control when coefficient != 1
        local = PauliString("I", word.coefficient)
        return GateInstance("cpauli", (control, 0), word=local)
    local = PauliString("".join(word.labels[q] for q in support), word.coefficient)
    return GateInstance("cpauli", (control, *support), word=local)
