"""Pauli words with a complex coefficient.

Qubit convention (package-wide): qubit 0 is the least significant bit of
the computational-basis index, i.e. basis state ``|b_{n-1} ... b_1 b_0>``
has index ``sum_j b_j 2**j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

_PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

PAULI_LABELS = ("I", "X", "Y", "Z")

# (a, b) -> (phase, c) with sigma_a sigma_b = phase * sigma_c, labels indexed I,X,Y,Z.
_MUL_TABLE: dict[tuple[int, int], tuple[complex, int]] = {}
for _a in range(4):
    for _b in range(4):
        _prod = _PAULI_1Q[PAULI_LABELS[_a]] @ _PAULI_1Q[PAULI_LABELS[_b]]
        for _c in range(4):
            _ref = _PAULI_1Q[PAULI_LABELS[_c]]
            _ov = np.trace(_ref.conj().T @ _prod) / 2
            if abs(_ov) > 0.5:
                _MUL_TABLE[(_a, _b)] = (complex(np.round(_ov.real) + 1j * np.round(_ov.imag)), _c)
                break


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli word ``coefficient * P_{n-1} x ... x P_0``.

    ``labels[j]`` is the single-qubit Pauli acting on qubit j.
    """

    labels: str
    coefficient: complex = 1.0 + 0.0j

    def __post_init__(self):
        if any(c not in PAULI_LABELS for c in self.labels):
            raise ValueError(f"invalid Pauli labels {self.labels!r}")
        object.__setattr__(self, "coefficient", complex(self.coefficient))

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    @property
    def weight(self) -> int:
        """Number of non-identity sites."""
        return sum(1 for c in self.labels if c != "I")

    @property
    def support(self) -> tuple[int, ...]:
        """Qubit indices carrying a non-identity Pauli."""
        return tuple(j for j, c in enumerate(self.labels) if c != "I")

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return abs(self.coefficient.imag) < tol

    def matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix (qubit 0 = least significant index)."""
        # kron builds most-significant-first, so reverse the per-qubit order
        factors = [_PAULI_1Q[self.labels[j]] for j in reversed(range(self.n_qubits))]
        return self.coefficient * reduce(np.kron, factors, np.eye(1, dtype=complex))

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n_qubits != other.n_qubits:
            raise ValueError("Pauli length mismatch")
        phase = self.coefficient * other.coefficient
        out = []
        for ca, cb in zip(self.labels, other.labels):
            ph, c = _MUL_TABLE[(PAULI_LABELS.index(ca), PAULI_LABELS.index(cb))]
            phase *= ph
            out.append(PAULI_LABELS[c])
        return PauliString("".join(out), phase)

    @staticmethod
    def single(n_qubits: int, qubit: int, label: str, coefficient: complex = 1.0) -> "PauliString":
        """Word acting with ``label`` on one qubit, identity elsewhere."""
        if not 0 <= qubit < n_qubits:
            raise ValueError(f"qubit {qubit} out of range for {n_qubits} qubits")
        labels = ["I"] * n_qubits
        labels[qubit] = label
        return PauliString("".join(labels), coefficient)

    @staticmethod
    def from_sites(n_qubits: int, sites: dict[int, str], coefficient: complex = 1.0) -> "PauliString":
        labels = ["I"] * n_qubits
        for q, lab in sites.items():
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} out of range for {n_qubits} qubits")
            labels[q] = lab
        return PauliString("".join(labels), coefficient)


def pauli_matrix_1q(label: str) -> np.ndarray:
    return _PAULI_1Q[label].copy()


def two_qubit_pauli_basis() -> list[np.ndarray]:
    """The 16 products sigma_a (x) sigma_b, index = 4*a + b, a on the
    higher qubit of the pair."""
    basis = []
    for a in range(4):
        for b in range(4):
            basis.append(np.kron(_PAULI_1Q[PAULI_LABELS[a]], _PAULI_1Q[PAULI_LABELS[b]]))
    return basis
