"""Parameterised trial-state circuits with analytic derivative decompositions.

The circuit is a fixed prefix (state preparation) followed by blocks
B_1 ... B_Nv, one per variational parameter.  Each block may contain
several gates sharing the same parameter (for example the three ZZ
rotations realising exp(i*lambda*H_Z)); its derivative is declared as

    dB_k / dlambda_k = B_k * sum_i f_{k,i} sigma_{k,i}

with the generator words sigma_{k,i} inserted immediately to the right of
the block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gates import GateInstance
from .paulis import PauliString
from .states import PureState, apply_gate, apply_gates, apply_pauli_word


@dataclass(frozen=True)
class GateBinding:
    """A gate whose angle is either fixed or ``param_scale * lambda_k``."""

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None
    param_scale: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.angle is not None and self.param_scale is not None:
            raise ValueError("gate angle is either fixed or parameter bound")

    @property
    def is_parameterized(self) -> bool:
        return self.param_scale is not None

    def bind(self, value: float | None = None) -> GateInstance:
        if self.is_parameterized:
            if value is None:
                raise ValueError("parameterized gate needs a value")
            return GateInstance(self.kind, self.targets, angle=self.param_scale * value)
        return GateInstance(self.kind, self.targets, angle=self.angle)


@dataclass(frozen=True)
class AnsatzBlock:
    """Gates driven by one variational parameter plus the derivative data
    {(f_{k,i}, sigma_{k,i})} with register-wide generator words."""

    gates: tuple[GateBinding, ...]
    derivative: tuple[tuple[complex, PauliString], ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(
            self, "derivative", tuple((complex(f), w) for f, w in self.derivative)
        )

    def bound_gates(self, value: float) -> list[GateInstance]:
        return [g.bind(value if g.is_parameterized else None) for g in self.gates]

    @property
    def n_derivative_terms(self) -> int:
        return len(self.derivative)


@dataclass(frozen=True)
class ParameterVector:
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("parameters must be finite")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Ansatz:
    n_qubits: int
    blocks: tuple[AnsatzBlock, ...]
    fixed_prefix: tuple[GateInstance, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "fixed_prefix", tuple(self.fixed_prefix))
        for block in self.blocks:
            for _, w in block.derivative:
                if w.n_qubits != self.n_qubits:
                    raise ValueError("derivative words must span the register")

    @property
    def n_params(self) -> int:
        return len(self.blocks)

    @property
    def max_gates_per_block(self) -> int:
        """N_R, the gate count realising one parameterised block."""
        return max((len(b.gates) for b in self.blocks), default=0)

    @property
    def max_derivative_terms(self) -> int:
        """N_d, the number of terms in each block derivative."""
        return max((b.n_derivative_terms for b in self.blocks), default=0)

    def max_derivative_weight(self) -> int:
        return max(
            (w.weight for b in self.blocks for _, w in b.derivative), default=0
        )

    def check_params(self, params: ParameterVector) -> None:
        if len(params) != self.n_params:
            raise ValueError(
                f"expected {self.n_params} parameters, got {len(params)}"
            )

    def bound_gates(self, params: ParameterVector) -> list[GateInstance]:
        """Full preparation circuit: prefix then all blocks, angles bound."""
        self.check_params(params)
        gates = list(self.fixed_prefix)
        for block, lam in zip(self.blocks, params.values):
            gates.extend(block.bound_gates(lam))
        return gates

    def reference_state(self) -> PureState:
        """|0bar> = prefix |0...0>, the register input the blocks act on."""
        return apply_gates(PureState.zero(self.n_qubits), self.fixed_prefix)

    def prefix_states(self, params: ParameterVector) -> list[PureState]:
        """States after the prefix and after each block: element k is
        B_k ... B_1 |0bar> (k = 0 is |0bar> itself)."""
        self.check_params(params)
        out = [self.reference_state()]
        for block, lam in zip(self.blocks, params.values):
            out.append(apply_gates(out[-1], block.bound_gates(lam)))
        return out

    def trial_state(self, params: ParameterVector) -> PureState:
        return self.prefix_states(params)[-1]

    def derivative_states(self, params: ParameterVector) -> list[list[tuple[complex, PureState]]]:
        """For each parameter k the states (f_{k,i}, R_{k,i}|0bar>) where
        R_{k,i} is the circuit with sigma_{k,i} inserted right of block k."""
        self.check_params(params)
        chain = self.prefix_states(params)
        out = []
        for k, block in enumerate(self.blocks):
            entries = []
            for f, word in block.derivative:
                psi = apply_pauli_word(chain[k], word)
                for b in range(k, self.n_params):
                    psi = apply_gates(psi, self.blocks[b].bound_gates(params.values[b]))
                entries.append((f, psi))
            out.append(entries)
        return out

    def gradient_states(self, params: ParameterVector) -> list[PureState]:
        """d|Psi>/dlambda_k = sum_i f_{k,i} R_{k,i}|0bar> as dense vectors."""
        out = []
        for entries in self.derivative_states(params):
            acc = np.zeros(1 << self.n_qubits, dtype=complex)
            for f, psi in entries:
                acc += f * psi.amplitudes
            out.append(PureState(self.n_qubits, acc))
        return out


def prepare_trial_state(ansatz: Ansatz, params: ParameterVector) -> PureState:
    """Noiseless |Psi(lambda)> = B_Nv ... B_1 |0bar>, norm 1."""
    psi = ansatz.trial_state(params)
    psi.assert_normalized(1e-10)
    return psi


def embed_gate_matrix(gate: GateInstance, n: int) -> np.ndarray:
    """Dense 2^n x 2^n matrix of a gate embedded in the full register."""
    d = 1 << n
    out = np.empty((d, d), dtype=complex)
    for col in range(d):
        basis = PureState.basis(n, col)
        out[:, col] = apply_gate(basis, gate).amplitudes
    return out


def block_matrix(ansatz: Ansatz, k: int, value: float) -> np.ndarray:
    """Dense matrix of block k at the given parameter value."""
    d = 1 << ansatz.n_qubits
    out = np.eye(d, dtype=complex)
    for g in ansatz.blocks[k].bound_gates(value):
        out = embed_gate_matrix(g, ansatz.n_qubits) @ out
    return out


def block_generator_matrix(ansatz: Ansatz, k: int) -> np.ndarray:
    """G_k = sum_i f_{k,i} sigma_{k,i} so that dB_k/dlambda_k = B_k G_k."""
    d = 1 << ansatz.n_qubits
    out = np.zeros((d, d), dtype=complex)
    for f, w in ansatz.blocks[k].derivative:
        out += f * w.matrix()
    return out
