"""The two benchmark systems: the transverse-field Ising ring started from
a cluster state, and the single-qubit demo with a time-dependent drive."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ansatz import Ansatz, AnsatzBlock, GateBinding, ParameterVector
from .gates import GateInstance
from .hamiltonians import Hamiltonian
from .paulis import PauliString


@dataclass(frozen=True)
class System:
    """A simulation target: Hamiltonian, trial circuit, initial data."""

    name: str
    hamiltonian: Hamiltonian
    ansatz: Ansatz
    initial_params: np.ndarray
    horizon: float
    stabilizers: tuple[PauliString, ...] = ()
    trotter_groups: tuple[tuple[int, ...], ...] = ()

    @property
    def n_qubits(self) -> int:
        return self.hamiltonian.n_qubits


def build_ising(n_s: int, J: float, B: float) -> tuple[Hamiltonian, Ansatz]:
    """Ising ring H = -J sum Z_j Z_{j+1} - B sum X_j (periodic wrap) with the
    trial state exp(i lam2 H_X) exp(i lam1 H_Z) |cluster>.

    The cluster state is prepared by Hadamards on every spin followed by a
    controlled-phase gate on each nearest-neighbour pair.
    """
    if n_s < 2:
        raise ValueError("need at least two spins")
    terms = []
    zz_words = []
    for j in range(n_s):
        word = PauliString.from_sites(n_s, {j: "Z", (j + 1) % n_s: "Z"})
        zz_words.append(word)
        terms.append((-J, word))
    x_words = [PauliString.single(n_s, j, "X") for j in range(n_s)]
    for w in x_words:
        terms.append((-B, w))
    h = Hamiltonian(n_s, tuple(terms))

    prefix = [GateInstance("h", (j,)) for j in range(n_s)]
    pairs = sorted({tuple(sorted((j, (j + 1) % n_s))) for j in range(n_s)})
    prefix += [GateInstance("cz", pair) for pair in pairs]

    # exp(i lam1 H_Z) = prod_j exp(-i J lam1 Z_j Z_{j+1})
    zz_gates = tuple(
        GateBinding("zz_rot", (j, (j + 1) % n_s), param_scale=-J) for j in range(n_s)
    )
    zz_deriv = tuple((-1j * J, w) for w in zz_words)
    # exp(i lam2 H_X) = prod_j exp(-i B lam2 X_j)
    x_gates = tuple(GateBinding("flip_rot", (j,), param_scale=-B) for j in range(n_s))
    x_deriv = tuple((-1j * B, w) for w in x_words)

    ansatz = Ansatz(
        n_qubits=n_s,
        blocks=(AnsatzBlock(zz_gates, zz_deriv), AnsatzBlock(x_gates, x_deriv)),
        fixed_prefix=tuple(prefix),
    )
    return h, ansatz


def ising_stabilizers(n_s: int) -> tuple[PauliString, ...]:
    """Cluster-state stabilizers S_j = Z_{j-1} X_j Z_{j+1} on the ring."""
    if n_s < 3:
        raise ValueError("ring stabilizers need at least three spins")
    out = []
    for j in range(n_s):
        out.append(
            PauliString.from_sites(
                n_s, {(j - 1) % n_s: "Z", j: "X", (j + 1) % n_s: "Z"}
            )
        )
    return tuple(out)


def ising_system(n_s: int = 3, J: float = 0.5, B: float = 0.5, horizon: float = 4 * math.pi) -> System:
    h, ansatz = build_ising(n_s, J, B)
    n_zz = n_s
    return System(
        name="ising",
        hamiltonian=h,
        ansatz=ansatz,
        initial_params=np.zeros(2),
        horizon=horizon,
        stabilizers=ising_stabilizers(n_s) if n_s >= 3 else (),
        trotter_groups=(tuple(range(n_zz)), tuple(range(n_zz, 2 * n_s))),
    )


def build_qubit_demo() -> tuple[Hamiltonian, Ansatz, ParameterVector]:
    """Single-qubit drive H(t) = -(Y + Z cos t - Y sin t)/2 with trial
    exp(i (pi/2) lam2 Z) exp(i (pi/2) lam1 Y) |0> started at lam = (3/4, -1/2).
    """
    terms = (
        (-0.5, PauliString("Y")),
        (lambda t: -0.5 * math.cos(t), PauliString("Z")),
        (lambda t: 0.5 * math.sin(t), PauliString("Y")),
    )
    h = Hamiltonian(1, terms)

    # exp(i theta Y) compiled as PhaseRot(-pi/4) FlipRot(theta) PhaseRot(pi/4)
    # (S X S^dag = Y; the PhaseRot global phases cancel exactly)
    y_block = AnsatzBlock(
        gates=(
            GateBinding("phase_rot", (0,), angle=math.pi / 4),
            GateBinding("flip_rot", (0,), param_scale=math.pi / 2),
            GateBinding("phase_rot", (0,), angle=-math.pi / 4),
        ),
        derivative=((1j * math.pi / 2, PauliString("Y")),),
    )
    z_block = AnsatzBlock(
        gates=(GateBinding("phase_rot", (0,), param_scale=math.pi / 2),),
        derivative=((1j * math.pi / 2, PauliString("Z")),),
    )
    ansatz = Ansatz(n_qubits=1, blocks=(y_block, z_block))
    params0 = ParameterVector(np.array([0.75, -0.5]), time=0.0)
    return h, ansatz, params0


def qubit_demo_system() -> System:
    h, ansatz, params0 = build_qubit_demo()
    return System(
        name="qubit-demo",
        hamiltonian=h,
        ansatz=ansatz,
        initial_params=params0.values,
        horizon=2 * math.pi,
        trotter_groups=((0,), (1,), (2,)),
    )
