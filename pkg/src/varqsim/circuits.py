"""Ancilla-interferometry circuits and their exact / noisy executors.

A Circuit evaluates Re(e^{i theta} <0bar| U |0bar>) as the ancilla <X>:
the ancilla (last qubit, index n_register) starts in (|0> + e^{i theta}|1>)/sqrt(2),
controls two Pauli-word blocks embedded in the register gate sequence, and
is read out in the X basis.

Noisy execution follows the machine model: every qubit suffers an
initialization flip, every gate marked ``noisy`` is followed by a
depolarizing channel of matching arity (ancilla preparation and readout
basis-change gates included), and the X-basis readout applies the affine
measurement-error map.  Explicit NoiseChannel entries in the op list (used
by the twirling machinery) are applied as written.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channels import NoiseChannel, NoiseModel, apply_channel_matrix
from .gates import GateInstance
from .states import DensityOperator, apply_matrix_dm, apply_matrix_vec

CircuitOp = GateInstance | NoiseChannel


@dataclass(frozen=True)
class Circuit:
    """Register + ancilla circuit; the ancilla is qubit ``n_register``."""

    n_register: int
    theta: float
    ops: tuple[CircuitOp, ...]

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        n_total = self.n_register + 1
        for op in self.ops:
            if any(not 0 <= q < n_total for q in op.targets):
                raise ValueError(f"op touches qubit outside register+ancilla: {op}")

    @property
    def ancilla(self) -> int:
        return self.n_register

    @property
    def gates(self) -> list[GateInstance]:
        return [op for op in self.ops if isinstance(op, GateInstance)]

    def with_ops(self, ops) -> "Circuit":
        return replace(self, ops=tuple(ops))


_FUSED_SUPEROPS: dict = {}
_APPLY_PLANS: dict = {}
_SIGN_VECTORS: dict = {}


def _gate_signature(gate: GateInstance):
    w = gate.word
    return (gate.kind, gate.angle, None if w is None else (w.labels, w.coefficient))


def _depol_superop_factor(w: float, d: int) -> np.ndarray:
    """Matrix of rho -> (1-w) rho + w (I/d) tr(rho) on a d-dim target space,
    rows/cols indexed (ket, bra)."""
    eye = np.eye(d * d)
    trace_part = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            trace_part[a * d + a, b * d + b] = 1.0 / d
    return (1.0 - w) * eye + w * trace_part


def _fused_superop(gate: GateInstance, noise: NoiseModel | None) -> np.ndarray | None:
    """Gate conjugation fused with its uniform depolarizing channel as one
    local superoperator; None when the attached channel is not a uniform
    mixture (caller falls back to the two-step path).

    Cached per gate instance keyed by the noise-model object: bound gates
    are reused many times within one estimator stage.
    """
    inst_cache = gate.__dict__.get("_superop_cache")
    if inst_cache is None:
        inst_cache = {}
        object.__setattr__(gate, "_superop_cache", inst_cache)
    nkey = id(noise)
    hit = inst_cache.get(nkey)
    if hit is not None:
        return hit[1]
    m = gate.n_targets
    if noise is None or not gate.noisy:
        w = 0.0
    else:
        ch = noise.gate_channel(gate.targets)
        if ch is None:
            w = 0.0
        elif ch.uniform_rate is None:
            return None
        else:
            d2 = 1 << (2 * m)
            w = ch.uniform_rate * d2 / (d2 - 1)
    key = (_gate_signature(gate), round(w, 15), m)
    sup = _FUSED_SUPEROPS.get(key)
    if sup is None:
        u = gate.matrix()
        d = 1 << m
        f = np.kron(u, u.conj())  # rows/cols indexed (ket, bra) pairs
        if w != 0.0:
            f = _depol_superop_factor(w, d) @ f
        sup = np.ascontiguousarray(f)
        if len(_FUSED_SUPEROPS) > 8192:
            _FUSED_SUPEROPS.clear()
        _FUSED_SUPEROPS[key] = sup
    inst_cache[nkey] = (noise, sup)
    return sup


def _apply_plan(n: int, targets: tuple[int, ...]):
    """Cached axis permutation bringing the targets' ket and bra axes to the
    front of the (2,)*2n density tensor, plus its inverse."""
    key = (n, targets)
    plan = _APPLY_PLANS.get(key)
    if plan is None:
        ket = [n - 1 - t for t in targets]
        bra = [n + a for a in ket]
        rest = [a for a in range(2 * n) if a not in ket and a not in bra]
        perm = tuple(ket + bra + rest)
        inv = np.argsort(perm)
        plan = (perm, tuple(int(i) for i in inv))
        _APPLY_PLANS[key] = plan
    return plan


def apply_gate_with_noise(rho: np.ndarray, gate: GateInstance, noise: NoiseModel | None, n: int) -> np.ndarray:
    """U rho U^dag followed by the gate's depolarizing channel, applied as a
    single pre-fused local superoperator where possible."""
    sup = _fused_superop(gate, noise)
    if sup is None:
        rho = apply_matrix_dm(rho, gate.matrix(), gate.targets, n)
        ch = noise.gate_channel(gate.targets)
        if ch is not None:
            rho = apply_channel_matrix(rho, ch, n)
        return rho
    m = len(gate.targets)
    d = 1 << n
    perm, inv = _apply_plan(n, gate.targets)
    t = rho.reshape((2,) * (2 * n)).transpose(perm).reshape(1 << (2 * m), -1)
    out = (sup @ t).reshape((2,) * (2 * n)).transpose(inv)
    return out.reshape(d, d)


def initial_density(n: int, noise: NoiseModel | None) -> np.ndarray:
    """Product of per-qubit initialisations, each flipped with eps_init."""
    if noise is None or noise.effective_eps_init == 0.0:
        d = 1 << n
        rho = np.zeros((d, d), dtype=complex)
        rho[0, 0] = 1.0
        return rho
    one_q = noise.init_density_1q()
    rho = np.eye(1, dtype=complex)
    for _ in range(n):
        rho = np.kron(rho, one_q)
    return rho


def ancilla_prep_gates(circ: Circuit) -> list[GateInstance]:
    """Hadamard then a phase rotation realising (|0> + e^{i theta}|1>)/sqrt(2)."""
    anc = circ.ancilla
    return [
        GateInstance("h", (anc,)),
        GateInstance("phase_rot", (anc,), angle=-circ.theta / 2.0),
    ]


def run_circuit_density(circ: Circuit, noise: NoiseModel | None) -> tuple[float, DensityOperator]:
    """Full density-operator execution; returns (measured <X>, final state).

    The final state is taken after the readout basis change (Hadamard on
    the ancilla) but before the destructive measurement.
    """
    n = circ.n_register + 1
    rho = initial_density(n, noise)
    for g in ancilla_prep_gates(circ):
        rho = apply_gate_with_noise(rho, g, noise, n)
    for op in circ.ops:
        if isinstance(op, GateInstance):
            rho = apply_gate_with_noise(rho, op, noise, n)
        else:
            rho = apply_channel_matrix(rho, op, n)
    readout = GateInstance("h", (circ.ancilla,))
    rho = apply_gate_with_noise(rho, readout, noise, n)
    x = ancilla_z_expectation(rho, circ.ancilla, n)
    if noise is not None:
        x = noise.measurement_map(x)
    return x, DensityOperator(n, rho)


def ancilla_z_expectation(rho: np.ndarray, anc: int, n: int) -> float:
    key = (anc, n)
    sign = _SIGN_VECTORS.get(key)
    if sign is None:
        idx = np.arange(1 << n)
        sign = 1.0 - 2.0 * ((idx >> anc) & 1)
        _SIGN_VECTORS[key] = sign
    return float(np.real(np.diag(rho)) @ sign)


def run_circuit_branches(circ: Circuit) -> float:
    """Noiseless evaluation through register-only branch states.

    Tracks |b0>, |b1> with the joint state (|0>|b0> + |1>|b1>)/sqrt(2); the
    measured <X> equals Re<b0|b1>.  No ancilla dimension is simulated.
    """
    n = circ.n_register
    d = 1 << n
    b0 = np.zeros(d, dtype=complex)
    b0[0] = 1.0
    b1 = np.exp(1j * circ.theta) * b0
    anc = circ.ancilla
    for op in circ.ops:
        if isinstance(op, NoiseChannel):
            raise ValueError("branch path cannot execute noise channels")
        if anc in op.targets:
            if op.kind == "x":
                b0, b1 = b1, b0
            elif op.kind == "cpauli":
                if op.targets[0] != anc:
                    raise ValueError("ancilla must be the control")
                mat = op.matrix()
                word = mat[mat.shape[0] // 2:, mat.shape[0] // 2:]
                b1 = apply_matrix_vec(b1, word, op.targets[1:], n)
            else:
                raise ValueError(f"unsupported ancilla gate {op.kind} on branch path")
        else:
            mat = op.matrix()
            b0 = apply_matrix_vec(b0, mat, op.targets, n)
            b1 = apply_matrix_vec(b1, mat, op.targets, n)
    return float(np.real(np.vdot(b0, b1)))


def run_preparation_density(
    n_register: int, gates, noise: NoiseModel | None
) -> DensityOperator:
    """Noisy state preparation on the register alone (no ancilla): init
    errors, each gate followed by its depolarizing channel."""
    rho = initial_density(n_register, noise)
    for g in gates:
        rho = apply_gate_with_noise(rho, g, noise, n_register)
    return DensityOperator(n_register, rho)
