"""Coefficient tasks for the variational linear system M lam_dot = V.

Every entry of M and V is a sum of terms 2 a Re(e^{i theta} <0bar|U|0bar>)
with U = R_{k,i}^dag R_{q,j} (for M) or R_{k,i}^dag sigma_j R (for V); each
term maps to one ancilla circuit.  Tasks are enumerated in a fixed
(kind, k, i, q, j) lexicographic order so random-number consumption is
reproducible and independent of evaluation order.

Only k < q M tasks are evaluated; the mirror entries follow from
antisymmetry (eta = 1) or symmetry (eta = -i).  For the symmetric class the
diagonal additionally needs k = q tasks (i < j doubled, i = j evaluated as
genuine identity circuits so they carry their full noise cost).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .ansatz import Ansatz, ParameterVector
from .channels import NoiseModel
from .circuits import ancilla_z_expectation, Circuit, run_circuit_branches, run_circuit_density
from .gates import GateInstance
from .hamiltonians import Hamiltonian
from .paulis import PauliString
from .states import apply_gates, apply_matrix_vec, apply_pauli_word

ETA_TDVP = 1.0 + 0.0j
ETA_MCLACHLAN = -1.0j


@dataclass(frozen=True)
class ExactMode:
    pass


@dataclass(frozen=True)
class NoisyExactMode:
    noise: NoiseModel


@dataclass(frozen=True)
class NoisyShotsMode:
    noise: NoiseModel
    n_repetitions: int
    seed: int = 0

    def __post_init__(self):
        if self.n_repetitions < 1:
            raise ValueError("n_repetitions must be >= 1")


EvaluationMode = ExactMode | NoisyExactMode | NoisyShotsMode


@dataclass(frozen=True)
class CoefficientTask:
    """One term of M or V realised as a Fig.-style ancilla circuit.

    boundary: index of the block before which the second controlled word is
    inserted (q for M tasks, n_params for V tasks).
    """

    kind: str  # "M" | "V"
    k: int
    i: int
    q: int | None
    j: int
    prefactor: complex
    first_word: PauliString
    second_word: PauliString
    boundary: int
    multiplicity: int
    ansatz: Ansatz
    params: ParameterVector

    @property
    def amplitude(self) -> float:
        return abs(self.prefactor)

    @property
    def theta(self) -> float:
        return float(np.angle(self.prefactor))

    @property
    def n_register(self) -> int:
        return self.ansatz.n_qubits

    @property
    def gate_count(self) -> int:
        """Accounted circuit size: variational gates kept after truncation,
        two ancilla flips, one controlled-Pauli per non-identity site."""
        kept_blocks = range(self.boundary)
        n_var = sum(len(self.ansatz.blocks[b].gates) for b in kept_blocks)
        return n_var + 2 + max(self.first_word.weight, 1) + max(self.second_word.weight, 1)

    @property
    def circuit(self) -> Circuit:
        cached = self.__dict__.get("_circuit")
        if cached is None:
            cached = build_task_circuit(self)
            object.__setattr__(self, "_circuit", cached)
        return cached


def controlled_word_gates(anc: int, word: PauliString) -> list[GateInstance]:
    """One two-qubit controlled-sigma per non-identity site of the word.

    Words are plain (+1 coefficient) Pauli strings here; an all-identity
    word becomes a single controlled-identity placeholder acting on qubit 0.
    """
    if abs(word.coefficient - 1.0) > 1e-12:
        raise ValueError("controlled words must carry unit coefficient")
    support = word.support
    if not support:
        return [GateInstance("cpauli", (anc, 0), word=PauliString("I"))]
    return [
        GateInstance("cpauli", (anc, q), word=PauliString(word.labels[q]))
        for q in support
    ]


def build_task_circuit(task: CoefficientTask) -> Circuit:
    """Prefix, blocks below k, anti-controlled first word (X-flip sandwich),
    blocks up to the boundary, controlled second word.  Register gates after
    the second controlled block are omitted."""
    ans, params = task.ansatz, task.params
    anc = ans.n_qubits
    ops: list = list(ans.fixed_prefix)
    vals = params.values
    for b in range(task.k):
        ops.extend(ans.blocks[b].bound_gates(vals[b]))
    ops.append(GateInstance("x", (anc,)))
    ops.extend(controlled_word_gates(anc, task.first_word))
    ops.append(GateInstance("x", (anc,)))
    for b in range(task.k, task.boundary):
        ops.extend(ans.blocks[b].bound_gates(vals[b]))
    ops.extend(controlled_word_gates(anc, task.second_word))
    return Circuit(n_register=ans.n_qubits, theta=task.theta, ops=ops)


def build_mv_tasks(
    ansatz: Ansatz,
    h: Hamiltonian,
    params: ParameterVector,
    eta: complex = ETA_TDVP,
) -> list[CoefficientTask]:
    """All circuits needed for M and V at one parameter point."""
    eta = complex(eta)
    _check_eta(eta)
    ansatz.check_params(params)
    n_v = ansatz.n_params
    h_coeffs = h.coefficients(params.time)
    tasks: list[CoefficientTask] = []
    for k in range(n_v):
        f_k = ansatz.blocks[k].derivative
        for i, (f_ki, w_ki) in enumerate(f_k):
            for q in range(k, n_v):
                if q == k and eta != ETA_MCLACHLAN:
                    continue  # antisymmetric class: zero diagonal
                f_q = ansatz.blocks[q].derivative
                for j, (f_qj, w_qj) in enumerate(f_q):
                    if q == k and j < i:
                        continue  # folded into (i, j) by symmetry
                    mult = 2 if (q == k and j > i) else 1
                    c = 1j * eta * np.conj(f_ki) * f_qj
                    tasks.append(
                        CoefficientTask(
                            kind="M", k=k, i=i, q=q, j=j,
                            prefactor=complex(c),
                            first_word=w_ki, second_word=w_qj,
                            boundary=q, multiplicity=mult,
                            ansatz=ansatz, params=params,
                        )
                    )
    for k in range(n_v):
        f_k = ansatz.blocks[k].derivative
        for i, (f_ki, w_ki) in enumerate(f_k):
            for j, (_, w_j) in enumerate(h.terms):
                c = eta * np.conj(f_ki) * h_coeffs[j]
                tasks.append(
                    CoefficientTask(
                        kind="V", k=k, i=i, q=None, j=j,
                        prefactor=complex(c),
                        first_word=w_ki, second_word=w_j,
                        boundary=n_v, multiplicity=1,
                        ansatz=ansatz, params=params,
                    )
                )
    return tasks


def _check_eta(eta: complex) -> None:
    if eta not in (ETA_TDVP, ETA_MCLACHLAN):
        raise ValueError("eta must be 1 (Lagrangian) or -1j (McLachlan)")


def nominal_task_count(n_v: int, n_d: int, n_h: int) -> int:
    """N_c before symmetry pruning: N_v^2 N_d^2 (M) + N_v N_d N_H (V)."""
    return n_v * n_v * n_d * n_d + n_v * n_d * n_h


def sample_shot_noise(x_true: float, n_repetitions: int, rng: np.random.Generator) -> float:
    """One finite-sampling draw of an <X> estimate.

    Normal approximation of the binomial: p ~ N(p0, sqrt(p0(1-p0)/N_r))
    with p0 = (1 - x)/2, returned as x = 1 - 2p.
    """
    return shot_noise_from_normal(x_true, n_repetitions, float(rng.standard_normal()))


def shot_noise_from_normal(x_true: float, n_repetitions: int, z: float) -> float:
    if n_repetitions < 1:
        raise ValueError("n_repetitions must be >= 1")
    if abs(x_true) > 1.0 + 1e-9:
        raise ValueError(f"<X> value {x_true} outside [-1, 1]")
    x_true = min(1.0, max(-1.0, x_true))
    p0 = (1.0 - x_true) / 2.0
    sigma = math.sqrt(p0 * (1.0 - p0) / n_repetitions)
    return 1.0 - 2.0 * (p0 + sigma * z)


def shot_noise_std(x_true: float, n_repetitions: int) -> float:
    """Standard deviation sqrt((1 - x^2)/N_r) of the sampled estimate."""
    return math.sqrt(max(0.0, 1.0 - x_true * x_true) / n_repetitions)


def evaluate_task(task: CoefficientTask, mode: EvaluationMode, rng: np.random.Generator | None = None) -> float:
    """Standalone evaluation of one task's <X> estimate."""
    if isinstance(mode, ExactMode):
        return run_circuit_branches(task.circuit)
    if isinstance(mode, NoisyExactMode):
        x, _ = run_circuit_density(task.circuit, mode.noise)
        return x
    if isinstance(mode, NoisyShotsMode):
        x, _ = run_circuit_density(task.circuit, mode.noise)
        if rng is None:
            rng = np.random.default_rng(mode.seed)
        return sample_shot_noise(x, mode.n_repetitions, rng)
    raise TypeError(f"unknown mode {mode!r}")


def evaluate_task_ancilla_exact(task: CoefficientTask) -> float:
    """Noiseless evaluation through the full ancilla density-operator path;
    must agree with the branch inner-product path to 1e-10."""
    x, _ = run_circuit_density(task.circuit, None)
    return x


def evaluate_tasks_exact(tasks: list[CoefficientTask], ansatz: Ansatz, params: ParameterVector) -> np.ndarray:
    """Inner-product oracle path for a full task set, sharing state
    preparations across tasks."""
    chain = ansatz.prefix_states(params)
    psi = chain[-1]
    n_v = ansatz.n_params
    u: dict[tuple[int, int], np.ndarray] = {}
    for k in range(n_v):
        for i, (_, word) in enumerate(ansatz.blocks[k].derivative):
            s = apply_pauli_word(chain[k], word)
            for b in range(k, n_v):
                s = apply_gates(s, ansatz.blocks[b].bound_gates(params.values[b]))
            u[(k, i)] = s.amplitudes
    sigma_psi: dict[int, np.ndarray] = {}
    out = np.empty(len(tasks))
    for idx, t in enumerate(tasks):
        if t.kind == "M":
            overlap = np.vdot(u[(t.k, t.i)], u[(t.q, t.j)])
        else:
            sp = sigma_psi.get(t.j)
            if sp is None:
                sp = apply_pauli_word(psi, t.second_word).amplitudes
                sigma_psi[t.j] = sp
            overlap = np.vdot(u[(t.k, t.i)], sp)
        out[idx] = np.real(np.exp(1j * t.theta) * overlap)
    return out


_STATIC_GATES: dict = {}


def _static_gate(kind: str, targets: tuple[int, ...], angle: float | None = None) -> GateInstance:
    """Shared immutable gate instances so the fused-superoperator caches on
    them survive across estimator stages."""
    key = (kind, targets, angle)
    g = _STATIC_GATES.get(key)
    if g is None:
        g = GateInstance(kind, targets, angle=angle)
        if len(_STATIC_GATES) > 4096:
            _STATIC_GATES.clear()
        _STATIC_GATES[key] = g
    return g


def _static_controlled_word(anc: int, word: PauliString) -> list[GateInstance]:
    key = ("ctrl", anc, word.labels)
    gates = _STATIC_GATES.get(key)
    if gates is None:
        gates = controlled_word_gates(anc, word)
        _STATIC_GATES[key] = gates
    return gates


def evaluate_tasks_noisy(
    tasks: list[CoefficientTask],
    ansatz: Ansatz,
    params: ParameterVector,
    noise: NoiseModel,
) -> np.ndarray:
    """Density-operator evaluation of a full task set.

    Shares the common circuit segments across tasks (per ancilla phase,
    per first-insertion point); results are identical to evaluating each
    task's circuit independently.
    """
    from .circuits import apply_gate_with_noise, initial_density

    n = ansatz.n_qubits + 1
    anc = ansatz.n_qubits
    vals = params.values
    n_v = ansatz.n_params

    # group task indices by (theta, k, i) then boundary
    groups: dict[float, dict[tuple[int, int], list[int]]] = {}
    for idx, t in enumerate(tasks):
        th = round(t.theta, 12)
        groups.setdefault(th, {}).setdefault((t.k, t.i), []).append(idx)

    # bind every reused gate object once so fused superoperators are cached
    bound_blocks = [ansatz.blocks[b].bound_gates(vals[b]) for b in range(n_v)]
    flip = _static_gate("x", (anc,))
    readout = _static_gate("h", (anc,))
    ctrl_cache: dict[str, list[GateInstance]] = {}

    def ctrl_gates(word):
        gates = ctrl_cache.get(word.labels)
        if gates is None:
            gates = _static_controlled_word(anc, word)
            ctrl_cache[word.labels] = gates
        return gates

    out = np.empty(len(tasks))
    for th, stems in sorted(groups.items()):
        rho0 = initial_density(n, noise)
        for g in (
            _static_gate("h", (anc,)),
            _static_gate("phase_rot", (anc,), angle=-th / 2.0),
        ):
            rho0 = apply_gate_with_noise(rho0, g, noise, n)
        for g in ansatz.fixed_prefix:
            rho0 = apply_gate_with_noise(rho0, g, noise, n)
        max_k = max(k for (k, _) in stems)
        chain = [rho0]
        for b in range(max_k):
            r = chain[-1]
            for g in bound_blocks[b]:
                r = apply_gate_with_noise(r, g, noise, n)
            chain.append(r)
        for (k, i), idxs in sorted(stems.items()):
            word = tasks[idxs[0]].first_word
            s = chain[k]
            s = apply_gate_with_noise(s, flip, noise, n)
            for g in ctrl_gates(word):
                s = apply_gate_with_noise(s, g, noise, n)
            s = apply_gate_with_noise(s, flip, noise, n)
            by_boundary: dict[int, list[int]] = {}
            for idx in idxs:
                by_boundary.setdefault(tasks[idx].boundary, []).append(idx)
            for b in range(k, n_v + 1):
                for idx in by_boundary.get(b, ()):
                    t = tasks[idx]
                    r = s
                    for g in ctrl_gates(t.second_word):
                        r = apply_gate_with_noise(r, g, noise, n)
                    r = apply_gate_with_noise(r, readout, noise, n)
                    x = ancilla_z_expectation(r, anc, n)
                    out[idx] = noise.measurement_map(x)
                if b < n_v:
                    for g in bound_blocks[b]:
                        s = apply_gate_with_noise(s, g, noise, n)
    return out


def assemble_mv(
    tasks: list[CoefficientTask],
    values: np.ndarray,
    eta: complex,
    n_params: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Sum task contributions 2 a <X> into M (mirrored by symmetry class)
    and V."""
    eta = complex(eta)
    _check_eta(eta)
    if len(values) != len(tasks):
        raise ValueError("one value per task required")
    m = np.zeros((n_params, n_params))
    v = np.zeros(n_params)
    sign = -1.0 if eta == ETA_TDVP else 1.0
    for t, x in zip(tasks, values):
        contrib = t.multiplicity * 2.0 * t.amplitude * x
        if t.kind == "M":
            m[t.k, t.q] += contrib
        else:
            v[t.k] += contrib
    for k in range(n_params):
        for q in range(k + 1, n_params):
            m[q, k] = sign * m[k, q]
    return m, v


class MVEstimator:
    """Evaluates (M, V) at arbitrary (lambda, t) in a fixed mode, applying
    boost-and-extrapolate mitigation per task estimate when configured.

    Shot noise consumes one standard-normal draw per (task, boost factor),
    indexed by task position, so parallel completion order cannot change
    results.
    """

    def __init__(self, ansatz, hamiltonian, eta=ETA_TDVP, mode=ExactMode(), mitigation=None):
        from .mitigation import MitigationConfig  # local to avoid cycle at import time

        _check_eta(complex(eta))
        if mitigation is not None and not isinstance(mitigation, MitigationConfig):
            raise TypeError("mitigation must be a MitigationConfig")
        if mitigation is not None and isinstance(mode, ExactMode):
            raise ValueError("mitigation requires a noisy mode")
        if mitigation is not None and mode.noise.boost != 1.0:
            raise ValueError("mitigation r-grid expects native (boost = 1) base noise")
        self.ansatz = ansatz
        self.hamiltonian = hamiltonian
        self.eta = complex(eta)
        self.mode = mode
        self.mitigation = mitigation
        # one noise model per boost factor, built once so channel and
        # superoperator caches persist across the whole run
        if isinstance(mode, ExactMode):
            self._noise_by_r = {}
        elif mitigation is None:
            self._noise_by_r = {mode.noise.boost: mode.noise}
        else:
            from .mitigation import boost_noise

            self._noise_by_r = {r: boost_noise(mode.noise, r) for r in mitigation.r_values}

    def task_values(
        self, params: ParameterVector, rng: np.random.Generator | None = None
    ) -> tuple[list[CoefficientTask], np.ndarray]:
        from .mitigation import mitigate_values

        tasks = build_mv_tasks(self.ansatz, self.hamiltonian, params, self.eta)
        mode = self.mode
        if isinstance(mode, ExactMode):
            return tasks, evaluate_tasks_exact(tasks, self.ansatz, params)
        r_values = self.mitigation.r_values if self.mitigation else (mode.noise.boost,)
        shots = isinstance(mode, NoisyShotsMode)
        z = None
        if shots:
            if rng is None:
                rng = np.random.default_rng(mode.seed)
            z = rng.standard_normal((len(tasks), len(r_values)))
        values_by_r: dict[float, np.ndarray] = {}
        stderr_by_r: dict[float, np.ndarray] = {}
        for ri, r in enumerate(r_values):
            noise_r = self._noise_by_r[r]
            vals = evaluate_tasks_noisy(tasks, self.ansatz, params, noise_r)
            if shots:
                n_r = mode.n_repetitions
                sampled = np.array(
                    [
                        shot_noise_from_normal(v, n_r, z[idx, ri])
                        for idx, v in enumerate(vals)
                    ]
                )
                stderr_by_r[r] = np.array([shot_noise_std(v, n_r) for v in vals])
                vals = sampled
            values_by_r[r] = vals
        if self.mitigation is None:
            return tasks, values_by_r[r_values[0]]
        mitigated, _ = mitigate_values(
            values_by_r, stderr_by_r if shots else None, self.mitigation
        )
        return tasks, mitigated

    def evaluate(
        self, params: ParameterVector, rng: np.random.Generator | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        tasks, values = self.task_values(params, rng)
        return assemble_mv(tasks, values, self.eta, self.ansatz.n_params)


def dump_tasks_csv(
    path,
    tasks: list[CoefficientTask],
    columns: dict[str, np.ndarray],
) -> None:
    """One record per task: indices, amplitude, phase, gate count, then one
    column of values per evaluation mode."""
    names = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["kind", "k", "i", "q", "j", "multiplicity", "amplitude", "theta", "gate_count"]
            + names
        )
        for idx, t in enumerate(tasks):
            row = [
                t.kind, t.k, t.i, "" if t.q is None else t.q, t.j, t.multiplicity,
                f"{t.amplitude:.17g}", f"{t.theta:.17g}", t.gate_count,
            ]
            row += [f"{columns[name][idx]:.17g}" for name in names]
            w.writerow(row)
