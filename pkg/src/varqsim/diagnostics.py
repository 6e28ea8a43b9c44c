"""Error-budget quantities: per-step algorithm residual, third-order Taylor
bound, the parameter-sensitivity matrix, shot-noise constants, and gate-cost
counting."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .ansatz import Ansatz, ParameterVector, block_generator_matrix, block_matrix
from .hamiltonians import Hamiltonian
from .paulis import PauliString
from .states import PureState, apply_pauli_word, trace_distance


def delta2(ansatz: Ansatz, params: ParameterVector, lam_dot: np.ndarray, h: Hamiltonian) -> float:
    """Squared per-step residual off the projective manifold:
    <dPsi|dPsi> - |<dPsi|Psi>|^2 with
    |dPsi> = -iH|Psi> - sum_k lam_dot_k d|Psi>/dlam_k."""
    psi = ansatz.trial_state(params).amplitudes
    grads = [g.amplitudes for g in ansatz.gradient_states(params)]
    hm = h.matrix(params.time)
    dpsi = -1j * (hm @ psi)
    for lk, g in zip(lam_dot, grads):
        dpsi = dpsi - lk * g
    val = float(np.real(np.vdot(dpsi, dpsi) - abs(np.vdot(dpsi, psi)) ** 2))
    if val < -1e-12:
        raise AssertionError(f"delta2 = {val} below -1e-12")
    return val


def _circuit_overlap(
    ansatz: Ansatz,
    params: ParameterVector,
    k: int,
    first_word: PauliString,
    boundary: int,
    second_word: PauliString,
) -> complex:
    """<0bar| R_{<k}^dag sigma_1^dag R_{k..boundary-1}^dag sigma_2
    R_{boundary-1..k} R_{<k} |0bar> evaluated through two executed ancilla
    circuits (theta = 0 gives the real part, theta = -pi/2 the imaginary
    part)."""
    from .circuits import Circuit, run_circuit_branches
    from .estimator import controlled_word_gates
    from .gates import GateInstance

    anc = ansatz.n_qubits
    ops: list = list(ansatz.fixed_prefix)
    vals = params.values
    for b in range(k):
        ops.extend(ansatz.blocks[b].bound_gates(vals[b]))
    ops.append(GateInstance("x", (anc,)))
    ops.extend(controlled_word_gates(anc, first_word))
    ops.append(GateInstance("x", (anc,)))
    for b in range(k, boundary):
        ops.extend(ansatz.blocks[b].bound_gates(vals[b]))
    ops.extend(controlled_word_gates(anc, second_word))
    re = run_circuit_branches(Circuit(ansatz.n_qubits, 0.0, ops))
    im = run_circuit_branches(Circuit(ansatz.n_qubits, -np.pi / 2.0, ops))
    return complex(re, im)


def delta2_from_circuits(
    ansatz: Ansatz, params: ParameterVector, lam_dot: np.ndarray, h: Hamiltonian
) -> float:
    """Delta2 assembled term-by-term from executed interferometry circuits,
    the same family used for the M and V coefficients."""
    n_v = ansatz.n_params
    n = ansatz.n_qubits
    identity = PauliString("I" * n)
    h_coeffs = h.coefficients(params.time)
    h_words = [w for _, w in h.terms]
    derivs = [
        [(f, w) for f, w in ansatz.blocks[k].derivative] for k in range(n_v)
    ]

    def u_overlap(k, i, q, j):
        # <u_{k,i}|u_{q,j}>; circuits assume first insertion not after second
        if k <= q:
            return _circuit_overlap(ansatz, params, k, derivs[k][i][1], q, derivs[q][j][1])
        return np.conj(u_overlap(q, j, k, i))

    def u_sigma_psi(k, i, word):
        # <u_{k,i}| W |Psi> for a register word W = c * plain
        plain = PauliString(word.labels)
        val = _circuit_overlap(ansatz, params, k, derivs[k][i][1], n_v, plain)
        return word.coefficient * val

    def psi_sigma_psi(word):
        plain = PauliString(word.labels)
        val = _circuit_overlap(ansatz, params, 0, identity, n_v, plain)
        return word.coefficient * val

    h2 = 0.0 + 0.0j
    for (ha, wa), (hb, wb) in product(zip(h_coeffs, h_words), repeat=2):
        h2 += ha * hb * psi_sigma_psi(wa * wb)
    cross = 0.0 + 0.0j
    for k in range(n_v):
        for i, (f, _) in enumerate(derivs[k]):
            for hj, wj in zip(h_coeffs, h_words):
                cross += (
                    np.conj(lam_dot[k]) * np.conj(f) * 1j * hj * u_sigma_psi(k, i, wj)
                )
    gram = 0.0 + 0.0j
    for k in range(n_v):
        for i, (fk, _) in enumerate(derivs[k]):
            for q in range(n_v):
                for j, (fq, _) in enumerate(derivs[q]):
                    gram += (
                        np.conj(lam_dot[k] * fk) * lam_dot[q] * fq * u_overlap(k, i, q, j)
                    )
    norm2 = float(np.real(h2 + 2 * np.real(cross) + gram))
    hpsi_ov = sum(hj * psi_sigma_psi(wj) for hj, wj in zip(h_coeffs, h_words))
    grad_ov = sum(
        lam_dot[k] * np.conj(derivs[k][i][0]) * u_sigma_psi(k, i, identity)
        for k in range(n_v)
        for i in range(len(derivs[k]))
    )
    dpsi_psi = 1j * np.conj(hpsi_ov) - grad_ov
    return float(norm2 - abs(dpsi_psi) ** 2)


def _spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


def time_derivative_operators(
    ansatz: Ansatz, params: ParameterVector, lam_dot: np.ndarray, max_order: int = 3
) -> list[np.ndarray]:
    """Dense d^m R / dt^m for m = 1..max_order with d/dt = sum_k lam_dot_k
    d/dlam_k (lam_dot held constant).

    Each derivative term is the circuit with generator insertions: repeated
    differentiation of B_k contributes powers of G_k immediately right of
    the block, so a term is indexed by an insertion-count tuple.
    """
    n_v = ansatz.n_params
    d = 1 << ansatz.n_qubits
    blocks = [block_matrix(ansatz, k, params.values[k]) for k in range(n_v)]
    gens = [block_generator_matrix(ansatz, k) for k in range(n_v)]
    prefix = np.eye(d, dtype=complex)
    for g in ansatz.fixed_prefix:
        from .ansatz import embed_gate_matrix

        prefix = embed_gate_matrix(g, ansatz.n_qubits) @ prefix

    def term_matrix(counts: tuple[int, ...]) -> np.ndarray:
        out = prefix
        for k in range(n_v):
            out = blocks[k] @ np.linalg.matrix_power(gens[k], counts[k]) @ out
        return out

    terms: dict[tuple[int, ...], float] = {tuple([0] * n_v): 1.0}
    derivatives = []
    for _ in range(max_order):
        new_terms: dict[tuple[int, ...], float] = {}
        for counts, coef in terms.items():
            for k in range(n_v):
                if lam_dot[k] == 0.0:
                    continue
                nc = list(counts)
                nc[k] += 1
                key = tuple(nc)
                new_terms[key] = new_terms.get(key, 0.0) + coef * lam_dot[k]
        terms = new_terms
        acc = np.zeros((d, d), dtype=complex)
        for counts, coef in terms.items():
            acc += coef * term_matrix(counts)
        derivatives.append(acc)
    return derivatives


def delta3_bound(
    h: Hamiltonian,
    ansatz: Ansatz,
    params: ParameterVector,
    lam_dot: np.ndarray,
) -> float:
    """Coefficient of the delta t^3 term in the per-step fidelity expansion,
    combining spectral norms of H powers and circuit time derivatives."""
    hm = h.matrix(params.time)
    nh1 = _spectral_norm(hm)
    nh2 = _spectral_norm(hm @ hm)
    nh3 = _spectral_norm(hm @ hm @ hm)
    d1, d2, d3 = time_derivative_operators(ansatz, params, np.asarray(lam_dot, float), 3)
    nr1 = _spectral_norm(d1)
    nr2 = _spectral_norm(d2)
    nr3 = _spectral_norm(d3)
    return (
        nh1 * nh2
        + nh3 / 3.0
        + nr1 * nr2
        + nr3 / 3.0
        + nh1 * (nr1 ** 2 + nr2)
        + (nh1 ** 2 + nh2) * nr1
    )


def a_matrix(ansatz: Ansatz, params: ParameterVector) -> np.ndarray:
    """Sensitivity of the step distance to lam_dot errors:
    A_{k,q} = <d_q Psi|d_k Psi> - <d_q Psi|Psi><Psi|d_k Psi> (Hermitian,
    positive semi-definite)."""
    psi = ansatz.trial_state(params).amplitudes
    grads = [g.amplitudes for g in ansatz.gradient_states(params)]
    n_v = len(grads)
    a = np.empty((n_v, n_v), dtype=complex)
    for k in range(n_v):
        for q in range(n_v):
            a[k, q] = np.vdot(grads[q], grads[k]) - np.vdot(grads[q], psi) * np.vdot(
                psi, grads[k]
            )
    return a


def shot_noise_constants(ansatz: Ansatz, h: Hamiltonian, t: float = 0.0) -> tuple[float, float]:
    """(Theta_M, Theta_V): prefactor sums bounding the shot-noise response
    of M and V entries."""
    n_v = ansatz.n_params
    h_coeffs = h.coefficients(t)
    theta_m_sq = 0.0
    for k in range(n_v):
        for q in range(n_v):
            s = 0.0
            for f_ki, _ in ansatz.blocks[k].derivative:
                for f_qj, _ in ansatz.blocks[q].derivative:
                    s += abs(1j * np.conj(f_ki) * f_qj)
            theta_m_sq += s * s
    theta_v_sq = 0.0
    for k in range(n_v):
        s = 0.0
        for f_ki, _ in ansatz.blocks[k].derivative:
            for hj in h_coeffs:
                s += abs(np.conj(f_ki) * hj)
        theta_v_sq += s * s
    return 2.0 * float(np.sqrt(theta_m_sq)), 2.0 * float(np.sqrt(theta_v_sq))


@dataclass(frozen=True)
class ErrorBudget:
    """Accumulated bound terms and the realized final distance."""

    initial_distance: float
    delta2_max: float
    delta3_max: float
    a_norm_max: float
    delta_lam_dot_max: float
    final_prep_distance: float
    d_algorithm: float
    d_implementation: float
    realized_distance: float
    theta_m: float
    theta_v: float
    shot_noise_delta: float

    @property
    def total_bound(self) -> float:
        return self.d_algorithm + self.d_implementation

    def to_dict(self) -> dict:
        return {
            "initial_distance": self.initial_distance,
            "delta2_max": self.delta2_max,
            "delta3_max": self.delta3_max,
            "a_norm_max": self.a_norm_max,
            "delta_lam_dot_max": self.delta_lam_dot_max,
            "final_prep_distance": self.final_prep_distance,
            "d_algorithm": self.d_algorithm,
            "d_implementation": self.d_implementation,
            "total_bound": self.total_bound,
            "realized_distance": self.realized_distance,
            "theta_m": self.theta_m,
            "theta_v": self.theta_v,
            "shot_noise_delta": self.shot_noise_delta,
        }


def error_budget(
    record,
    system,
    eta: complex = 1.0 + 0.0j,
    svd_cutoff: float = 1e-8,
    noise=None,
    max_evaluations: int = 50,
    oracle_initial: PureState | None = None,
) -> ErrorBudget:
    """Evaluate the accumulated bound D(Phi_N, rho_N) <= D_A + D_I along a
    recorded trajectory.

    Per sampled step the exact-mode (M0, V0) are recomputed to get the true
    lam_dot and the step quantities; maxima feed the bound terms

        D_A <= D(Phi_0, Psi_0) + sqrt(max Delta2) T + sqrt(max Delta3 dt) T
        D_I <= sqrt(max ||A||) max ||dlam_dot|| T + D(Psi_N, rho_N).

    The realized final distance is returned alongside for comparison; in
    stochastic runs the discarded higher-order terms mean the bound is
    reported, not asserted.
    """
    from .circuits import run_preparation_density
    from .estimator import ExactMode, MVEstimator
    from .hamiltonians import exact_trajectory
    from .integrator import solve_lambda_dot

    ansatz, h = system.ansatz, system.hamiltonian
    n_rec = len(record.lam_dot)
    if n_rec == 0:
        raise ValueError("trajectory has no recorded steps")
    stride = max(1, n_rec // max_evaluations)
    idxs = list(range(0, n_rec, stride))
    est = MVEstimator(ansatz, h, eta, ExactMode())
    d2max = d3max = anorm = dlam = 0.0
    minv_norm_max = v_norm_max = 0.0
    for s in idxs:
        params = ParameterVector(record.params[s], record.times[s])
        m0, v0 = est.evaluate(params)
        ld0 = solve_lambda_dot(m0, v0, svd_cutoff)
        dlam = max(dlam, float(np.linalg.norm(record.lam_dot[s] - ld0)))
        d2max = max(d2max, delta2(ansatz, params, ld0, h))
        d3max = max(d3max, delta3_bound(h, ansatz, params, ld0))
        anorm = max(anorm, _spectral_norm(a_matrix(ansatz, params)))
        sv = np.linalg.svd(m0, compute_uv=False)
        kept = sv[sv > svd_cutoff * sv.max()] if sv.max() > 0 else sv[:0]
        if kept.size:
            minv_norm_max = max(minv_norm_max, 1.0 / kept.min())
        v_norm_max = max(v_norm_max, float(np.linalg.norm(v0)))
    t0, t_end = record.times[0], record.times[-1]
    horizon = t_end - t0
    dt = record.times[1] - record.times[0] if len(record.times) > 1 else 0.0
    phi0 = ansatz.reference_state() if oracle_initial is None else oracle_initial
    phi_ends = exact_trajectory(h, phi0, [t0, t_end])
    trial0 = ansatz.trial_state(ParameterVector(record.params[0], t0))
    trial_end = ansatz.trial_state(ParameterVector(record.params[-1], t_end))
    d_init = trace_distance(phi_ends[0], trial0)
    if noise is not None:
        rho_end = run_preparation_density(
            ansatz.n_qubits,
            ansatz.bound_gates(ParameterVector(record.params[-1], t_end)),
            noise,
        )
        d_prep = trace_distance(trial_end, rho_end)
        realized = trace_distance(phi_ends[1], rho_end)
    else:
        d_prep = 0.0
        realized = trace_distance(phi_ends[1], trial_end)
    d_a = d_init + np.sqrt(d2max) * horizon + np.sqrt(d3max * dt) * horizon
    d_i = np.sqrt(anorm) * dlam * horizon + d_prep
    theta_m, theta_v = shot_noise_constants(ansatz, h, t0)
    delta = minv_norm_max ** 2 * v_norm_max * theta_m + minv_norm_max * theta_v
    return ErrorBudget(
        initial_distance=float(d_init),
        delta2_max=float(d2max),
        delta3_max=float(d3max),
        a_norm_max=float(anorm),
        delta_lam_dot_max=float(dlam),
        final_prep_distance=float(d_prep),
        d_algorithm=float(d_a),
        d_implementation=float(d_i),
        realized_distance=float(realized),
        theta_m=float(theta_m),
        theta_v=float(theta_v),
        shot_noise_delta=float(delta),
    )


def cost_estimate(n_v: int, n_d: int, n_h: int, n_r_gates: int, k_weight: int, n_steps: int, n_repetitions: int) -> tuple[int, int, int]:
    """(N_c, N_g, total gate count): distinct circuits per step, worst-case
    gates per circuit, and the overall gate count of the full run."""
    if min(n_v, n_d, n_h, n_r_gates, k_weight, n_steps, n_repetitions) < 1:
        raise ValueError("all counts must be >= 1")
    n_c = n_v * n_v * n_d * n_d + n_v * n_d * n_h
    n_g = n_v * n_r_gates + 2 * (k_weight + 1)
    return n_c, n_g, n_steps * n_c * n_g * n_repetitions
