"""Trotterised time evolution (plain and lowest-order symmetric) compiled to
the machine gate set, and the step-size scan minimising the average distance
to the exact state."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import NoiseModel
from .circuits import initial_density, apply_gate_with_noise
from .gates import GateInstance
from .hamiltonians import Hamiltonian, exact_trajectory
from .paulis import PauliString
from .states import DensityOperator, PureState, trace_distance


@dataclass(frozen=True)
class TrotterConfig:
    """dt: slice length; groups: ordered term-index groups H_1, H_2, ...;
    symmetric: lowest-order symmetric splitting (forward then reversed
    half-slices, twice the gates per slice)."""

    dt: float
    groups: tuple[tuple[int, ...], ...]
    symmetric: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "groups", tuple(tuple(g) for g in self.groups))


def compile_term_gate(word: PauliString, coef: float, tau: float) -> GateInstance:
    """Gate realising exp(-i coef tau word) for the supported word shapes
    (single-site X, single-site Z, two-site ZZ)."""
    support = word.support
    labels = [word.labels[q] for q in support]
    angle = -coef * tau
    if labels == ["X"]:
        return GateInstance("flip_rot", (support[0],), angle=angle)
    if labels == ["Z"]:
        return GateInstance("phase_rot", (support[0],), angle=angle)
    if labels == ["Z", "Z"]:
        return GateInstance("zz_rot", tuple(support), angle=angle)
    if labels == ["Y"]:
        # exp(i theta Y) = PhaseRot(pi/4) then FlipRot(theta) then PhaseRot(-pi/4)
        raise ValueError("single-qubit Y exponentials need a compiled block; unsupported here")
    raise ValueError(f"no gate compilation for word {word.labels}")


def _slice_gates(h: Hamiltonian, cfg: TrotterConfig, tau: float, t_eval: float) -> list[GateInstance]:
    coeffs = h.coefficients(t_eval)
    ordered = list(cfg.groups)
    gates: list[GateInstance] = []
    if cfg.symmetric:
        seq = [(g, tau / 2.0) for g in ordered] + [(g, tau / 2.0) for g in reversed(ordered)]
    else:
        seq = [(g, tau) for g in ordered]
    for group, step_tau in seq:
        for idx in group:
            coef = coeffs[idx]
            word = h.terms[idx][1]
            gates.append(compile_term_gate(word, coef, step_tau))
    return gates


def trotter_slice_counts(t: float, dt: float) -> tuple[int, float]:
    """N_t = ceil(t / dt) full slices with the last shortened to land on t."""
    if t <= 0:
        return 0, 0.0
    n_t = max(1, math.ceil(t / dt - 1e-9))
    tau_last = t - (n_t - 1) * dt
    return n_t, tau_last


def trotter_evolve(
    h: Hamiltonian,
    initial: PureState | list[GateInstance],
    t: float,
    cfg: TrotterConfig,
    noise: NoiseModel | None = None,
) -> DensityOperator:
    """State after the (noisy) Trotter circuit for evolution time t.

    ``initial`` is either a state (used as given, preparation assumed
    perfect) or a preparation gate list executed with the same per-gate
    noise as the slices.
    """
    if h.is_time_dependent:
        raise ValueError("Trotter compilation here assumes a time-independent H")
    n = h.n_qubits
    if isinstance(initial, PureState):
        rho = initial.to_density().matrix
    else:
        rho = initial_density(n, noise)
        for g in initial:
            rho = apply_gate_with_noise(rho, g, noise, n)
    n_t, tau_last = trotter_slice_counts(t, cfg.dt)
    for s in range(n_t):
        tau = cfg.dt if s < n_t - 1 else tau_last
        for g in _slice_gates(h, cfg, tau, 0.0):
            rho = apply_gate_with_noise(rho, g, noise, n)
    return DensityOperator(n, rho)


def trotter_distance_curve(
    h: Hamiltonian,
    initial: PureState | list[GateInstance],
    times: np.ndarray,
    cfg: TrotterConfig,
    noise: NoiseModel | None = None,
    oracle_initial: PureState | None = None,
) -> np.ndarray:
    """D(|Phi(t)>, rho(t)) on a time grid; each grid time is its own Trotter
    run (N_t and the last slice depend on t), sharing the full-slice chain.
    """
    n = h.n_qubits
    times = np.asarray(times, dtype=float)
    if oracle_initial is None:
        if not isinstance(initial, PureState):
            raise ValueError("oracle_initial required when preparing by gates")
        oracle_initial = initial
    oracle = exact_trajectory(h, oracle_initial, list(times))
    if isinstance(initial, PureState):
        rho0 = initial.to_density().matrix
    else:
        rho0 = initial_density(n, noise)
        for g in initial:
            rho0 = apply_gate_with_noise(rho0, g, noise, n)
    order = np.argsort(times)
    out = np.empty(len(times))
    chain_rho = rho0  # state after m full slices
    chain_m = 0
    for pos in order:
        t = float(times[pos])
        n_t, tau_last = trotter_slice_counts(t, cfg.dt)
        full = max(0, n_t - 1)
        while chain_m < full:
            for g in _slice_gates(h, cfg, cfg.dt, 0.0):
                chain_rho = apply_gate_with_noise(chain_rho, g, noise, n)
            chain_m += 1
        rho = chain_rho
        if n_t > 0:
            for g in _slice_gates(h, cfg, tau_last, 0.0):
                rho = apply_gate_with_noise(rho, g, noise, n)
        out[pos] = trace_distance(oracle[pos], DensityOperator(n, rho))
    return out


@dataclass
class ScanResult:
    dt_values: np.ndarray
    average_distances: np.ndarray

    @property
    def optimal_dt(self) -> float:
        return float(self.dt_values[int(np.argmin(self.average_distances))])


def scan_trotter_dt(
    h: Hamiltonian,
    initial: PureState | list[GateInstance],
    total_time: float,
    dt_values: np.ndarray,
    groups: tuple[tuple[int, ...], ...],
    noise: NoiseModel | None = None,
    symmetric: bool = False,
    n_average: int = 200,
    oracle_initial: PureState | None = None,
) -> ScanResult:
    """Average trace distance (uniform grid approximation of
    T^-1 int_0^T D dt) for each candidate slice length; the argmin is the
    scan's optimum."""
    dt_values = np.asarray(dt_values, dtype=float)
    if dt_values.size == 0:
        raise ValueError("empty dt grid")
    times = np.linspace(0.0, total_time, n_average + 1)[1:]
    avgs = np.empty(len(dt_values))
    for i, dt in enumerate(dt_values):
        cfg = TrotterConfig(dt=float(dt), groups=groups, symmetric=symmetric)
        dists = trotter_distance_curve(h, initial, times, cfg, noise, oracle_initial)
        avgs[i] = float(np.mean(dists))
    return ScanResult(dt_values=dt_values, average_distances=avgs)


def default_scan_grid() -> np.ndarray:
    """Logarithmic grid 2*pi*10^-2.2 ... 2*pi*10^-0.6, 17 points."""
    return 2 * np.pi * np.power(10.0, np.linspace(-2.2, -0.6, 17))
