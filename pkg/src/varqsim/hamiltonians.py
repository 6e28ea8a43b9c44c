"""Hamiltonians as weighted Pauli sums, optionally time dependent, plus the
exact-evolution reference used by all distance metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .paulis import PauliString
from .states import PureState

Coefficient = float | Callable[[float], float]


@dataclass(frozen=True)
class Hamiltonian:
    """H(t) = sum_i h_i(t) * sigma_i with unit-coefficient Pauli words."""

    n_qubits: int
    terms: tuple[tuple[Coefficient, PauliString], ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for _, word in self.terms:
            if word.n_qubits != self.n_qubits:
                raise ValueError("term word length must match n_qubits")
            if abs(abs(word.coefficient) - 1.0) > 1e-12:
                raise ValueError("term words must be unitary (unit coefficient)")
            if abs(word.coefficient.imag) > 1e-12:
                raise ValueError("term words must be Hermitian for a real-weighted sum")

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def is_time_dependent(self) -> bool:
        return any(callable(h) for h, _ in self.terms)

    def coefficients(self, t: float = 0.0) -> np.ndarray:
        return np.array([h(t) if callable(h) else h for h, _ in self.terms], dtype=float)

    def matrix(self, t: float = 0.0) -> np.ndarray:
        d = 1 << self.n_qubits
        out = np.zeros((d, d), dtype=complex)
        for h, (_, word) in zip(self.coefficients(t), self.terms):
            out += h * word.matrix()
        return out

    def max_pauli_weight(self) -> int:
        return max(word.weight for _, word in self.terms)


def exact_evolution(h: Hamiltonian, initial: PureState, t: float) -> PureState:
    """|Phi(t)> = T exp(-i int H dt') |Phi(0)>, the reference true state."""
    return exact_trajectory(h, initial, [t])[0]


def exact_trajectory(h: Hamiltonian, initial: PureState, times: Sequence[float]) -> list[PureState]:
    """True states at the requested (sorted or unsorted, >= 0) times.

    Time-independent H uses the eigen-decomposition propagator; a
    time-dependent H is integrated with fixed-step RK4 at internal step
    2*pi*1e-5, well below 1e-8 error at benchmark sizes.
    """
    times = list(times)
    if any(tv < 0 for tv in times):
        raise ValueError("times must be >= 0")
    if not h.is_time_dependent:
        w, v = np.linalg.eigh(h.matrix(0.0))
        coeffs = v.conj().T @ initial.amplitudes
        return [
            PureState(h.n_qubits, v @ (np.exp(-1j * w * tv) * coeffs)) for tv in times
        ]
    order = np.argsort(times)
    out: list[PureState | None] = [None] * len(times)
    step = 2 * np.pi * 1e-5
    psi = initial.amplitudes.copy()
    t_cur = 0.0
    hm = h.matrix

    def rhs(tv: float, y: np.ndarray) -> np.ndarray:
        return -1j * (hm(tv) @ y)

    for idx in order:
        t_target = times[idx]
        while t_cur < t_target - 1e-15:
            dt = min(step, t_target - t_cur)
            k1 = rhs(t_cur, psi)
            k2 = rhs(t_cur + dt / 2, psi + dt / 2 * k1)
            k3 = rhs(t_cur + dt / 2, psi + dt / 2 * k2)
            k4 = rhs(t_cur + dt, psi + dt * k3)
            psi = psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t_cur += dt
        vec = psi / np.linalg.norm(psi)
        out[idx] = PureState(h.n_qubits, vec)
    return out  # type: ignore[return-value]
