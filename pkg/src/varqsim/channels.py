"""Stochastic (Pauli-mixture) and general Kraus noise channels.

The machine model attaches a depolarizing channel after every gate:

    1-qubit: (1 - 4e/3) [I] + (e/3) sum_a [sigma_a]
    2-qubit: (1 - 16e/15) [I] + (e/15) sum_ab [sigma_a sigma_b]

which equals error probability e spread uniformly over the non-identity
Paulis.  Boosting by a factor r composes the base channel with an extra
mixture of weight (r - 1) e per error Pauli, so the effective probability
is r*e only to first order; the O(e^2) cross terms are kept exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .paulis import PAULI_LABELS, PauliString
from .states import DensityOperator, apply_matrix_dm

CPTP_ATOL = 1e-10
PROB_ATOL = 1e-12


@dataclass(frozen=True)
class NoiseChannel:
    """A CPTP map on explicit target qubits.

    Exactly one of ``pauli_terms`` (stochastic form: (probability, local
    Pauli word in target order)) or ``kraus`` (general form) is set.
    ``uniform_rate`` marks a uniform depolarizing mixture and enables a
    partial-trace fast path.
    """

    targets: tuple[int, ...]
    pauli_terms: tuple[tuple[float, str], ...] | None = None
    kraus: tuple[np.ndarray, ...] | None = None
    uniform_rate: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if (self.pauli_terms is None) == (self.kraus is None):
            raise ValueError("exactly one of pauli_terms / kraus required")
        if self.pauli_terms is not None:
            probs = np.array([p for p, _ in self.pauli_terms])
            if probs.min() < -PROB_ATOL or abs(probs.sum() - 1.0) > PROB_ATOL:
                raise ValueError("stochastic form requires probabilities summing to 1")
            for _, w in self.pauli_terms:
                if len(w) != len(self.targets):
                    raise ValueError("Pauli word length must match targets")
        else:
            d = 1 << len(self.targets)
            acc = np.zeros((d, d), dtype=complex)
            ks = []
            for e in self.kraus:
                e = np.asarray(e, dtype=complex)
                if e.shape != (d, d):
                    raise ValueError("Kraus operator shape mismatch")
                acc += e.conj().T @ e
                ks.append(e)
            if np.max(np.abs(acc - np.eye(d))) > CPTP_ATOL:
                raise ValueError("channel is not trace preserving (sum E^dag E != I)")
            object.__setattr__(self, "kraus", tuple(ks))

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    def kraus_operators(self) -> list[np.ndarray]:
        """Kraus form regardless of representation."""
        if self.kraus is not None:
            return [k.copy() for k in self.kraus]
        out = []
        for p, w in self.pauli_terms:
            if p <= 0:
                continue
            out.append(np.sqrt(p) * _local_word_matrix(w))
        return out

    def retarget(self, targets: tuple[int, ...]) -> "NoiseChannel":
        if len(targets) != self.n_targets:
            raise ValueError("arity mismatch")
        return replace(self, targets=tuple(targets))


def depolarizing_1q(eps: float, qubit: int) -> NoiseChannel:
    if not 0.0 <= eps <= 0.75:
        raise ValueError("single-qubit rate must lie in [0, 3/4]")
    terms = ((1.0 - eps, "I"), (eps / 3, "X"), (eps / 3, "Y"), (eps / 3, "Z"))
    return NoiseChannel((qubit,), pauli_terms=terms, uniform_rate=eps)


def depolarizing_2q(eps: float, q0: int, q1: int) -> NoiseChannel:
    if not 0.0 <= eps <= 15.0 / 16.0:
        raise ValueError("two-qubit rate must lie in [0, 15/16]")
    terms = []
    for a in PAULI_LABELS:
        for b in PAULI_LABELS:
            w = a + b
            terms.append(((1.0 - eps) if w == "II" else eps / 15, w))
    return NoiseChannel((q0, q1), pauli_terms=tuple(terms), uniform_rate=eps)


def pauli_mixture(targets: tuple[int, ...], weights: dict[str, float]) -> NoiseChannel:
    """Stochastic channel from {word-in-target-order: probability}."""
    terms = tuple(sorted(weights.items()))
    return NoiseChannel(targets, pauli_terms=tuple((p, w) for w, p in terms))


def compose_stochastic(first: NoiseChannel, second: NoiseChannel) -> NoiseChannel:
    """second applied after first; both stochastic on the same targets.

    Convolution over the Pauli group; phases drop out under conjugation.
    """
    if first.pauli_terms is None or second.pauli_terms is None:
        raise ValueError("composition requires stochastic form")
    if first.targets != second.targets:
        raise ValueError("target mismatch")
    acc: dict[str, float] = {}
    for p1, w1 in first.pauli_terms:
        for p2, w2 in second.pauli_terms:
            w = (PauliString(w2) * PauliString(w1)).labels
            acc[w] = acc.get(w, 0.0) + p1 * p2
    terms = tuple(sorted(acc.items()))
    ch = NoiseChannel(first.targets, pauli_terms=tuple((p, w) for w, p in terms))
    return _mark_if_uniform(ch)


def _mark_if_uniform(ch: NoiseChannel) -> NoiseChannel:
    weights = dict((w, p) for p, w in ch.pauli_terms)
    ident = "I" * ch.n_targets
    errs = [p for w, p in weights.items() if w != ident]
    n_err = (1 << (2 * ch.n_targets)) - 1
    if len(errs) == n_err and np.ptp(errs) < PROB_ATOL:
        return replace(ch, uniform_rate=sum(errs))
    return ch


_MIXED_EINSUM_CACHE: dict[tuple[int, tuple[int, ...]], str] = {}
_EYE_HALF = np.eye(2, dtype=complex) / 2


def _mixed_subscripts(n: int, targets: tuple[int, ...]) -> str:
    key = (n, targets)
    cached = _MIXED_EINSUM_CACHE.get(key)
    if cached is not None:
        return cached
    letters = [chr(ord("a") + i) for i in range(2 * n + 2 * len(targets))]
    it = iter(letters)
    ket = [next(it) for _ in range(n)]
    bra = [next(it) for _ in range(n)]
    target_axes = [n - 1 - q for q in targets]
    eye_subs = []
    out_ket, out_bra = list(ket), list(bra)
    for ax in target_axes:
        bra[ax] = ket[ax]  # trace this qubit out of rho
        fresh_k, fresh_b = next(it), next(it)
        eye_subs.append(fresh_k + fresh_b)
        out_ket[ax], out_bra[ax] = fresh_k, fresh_b
    sub = "".join(ket) + "".join(bra)
    spec = ",".join([sub] + eye_subs) + "->" + "".join(out_ket) + "".join(out_bra)
    _MIXED_EINSUM_CACHE[key] = spec
    return spec


def _partial_replace_mixed(rho: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """(I/2^m on targets) (x) Tr_targets(rho)."""
    t = rho.reshape((2,) * (2 * n))
    spec = _mixed_subscripts(n, targets)
    eyes = [_EYE_HALF] * len(targets)
    out = np.einsum(spec, t, *eyes)
    d = 1 << n
    return out.reshape(d, d)


def apply_channel(rho: DensityOperator, ch: NoiseChannel) -> DensityOperator:
    """rho -> sum_h E_h rho E_h^dagger."""
    n = rho.n_qubits
    if any(not 0 <= q < n for q in ch.targets):
        raise IndexError(f"channel targets {ch.targets} out of range")
    out = apply_channel_matrix(rho.matrix, ch, n)
    return DensityOperator(n, out)


def apply_channel_matrix(rho: np.ndarray, ch: NoiseChannel, n: int) -> np.ndarray:
    if ch.uniform_rate is not None:
        m = ch.n_targets
        w = ch.uniform_rate * (1 << (2 * m)) / ((1 << (2 * m)) - 1)
        if w == 0.0:
            return rho
        return (1.0 - w) * rho + w * _partial_replace_mixed(rho, ch.targets, n)
    if ch.pauli_terms is not None:
        out = np.zeros_like(rho)
        for p, wlabels in ch.pauli_terms:
            if p == 0.0:
                continue
            if wlabels == "I" * len(wlabels):
                out += p * rho
            else:
                mat = _local_word_matrix(wlabels)
                out += p * apply_matrix_dm(rho, mat, ch.targets, n)
        return out
    out = np.zeros_like(rho)
    for e in ch.kraus:
        out += apply_matrix_dm(rho, e, ch.targets, n)
    return out


def _local_word_matrix(labels: str) -> np.ndarray:
    """Big-endian matrix of a local word (labels[0] on the first target)."""
    from .paulis import pauli_matrix_1q

    m = np.eye(1, dtype=complex)
    for lab in labels:
        m = np.kron(m, pauli_matrix_1q(lab))
    return m


@dataclass(frozen=True)
class NoiseModel:
    """Machine error rates with an optional boost factor r >= 1.

    eps_init: probability a qubit initialises in |1> instead of |0>.
    p0, p1:   measurement flip probabilities for outcomes 0 / 1.
    eps1:     per-gate single-qubit depolarizing rate.
    eps2:     per-gate two-qubit depolarizing rate.
    boost:    error amplification factor r (1 = native noise).
    """

    eps_init: float = 0.0
    p0: float = 0.0
    p1: float = 0.0
    eps1: float = 0.0
    eps2: float = 0.0
    boost: float = 1.0

    def __post_init__(self):
        for name in ("eps_init", "p0", "p1", "eps1", "eps2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.boost < 1.0:
            raise ValueError("boost factor must be >= 1")
        for name in ("eps_init", "p0", "p1", "eps1", "eps2"):
            if self.boost * getattr(self, name) > 1.0:
                raise ValueError(f"boosted probability r*{name} exceeds 1")
        object.__setattr__(self, "_channel_cache", {})

    @staticmethod
    def from_two_qubit_rate(eps2: float, boost: float = 1.0) -> "NoiseModel":
        """Benchmark rate ladder: init, measurement and single-qubit errors
        are one tenth of the two-qubit gate rate."""
        e1 = eps2 / 10
        return NoiseModel(eps_init=e1, p0=e1, p1=e1, eps1=e1, eps2=eps2, boost=boost)

    @property
    def is_noiseless(self) -> bool:
        return max(self.eps_init, self.p0, self.p1, self.eps1, self.eps2) == 0.0

    def _boost_flip(self, p: float) -> float:
        extra = (self.boost - 1.0) * p
        return p + extra - 2.0 * p * extra

    @property
    def effective_eps_init(self) -> float:
        return self._boost_flip(self.eps_init)

    @property
    def effective_p0(self) -> float:
        return self._boost_flip(self.p0)

    @property
    def effective_p1(self) -> float:
        return self._boost_flip(self.p1)

    def gate_channel(self, targets: tuple[int, ...]) -> NoiseChannel | None:
        """Depolarizing channel attached after a gate on ``targets``
        (boost folded in by exact composition)."""
        targets = tuple(targets)
        cache = self._channel_cache
        if targets in cache:
            return cache[targets]
        if len(targets) == 1:
            ch = self._build_channel(self.eps1, depolarizing_1q, targets)
        elif len(targets) == 2:
            ch = self._build_channel(self.eps2, depolarizing_2q, targets)
        else:
            raise ValueError("gates act on one or two qubits")
        cache[targets] = ch
        return ch

    def _build_channel(self, eps: float, builder, targets: tuple[int, ...]) -> NoiseChannel | None:
        if eps == 0.0:
            return None
        base = builder(eps, *targets)
        if self.boost == 1.0:
            return base
        extra = builder((self.boost - 1.0) * eps, *targets)
        return compose_stochastic(base, extra)

    def measurement_map(self, x: float) -> float:
        """Affine readout error on a +/-1 expectation value."""
        p0, p1 = self.effective_p0, self.effective_p1
        return (p1 - p0) + (1.0 - p0 - p1) * x

    def init_density_1q(self) -> np.ndarray:
        e = self.effective_eps_init
        return np.array([[1.0 - e, 0.0], [0.0, e]], dtype=complex)
