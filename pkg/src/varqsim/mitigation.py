"""Active error mitigation: measurement-bias inversion, Pauli twirling of
controlled-phase gates, noise boosting, and zero-noise extrapolation."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .channels import NoiseChannel, NoiseModel
from .circuits import Circuit
from .gates import GateInstance
from .paulis import PAULI_LABELS, PauliString, two_qubit_pauli_basis


@dataclass(frozen=True)
class MitigationConfig:
    """Boost-and-extrapolate settings applied to every <X> estimate."""

    r_values: tuple[float, ...] = (1.0, 2.0)
    order: int = 1
    weighted: bool = True

    def __post_init__(self):
        object.__setattr__(self, "r_values", tuple(float(r) for r in self.r_values))
        if len(set(self.r_values)) < self.order + 1:
            raise ValueError("need order + 1 distinct boost factors")
        if any(r < 1.0 for r in self.r_values):
            raise ValueError("boost factors must be >= 1")


def boost_noise(nm: NoiseModel, r: float) -> NoiseModel:
    """Scale all stochastic error probabilities from eps towards r*eps.

    Implemented by composing the extra (r-1)-weighted error mixture with
    the base channel, so the effective probabilities carry their exact
    O(eps^2) composition terms.
    """
    if r < 1.0:
        raise ValueError("boost factor must be >= 1")
    return replace(nm, boost=r)


def correct_measurement_bias(x: float, p0: float, p1: float) -> float:
    """Invert the affine readout map <X> = (p1-p0) + (1-p0-p1) <X>^(0)."""
    if p0 + p1 >= 1.0:
        raise ValueError("p0 + p1 >= 1 makes the readout map non-invertible")
    return (x - (p1 - p0)) / (1.0 - p0 - p1)


def extrapolate_zero_noise(
    points: list[tuple[float, float, float | None]],
    order: int = 1,
) -> tuple[float, float | None]:
    """Weighted least-squares polynomial fit in the boost factor r; returns
    the r -> 0 intercept and its propagated uncertainty.

    Points are (r, value, stderr).  Known stderrs give a 1/stderr^2
    weighted fit with the covariance propagated from them; without stderrs
    the fit is unweighted and the uncertainty comes from the residual
    variance when there are spare degrees of freedom.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    rs = np.array([p[0] for p in points], dtype=float)
    xs = np.array([p[1] for p in points], dtype=float)
    errs = [p[2] for p in points]
    if len(np.unique(rs)) < order + 1:
        raise ValueError("need order + 1 distinct boost factors")
    design = np.vander(rs, order + 1, increasing=True)  # columns 1, r, r^2, ...
    have_errs = all(e is not None and e > 0 for e in errs)
    if have_errs:
        sig = np.array([float(e) for e in errs])
        w = 1.0 / sig
        a = design * w[:, None]
        b = xs * w
    else:
        a = design
        b = xs
    coeffs, residuals, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    x0 = float(coeffs[0])
    ata_inv = np.linalg.pinv(a.T @ a)
    if have_errs:
        var = float(ata_inv[0, 0])
        return x0, float(np.sqrt(var))
    dof = len(rs) - (order + 1)
    if dof > 0:
        resid = xs - design @ coeffs
        s2 = float(resid @ resid) / dof
        return x0, float(np.sqrt(s2 * ata_inv[0, 0]))
    return x0, None


def mitigate_values(
    values_by_r: dict[float, np.ndarray],
    stderr_by_r: dict[float, np.ndarray] | None,
    config: MitigationConfig,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Extrapolate every task estimate to r = 0; vectorised fit shared by
    integrator stages."""
    rs = sorted(values_by_r)
    n_tasks = len(values_by_r[rs[0]])
    out = np.empty(n_tasks)
    out_err = np.empty(n_tasks) if stderr_by_r is not None else None
    for idx in range(n_tasks):
        pts = []
        for r in rs:
            se = None
            if stderr_by_r is not None and config.weighted:
                se = float(stderr_by_r[r][idx])
                se = max(se, 1e-12)
            pts.append((r, float(values_by_r[r][idx]), se))
        x0, se0 = extrapolate_zero_noise(pts, order=config.order)
        out[idx] = x0
        if out_err is not None:
            out_err[idx] = se0 if se0 is not None else 0.0
    return out, out_err


def fit_report(
    quantity: str,
    points: list[tuple[float, float, float | None]],
    order: int,
) -> dict:
    """JSON-ready record of one extrapolation fit."""
    x0, se = extrapolate_zero_noise(points, order=order)
    rs = np.array([p[0] for p in points])
    xs = np.array([p[1] for p in points])
    design = np.vander(rs, order + 1, increasing=True)
    coeffs, *_ = np.linalg.lstsq(design, xs, rcond=None)
    resid = xs - design @ coeffs
    return {
        "quantity": quantity,
        "r_values": rs.tolist(),
        "estimates": xs.tolist(),
        "stderrs": [p[2] for p in points],
        "fit_order": order,
        "fit_coefficients": coeffs.tolist(),
        "intercept": x0,
        "intercept_stderr": se,
        "residuals": resid.tolist(),
    }


def write_fit_reports(path, reports: list[dict]) -> None:
    with open(path, "w") as fh:
        json.dump(reports, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Pauli twirling of the controlled-phase gate
# ---------------------------------------------------------------------------

def cz_conjugation_map(a: int, b: int) -> tuple[int, int]:
    """Indices (c, d) with sigma_c (x) sigma_d = CZ (sigma_a (x) sigma_b) CZ
    up to phase; labels indexed 0..3 = I, X, Y, Z."""
    if a not in range(4) or b not in range(4):
        raise ValueError("Pauli indices must be in 0..3")
    c = a + b * (3 - b) * (3 - 2 * a) // 2
    d = b + a * (3 - a) * (3 - 2 * b) // 2
    return c, d


@dataclass(frozen=True)
class PauliTransferRecord:
    """Pauli-basis transfer matrix of a two-qubit channel with the twirled
    fidelity and per-Pauli error probabilities (index 4*a + b)."""

    transfer: np.ndarray
    fidelity: float
    error_probabilities: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.transfer, dtype=float)
        e = np.asarray(self.error_probabilities, dtype=float)
        if t.shape != (16, 16) or e.shape != (4, 4):
            raise ValueError("transfer must be 16x16, probabilities 4x4")
        total = self.fidelity + e.sum() - e[0, 0]
        if abs(total - 1.0) > 1e-12:
            raise ValueError("fidelity and error probabilities must sum to 1")
        object.__setattr__(self, "transfer", t)
        object.__setattr__(self, "error_probabilities", e)


def pauli_transfer_matrix(ch: NoiseChannel) -> np.ndarray:
    """T[m, l] = Tr(P_m N(P_l)) / 4 for a two-qubit channel (index 4a + b,
    first index on the first target)."""
    if ch.n_targets != 2:
        raise ValueError("transfer matrix implemented for two-qubit channels")
    basis = two_qubit_pauli_basis()
    kraus = ch.kraus_operators()
    t = np.zeros((16, 16))
    for l, pl in enumerate(basis):
        acc = np.zeros((4, 4), dtype=complex)
        for e in kraus:
            acc += e @ pl @ e.conj().T
        for m, pm in enumerate(basis):
            t[m, l] = float(np.real(np.trace(pm @ acc)) / 4.0)
    return t


def twirl_channel(raw: NoiseChannel) -> tuple[NoiseChannel, PauliTransferRecord]:
    """Average a two-qubit noise channel over Pauli-pair conjugations.

    The result is the stochastic channel with probabilities
    eps_{a,b} = sum_h |alpha_{h;a,b}|^2 read from the Pauli expansion of the
    Kraus operators; its transfer matrix is diagonal.
    """
    if raw.n_targets != 2:
        raise ValueError("twirling implemented for two-qubit channels")
    basis = two_qubit_pauli_basis()
    probs = np.zeros(16)
    for e in raw.kraus_operators():
        alphas = np.array([np.trace(p.conj().T @ e) / 4.0 for p in basis])
        probs += np.abs(alphas) ** 2
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    terms = []
    for a in range(4):
        for b in range(4):
            terms.append((float(probs[4 * a + b]), PAULI_LABELS[a] + PAULI_LABELS[b]))
    twirled = NoiseChannel(raw.targets, pauli_terms=tuple(terms))
    record = PauliTransferRecord(
        transfer=pauli_transfer_matrix(twirled),
        fidelity=float(probs[0]),
        error_probabilities=probs.reshape(4, 4).copy(),
    )
    return twirled, record


def twirl_wrap_with(circ: Circuit, assignments: list[tuple[int, int]], noisy_wraps: bool = False) -> Circuit:
    """Wrap each controlled-phase gate with the given Pauli pair before and
    its CZ-conjugated pair after; one (a, b) assignment per CZ in order."""
    it = iter(assignments)
    ops: list = []
    for op in circ.ops:
        if isinstance(op, GateInstance) and op.kind == "cz":
            try:
                a, b = next(it)
            except StopIteration:
                raise ValueError("one (a, b) assignment needed per controlled-phase gate") from None
            c, d = cz_conjugation_map(a, b)
            qc, qt = op.targets
            ops.extend(_wrap_gates(qc, qt, a, b, noisy_wraps))
            ops.append(op)
            ops.extend(_wrap_gates(qc, qt, c, d, noisy_wraps))
        else:
            ops.append(op)
    if sum(1 for _ in it):
        raise ValueError("more assignments than controlled-phase gates")
    return circ.with_ops(ops)


_WRAP_KINDS = ("i", "x", "y", "z")


def _wrap_gates(qc: int, qt: int, a: int, b: int, noisy: bool) -> list[GateInstance]:
    # identity choices still count as applied gates (+4 per wrapped CZ)
    return [
        GateInstance(_WRAP_KINDS[a], (qc,), noisy=noisy),
        GateInstance(_WRAP_KINDS[b], (qt,), noisy=noisy),
    ]


def randomized_twirl_wrap(circ: Circuit, rng: np.random.Generator, noisy_wraps: bool = False) -> Circuit:
    """Uniformly random Pauli-pair wrap for every controlled-phase gate."""
    n_cz = sum(1 for op in circ.ops if isinstance(op, GateInstance) and op.kind == "cz")
    assignments = [tuple(rng.integers(0, 4, size=2)) for _ in range(n_cz)]
    return twirl_wrap_with(circ, assignments, noisy_wraps=noisy_wraps)
