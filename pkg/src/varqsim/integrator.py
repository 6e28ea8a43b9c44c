"""Time stepping of the variational equation M lam_dot = V.

Each step asks the estimator for (M, V) at the current parameters, solves
the linear system by truncated SVD, and advances with Euler or classic
fourth-order Runge-Kutta (all four stage evaluations re-run the full task
set; with mitigation on, every stage is extrapolated).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import ParameterVector
from .circuits import run_preparation_density
from .estimator import ETA_TDVP, ExactMode, MVEstimator, NoisyExactMode, NoisyShotsMode
from .hamiltonians import exact_trajectory
from .states import DensityOperator, PureState, expectation, expectation_pure, trace_distance
from .systems import System


class DegenerateSystemError(RuntimeError):
    """Raised when every singular value of M falls below the cutoff."""

    def __init__(self, m: np.ndarray, v: np.ndarray, singular_values: np.ndarray, cutoff: float):
        self.m = m
        self.v = v
        self.singular_values = singular_values
        self.cutoff = cutoff
        super().__init__(
            f"variational matrix is degenerate: singular values {singular_values} "
            f"all below relative cutoff {cutoff}"
        )


def solve_lambda_dot(m: np.ndarray, v: np.ndarray, cutoff: float = 1e-8) -> np.ndarray:
    """Minimum-norm least-squares solution of M lam_dot = V via SVD with a
    relative singular-value cutoff."""
    m = np.asarray(m, dtype=float)
    v = np.asarray(v, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("M must be square")
    if v.shape != (m.shape[0],):
        raise ValueError("V must conform with M")
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    u, s, vt = np.linalg.svd(m)
    smax = s.max() if s.size else 0.0
    keep = s > cutoff * smax if smax > 0 else np.zeros_like(s, dtype=bool)
    if not keep.any():
        raise DegenerateSystemError(m, v, s, cutoff)
    sinv = np.where(keep, 1.0 / np.where(s == 0.0, 1.0, s), 0.0)
    return vt.T @ (sinv * (u.T @ v))


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    dt: float = 2 * np.pi * 1e-3
    total_time: float = 4 * np.pi
    eta: complex = ETA_TDVP
    svd_cutoff: float = 1e-8
    n_checkpoints: int = 200
    t_start: float = 0.0

    def __post_init__(self):
        if self.method not in ("euler", "rk4"):
            raise ValueError("method must be 'euler' or 'rk4'")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.dt > self.total_time - self.t_start and self.total_time > self.t_start:
            raise ValueError("dt must not exceed the integration window")
        n = (self.total_time - self.t_start) / self.dt
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError("window must be an integer number of steps")

    @property
    def n_steps(self) -> int:
        return int(round((self.total_time - self.t_start) / self.dt))


@dataclass
class Checkpoint:
    t: float
    params: np.ndarray
    trial_state: PureState
    trace_distance_exact: float | None = None
    noisy_distance: float | None = None
    stabilizers: np.ndarray | None = None
    delta2: float | None = None
    degenerate: bool = False


@dataclass
class TrajectoryRecord:
    times: list[float] = field(default_factory=list)
    params: list[np.ndarray] = field(default_factory=list)
    lam_dot: list[np.ndarray] = field(default_factory=list)
    m_matrices: list[np.ndarray] = field(default_factory=list)
    v_vectors: list[np.ndarray] = field(default_factory=list)
    singular_values: list[np.ndarray] = field(default_factory=list)
    checkpoints: list[Checkpoint] = field(default_factory=list)

    def params_at_end(self) -> np.ndarray:
        return self.params[-1]


def run_simulation(
    system: System,
    config: IntegratorConfig,
    estimator: MVEstimator,
    initial_params: np.ndarray | None = None,
    rng_for_step=None,
    checkpoint_sink=None,
    oracle_initial: PureState | None = None,
    compare_noisy_preparation: bool = True,
) -> TrajectoryRecord:
    """Integrate from t_start to total_time recording the full trajectory.

    rng_for_step: callable (step_index, stage_index) -> np.random.Generator
    providing the per-stage shot-noise stream; checkpoint_sink: callable
    receiving each Checkpoint as soon as it is complete (crash-safe CSV
    streaming hooks in here).
    """
    lam = np.array(
        system.initial_params if initial_params is None else initial_params, dtype=float
    )
    ansatz = system.ansatz
    n_steps = config.n_steps
    record = TrajectoryRecord()

    check_stride = max(1, round(n_steps / max(1, config.n_checkpoints)))
    check_steps = set(range(0, n_steps + 1, check_stride))
    check_steps.add(n_steps)
    check_times = [config.t_start + s * config.dt for s in sorted(check_steps)]
    if oracle_initial is None:
        oracle_initial = ansatz.reference_state()
    oracle_states = dict(
        zip(
            sorted(check_steps),
            exact_trajectory(system.hamiltonian, oracle_initial, check_times),
        )
    )

    noise = getattr(estimator.mode, "noise", None)
    if rng_for_step is None:
        rng_for_step = lambda step, stage: None  # noqa: E731

    def rhs(lam_v: np.ndarray, t_v: float, step: int, stage: int):
        params = ParameterVector(lam_v, t_v)
        m, v = estimator.evaluate(params, rng_for_step(step, stage))
        lam_dot = solve_lambda_dot(m, v, config.svd_cutoff)
        return lam_dot, m, v

    t = config.t_start
    for step in range(n_steps + 1):
        lam_dot = m = v = None
        degenerate = False
        if step < n_steps or step in check_steps:
            try:
                lam_dot, m, v = rhs(lam, t, step, 0)
            except DegenerateSystemError:
                if step < n_steps:
                    raise
                degenerate = True  # diagnostics-only evaluation at t = T
        if step in check_steps:
            cp = _make_checkpoint(
                system, lam, t, oracle_states[step], noise,
                compare_noisy_preparation, lam_dot,
            )
            cp.degenerate = degenerate
            record.checkpoints.append(cp)
            if checkpoint_sink is not None:
                checkpoint_sink(cp)
        if step == n_steps:
            break
        if config.method == "euler":
            new_lam = lam + config.dt * lam_dot
        else:
            dt = config.dt
            k1 = lam_dot
            k2, _, _ = rhs(lam + dt / 2 * k1, t + dt / 2, step, 1)
            k3, _, _ = rhs(lam + dt / 2 * k2, t + dt / 2, step, 2)
            k4, _, _ = rhs(lam + dt * k3, t + dt, step, 3)
            new_lam = lam + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        record.times.append(t)
        record.params.append(lam.copy())
        record.lam_dot.append(lam_dot)
        record.m_matrices.append(m)
        record.v_vectors.append(v)
        record.singular_values.append(np.linalg.svd(m, compute_uv=False))
        lam = new_lam
        t = config.t_start + (step + 1) * config.dt
    record.times.append(t)
    record.params.append(lam.copy())
    return record


def _make_checkpoint(
    system: System,
    lam: np.ndarray,
    t: float,
    oracle_state: PureState,
    noise,
    compare_noisy_preparation: bool,
    lam_dot: np.ndarray | None = None,
) -> Checkpoint:
    from .diagnostics import delta2

    params = ParameterVector(lam, t)
    trial = system.ansatz.trial_state(params)
    d2 = None
    if lam_dot is not None:
        d2 = delta2(system.ansatz, params, lam_dot, system.hamiltonian)
    if noise is not None and compare_noisy_preparation:
        rho = run_preparation_density(
            system.ansatz.n_qubits, system.ansatz.bound_gates(params), noise
        )
        dist = trace_distance(oracle_state, rho)
        stab = (
            np.array([expectation(s, rho) for s in system.stabilizers])
            if system.stabilizers
            else None
        )
        noisy_dist = trace_distance(trial, rho)
    else:
        dist = trace_distance(oracle_state, trial)
        stab = (
            np.array([expectation_pure(s, trial) for s in system.stabilizers])
            if system.stabilizers
            else None
        )
        noisy_dist = None
    return Checkpoint(
        t=t,
        params=lam.copy(),
        trial_state=trial,
        trace_distance_exact=dist,
        noisy_distance=noisy_dist,
        stabilizers=stab,
        delta2=d2,
    )
