from __future__ import annotations

from dataclasses import dataclass
import math
from pathlib import Path

import numpy as np

from .lyapunov import LyapunovSolution
from .model import SystemMatrices, build_system
from .smallmat import Matrix, as_matrix, inf_norm, is_positive_definite, is_symmetric
from .utils import (
    ConfigError,
    DivergenceError,
    DomainError,
    LogFn,
    ProgressFn,
    StepSizeError,
    noop_log,
    noop_progress,
    read_csv,
    write_csv,
)


DEFAULT_KAPPA = 1.0
DEFAULT_U_MAX = (0.1, 0.1, 0.1)  # N*m per axis
RESOLUTION_FACTOR = 0.01  # dt <= RESOLUTION_FACTOR / omega0
STIFFNESS_LIMIT = 1.0  # dt * kappa * |B^T P B|_inf, inside the RK4 real-axis limit of 2.78
TRAJECTORY_HEADER = ("t", "x1", "x2", "x3", "x4", "x5", "x6", "u1", "u2", "u3", "V")


@dataclass(slots=True, frozen=True)
class SaturatedFeedback:
    p: Matrix
    kappa: float = DEFAULT_KAPPA
    u_max: tuple[float, float, float] = DEFAULT_U_MAX

    def __post_init__(self) -> None:
        if self.p.shape != (6, 6) or not is_symmetric(self.p) or not is_positive_definite(self.p):
            raise DomainError("Saturated feedback needs a 6x6 symmetric positive definite P")
        if not math.isfinite(self.kappa) or self.kappa <= 0.0:
            raise DomainError(f"Feedback gain must be positive, got {self.kappa}")
        if len(self.u_max) != 3 or any(not math.isfinite(u) or u <= 0.0 for u in self.u_max):
            raise DomainError(f"Torque limits must be three positive numbers, got {self.u_max}")

    @classmethod
    def from_solution(
        cls,
        solution: LyapunovSolution,
        kappa: float = DEFAULT_KAPPA,
        u_max: tuple[float, float, float] = DEFAULT_U_MAX,
    ) -> SaturatedFeedback:
        if not solution.is_pd:
            raise DomainError("Lyapunov solution is not positive definite; no feedback can be built from it")
        return cls(p=feedback_matrix(solution), kappa=kappa, u_max=tuple(float(u) for u in u_max))


def feedback_matrix(solution: LyapunovSolution) -> Matrix:
    """P rescaled so that |B^T P B|_inf = omega0.

    The rate block of the raw solution grows like 1/omega0^2; after rescaling
    kappa is measured in units of the orbital rate.
    """
    b = build_system(solution.inertia, solution.rate).b
    return as_matrix(solution.p * (solution.rate.omega0 / inf_norm(b.T @ solution.p @ b)))


def max_stable_step(fb: SaturatedFeedback, b: np.ndarray) -> float:
    return STIFFNESS_LIMIT / (fb.kappa * inf_norm(b.T @ fb.p @ b))


@dataclass(slots=True, frozen=True)
class Trajectory:
    times: np.ndarray  # (N+1,)
    states: np.ndarray  # (N+1, 6)
    controls: np.ndarray  # (N+1, 3)
    energies: np.ndarray  # (N+1,)
    dt: float

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def max_relative_energy_drift(self) -> float:
        v0 = float(self.energies[0])
        if v0 == 0.0:
            return float(np.max(np.abs(self.energies)))
        return float(np.max(np.abs(self.energies - v0)) / abs(v0))

    def max_energy_increase(self) -> float:
        if self.energies.size < 2:
            return 0.0
        return float(np.max(np.diff(self.energies)))

    def rows(self) -> list[list[float]]:
        table = np.column_stack([self.times, self.states, self.controls, self.energies])
        return table.tolist()


def energy(chi: np.ndarray, p: np.ndarray) -> float:
    return float(chi @ p @ chi)


def feedback(chi: np.ndarray, fb: SaturatedFeedback, b: np.ndarray) -> np.ndarray:
    raw = -fb.kappa * (b.T @ fb.p @ chi)
    u_max = np.asarray(fb.u_max)
    return np.clip(raw, -u_max, u_max)


def simulate(
    s: SystemMatrices,
    fb: SaturatedFeedback | None,
    chi0: np.ndarray,
    dt: float,
    horizon: float,
    energy_matrix: np.ndarray | None = None,
    log_fn: LogFn | None = None,
    progress_fn: ProgressFn | None = None,
) -> Trajectory:
    """Classical RK4 on chi' = A chi + B u with the feedback evaluated at every stage.

    Energies use the feedback's P, else ``energy_matrix``, else the identity.
    """
    log = log_fn or noop_log
    progress = progress_fn or noop_progress
    om = s.rate.omega0
    if not math.isfinite(dt) or dt <= 0.0:
        raise StepSizeError(f"Step size must be positive, got {dt}")
    if om > 0.0 and dt > RESOLUTION_FACTOR / om:
        raise StepSizeError(f"dt={dt:g} s exceeds the resolution guard {RESOLUTION_FACTOR / om:g} s")
    if not math.isfinite(horizon) or horizon < dt:
        raise StepSizeError(f"Horizon {horizon:g} s must be at least one step ({dt:g} s)")
    if fb is not None and dt > max_stable_step(fb, s.b):
        raise StepSizeError(
            f"dt={dt:g} s is too coarse for feedback gain {fb.kappa:g}; "
            f"the linear region needs dt <= {max_stable_step(fb, s.b):g} s"
        )

    x = np.array(chi0, dtype=np.float64)
    if x.shape != (6,) or not np.all(np.isfinite(x)):
        raise DomainError("Initial state must be six finite numbers")
    a, b = s.a, s.b
    if fb is not None:
        p = fb.p
    elif energy_matrix is not None:
        p = as_matrix(energy_matrix)
    else:
        p = np.eye(6)

    def _control(state: np.ndarray) -> np.ndarray:
        if fb is None:
            return np.zeros(3)
        return feedback(state, fb, b)

    def _rhs(state: np.ndarray) -> np.ndarray:
        return a @ state + b @ _control(state)

    steps = max(1, math.ceil(horizon / dt - 1e-9))
    times = dt * np.arange(steps + 1)
    states = np.empty((steps + 1, 6))
    controls = np.empty((steps + 1, 3))
    energies = np.empty(steps + 1)
    states[0] = x
    controls[0] = _control(x)
    energies[0] = energy(x, p)
    log(f"Simulating {steps} RK4 steps of {dt:g} s ({'closed' if fb else 'open'} loop).")

    report_every = max(1, steps // 20)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, steps + 1):
            k1 = _rhs(x)
            k2 = _rhs(x + 0.5 * dt * k1)
            k3 = _rhs(x + 0.5 * dt * k2)
            k4 = _rhs(x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise DivergenceError(f"State became non-finite at t={times[k]:g} s", time_s=float(times[k]))
            states[k] = x
            controls[k] = _control(x)
            energies[k] = energy(x, p)
            if k % report_every == 0:
                progress(k / steps, f"Step {k}/{steps}")

    progress(1.0, "Simulation complete")
    return Trajectory(times=times, states=states, controls=controls, energies=energies, dt=dt)


def write_trajectory_csv(trajectory: Trajectory, target) -> None:
    write_csv(target, TRAJECTORY_HEADER, trajectory.rows())


def read_trajectory_csv(path: Path) -> Trajectory:
    header, rows = read_csv(path)
    if tuple(header) != TRAJECTORY_HEADER:
        raise ConfigError(f"Unexpected trajectory header in {path}: {','.join(header)}")
    table = np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
    if table.size == 0:
        raise ConfigError(f"Trajectory file {path} has no samples")
    dt = float(table[1, 0] - table[0, 0]) if table.shape[0] > 1 else 0.0
    return Trajectory(
        times=table[:, 0],
        states=table[:, 1:7],
        controls=table[:, 7:10],
        energies=table[:, 10],
        dt=dt,
    )
