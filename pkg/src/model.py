"""Linearized gravity-gradient attitude model.

State ordering is (roll, pitch, yaw, roll rate, pitch rate, yaw rate) and the
input is the body torque (N*m) about x, y, z.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .smallmat import Matrix, as_matrix, inf_norm
from .utils import ConsistencyError, DomainError


GRAVITY_CONSTANT = 3.986e14  # m^3/s^2

# (row, col, scaled) for the nonzero entries of H; scaled entries are 1/omega0
_H_PATTERN: tuple[tuple[int, int, bool], ...] = (
    (0, 1, False),
    (1, 4, True),
    (2, 2, False),
    (3, 3, True),
    (4, 0, False),
    (5, 5, True),
)


def _check_finite_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise DomainError(f"{name} must be a finite positive number, got {value}")
    return value


@dataclass(slots=True, frozen=True)
class SpacecraftInertia:
    j_x: float
    j_y: float
    j_z: float

    def __post_init__(self) -> None:
        for name in ("j_x", "j_y", "j_z"):
            _check_finite_positive(name, getattr(self, name))

    def as_tuple(self) -> tuple[float, float, float]:
        return self.j_x, self.j_y, self.j_z

    def is_physically_realizable(self) -> bool:
        jx, jy, jz = self.as_tuple()
        return jx + jy > jz and jy + jz > jx and jx + jz > jy

    def validate(self, strict_physical: bool = False) -> None:
        if strict_physical and not self.is_physically_realizable():
            raise DomainError(
                f"Inertia {self.as_tuple()} violates the rigid-body triangle inequalities."
            )

    def scaled(self, factor: float) -> SpacecraftInertia:
        factor = _check_finite_positive("scale factor", factor)
        return SpacecraftInertia(self.j_x * factor, self.j_y * factor, self.j_z * factor)


@dataclass(slots=True, frozen=True)
class SigmaTriple:
    sigma1: float
    sigma2: float
    sigma3: float

    def as_tuple(self) -> tuple[float, float, float]:
        return self.sigma1, self.sigma2, self.sigma3


@dataclass(slots=True, frozen=True)
class OrbitalRate:
    omega0: float  # rad/s; 0 is the degenerate double-integrator limit
    radius_m: float | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.omega0) or self.omega0 < 0.0:
            raise DomainError(f"Orbital rate must be finite and non-negative, got {self.omega0}")


@dataclass(slots=True, frozen=True)
class SystemMatrices:
    a: Matrix
    b: Matrix
    rate: OrbitalRate
    inertia: SpacecraftInertia


@dataclass(slots=True, frozen=True)
class BlockForm:
    a1: Matrix
    a2: Matrix
    a3: Matrix
    b1: Matrix
    b2: Matrix
    b3: Matrix
    a0: Matrix
    b0: Matrix
    inertia: SpacecraftInertia
    h: Matrix | None = None
    l: Matrix | None = None
    rate: OrbitalRate | None = None


def sigmas_from_inertia(j: SpacecraftInertia, strict_physical: bool = False) -> SigmaTriple:
    j.validate(strict_physical)
    jx, jy, jz = j.as_tuple()
    return SigmaTriple((jy - jz) / jx, (jx - jz) / jy, (jy - jx) / jz)


def sigmas_from_beta(beta1: float, beta2: float) -> SigmaTriple:
    b1 = _check_finite_positive("beta1", beta1)
    b2 = _check_finite_positive("beta2", beta2)
    return SigmaTriple(1.0 / b1 - 1.0 / (b1 * b2), b1 - 1.0 / b2, b2 - b1 * b2)


def betas_from_inertia(j: SpacecraftInertia) -> tuple[float, float]:
    return j.j_x / j.j_y, j.j_y / j.j_z


def inertia_from_beta(beta1: float, beta2: float, j_z: float = 1.0) -> SpacecraftInertia:
    """Representative body with J_x/J_y = beta1 and J_y/J_z = beta2."""
    b1 = _check_finite_positive("beta1", beta1)
    b2 = _check_finite_positive("beta2", beta2)
    jz = _check_finite_positive("j_z", j_z)
    return SpacecraftInertia(b1 * b2 * jz, b2 * jz, jz)


def orbital_rate(radius_m: float) -> OrbitalRate:
    r = _check_finite_positive("semimajor axis", radius_m)
    return OrbitalRate(math.sqrt(GRAVITY_CONSTANT / r**3), radius_m=r)


def orbital_period(w: OrbitalRate) -> float:
    if w.omega0 <= 0.0:
        raise DomainError("Orbital period is undefined for omega0 = 0")
    return 2.0 * math.pi / w.omega0


def build_system(j: SpacecraftInertia, w: OrbitalRate) -> SystemMatrices:
    s1, s2, s3 = sigmas_from_inertia(j).as_tuple()
    om = w.omega0
    a = np.zeros((6, 6))
    a[0:3, 3:6] = np.eye(3)
    a[3, 0] = -4.0 * om * om * s1
    a[3, 5] = om * (1.0 - s1)
    a[4, 1] = -3.0 * om * om * s2
    a[5, 2] = -om * om * s3
    a[5, 3] = om * (s3 - 1.0)
    b = np.zeros((6, 3))
    b[3, 0] = 1.0 / j.j_x
    b[4, 1] = 1.0 / j.j_y
    b[5, 2] = 1.0 / j.j_z
    return SystemMatrices(a=as_matrix(a), b=as_matrix(b), rate=w, inertia=j)


def _require_positive_rate(w: OrbitalRate) -> float:
    if w.omega0 <= 0.0:
        raise DomainError("The H/L transform divides by omega0; omega0 must be positive")
    return w.omega0


def transform_matrices(w: OrbitalRate) -> tuple[Matrix, Matrix]:
    om = _require_positive_rate(w)
    h = np.zeros((6, 6))
    for row, col, scaled in _H_PATTERN:
        h[row, col] = 1.0 / om if scaled else 1.0
    l = om * om * np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    return as_matrix(h), as_matrix(l)


def inverse_transform(w: OrbitalRate) -> Matrix:
    """H^-1 from the permutation-with-scaling structure of H."""
    om = _require_positive_rate(w)
    h_inv = np.zeros((6, 6))
    for row, col, scaled in _H_PATTERN:
        h_inv[col, row] = om if scaled else 1.0
    return as_matrix(h_inv)


def assemble_block_form(
    a1: np.ndarray,
    a2: np.ndarray,
    a3: np.ndarray,
    b1: np.ndarray,
    b2: np.ndarray,
    b3: np.ndarray,
) -> tuple[Matrix, Matrix]:
    """A0 = diag(A2, [[0, A1], [A3, 0]]) and B0 = diag(B2, B1, B3)."""
    a0 = np.zeros((6, 6))
    a0[0:2, 0:2] = a2
    a0[2:4, 4:6] = a1
    a0[4:6, 2:4] = a3
    b0 = np.zeros((6, 3))
    b0[0:2, 0:1] = b2
    b0[2:4, 1:2] = b1
    b0[4:6, 2:3] = b3
    return as_matrix(a0), as_matrix(b0)


def block_decompose(j: SpacecraftInertia, w: OrbitalRate | None = None) -> BlockForm:
    s1, s2, s3 = sigmas_from_inertia(j).as_tuple()
    a1 = as_matrix([[0.0, 1.0], [-4.0 * s1, 1.0 - s1]])
    a2 = as_matrix([[0.0, 1.0], [-3.0 * s2, 0.0]])
    a3 = as_matrix([[0.0, 1.0], [-s3, s3 - 1.0]])
    b1 = as_matrix([[0.0], [1.0 / j.j_x]])
    b2 = as_matrix([[0.0], [1.0 / j.j_y]])
    b3 = as_matrix([[0.0], [1.0 / j.j_z]])
    a0, b0 = assemble_block_form(a1, a2, a3, b1, b2, b3)
    h = l = None
    if w is not None:
        h, l = transform_matrices(w)
    return BlockForm(a1=a1, a2=a2, a3=a3, b1=b1, b2=b2, b3=b3, a0=a0, b0=b0, inertia=j, h=h, l=l, rate=w)


def verify_similarity(s: SystemMatrices, b: BlockForm) -> tuple[float, float]:
    """Infinity-norm residuals of H A H^-1 = omega0 A0 and H B L = omega0 B0."""
    if s.inertia != b.inertia:
        raise ConsistencyError(
            f"System built for {s.inertia.as_tuple()} but blocks for {b.inertia.as_tuple()}"
        )
    if b.rate is not None and b.rate.omega0 != s.rate.omega0:
        raise ConsistencyError(
            f"System built at omega0={s.rate.omega0} but blocks at omega0={b.rate.omega0}"
        )
    om = s.rate.omega0
    h, l = transform_matrices(s.rate)
    h_inv = inverse_transform(s.rate)
    residual_a = inf_norm(h @ s.a @ h_inv - om * b.a0)
    residual_b = inf_norm(h @ s.b @ l - om * b.b0)
    return residual_a, residual_b
