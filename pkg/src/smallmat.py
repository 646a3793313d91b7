"""Fixed-size dense linear algebra and polynomial roots.

Values are numpy arrays (float64, or complex128 where eigenvalues enter);
the algorithms themselves (Faddeev-LeVerrier, Durand-Kerner, Cholesky,
partial-pivot elimination, balancing) are implemented here so the stability
oracle does not depend on a general eigensolver.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
import math
from typing import Iterable, Sequence

import numpy as np
import numpy.typing as npt

from .utils import ConvergenceError, DimensionError, DomainError, ShapeError


Matrix = npt.NDArray[np.float64]
ComplexMatrix = npt.NDArray[np.complex128]

ROOT_MAX_ITERATIONS = 10000
ROOT_STEP_TOL = 1e-14
ROOT_START_ANGLE = 0.4
PD_PIVOT_FLOOR = 1e-12
SYMMETRY_TOL = 1e-12
CHAR_POLY_MAX_ORDER = 8
_EPS = float(np.finfo(np.float64).eps)


def as_matrix(values: Sequence[Sequence[float]] | np.ndarray) -> Matrix:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"Matrix must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError("Matrix entries must be finite")
    arr.setflags(write=False)
    return arr


def identity(n: int) -> Matrix:
    return as_matrix(np.eye(n))


def zeros(rows: int, cols: int) -> Matrix:
    return as_matrix(np.zeros((rows, cols)))


@dataclass(slots=True, frozen=True)
class PolyCoeffs:
    coefficients: tuple[float, ...]  # c0..cn, ascending degree

    def __post_init__(self) -> None:
        if not self.coefficients:
            raise DimensionError("Polynomial needs at least one coefficient")
        if self.coefficients[-1] == 0:
            raise DomainError("Leading polynomial coefficient must be nonzero")
        if not all(math.isfinite(c) for c in self.coefficients):
            raise DomainError("Polynomial coefficients must be finite")

    @classmethod
    def of(cls, values: Iterable[float]) -> PolyCoeffs:
        return cls(tuple(float(v) for v in values))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> float:
        return self.coefficients[-1]

    def evaluate(self, z: complex) -> complex:
        acc: complex = 0.0
        for c in reversed(self.coefficients):
            acc = acc * z + c
        return acc

    def times(self, other: PolyCoeffs) -> PolyCoeffs:
        return PolyCoeffs.of(np.convolve(self.coefficients, other.coefficients))

    def max_abs_coefficient(self) -> float:
        return max(abs(c) for c in self.coefficients)


def mat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"Cannot multiply {a.shape} by {b.shape}")
    return a @ b


def inf_norm(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(m), axis=1)))


def solve_quadratic(c: PolyCoeffs) -> tuple[complex, complex]:
    """Both roots of c0 + c1 x + c2 x^2, ordered by descending (re, im)."""
    if c.degree != 2:
        raise DimensionError(f"Expected a quadratic, got degree {c.degree}")
    c0, c1, c2 = c.coefficients
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc >= 0.0:
        # cancellation-free form: q carries the larger-magnitude root
        q = -0.5 * (c1 + math.copysign(math.sqrt(disc), c1))
        if q == 0.0:
            roots = (0.0 + 0.0j, 0.0 + 0.0j)
        else:
            roots = (complex(q / c2, 0.0), complex(c0 / q, 0.0))
    else:
        re = -c1 / (2.0 * c2)
        im = math.sqrt(-disc) / (2.0 * abs(c2))
        roots = (complex(re, im), complex(re, -im))
    first, second = sorted(roots, key=lambda r: (r.real, r.imag), reverse=True)
    return first, second


def _root_scale(monic: Sequence[float]) -> float:
    n = len(monic) - 1
    scale = 0.0
    for k in range(1, n + 1):
        scale = max(scale, abs(monic[n - k]) ** (1.0 / k))
    return scale


def poly_roots(c: PolyCoeffs, max_iterations: int = ROOT_MAX_ITERATIONS) -> list[complex]:
    """All complex roots by Durand-Kerner (Weierstrass) simultaneous iteration.

    The variable is rescaled so the monic polynomial has coefficients of
    magnitude at most one; initial guesses sit on the circle of radius
    1 + max|b_k| rotated off the real axis.
    """
    n = c.degree
    if n < 1:
        raise DimensionError("poly_roots needs degree >= 1")
    monic = [ck / c.leading for ck in c.coefficients]
    if n == 1:
        return [complex(-monic[0], 0.0)]

    scale = _root_scale(monic)
    if scale == 0.0:
        return [0.0 + 0.0j] * n
    b = [monic[k] / scale ** (n - k) for k in range(n + 1)]
    radius = 1.0 + max(abs(bk) for bk in b[:-1])
    z = [cmath.rect(radius, 2.0 * math.pi * k / n + ROOT_START_ANGLE) for k in range(n)]

    def _eval(x: complex) -> tuple[complex, float]:
        acc: complex = 0.0
        bound = 0.0
        ax = abs(x)
        for bk in reversed(b):
            acc = acc * x + bk
            bound = bound * ax + abs(bk)
        return acc, bound

    for _ in range(max_iterations):
        max_step = 0.0
        at_noise_floor = True
        for i in range(n):
            zi = z[i]
            value, bound = _eval(zi)
            if abs(value) > 8.0 * n * _EPS * bound:
                at_noise_floor = False
            denom: complex = 1.0
            for j in range(n):
                if j != i:
                    denom *= zi - z[j]
            if denom == 0:
                denom = complex(_EPS * radius, 0.0)
            step = value / denom
            z[i] = zi - step
            max_step = max(max_step, abs(step))
        if max_step < ROOT_STEP_TOL * radius or at_noise_floor:
            return [scale * zi for zi in z]
    raise ConvergenceError(f"Durand-Kerner did not converge in {max_iterations} iterations (degree {n})")


def char_poly_coeffs(m: np.ndarray) -> PolyCoeffs:
    """Coefficients of det(xI - m) via the Faddeev-LeVerrier recurrence."""
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"Characteristic polynomial needs a square matrix, got {m.shape}")
    n = m.shape[0]
    if n > CHAR_POLY_MAX_ORDER:
        raise DimensionError(f"Order {n} exceeds the supported maximum {CHAR_POLY_MAX_ORDER}")
    coeffs = [0.0] * (n + 1)
    coeffs[n] = 1.0
    eye = np.eye(n)
    aux = np.zeros((n, n))
    for k in range(1, n + 1):
        aux = m @ aux + coeffs[n - k + 1] * eye
        coeffs[n - k] = -float(np.trace(m @ aux)) / k
    return PolyCoeffs(tuple(coeffs))


def numeric_rank(m: np.ndarray, tol: float) -> int:
    if tol <= 0:
        raise DomainError("Rank tolerance must be positive")
    if m.ndim != 2:
        raise ShapeError(f"Rank needs a 2-D matrix, got shape {m.shape}")
    work = np.array(m, dtype=np.complex128 if np.iscomplexobj(m) else np.float64)
    rows, cols = work.shape
    largest = float(np.max(np.abs(work))) if work.size else 0.0
    if largest == 0.0:
        return 0
    threshold = tol * largest
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        pivot = rank + int(np.argmax(np.abs(work[rank:, col])))
        if abs(work[pivot, col]) <= threshold:
            continue
        if pivot != rank:
            work[[rank, pivot]] = work[[pivot, rank]]
        factors = work[rank + 1 :, col] / work[rank, col]
        work[rank + 1 :, col:] -= np.outer(factors, work[rank, col:])
        rank += 1
    return rank


def is_symmetric(m: np.ndarray, rel_tol: float = SYMMETRY_TOL) -> bool:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    return float(np.max(np.abs(m - m.T), initial=0.0)) <= rel_tol * scale


def is_positive_definite(m: np.ndarray) -> bool:
    """Cholesky test with pivots floored at 1e-12 of the largest diagonal entry."""
    if not is_symmetric(m):
        raise ShapeError("Positive definiteness is only defined here for symmetric matrices")
    n = m.shape[0]
    diag_max = float(np.max(np.diag(m))) if n else 0.0
    if diag_max <= 0.0:
        return False
    floor = PD_PIVOT_FLOOR * diag_max
    low = np.zeros((n, n))
    for j in range(n):
        pivot = m[j, j] - float(np.dot(low[j, :j], low[j, :j]))
        if pivot <= floor:
            return False
        low[j, j] = math.sqrt(pivot)
        for i in range(j + 1, n):
            low[i, j] = (m[i, j] - float(np.dot(low[i, :j], low[j, :j]))) / low[j, j]
    return True


def balance(m: np.ndarray, max_sweeps: int = 100) -> tuple[Matrix, np.ndarray]:
    """Parlett-Reinsch balancing with power-of-two factors.

    Returns ``(D^-1 m D, d)``. The similarity keeps eigenvalues and the rank
    of ``x I - m`` unchanged while equalising row and column norms.
    """
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"Balancing needs a square matrix, got {m.shape}")
    radix = 2.0
    sqrdx = radix * radix
    work = np.array(m, dtype=np.float64)
    n = work.shape[0]
    d = np.ones(n)
    for _ in range(max_sweeps):
        converged = True
        for i in range(n):
            c = float(np.sum(np.abs(work[:, i]))) - abs(work[i, i])
            r = float(np.sum(np.abs(work[i, :]))) - abs(work[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c > g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                converged = False
                d[i] *= f
                work[i, :] /= f
                work[:, i] *= f
        if converged:
            break
    return as_matrix(work), d
