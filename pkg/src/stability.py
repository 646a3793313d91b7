"""Stability verdicts for the gravity-gradient attitude model.

Two independent routes produce a StabilityClass: closed-form predicates on the
inertia ratios, and a numeric oracle that finds the eigenvalues of A and
compares algebraic with geometric multiplicities on the imaginary axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Sequence

import numpy as np

from .model import OrbitalRate, SigmaTriple, SystemMatrices
from .smallmat import PolyCoeffs, balance, char_poly_coeffs, numeric_rank, poly_roots
from .utils import DimensionError, DomainError, NotApplicableError


DEFAULT_TOL = 1e-9
CLUSTER_RADIUS_FACTOR = 10.0

UNSTABLE = "Unstable"
POLYNOMIALLY_STABLE_ONLY = "PolynomiallyStableOnly"
LYAPUNOV_STABLE = "LyapunovStable"
VERDICTS = (UNSTABLE, POLYNOMIALLY_STABLE_ONLY, LYAPUNOV_STABLE)


@dataclass(slots=True, frozen=True)
class PhiPair:
    phi1: float
    phi2: float
    delta: float


@dataclass(slots=True, frozen=True)
class EigenCluster:
    center: complex
    algebraic: int
    geometric: int


@dataclass(slots=True, frozen=True)
class StabilityClass:
    verdict: str  # Unstable | PolynomiallyStableOnly | LyapunovStable
    boundary: bool
    clusters: tuple[EigenCluster, ...] = field(default=(), compare=False)


@dataclass(slots=True, frozen=True)
class EigenSet:
    values: tuple[complex, ...]  # s1..s6, consecutive entries are +/- pairs

    def pairs(self) -> list[tuple[complex, complex]]:
        return [(self.values[i], self.values[i + 1]) for i in range(0, len(self.values), 2)]


def _check_tol(tol: float) -> None:
    if not math.isfinite(tol) or tol < 0.0:
        raise DomainError(f"Tolerance must be finite and non-negative, got {tol}")


def phis(sigma: SigmaTriple) -> PhiPair:
    s1, _, s3 = sigma.as_tuple()
    phi1 = s1 * s3
    phi2 = 3.0 * s1 + s3 * s1 + 1.0
    return PhiPair(phi1=phi1, phi2=phi2, delta=phi2 * phi2 - 16.0 * phi1)


def condition_quantities(sigma: SigmaTriple) -> dict[str, float]:
    p = phis(sigma)
    return {"sigma2": sigma.sigma2, "phi1": p.phi1, "phi2": p.phi2, "delta": p.delta}


def boundary_margin(sigma: SigmaTriple) -> float:
    """Smallest magnitude among the four tested quantities."""
    return min(abs(v) for v in condition_quantities(sigma).values())


def is_polynomially_stable(sigma: SigmaTriple, tol: float = DEFAULT_TOL) -> bool:
    _check_tol(tol)
    return all(v >= -tol for v in condition_quantities(sigma).values())


def is_lyapunov_stable(sigma: SigmaTriple, tol: float = DEFAULT_TOL) -> bool:
    _check_tol(tol)
    return all(v > tol for v in condition_quantities(sigma).values())


def classify(sigma: SigmaTriple, tol: float = DEFAULT_TOL) -> StabilityClass:
    _check_tol(tol)
    boundary = boundary_margin(sigma) <= tol
    if is_lyapunov_stable(sigma, tol):
        return StabilityClass(LYAPUNOV_STABLE, boundary)
    if is_polynomially_stable(sigma, tol):
        return StabilityClass(POLYNOMIALLY_STABLE_ONLY, boundary)
    return StabilityClass(UNSTABLE, boundary)


def closed_form_eigenvalues(sigma: SigmaTriple, w: OrbitalRate) -> EigenSet:
    if not is_polynomially_stable(sigma, 0.0):
        raise NotApplicableError(
            "Closed-form eigenvalues require sigma2, phi1, phi2 and delta to be non-negative"
        )
    p = phis(sigma)
    om = w.omega0
    root_delta = math.sqrt(p.delta)
    high = (p.phi2 + root_delta) / 2.0
    # product of the two squared magnitudes is 4*phi1; avoids cancellation in phi2 - sqrt(delta)
    low = 4.0 * p.phi1 / high if high > 0.0 else 0.0
    mags = (math.sqrt(3.0 * sigma.sigma2), math.sqrt(max(high, 0.0)), math.sqrt(max(low, 0.0)))
    values: list[complex] = []
    for mag in mags:
        values.extend((complex(0.0, mag * om), complex(0.0, -mag * om)))
    return EigenSet(tuple(values))


def factored_char_poly(sigma: SigmaTriple) -> tuple[PolyCoeffs, PolyCoeffs]:
    """(x^2 + 3 sigma2, x^4 + phi2 x^2 + 4 phi1), whose product is det(xI - A0)."""
    p = phis(sigma)
    quadratic = PolyCoeffs((3.0 * sigma.sigma2, 0.0, 1.0))
    quartic = PolyCoeffs((4.0 * p.phi1, 0.0, p.phi2, 0.0, 1.0))
    return quadratic, quartic


def numeric_eigenvalues(s: SystemMatrices) -> list[complex]:
    balanced, _ = balance(s.a)
    return poly_roots(char_poly_coeffs(balanced))


def _cluster(roots: Sequence[complex], radius: float) -> list[list[complex]]:
    clusters: list[list[complex]] = []
    for r in sorted(roots, key=lambda z: (z.imag, z.real)):
        for group in clusters:
            center = sum(group) / len(group)
            if abs(r - center) <= radius:
                group.append(r)
                break
        else:
            clusters.append([r])
    return clusters


def classify_numeric(s: SystemMatrices, tol: float = DEFAULT_TOL) -> StabilityClass:
    if not math.isfinite(tol) or tol <= 0.0:
        raise DomainError(f"Numeric classification needs a positive tolerance, got {tol}")
    scale = s.rate.omega0 if s.rate.omega0 > 0.0 else 1.0
    balanced, _ = balance(s.a)
    roots = poly_roots(char_poly_coeffs(balanced))
    if any(r.real > tol * scale for r in roots):
        return StabilityClass(UNSTABLE, boundary=False)

    axis_roots = [r for r in roots if abs(r.real) <= tol * scale]
    n = balanced.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    clusters: list[EigenCluster] = []
    for group in _cluster(axis_roots, CLUSTER_RADIUS_FACTOR * tol * scale):
        center = sum(group) / len(group)
        geometric = n - numeric_rank(center * eye - balanced, tol)
        clusters.append(EigenCluster(center=center, algebraic=len(group), geometric=geometric))

    repeated = any(c.algebraic > 1 for c in clusters)
    if all(c.algebraic == c.geometric for c in clusters):
        return StabilityClass(LYAPUNOV_STABLE, boundary=repeated, clusters=tuple(clusters))
    return StabilityClass(POLYNOMIALLY_STABLE_ONLY, boundary=repeated, clusters=tuple(clusters))


def match_eigenvalues(a: Sequence[complex], b: Sequence[complex]) -> float:
    """Largest distance after greedy nearest pairing of two multisets."""
    if len(a) != len(b):
        raise DimensionError(f"Cannot match {len(a)} eigenvalues against {len(b)}")
    remaining = list(b)
    worst = 0.0
    for x in sorted(a, key=lambda z: (z.imag, z.real)):
        idx = min(range(len(remaining)), key=lambda k: abs(remaining[k] - x))
        worst = max(worst, abs(remaining.pop(idx) - x))
    return worst
