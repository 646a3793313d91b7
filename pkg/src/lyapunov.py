"""Closed-form solutions of A^T P + P A = 0 for the attitude model.

Every solution is P = H^T P0 H with P0 = diag(P2, P1, P3), parametrised by
(alpha1, alpha2, alpha3, alpha13) subject to one linear constraint. Only the
D = 0 right-hand side is constructed; no operation accepts a nonzero D.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .model import (
    OrbitalRate,
    SigmaTriple,
    SpacecraftInertia,
    block_decompose,
    build_system,
    sigmas_from_inertia,
    transform_matrices,
)
from .smallmat import (
    Matrix,
    PolyCoeffs,
    as_matrix,
    inf_norm,
    is_positive_definite,
    is_symmetric,
    solve_quadratic,
)
from .stability import DEFAULT_TOL, is_lyapunov_stable
from .utils import ConstraintError, DegenerateError, LogFn, ShapeError, noop_log


SIGMA_ZERO_TOL = 1e-12
CONSTRAINT_TOL = 1e-12
RESIDUAL_REL_TOL = 1e-11
GRID_POINTS_PER_SIGN = 60
GRID_LOG10_RANGE = (-3.0, 3.0)
POSITIVE_GRID = tuple(float(v) for v in np.logspace(-3.0, 3.0, 13))


@dataclass(slots=True, frozen=True)
class AlphaParams:
    alpha1: float
    alpha2: float
    alpha3: float
    alpha13: float

    def magnitude(self) -> float:
        return max(abs(self.alpha1), abs(self.alpha2), abs(self.alpha3), abs(self.alpha13))

    def scaled(self, factor: float) -> AlphaParams:
        return AlphaParams(
            self.alpha1 * factor, self.alpha2 * factor, self.alpha3 * factor, self.alpha13 * factor
        )


@dataclass(slots=True, frozen=True)
class LyapunovSolution:
    p2: Matrix
    p1: Matrix
    p3: Matrix
    p0: Matrix
    p: Matrix
    params: AlphaParams
    is_pd: bool
    residual: float
    residual_bound: float
    inertia: SpacecraftInertia
    rate: OrbitalRate


@dataclass(slots=True, frozen=True)
class NotFound:
    reason: str
    alpha13_min: float
    alpha13_max: float
    candidates_tried: int


def _ratio_xz(j: SpacecraftInertia) -> float:
    return j.j_x / j.j_z


def _require_nondegenerate(sigma: SigmaTriple) -> None:
    if any(abs(s) <= SIGMA_ZERO_TOL for s in sigma.as_tuple()):
        raise DegenerateError(
            f"The solution family needs sigma1*sigma2*sigma3 != 0, got sigma={sigma.as_tuple()}"
        )


def _sigma1_is_one(sigma: SigmaTriple) -> bool:
    return abs(1.0 - sigma.sigma1) <= SIGMA_ZERO_TOL


def constraint_residual(j: SpacecraftInertia, alpha1: float, alpha3: float, alpha13: float) -> float:
    s1, _, s3 = sigmas_from_inertia(j).as_tuple()
    return (1.0 - s1) * (alpha1 - _ratio_xz(j) * alpha3) + (4.0 * s1 - s3) * alpha13


def solve_alpha1(j: SpacecraftInertia, alpha3: float, alpha13: float) -> float:
    s1, _, s3 = sigmas_from_inertia(j).as_tuple()
    if abs(1.0 - s1) <= SIGMA_ZERO_TOL:
        raise DegenerateError("alpha1 is unconstrained when sigma1 = 1; alpha13 must be zero instead")
    return _ratio_xz(j) * alpha3 - (4.0 * s1 - s3) * alpha13 / (1.0 - s1)


def _blocks(sigma: SigmaTriple, params: AlphaParams) -> tuple[Matrix, Matrix, Matrix]:
    s1, s2, s3 = sigma.as_tuple()
    a1, a2, a3, a13 = params.alpha1, params.alpha2, params.alpha3, params.alpha13
    p2 = as_matrix([[3.0 * s2 * a2, 0.0], [0.0, a2]])
    p1 = as_matrix([[s3 * (a3 + (1.0 - s1) * a13), -s3 * a13], [-s3 * a13, a1]])
    p3 = as_matrix([[4.0 * s1 * (a1 + (1.0 - s3) * a13), 4.0 * s1 * a13], [4.0 * s1 * a13, a3]])
    return p2, p1, p3


def _blocks_pd(p2: Matrix, p1: Matrix, p3: Matrix) -> bool:
    return is_positive_definite(p2) and is_positive_definite(p1) and is_positive_definite(p3)


def residual(p: np.ndarray, a: np.ndarray) -> float:
    if p.shape != (6, 6) or a.shape != (6, 6):
        raise ShapeError(f"Lyapunov residual needs 6x6 operands, got P{p.shape} and A{a.shape}")
    return inf_norm(a.T @ p + p @ a)


def assemble_full(p0: np.ndarray, h: np.ndarray) -> Matrix:
    if p0.shape != (6, 6) or h.shape != (6, 6):
        raise ShapeError(f"Assembly needs 6x6 operands, got P0{p0.shape} and H{h.shape}")
    if not is_symmetric(p0):
        raise ShapeError("P0 must be symmetric")
    full = h.T @ p0 @ h
    return as_matrix(0.5 * (full + full.T))


def solution_family(j: SpacecraftInertia, w: OrbitalRate, params: AlphaParams) -> LyapunovSolution:
    sigma = sigmas_from_inertia(j)
    _require_nondegenerate(sigma)
    res = constraint_residual(j, params.alpha1, params.alpha3, params.alpha13)
    if abs(res) > CONSTRAINT_TOL * max(1.0, params.magnitude()):
        raise ConstraintError(f"alpha parameters violate the family constraint (residual {res:.3e})")

    p2, p1, p3 = _blocks(sigma, params)
    p0 = np.zeros((6, 6))
    p0[0:2, 0:2] = p2
    p0[2:4, 2:4] = p1
    p0[4:6, 4:6] = p3
    p0 = as_matrix(p0)
    h, _ = transform_matrices(w)
    p = assemble_full(p0, h)
    a = build_system(j, w).a
    res_lyap = residual(p, a)
    return LyapunovSolution(
        p2=p2,
        p1=p1,
        p3=p3,
        p0=p0,
        p=p,
        params=params,
        is_pd=_blocks_pd(p2, p1, p3),
        residual=res_lyap,
        residual_bound=RESIDUAL_REL_TOL * inf_norm(p) * w.omega0,
        inertia=j,
        rate=w,
    )


def special_solution(j: SpacecraftInertia, w: OrbitalRate, alpha2: float, alpha3: float) -> LyapunovSolution:
    params = AlphaParams(alpha1=_ratio_xz(j) * alpha3, alpha2=alpha2, alpha3=alpha3, alpha13=0.0)
    return solution_family(j, w, params)


def block_equation_residuals(solution: LyapunovSolution) -> dict[str, float]:
    blocks = block_decompose(solution.inertia)
    a1, a2, a3 = blocks.a1, blocks.a2, blocks.a3
    p1, p2, p3 = solution.p1, solution.p2, solution.p3
    return {
        "a2": inf_norm(a2.T @ p2 + p2 @ a2),
        "a3_p3_p1_a1": inf_norm(a3.T @ p3 + p1 @ a1),
        "a1_p1_p3_a3": inf_norm(a1.T @ p1 + p3 @ a3),
        "a0": inf_norm(blocks.a0.T @ solution.p0 + solution.p0 @ blocks.a0),
    }


def _signed_log_grid() -> list[float]:
    lo, hi = GRID_LOG10_RANGE
    magnitudes = np.logspace(lo, hi, GRID_POINTS_PER_SIGN)
    grid = [0.0]
    for m in magnitudes:
        grid.extend((float(m), -float(m)))
    return grid


def _real_roots(q0: float, q1: float, q2: float) -> list[float]:
    if q2 != 0.0:
        return [r.real for r in solve_quadratic(PolyCoeffs((q0, q1, q2))) if r.imag == 0.0]
    if q1 != 0.0:
        return [-q0 / q1]
    return []


def _breakpoints(j: SpacecraftInertia, sigma: SigmaTriple) -> list[float]:
    s1, _, s3 = sigma.as_tuple()
    k = _ratio_xz(j)
    c = -(4.0 * s1 - s3) / (1.0 - s1)  # alpha1 = k + c * alpha13
    e = 1.0 - s1
    g = c + 1.0 - s3
    points: list[float] = []
    points += _real_roots(k, c, 0.0)  # alpha1 > 0
    points += _real_roots(1.0, e, 0.0)  # P1[0, 0] > 0
    points += _real_roots(s3 * k, s3 * (c + k * e), s3 * c * e - s3 * s3)  # det P1 > 0
    points += _real_roots(k, g, 0.0)  # P3[0, 0] > 0
    points += _real_roots(4.0 * s1 * k, 4.0 * s1 * g, -16.0 * s1 * s1)  # det P3 > 0
    return sorted({p for p in points if math.isfinite(p)})


def _interval_candidates(points: list[float]) -> list[float]:
    if not points:
        return [0.0]
    candidates = [points[0] - 1.0 - abs(points[0])]
    candidates += [0.5 * (lo + hi) for lo, hi in zip(points, points[1:])]
    candidates.append(points[-1] + 1.0 + abs(points[-1]))
    return candidates


def find_positive_definite(
    j: SpacecraftInertia,
    w: OrbitalRate,
    tol: float = DEFAULT_TOL,
    log_fn: LogFn | None = None,
) -> LyapunovSolution | NotFound:
    """Search the solution family for P > 0 with alpha2 = alpha3 = 1.

    The signed-log grid over alpha13 is scanned first; if it misses, the
    midpoints between consecutive sign changes of the PD inequalities are
    tried, which covers every feasible interval.
    """
    log = log_fn or noop_log
    sigma = sigmas_from_inertia(j)
    _require_nondegenerate(sigma)
    grid = _signed_log_grid()
    grid_span = 10.0 ** GRID_LOG10_RANGE[1]

    if not is_lyapunov_stable(sigma, tol):
        log(f"Inertia {j.as_tuple()} is not Lyapunov stable; a positive definite P is not expected.")
    if sigma.sigma2 <= 0.0:
        return NotFound("sigma2 <= 0 leaves P2 indefinite for every alpha2", -grid_span, grid_span, 0)

    tried = 0
    if _sigma1_is_one(sigma):
        for a1 in POSITIVE_GRID:
            for a3 in POSITIVE_GRID:
                tried += 1
                params = AlphaParams(alpha1=a1, alpha2=1.0, alpha3=a3, alpha13=0.0)
                if _blocks_pd(*_blocks(sigma, params)):
                    log(f"Positive definite P found on the sigma1 = 1 branch (alpha1={a1:g}, alpha3={a3:g}).")
                    return solution_family(j, w, params)
        return NotFound("no positive definite pair on the sigma1 = 1 grid", 0.0, 0.0, tried)

    candidates = grid + [t for t in _interval_candidates(_breakpoints(j, sigma)) if t not in grid]
    for idx, a13 in enumerate(candidates):
        tried += 1
        params = AlphaParams(alpha1=solve_alpha1(j, 1.0, a13), alpha2=1.0, alpha3=1.0, alpha13=a13)
        if _blocks_pd(*_blocks(sigma, params)):
            source = "grid" if idx < len(grid) else "interval midpoint"
            log(f"Positive definite P found at alpha13={a13:.6g} ({source}, {tried} candidates).")
            return solution_family(j, w, params)
    span = max(abs(t) for t in candidates)
    return NotFound("no alpha13 makes all blocks positive definite", -span, span, tried)
