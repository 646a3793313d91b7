from __future__ import annotations

from pathlib import Path
import sys
import tempfile
import time
from typing import Callable

import numpy as np

APP_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(APP_ROOT))

from src.control import SaturatedFeedback, simulate  # noqa: E402
from src.lyapunov import (  # noqa: E402
    AlphaParams,
    LyapunovSolution,
    find_positive_definite,
    solution_family,
    solve_alpha1,
)
from src.model import (  # noqa: E402
    OrbitalRate,
    SpacecraftInertia,
    block_decompose,
    build_system,
    inertia_from_beta,
    orbital_period,
    sigmas_from_beta,
    sigmas_from_inertia,
    verify_similarity,
)
from src.smallmat import char_poly_coeffs  # noqa: E402
from src.stability import (  # noqa: E402
    LYAPUNOV_STABLE,
    boundary_margin,
    classify,
    classify_numeric,
    closed_form_eigenvalues,
    factored_char_poly,
    match_eigenvalues,
    numeric_eigenvalues,
)
from src.sweep import SweepSettings, run_sweep, write_sweep_outputs  # noqa: E402

SEED = 20240611
SAMPLE_RANGE = (1.0, 3.0)


def _random_inertia(rng: np.random.Generator) -> SpacecraftInertia:
    return SpacecraftInertia(*(float(v) for v in rng.uniform(*SAMPLE_RANGE, size=3)))


def _stable_samples(rng: np.random.Generator, count: int, margin: float) -> list[SpacecraftInertia]:
    out: list[SpacecraftInertia] = []
    while len(out) < count:
        j = _random_inertia(rng)
        sigma = sigmas_from_inertia(j)
        if boundary_margin(sigma) >= margin and classify(sigma).verdict == LYAPUNOV_STABLE:
            out.append(j)
    return out


def check_eigenvalues(rng: np.random.Generator) -> str:
    bodies = [SpacecraftInertia(100.0, 120.0, 80.0)] + _stable_samples(rng, 500, 1e-3)
    w = OrbitalRate(1.0)
    worst = 0.0
    for j in bodies:
        closed = closed_form_eigenvalues(sigmas_from_inertia(j), w).values
        worst = max(worst, match_eigenvalues(closed, numeric_eigenvalues(build_system(j, w))))
    if worst > 1e-8:
        raise AssertionError(f"largest eigenvalue mismatch {worst:.3e}")
    return f"{len(bodies)} bodies, worst mismatch {worst:.2e}"


def check_classification(rng: np.random.Generator) -> str:
    w = OrbitalRate(1.0)
    tested = disagreements = 0
    while tested < 1000:
        j = _random_inertia(rng)
        sigma = sigmas_from_inertia(j)
        if boundary_margin(sigma) < 1e-6:
            continue
        tested += 1
        if classify(sigma).verdict != classify_numeric(build_system(j, w)).verdict:
            disagreements += 1
    if disagreements:
        raise AssertionError(f"{disagreements} of {tested} samples disagree")
    return f"{tested} samples agree"


def check_lyapunov_residual(rng: np.random.Generator) -> str:
    tested = 0
    worst_ratio = 0.0
    for omega in (7.2922e-5, 1.0):
        w = OrbitalRate(omega)
        count = 0
        while count < 250:
            j = _random_inertia(rng)
            sigma = sigmas_from_inertia(j)
            if min(abs(s) for s in sigma.as_tuple()) < 1e-3 or abs(1.0 - sigma.sigma1) < 1e-3:
                continue
            a2, a3, a13 = (float(v) for v in rng.uniform(-1.0, 1.0, size=3))
            params = AlphaParams(solve_alpha1(j, a3, a13), a2, a3, a13)
            sol = solution_family(j, w, params)
            worst_ratio = max(worst_ratio, sol.residual / sol.residual_bound)
            count += 1
        tested += count
    if worst_ratio > 1.0:
        raise AssertionError(f"residual exceeds its bound by {worst_ratio:.2f}x")
    return f"{tested} solutions, worst residual/bound {worst_ratio:.2e}"


def check_existence(_: np.random.Generator) -> str:
    w = OrbitalRate(1.0)
    axis = np.linspace(0.3, 2.5, 40)
    tested = mismatches = 0
    for b1 in axis:
        for b2 in axis:
            sigma = sigmas_from_beta(b1, b2)
            if boundary_margin(sigma) < 1e-4 or min(abs(s) for s in sigma.as_tuple()) < 1e-4:
                continue
            tested += 1
            found = isinstance(find_positive_definite(inertia_from_beta(b1, b2), w), LyapunovSolution)
            if found != (classify(sigma).verdict == LYAPUNOV_STABLE):
                mismatches += 1
    if mismatches:
        raise AssertionError(f"{mismatches} of {tested} cells mismatch")
    return f"{tested} cells, zero mismatches"


def check_similarity(rng: np.random.Generator) -> str:
    worst = 0.0
    for _ in range(200):
        j = _random_inertia(rng)
        w = OrbitalRate(float(10.0 ** rng.uniform(-5.0, 1.0)))
        res_a, res_b = verify_similarity(build_system(j, w), block_decompose(j, w))
        worst = max(worst, max(res_a, res_b) / max(1.0, w.omega0**2))
    if worst > 1e-12:
        raise AssertionError(f"scaled similarity residual {worst:.3e}")
    return f"200 samples, worst scaled residual {worst:.2e}"


def check_factorization(rng: np.random.Generator) -> str:
    worst = 0.0
    for _ in range(200):
        j = _random_inertia(rng)
        quadratic, quartic = factored_char_poly(sigmas_from_inertia(j))
        expected = np.array(quadratic.times(quartic).coefficients)
        actual = np.array(char_poly_coeffs(block_decompose(j).a0).coefficients)
        worst = max(worst, float(np.max(np.abs(expected - actual))))
    if worst > 1e-12:
        raise AssertionError(f"coefficient mismatch {worst:.3e}")
    return f"200 samples, worst coefficient gap {worst:.2e}"


def check_energy(_: np.random.Generator) -> str:
    chi0 = np.array([0.01, 0.01, 0.01, 0.0, 0.0, 0.0])
    notes = []
    for j in (SpacecraftInertia(100.0, 120.0, 80.0), SpacecraftInertia(100.0, 95.0, 99.0)):
        slow = OrbitalRate(1e-3)
        sol = find_positive_definite(j, slow)
        if not isinstance(sol, LyapunovSolution):
            raise AssertionError(f"no positive definite P for {j.as_tuple()}")
        open_loop = simulate(
            build_system(j, slow), None, chi0, 1e-3 / slow.omega0, orbital_period(slow), energy_matrix=sol.p
        )
        drift = open_loop.max_relative_energy_drift()
        if drift > 1e-8:
            raise AssertionError(f"open-loop drift {drift:.3e} for {j.as_tuple()}")

        fb = SaturatedFeedback.from_solution(sol)
        closed = simulate(build_system(j, slow), fb, chi0, 1e-3 / slow.omega0, orbital_period(slow))
        slack = 1e-9 * closed.energies[0]
        if closed.max_energy_increase() > slack:
            raise AssertionError(f"closed-loop energy rose by {closed.max_energy_increase():.3e} for {j.as_tuple()}")
        if closed.energies[-1] >= closed.energies[0]:
            raise AssertionError(f"closed-loop energy did not decay for {j.as_tuple()}")
        notes.append(f"{j.as_tuple()}: drift {drift:.1e}, V {closed.energies[0]:.2e} -> {closed.energies[-1]:.2e}")
    return "; ".join(notes)


def check_sweep(_: np.random.Generator) -> str:
    outputs = []
    with tempfile.TemporaryDirectory() as tmp:
        for jobs in (1, 8):
            settings = SweepSettings(n1=100, n2=100, jobs=jobs)
            pgm, csv = Path(tmp) / f"map{jobs}.pgm", Path(tmp) / f"map{jobs}.csv"
            write_sweep_outputs(run_sweep(settings), pgm, csv)
            outputs.append((pgm.read_bytes(), csv.read_bytes()))
    if outputs[0] != outputs[1]:
        raise AssertionError("sweep files differ between 1 and 8 workers")
    return "1 and 8 workers byte-identical"


CHECKS: list[tuple[str, Callable[[np.random.Generator], str]]] = [
    ("eigenvalue formula", check_eigenvalues),
    ("classification equivalence", check_classification),
    ("lyapunov residual", check_lyapunov_residual),
    ("positive definite existence", check_existence),
    ("similarity identity", check_similarity),
    ("characteristic factorization", check_factorization),
    ("energy behaviour", check_energy),
    ("deterministic sweep", check_sweep),
]


def main() -> int:
    rng = np.random.default_rng(SEED)
    failed = 0
    for name, check in CHECKS:
        start = time.perf_counter()
        try:
            detail = check(rng)
            status = "ok"
        except AssertionError as exc:
            detail = str(exc)
            status = "FAIL"
            failed += 1
        print(f"[{status:>4}] {name:<30} {time.perf_counter() - start:7.2f}s  {detail}")
    if failed:
        print(f"{failed} check(s) failed.")
        return 1
    print("All acceptance checks passed.")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
