"""(beta1, beta2) stability-region sweep.

Each cell is classified from its inertia ratios. Rows are evaluated by
independent workers and gathered into a pre-sized grid, so the files written
afterwards do not depend on the worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
import math
from pathlib import Path

import numpy as np

from .model import OrbitalRate, build_system, inertia_from_beta, sigmas_from_beta
from .stability import (
    DEFAULT_TOL,
    LYAPUNOV_STABLE,
    POLYNOMIALLY_STABLE_ONLY,
    UNSTABLE,
    VERDICTS,
    boundary_margin,
    classify,
    classify_numeric,
)
from .utils import (
    ConfigError,
    DomainError,
    LogFn,
    ProgressFn,
    noop_log,
    noop_progress,
    read_csv,
    write_csv,
    write_pgm,
)


DEFAULT_BETA_RANGE = (0.3, 2.5)
DEFAULT_RESOLUTION = 400
VERIFY_MARGIN = 1e-6  # cells closer than this to a condition boundary are not cross-checked
SWEEP_HEADER = ("beta1", "beta2", "class", "boundary")
PGM_LEVELS = {UNSTABLE: 0, POLYNOMIALLY_STABLE_ONLY: 128, LYAPUNOV_STABLE: 255}


@dataclass(slots=True)
class SweepSettings:
    b1min: float = DEFAULT_BETA_RANGE[0]
    b1max: float = DEFAULT_BETA_RANGE[1]
    b2min: float = DEFAULT_BETA_RANGE[0]
    b2max: float = DEFAULT_BETA_RANGE[1]
    n1: int = DEFAULT_RESOLUTION
    n2: int = DEFAULT_RESOLUTION
    tol: float = DEFAULT_TOL
    jobs: int = 1
    verify: bool = False

    def validate(self) -> None:
        for name in ("b1min", "b1max", "b2min", "b2max"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0.0:
                raise DomainError(f"{name} must be a finite positive ratio, got {value}")
        if self.b1min > self.b1max or self.b2min > self.b2max:
            raise DomainError("Sweep window minimum exceeds its maximum")
        if self.n1 < 1 or self.n2 < 1:
            raise DomainError(f"Sweep resolution must be at least 1x1, got {self.n1}x{self.n2}")
        if self.jobs < 1:
            raise DomainError(f"Worker count must be at least 1, got {self.jobs}")

    def beta1_axis(self) -> np.ndarray:
        return np.linspace(self.b1min, self.b1max, self.n1)

    def beta2_axis(self) -> np.ndarray:
        return np.linspace(self.b2min, self.b2max, self.n2)


@dataclass(slots=True)
class SweepResult:
    beta1: np.ndarray  # (n1,) ascending
    beta2: np.ndarray  # (n2,) ascending
    verdicts: list[list[str]]  # [i2][i1], i2 follows beta2 ascending
    boundary: list[list[bool]]
    verified_cells: int = 0
    mismatches: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.beta2), len(self.beta1)

    def counts(self) -> dict[str, int]:
        totals = {v: 0 for v in VERDICTS}
        for row in self.verdicts:
            for v in row:
                totals[v] += 1
        return totals

    def to_pixels(self) -> np.ndarray:
        """Image rows top to bottom, so row 0 holds the largest beta2."""
        pixels = np.empty(self.shape, dtype=np.uint8)
        for out_row, i2 in enumerate(reversed(range(len(self.beta2)))):
            pixels[out_row] = [PGM_LEVELS[v] for v in self.verdicts[i2]]
        return pixels

    def rows(self) -> list[tuple[float, float, str, bool]]:
        out = []
        for i2 in reversed(range(len(self.beta2))):
            for i1, b1 in enumerate(self.beta1):
                out.append((float(b1), float(self.beta2[i2]), self.verdicts[i2][i1], self.boundary[i2][i1]))
        return out


def classify_row(beta1: tuple[float, ...], beta2: float, tol: float, verify: bool) -> tuple[list[str], list[bool], int, int]:
    """Verdicts for one beta2 row; module level so worker processes can pickle it."""
    verdicts: list[str] = []
    flags: list[bool] = []
    checked = mismatches = 0
    for b1 in beta1:
        sigma = sigmas_from_beta(b1, beta2)
        cls = classify(sigma, tol)
        verdicts.append(cls.verdict)
        flags.append(cls.boundary)
        if verify and boundary_margin(sigma) >= VERIFY_MARGIN:
            checked += 1
            numeric = classify_numeric(build_system(inertia_from_beta(b1, beta2), OrbitalRate(1.0)), tol)
            if numeric.verdict != cls.verdict:
                mismatches += 1
    return verdicts, flags, checked, mismatches


def run_sweep(
    settings: SweepSettings,
    log_fn: LogFn | None = None,
    progress_fn: ProgressFn | None = None,
) -> SweepResult:
    log = log_fn or noop_log
    progress = progress_fn or noop_progress
    settings.validate()
    beta1 = settings.beta1_axis()
    beta2 = settings.beta2_axis()
    b1_values = tuple(float(b) for b in beta1)
    n2 = len(beta2)
    verdicts: list[list[str]] = [[] for _ in range(n2)]
    boundary: list[list[bool]] = [[] for _ in range(n2)]
    checked = mismatches = 0

    log(f"Sweeping {settings.n1}x{settings.n2} cells with {settings.jobs} worker(s).")
    if settings.jobs == 1:
        for i2, b2 in enumerate(beta2):
            verdicts[i2], boundary[i2], c, m = classify_row(b1_values, float(b2), settings.tol, settings.verify)
            checked += c
            mismatches += m
            progress((i2 + 1) / n2, f"Row {i2 + 1}/{n2}")
    else:
        with ProcessPoolExecutor(max_workers=settings.jobs) as pool:
            futures = {
                pool.submit(classify_row, b1_values, float(b2), settings.tol, settings.verify): i2
                for i2, b2 in enumerate(beta2)
            }
            for done, future in enumerate(as_completed(futures), start=1):
                i2 = futures[future]
                verdicts[i2], boundary[i2], c, m = future.result()
                checked += c
                mismatches += m
                progress(done / n2, f"Row {done}/{n2}")

    result = SweepResult(
        beta1=beta1,
        beta2=beta2,
        verdicts=verdicts,
        boundary=boundary,
        verified_cells=checked,
        mismatches=mismatches,
    )
    log(f"Sweep finished: {result.counts()}")
    if settings.verify:
        log(f"Numeric cross-check: {mismatches} mismatches over {checked} cells.")
    return result


def write_sweep_outputs(result: SweepResult, pgm_path: Path | None, csv_path: Path | None) -> None:
    if pgm_path is not None:
        write_pgm(pgm_path, result.to_pixels())
    if csv_path is not None:
        write_csv(csv_path, SWEEP_HEADER, result.rows())


def read_sweep_csv(path: Path) -> list[tuple[float, float, str, bool]]:
    header, rows = read_csv(path)
    if tuple(header) != SWEEP_HEADER:
        raise ConfigError(f"Unexpected sweep header in {path}: {','.join(header)}")
    out = []
    for b1, b2, verdict, flag in rows:
        if verdict not in VERDICTS or flag not in ("true", "false"):
            raise ConfigError(f"Malformed sweep row in {path}: {b1},{b2},{verdict},{flag}")
        out.append((float(b1), float(b2), verdict, flag == "true"))
    return out
