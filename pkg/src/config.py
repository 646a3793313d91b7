from __future__ import annotations

from dataclasses import dataclass, fields
import json
import math
from pathlib import Path
import os
from typing import Any, Mapping

import psutil

from .control import DEFAULT_KAPPA, DEFAULT_U_MAX
from .model import (
    OrbitalRate,
    SigmaTriple,
    SpacecraftInertia,
    inertia_from_beta,
    orbital_period,
    orbital_rate,
    sigmas_from_beta,
    sigmas_from_inertia,
)
from .stability import DEFAULT_TOL
from .sweep import DEFAULT_BETA_RANGE, DEFAULT_RESOLUTION
from .utils import ConfigError


APP_ROOT = Path(__file__).resolve().parents[1]
SRC_ROOT = APP_ROOT / "src"
OUTPUTS_DIR = APP_ROOT / "outputs"
CONFIGS_DIR = APP_ROOT / "configs"
LOGS_DIR = APP_ROOT / "logs"
JOBS_ENV_VAR = "ATTSTAB_JOBS"
DEFAULT_X0 = (0.01, 0.01, 0.01, 0.0, 0.0, 0.0)
DEFAULT_DT_FACTOR = 1e-3  # dt = DEFAULT_DT_FACTOR / omega0
DEFAULT_PGM_NAME = "sweep.pgm"
DEFAULT_CSV_NAME = "sweep.csv"


def ensure_layout() -> None:
    for path in (OUTPUTS_DIR, LOGS_DIR):
        path.mkdir(parents=True, exist_ok=True)


def get_default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV_VAR, "").strip()
    if raw:
        try:
            jobs = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{JOBS_ENV_VAR} must be an integer, got {raw!r}") from exc
        if jobs < 1:
            raise ConfigError(f"{JOBS_ENV_VAR} must be at least 1, got {jobs}")
        return jobs
    return max(1, psutil.cpu_count(logical=False) or 1)


def parse_vector(value: Any, size: int, name: str) -> tuple[float, ...]:
    """Accepts "a,b,c" strings (CLI) or JSON lists."""
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",")]
    elif isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        raise ConfigError(f"{name} must be a comma separated list or a JSON array")
    if len(parts) != size:
        raise ConfigError(f"{name} needs {size} values, got {len(parts)}")
    try:
        out = tuple(float(p) for p in parts)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} has a non-numeric entry: {value!r}") from exc
    if not all(math.isfinite(v) for v in out):
        raise ConfigError(f"{name} entries must be finite")
    return out


@dataclass(slots=True)
class RunConfig:
    jx: float | None = None
    jy: float | None = None
    jz: float | None = None
    beta1: float | None = None
    beta2: float | None = None
    r: float | None = None
    omega0: float | None = None
    tol: float = DEFAULT_TOL
    out: Path | None = None
    # simulate
    x0: tuple[float, ...] = DEFAULT_X0
    dt: float | None = None
    horizon: float | None = None
    kappa: float = DEFAULT_KAPPA
    umax: tuple[float, ...] = DEFAULT_U_MAX
    open_loop: bool = False
    # sweep
    b1min: float = DEFAULT_BETA_RANGE[0]
    b1max: float = DEFAULT_BETA_RANGE[1]
    b2min: float = DEFAULT_BETA_RANGE[0]
    b2max: float = DEFAULT_BETA_RANGE[1]
    n1: int = DEFAULT_RESOLUTION
    n2: int = DEFAULT_RESOLUTION
    pgm: Path | None = None
    csv: Path | None = None
    jobs: int | None = None
    verify: bool = False
    # logging
    log_file: Path | None = None

    def apply(self, values: Mapping[str, Any], source: str) -> None:
        """Overwrite fields from ``values``; None entries are skipped."""
        known = {f.name for f in fields(self)}
        for key, value in values.items():
            if key not in known:
                raise ConfigError(f"Unknown key {key!r} in {source}")
            if value is None:
                continue
            setattr(self, key, _coerce(key, value))

    def _has_inertia(self) -> bool:
        return any(v is not None for v in (self.jx, self.jy, self.jz))

    def _has_ratios(self) -> bool:
        return any(v is not None for v in (self.beta1, self.beta2))

    def _check_body_source(self) -> None:
        if self._has_inertia() and self._has_ratios():
            raise ConfigError("Give either --jx/--jy/--jz or --beta1/--beta2, not both")
        if self._has_inertia():
            if None in (self.jx, self.jy, self.jz):
                raise ConfigError("--jx, --jy and --jz must all be given")
        elif self._has_ratios():
            if None in (self.beta1, self.beta2):
                raise ConfigError("--beta1 and --beta2 must both be given")
        else:
            raise ConfigError("An inertia (--jx/--jy/--jz) or a ratio pair (--beta1/--beta2) is required")

    def resolve_sigma(self) -> SigmaTriple:
        self._check_body_source()
        if self._has_inertia():
            return sigmas_from_inertia(SpacecraftInertia(self.jx, self.jy, self.jz))
        return sigmas_from_beta(self.beta1, self.beta2)

    def resolve_inertia(self) -> SpacecraftInertia:
        self._check_body_source()
        if self._has_inertia():
            return SpacecraftInertia(self.jx, self.jy, self.jz)
        return inertia_from_beta(self.beta1, self.beta2)

    def resolve_rate(self) -> OrbitalRate:
        if (self.r is None) == (self.omega0 is None):
            raise ConfigError("Exactly one of --r or --omega0 is required")
        if self.r is not None:
            return orbital_rate(self.r)
        return OrbitalRate(self.omega0)

    def resolve_timing(self, rate: OrbitalRate) -> tuple[float, float]:
        """(dt, horizon), defaulting to 1e-3/omega0 and one orbital period."""
        if rate.omega0 <= 0.0 and (self.dt is None or self.horizon is None):
            raise ConfigError("--dt and --horizon are required when omega0 = 0")
        dt = self.dt if self.dt is not None else DEFAULT_DT_FACTOR / rate.omega0
        horizon = self.horizon if self.horizon is not None else orbital_period(rate)
        return dt, horizon

    def resolve_jobs(self) -> int:
        return self.jobs if self.jobs is not None else get_default_jobs()

    def resolve_sweep_paths(self) -> tuple[Path, Path]:
        return self.pgm or OUTPUTS_DIR / DEFAULT_PGM_NAME, self.csv or OUTPUTS_DIR / DEFAULT_CSV_NAME


_FLOAT_KEYS = {
    "jx", "jy", "jz", "beta1", "beta2", "r", "omega0", "tol", "dt", "horizon",
    "kappa", "b1min", "b1max", "b2min", "b2max",
}
_INT_KEYS = {"n1", "n2", "jobs"}
_BOOL_KEYS = {"open_loop", "verify"}
_PATH_KEYS = {"out", "pgm", "csv", "log_file"}


def _coerce(key: str, value: Any) -> Any:
    if key == "x0":
        return parse_vector(value, 6, "x0")
    if key == "umax":
        return parse_vector(value, 3, "umax")
    if key in _PATH_KEYS:
        return Path(value)
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be true or false")
        return value
    try:
        if key in _INT_KEYS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError(value)
            return int(value)
        if key in _FLOAT_KEYS:
            if isinstance(value, bool):
                raise ValueError(value)
            out = float(value)
            if not math.isfinite(out):
                raise ValueError(value)
            return out
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key} has an invalid value: {value!r}") from exc
    return value


def load_run_config(path: Path) -> dict[str, Any]:
    """Flat JSON object whose keys are the long flag names (dashes as underscores)."""
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config file {path} is not valid JSON: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    check = RunConfig()
    check.apply(payload, str(path))
    return payload
