from __future__ import annotations

from datetime import datetime
import json
from pathlib import Path
import sys
from typing import IO, Any, Callable, Iterable, Sequence

import numpy as np


LogFn = Callable[[str], None]
ProgressFn = Callable[[float, str], None]


class AttitudeStabilityError(Exception):
    pass


class DimensionError(AttitudeStabilityError, ValueError):
    pass


class ShapeError(AttitudeStabilityError, ValueError):
    pass


class DomainError(AttitudeStabilityError, ValueError):
    pass


class ConsistencyError(AttitudeStabilityError, ValueError):
    pass


class NotApplicableError(AttitudeStabilityError, ValueError):
    pass


class ConstraintError(AttitudeStabilityError, ValueError):
    pass


class DegenerateError(AttitudeStabilityError, ValueError):
    pass


class StepSizeError(AttitudeStabilityError, ValueError):
    pass


class ConfigError(AttitudeStabilityError, ValueError):
    pass


class ConvergenceError(AttitudeStabilityError, RuntimeError):
    pass


class DivergenceError(AttitudeStabilityError, RuntimeError):
    def __init__(self, message: str, time_s: float) -> None:
        super().__init__(message)
        self.time_s = time_s


def noop_log(_: str) -> None:
    return None


def noop_progress(_: float, __: str) -> None:
    return None


def make_log_fn(log_file: Path | None = None, echo: bool = False) -> LogFn:
    """Timestamped logger: appends to ``log_file`` and/or echoes to stderr."""
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)

    def _log(msg: str) -> None:
        timestamp = datetime.now().strftime("%H:%M:%S")
        line = f"[{timestamp}] {msg}"
        if echo:
            print(line, file=sys.stderr, flush=True)
        if log_file is not None:
            with log_file.open("a", encoding="utf-8") as f:
                f.write(line + "\n")

    return _log


def format_float(value: float) -> str:
    return f"{float(value):.17g}"


def _format_cell(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(
    target: Path | IO[str],
    header: Sequence[str],
    rows: Iterable[Sequence[object]],
) -> None:
    """Comma separated, LF line endings, floats with 17 significant digits."""
    lines = [",".join(header)]
    lines.extend(",".join(_format_cell(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if isinstance(target, Path):
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        target.write(text)


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    raw = path.read_text(encoding="utf-8").splitlines()
    if not raw:
        raise ConfigError(f"Empty CSV file: {path}")
    header = raw[0].split(",")
    rows = [line.split(",") for line in raw[1:] if line]
    for idx, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise ConfigError(f"{path}:{idx}: expected {len(header)} fields, got {len(row)}")
    return header, rows


def write_pgm(path: Path, pixels: np.ndarray) -> None:
    """Binary greyscale PGM (P5), one byte per pixel, row 0 first."""
    if pixels.ndim != 2 or pixels.dtype != np.uint8:
        raise ShapeError("PGM pixels must be a 2-D uint8 array")
    height, width = pixels.shape
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    path.write_bytes(header + np.ascontiguousarray(pixels).tobytes())


def read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    tokens: list[bytes] = []
    pos = 0
    # magic, width, height, maxval; '#' comments allowed between tokens
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= len(data):
            raise ConfigError(f"Truncated PGM header in {path}")
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1
    if tokens[0] != b"P5":
        raise ConfigError(f"Not a binary PGM file: {path}")
    if not all(t.isdigit() for t in tokens[1:]):
        raise ConfigError(f"Malformed PGM header in {path}")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ConfigError(f"Unsupported PGM maxval {maxval} in {path}")
    body = data[pos : pos + width * height]
    if len(body) != width * height:
        raise ConfigError(f"Truncated PGM body in {path}")
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width).copy()


def write_json(payload: Any, target: Path | IO[str] | None = None) -> None:
    text = json.dumps(payload)
    if target is None:
        print(text, flush=True)
    elif isinstance(target, Path):
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", encoding="utf-8", newline="\n") as f:
            f.write(text + "\n")
    else:
        target.write(text + "\n")
