from __future__ import annotations

import argparse
from contextlib import contextmanager
from pathlib import Path
import sys
from typing import Any, Iterator, Sequence

from tqdm import tqdm

from .config import RunConfig, ensure_layout, load_run_config
from .control import SaturatedFeedback, feedback_matrix, max_stable_step, simulate, write_trajectory_csv
from .lyapunov import LyapunovSolution, NotFound, find_positive_definite
from .model import build_system, sigmas_from_inertia
from .stability import (
    classify,
    classify_numeric,
    closed_form_eigenvalues,
    condition_quantities,
    is_polynomially_stable,
    numeric_eigenvalues,
)
from .sweep import SweepSettings, run_sweep, write_sweep_outputs
from .utils import (
    AttitudeStabilityError,
    ConfigError,
    DegenerateError,
    DomainError,
    LogFn,
    ProgressFn,
    make_log_fn,
    noop_log,
    noop_progress,
    write_json,
)


# CLI-only switches that never reach RunConfig
_CLI_ONLY = {"command", "config", "verbose", "progress"}


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise ConfigError(message)


def _common_flags() -> argparse.ArgumentParser:
    parent = _ArgumentParser(add_help=False)
    body = parent.add_argument_group("body")
    body.add_argument("--jx", type=float, help="Principal moment J_x (kg*m^2)")
    body.add_argument("--jy", type=float, help="Principal moment J_y (kg*m^2)")
    body.add_argument("--jz", type=float, help="Principal moment J_z (kg*m^2)")
    body.add_argument("--beta1", type=float, help="Ratio J_x/J_y")
    body.add_argument("--beta2", type=float, help="Ratio J_y/J_z")
    orbit = parent.add_argument_group("orbit")
    orbit.add_argument("--r", type=float, help="Semimajor axis (m)")
    orbit.add_argument("--omega0", type=float, help="Orbital rate (rad/s)")
    parent.add_argument("--tol", type=float, help="Classification tolerance (default 1e-9)")
    parent.add_argument("--config", help="Flat JSON run configuration")
    parent.add_argument("--out", help="Write the result here instead of stdout")
    parent.add_argument("--verbose", action="store_true", help="Echo log lines to stderr")
    parent.add_argument("--log-file", help="Append log lines to this file")
    parent.add_argument("--progress", action="store_true", help="Show a progress bar on stderr")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="attstab",
        description="Stability analysis for the linearized gravity-gradient attitude model.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)
    common = _common_flags()
    sub.add_parser("classify", parents=[common], help="Closed-form stability verdict")
    sub.add_parser("eigs", parents=[common], help="Closed-form and numeric eigenvalues of A")
    sub.add_parser("lyap", parents=[common], help="Positive definite solution of A^T P + P A = 0")

    sim = sub.add_parser("simulate", parents=[common], help="RK4 simulation, saturated feedback by default")
    sim.add_argument("--x0", help="Initial state, 6 comma separated values")
    sim.add_argument("--dt", type=float, help="Step size (s), default 1e-3/omega0")
    sim.add_argument("--horizon", type=float, help="Horizon (s), default one orbital period")
    sim.add_argument("--kappa", type=float, help="Feedback gain (default 1)")
    sim.add_argument("--umax", help="Torque limits, 3 comma separated values (N*m)")
    sim.add_argument("--open-loop", action="store_true", default=None, help="Simulate with u = 0")

    sweep = sub.add_parser("sweep", parents=[common], help="(beta1, beta2) stability map")
    for name in ("b1min", "b1max", "b2min", "b2max"):
        sweep.add_argument(f"--{name}", type=float)
    sweep.add_argument("--n1", type=int, help="Cells along beta1 (default 400)")
    sweep.add_argument("--n2", type=int, help="Cells along beta2 (default 400)")
    sweep.add_argument("--pgm", help="Output map (binary PGM)")
    sweep.add_argument("--csv", help="Output cell list (CSV)")
    sweep.add_argument("--jobs", type=int, help="Worker processes (default $ATTSTAB_JOBS or physical cores)")
    sweep.add_argument("--verify", action="store_true", default=None, help="Cross-check cells numerically")
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        path = Path(args.config)
        cfg.apply(load_run_config(path), str(path))
    flags = {k: v for k, v in vars(args).items() if k not in _CLI_ONLY}
    cfg.apply(flags, "command line")
    return cfg


@contextmanager
def _progress_bar(enabled: bool, desc: str) -> Iterator[ProgressFn]:
    if not enabled:
        yield noop_progress
        return
    bar = tqdm(total=100, desc=desc, file=sys.stderr, unit="%", leave=False)

    def _progress(fraction: float, msg: str) -> None:
        bar.n = round(100.0 * min(max(fraction, 0.0), 1.0), 1)
        bar.set_postfix_str(msg, refresh=False)
        bar.refresh()

    try:
        yield _progress
    finally:
        bar.close()


def _pairs(values: Sequence[complex]) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in values]


def _cmd_classify(cfg: RunConfig, log: LogFn) -> dict[str, Any]:
    sigma = cfg.resolve_sigma()
    verdict = classify(sigma, cfg.tol)
    q = condition_quantities(sigma)
    log(f"sigma={sigma.as_tuple()} -> {verdict.verdict} (boundary={verdict.boundary})")
    return {
        "sigma": list(sigma.as_tuple()),
        "phi1": q["phi1"],
        "phi2": q["phi2"],
        "delta": q["delta"],
        "class": verdict.verdict,
        "boundary": verdict.boundary,
    }


def _cmd_eigs(cfg: RunConfig, log: LogFn) -> dict[str, Any]:
    j = cfg.resolve_inertia()
    rate = cfg.resolve_rate()
    sigma = sigmas_from_inertia(j)
    system = build_system(j, rate)
    closed = None
    if is_polynomially_stable(sigma, 0.0):
        closed = _pairs(closed_form_eigenvalues(sigma, rate).values)
    else:
        log("Closed-form eigenvalues do not apply; reporting numeric roots only.")
    numeric = sorted(numeric_eigenvalues(system), key=lambda z: (-z.imag, -z.real))
    return {
        "omega0": rate.omega0,
        "closed_form": closed,
        "numeric": _pairs(numeric),
        "class": classify_numeric(system, cfg.tol).verdict,
    }


def _solution_payload(sol: LyapunovSolution) -> dict[str, Any]:
    params = sol.params
    return {
        "found": True,
        "alpha1": params.alpha1,
        "alpha2": params.alpha2,
        "alpha3": params.alpha3,
        "alpha13": params.alpha13,
        "p2": sol.p2.tolist(),
        "p1": sol.p1.tolist(),
        "p3": sol.p3.tolist(),
        "is_pd": sol.is_pd,
        "residual": sol.residual,
        "residual_bound": sol.residual_bound,
        "p": sol.p.tolist(),
    }


def _cmd_lyap(cfg: RunConfig, log: LogFn) -> dict[str, Any]:
    j = cfg.resolve_inertia()
    rate = cfg.resolve_rate()
    result = find_positive_definite(j, rate, cfg.tol, log_fn=log)
    if isinstance(result, NotFound):
        return {
            "found": False,
            "reason": result.reason,
            "alpha13_min": result.alpha13_min,
            "alpha13_max": result.alpha13_max,
            "candidates_tried": result.candidates_tried,
        }
    return _solution_payload(result)


def _cmd_simulate(cfg: RunConfig, log: LogFn, progress: ProgressFn) -> dict[str, Any] | None:
    j = cfg.resolve_inertia()
    rate = cfg.resolve_rate()
    dt, horizon = cfg.resolve_timing(rate)
    try:
        found = find_positive_definite(j, rate, cfg.tol, log_fn=log) if rate.omega0 > 0.0 else None
    except DegenerateError:
        if not cfg.open_loop:
            raise
        found = None
    solution = found if isinstance(found, LyapunovSolution) else None

    feedback = None
    energy_matrix = None
    if cfg.open_loop:
        energy_matrix = feedback_matrix(solution) if solution is not None else None
        if solution is None:
            log("No positive definite P available; energies use the identity.")
    elif solution is None:
        raise DomainError("No positive definite Lyapunov solution for this body; use --open-loop")
    else:
        feedback = SaturatedFeedback.from_solution(solution, cfg.kappa, tuple(cfg.umax))

    system = build_system(j, rate)
    if feedback is not None and cfg.dt is None and dt > max_stable_step(feedback, system.b):
        dt = max_stable_step(feedback, system.b)
        log(f"Default step reduced to {dt:g} s for feedback gain {feedback.kappa:g}.")
    trajectory = simulate(
        system,
        feedback,
        cfg.x0,
        dt,
        horizon,
        energy_matrix=energy_matrix,
        log_fn=log,
        progress_fn=progress,
    )
    if cfg.out is None:
        write_trajectory_csv(trajectory, sys.stdout)
        return None
    write_trajectory_csv(trajectory, cfg.out)
    return {
        "closed_loop": feedback is not None,
        "steps": len(trajectory.times) - 1,
        "dt": dt,
        "horizon": horizon,
        "energy_initial": float(trajectory.energies[0]),
        "energy_final": float(trajectory.energies[-1]),
        "max_relative_energy_drift": trajectory.max_relative_energy_drift(),
        "max_energy_increase": trajectory.max_energy_increase(),
        "max_abs_u": [float(v) for v in abs(trajectory.controls).max(axis=0)],
        "trajectory": str(cfg.out),
    }


def _cmd_sweep(cfg: RunConfig, log: LogFn, progress: ProgressFn) -> dict[str, Any]:
    settings = SweepSettings(
        b1min=cfg.b1min,
        b1max=cfg.b1max,
        b2min=cfg.b2min,
        b2max=cfg.b2max,
        n1=cfg.n1,
        n2=cfg.n2,
        tol=cfg.tol,
        jobs=cfg.resolve_jobs(),
        verify=cfg.verify,
    )
    if cfg.pgm is None or cfg.csv is None:
        ensure_layout()
    pgm_path, csv_path = cfg.resolve_sweep_paths()
    result = run_sweep(settings, log_fn=log, progress_fn=progress)
    write_sweep_outputs(result, pgm_path, csv_path)
    log(f"Wrote {pgm_path} and {csv_path}")
    payload: dict[str, Any] = {
        "n1": settings.n1,
        "n2": settings.n2,
        "counts": result.counts(),
        "pgm": str(pgm_path),
        "csv": str(csv_path),
    }
    if settings.verify:
        payload["verified_cells"] = result.verified_cells
        payload["mismatches"] = result.mismatches
    return payload


def _dispatch(args: argparse.Namespace) -> None:
    cfg = _resolve_config(args)
    log = make_log_fn(cfg.log_file, echo=args.verbose) if (args.verbose or cfg.log_file) else noop_log
    log(f"attstab {args.command}")
    with _progress_bar(args.progress, args.command) as progress:
        if args.command == "classify":
            payload = _cmd_classify(cfg, log)
        elif args.command == "eigs":
            payload = _cmd_eigs(cfg, log)
        elif args.command == "lyap":
            payload = _cmd_lyap(cfg, log)
        elif args.command == "simulate":
            payload = _cmd_simulate(cfg, log, progress)
        else:
            payload = _cmd_sweep(cfg, log, progress)
    if payload is None:
        return
    if args.command == "simulate":
        write_json(payload)
    else:
        write_json(payload, cfg.out)


def _fail(message: object) -> None:
    text = " ".join(str(message).split()) or "unknown error"
    print(f"error: {text}", file=sys.stderr, flush=True)


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv`` and execute one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
        _dispatch(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except AttitudeStabilityError as exc:
        _fail(exc)
        return 2
    except OSError as exc:
        _fail(exc)
        return 3
    return 0
