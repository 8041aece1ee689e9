"""
Command-line entry point.

Subcommands: ``restore``, ``solve``, ``metrics``, ``synth``, ``spectrum``.
Commands that write files also write ``<output>.manifest.json`` recording
the argument vector and every resolved parameter.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .elliptic import (
    MAX_DENSE_UNKNOWNS,
    DivergenceError,
    EllipticMode,
    EllipticProblem,
    SolverConfig,
    auto_omega,
    estimate_lambda_max,
    solve_direct,
    solve_richardson,
)
from .grid import DEFAULT_H, BoundaryRule
from .imageio import ImageFormatError, ShadingKind, ShadingSpec, apply_shading, load_luminance, save_gray
from .metrics import SSIM_WINDOWS, metric_report
from .restore import RestoreError, RestoreParams, UpdateRule, cost_field, restore

__all__ = ["main", "build_parser"]


def _positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not (np.isfinite(x) and x > 0):
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return x


def _nonnegative_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not (np.isfinite(x) and x >= 0):
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return x


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return n


def _omega(text: str):
    if text == "auto":
        return "auto"
    return _positive_float(text)


def _fraction(text: str) -> float:
    x = _nonnegative_float(text)
    if x >= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1), got {text}")
    return x


def _add_problem_args(p: argparse.ArgumentParser, with_mode: bool = True) -> None:
    p.add_argument("--sigma", type=_positive_float, default=1e-6, help="regularization sigma (default 1e-6)")
    p.add_argument("--h", type=_positive_float, default=DEFAULT_H, help="mesh spacing (default 2.0)")
    if with_mode:
        p.add_argument("--mode", choices=[m.value for m in EllipticMode], default="anchored")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--omega", type=_omega, default="auto", help="relaxation, number or 'auto' (default)")
    p.add_argument("--tol", type=_positive_float, default=1e-8)
    p.add_argument("--max-iter", type=_positive_int, default=500)
    p.add_argument("--u-min", type=_positive_float, default=1e-8)
    p.add_argument("--u-max", type=_positive_float, default=1e8)
    p.add_argument(
        "--literal-sign",
        action="store_true",
        help="Neumann mode only: iterate u - omega*(lap u - c u) as the prototype code does",
    )
    p.add_argument("--boundary", choices=[r.value for r in BoundaryRule], default="interior-zero")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="illumpde", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("restore", help="run the illumination restoration")
    p.add_argument("input")
    p.add_argument("output")
    _add_problem_args(p)
    _add_solver_args(p)
    p.add_argument("--dt", type=_nonnegative_float, default=1e-4)
    p.add_argument("--steps", type=_positive_int, default=20)
    p.add_argument("--update", choices=[r.value for r in UpdateRule], default="divergence")
    p.add_argument("--no-clamp", action="store_true", help="do not clamp L into [0, 1] after each step")
    p.add_argument("--warm-start", action="store_true")
    p.add_argument("--trace", help="JSON-lines trace path (default <output>.trace.jsonl)")
    p.add_argument("--trace-csv", help="optional CSV copy of the trace")
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("solve", help="solve one elliptic subproblem with b = L**2")
    p.add_argument("input")
    p.add_argument("output", help="solution u as .npy")
    _add_problem_args(p)
    _add_solver_args(p)
    p.add_argument("--report", help="SolveReport JSON path (default <output>.report.json)")
    p.add_argument("--oracle", action="store_true", help="also run the dense direct solve and print the gap")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("metrics", help="PSNR / SSIM / MSE of TEST against REFERENCE")
    p.add_argument("reference")
    p.add_argument("test")
    p.add_argument("--data-range", type=_positive_float, default=255.0)
    p.add_argument("--ssim-window", choices=SSIM_WINDOWS, default="gauss11")
    p.add_argument("--json", dest="json_path", help="also write the report as JSON")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("synth", help="apply synthetic shading to a clean image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--kind", choices=[k.value for k in ShadingKind], default="ramp")
    p.add_argument("--strength", type=_fraction, default=0.5)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("spectrum", help="Gershgorin bound, power estimate and auto omega")
    p.add_argument("input")
    _add_problem_args(p, with_mode=False)
    p.add_argument("--iters", type=_positive_int, default=100)
    p.add_argument("--omega", type=_positive_float, help="check a relaxation value against 2/lambda_max")
    p.add_argument("--json", dest="json_path")
    p.set_defaults(func=cmd_spectrum)
    return parser


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        omega=args.omega,
        tol=args.tol,
        max_iter=args.max_iter,
        u_min=args.u_min,
        u_max=args.u_max,
        literal_sign=args.literal_sign,
    )


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_manifest(output, argv, params: dict, outputs: dict, started: float) -> None:
    manifest = {
        "tool": "illumpde",
        "version": __version__,
        "argv": list(argv),
        "params": params,
        "outputs": outputs,
        "duration_s": round(time.perf_counter() - started, 6),
    }
    _write_text(f"{output}.manifest.json", json.dumps(manifest, indent=2) + "\n")


def cmd_restore(args) -> int:
    started = time.perf_counter()
    L0 = load_luminance(args.input, h=args.h)
    params = RestoreParams(
        sigma=args.sigma,
        dt=args.dt,
        global_steps=args.steps,
        solver=_solver_config(args),
        mode=args.mode,
        update_rule=args.update,
        boundary=args.boundary,
        clamp_illumination=not args.no_clamp,
        warm_start=args.warm_start,
    )
    trace_path = args.trace or f"{args.output}.trace.jsonl"
    try:
        L, trace = restore(L0, params)
    except RestoreError as exc:
        _write_text(trace_path, exc.trace.to_jsonl())
        print(f"error: {exc}", file=sys.stderr)
        return 1
    save_gray(L, args.output)
    _write_text(trace_path, trace.to_jsonl())
    outputs = {"image": args.output, "trace": trace_path}
    if args.trace_csv:
        _write_text(args.trace_csv, trace.to_csv())
        outputs["trace_csv"] = args.trace_csv
    _write_manifest(
        args.output,
        args.argv,
        {
            "input": args.input,
            "h": args.h,
            "sigma": params.sigma,
            "dt": params.dt,
            "global_steps": params.global_steps,
            "mode": params.mode.value,
            "update_rule": params.update_rule.value,
            "boundary": params.boundary.value,
            "clamp_illumination": params.clamp_illumination,
            "warm_start": params.warm_start,
            "solver": _solver_dict(params.solver),
        },
        outputs,
        started,
    )
    return 0


def _solver_dict(cfg: SolverConfig) -> dict:
    return {
        "omega": cfg.omega,
        "tol": cfg.tol,
        "max_iter": cfg.max_iter,
        "u_min": cfg.u_min,
        "u_max": cfg.u_max,
        "literal_sign": cfg.literal_sign,
    }


def cmd_solve(args) -> int:
    started = time.perf_counter()
    L = load_luminance(args.input, h=args.h)
    problem = EllipticProblem(cost_field(L), args.sigma, args.mode)
    if args.oracle:
        if problem.mode is not EllipticMode.ANCHORED:
            print("error: --oracle needs --mode anchored", file=sys.stderr)
            return 1
        m = (L.rows - 2) * (L.cols - 2)
        if m > MAX_DENSE_UNKNOWNS:
            print(
                f"error: refusing dense oracle for {m} interior unknowns (limit {MAX_DENSE_UNKNOWNS})",
                file=sys.stderr,
            )
            return 1
    config = _solver_config(args)
    u, report = solve_richardson(problem, config=config, boundary=args.boundary)
    report_path = args.report or f"{args.output}.report.json"
    np.save(args.output, u.values, allow_pickle=False)
    _write_text(report_path, json.dumps(report.to_dict(), indent=2) + "\n")
    print(
        f"iterations: {report.iterations}  converged: {report.converged}  "
        f"step: {report.final_step_inf_norm:.3e}  clip events: {report.clip_events}"
    )
    params = {
        "input": args.input,
        "h": args.h,
        "sigma": args.sigma,
        "mode": problem.mode.value,
        "boundary": args.boundary,
        "solver": _solver_dict(config),
    }
    outputs = {"u": args.output, "report": report_path}
    if args.oracle:
        gap = float(np.max(np.abs(u.values - solve_direct(problem).values)))
        print(f"oracle linf gap: {gap:.6g}")
        params["oracle_linf_gap"] = gap
    _write_manifest(args.output, args.argv, params, outputs, started)
    return 0


def cmd_metrics(args) -> int:
    ref = load_luminance(args.reference)
    test = load_luminance(args.test)
    if ref.shape != test.shape:
        print(f"error: image shapes differ: {ref.shape} vs {test.shape}", file=sys.stderr)
        return 1
    scale = args.data_range
    report = metric_report(ref.values * scale, test.values * scale, args.data_range, args.ssim_window)
    print(report.format_lines())
    print(f"SSIM window: {report.ssim_window}")
    if args.json_path:
        _write_text(args.json_path, json.dumps(report.to_dict(), indent=2) + "\n")
    return 0


def cmd_synth(args) -> int:
    started = time.perf_counter()
    clean = load_luminance(args.input)
    spec = ShadingSpec(args.kind, args.strength, args.seed)
    save_gray(apply_shading(clean, spec), args.output)
    _write_manifest(
        args.output,
        args.argv,
        {"input": args.input, "kind": spec.kind.value, "strength": spec.strength, "seed": spec.seed},
        {"image": args.output},
        started,
    )
    return 0


def cmd_spectrum(args) -> int:
    L = load_luminance(args.input, h=args.h)
    problem = EllipticProblem(cost_field(L), args.sigma)
    est = estimate_lambda_max(problem, iters=args.iters)
    omega = auto_omega(problem)
    result = {
        "gershgorin_bound": est.gershgorin_bound,
        "power_estimate": est.estimate,
        "auto_omega": omega,
        "omega_limit": 2.0 / est.gershgorin_bound,
    }
    print(f"gershgorin bound: {est.gershgorin_bound:.6e}")
    print(f"power estimate:   {est.estimate:.6e}  ({args.iters} iterations)")
    print(f"auto omega:       {omega:.6e}")
    if args.omega is not None:
        # The power estimate never exceeds lambda_max, so 2/estimate is an upper limit.
        if args.omega < 2.0 / est.gershgorin_bound:
            verdict = "satisfies"
        elif args.omega >= 2.0 / est.estimate:
            verdict = "violates"
        else:
            verdict = "cannot confirm"
        print(f"omega {args.omega:.6e} {verdict} 0 < omega < 2/lambda_max")
        result["omega_checked"] = args.omega
        result["omega_verdict"] = verdict
    if args.json_path:
        _write_text(args.json_path, json.dumps(result, indent=2) + "\n")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    try:
        return args.func(args)
    except (OSError, ImageFormatError, ValueError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
