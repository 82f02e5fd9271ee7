"""Command-line interface: ``ltvgain {analyze,l2e,bench,validate}``.

Exit codes: 0 converged / valid, 1 input error, 2 not converged.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys as _sys
import time
from typing import Optional, Sequence

from . import io
from .bench import run_bench, write_bench_csv
from .combined import combined_gain
from .errors import LtvGainError, ValidationError
from .gramian import l2e_gain, solve_lde, wc_disturbance_l2e
from .power import forward_gain, power_iterate
from .rde import GainBounds, bisect
from .signal import analysis_grid, random_signal

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2


def _fail(message: str) -> int:
    print(f"error: {message}", file=_sys.stderr)
    return EXIT_INPUT


def _load(path):
    try:
        return io.load_spec(path)
    except OSError as exc:
        raise ValidationError([f"{path}: {exc.strerror}"]) from exc


def _power_as_bounds(system, options, tol, seed) -> GainBounds:
    start = time.perf_counter()
    grid = analysis_grid(system, options.steps)
    res = power_iterate(
        system, random_signal(grid, system.n_d, seed), tol=tol, divergence_threshold=options.divergence_threshold
    )
    achieved, _, _ = forward_gain(system, res.d_star)
    return GainBounds(
        gamma_lb=res.gamma_star,
        gamma_ub=math.inf,  # the power iteration certifies no upper bound
        d_lb=res.d_star,
        achieved_gain=achieved,
        iterations=res.iterations,
        power_iterations=res.iterations,
        wall_time=time.perf_counter() - start,
        converged=res.termination == "tolerance_met",
        termination=res.termination,
        algorithm="power",
        tolerance=tol,
    )


def cmd_analyze(args) -> int:
    system, options = _load(args.spec)
    seed = options.seed if args.seed is None else args.seed
    if args.algo == "power":
        result = _power_as_bounds(system, options, args.tol, seed)
    elif args.algo == "bisect":
        result = bisect(
            system, args.tol, steps=options.steps, divergence_threshold=options.divergence_threshold, seed=seed
        )
    else:
        result = combined_gain(
            system, args.tol, seed=seed, steps=options.steps, divergence_threshold=options.divergence_threshold
        )
    dist_path = None
    if args.dist_out and result.d_lb is not None:
        io.write_signal_csv(args.dist_out, result.d_lb)
        dist_path = args.dist_out
    elif args.dist_out:
        print("warning: no disturbance available to write", file=_sys.stderr)
    report = io.report_dict(result, disturbance_csv=dist_path)
    text = json.dumps(report, indent=2)
    if args.out:
        io.write_report(args.out, report)
    else:
        print(text)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _parse_taus(spec: str, times) -> list[float]:
    if spec == "all":
        return list(times)
    try:
        return [float(x) for x in spec.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError([f"--tau: expected 'all' or comma-separated numbers, got {spec!r}"]) from exc


def cmd_l2e(args) -> int:
    system, options = _load(args.spec)
    if system.n_I != 0:
        return _fail(
            f"the Gramian analysis applies only to systems without an L2 output (n_I = 0); this spec has n_I={system.n_I}"
        )
    if system.n_E < 1:
        return _fail("the Gramian analysis needs a terminal output (n_E >= 1)")
    trace = solve_lde(system, options.steps)
    taus = _parse_taus(args.tau, trace.times)
    if not taus:
        return _fail("--tau: no values given")
    gains, dirs = [], []
    for tau in taus:
        try:
            gain, v1 = l2e_gain(trace, tau)
        except ValueError as exc:
            return _fail(str(exc))
        gains.append(args.budget * gain)
        dirs.append(v1)
    if args.out:
        io.write_profile_csv(args.out, taus, gains, dirs)
    else:
        for tau, g in zip(taus, gains):
            print(f"{tau:.17g},{g:.17g}")
    if args.dist_out:
        if len(taus) != 1:
            return _fail("--dist-out needs exactly one --tau value")
        io.write_signal_csv(args.dist_out, wc_disturbance_l2e(system, trace, taus[0]))
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("orders must be positive integers")
    return values


def cmd_bench(args) -> int:
    rows = run_bench(
        args.orders,
        samples=args.samples,
        horizon=args.horizon,
        seed=args.seed,
        tol=None if args.no_compare else args.tol,
        jobs=args.jobs,
        steps=args.steps,
    )
    if args.out:
        write_bench_csv(args.out, rows)
    for r in rows:
        line = f"n_x={r.order} T_RDE={r.t_rde:.4g}s T_PI={r.t_pi:.4g}s ratio={r.ratio:.3g}"
        if r.t_bisect is not None:
            line += f" power={r.t_power:.3g}s bisect={r.t_bisect:.3g}s combined={r.t_combined:.3g}s"
        print(line)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        _load(args.spec)
    except ValidationError as exc:
        for v in exc.violations:
            print(f"invalid: {v}")
        return EXIT_INPUT
    print("valid")
    return EXIT_OK


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltvgain", description="Finite-horizon induced gains of LTV systems.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="bound the induced gain of a system spec")
    p.add_argument("spec")
    p.add_argument("--tol", type=_positive, default=1e-2)
    p.add_argument("--algo", choices=("power", "bisect", "combined"), default="combined")
    p.add_argument("--out", help="report JSON path (stdout when omitted)")
    p.add_argument("--dist-out", help="CSV path for the worst-case disturbance")
    p.add_argument("--seed", type=int, default=None, help="overrides the spec seed")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("l2e", help="Gramian gain profile of a system without L2 output")
    p.add_argument("spec")
    p.add_argument("--tau", default="all", help="'all' or comma-separated horizons")
    p.add_argument("--budget", type=_positive, default=1.0, help="disturbance energy scale applied to the gains")
    p.add_argument("--out", help="profile CSV path (stdout when omitted)")
    p.add_argument("--dist-out", help="CSV path for the worst-case disturbance at a single tau")
    p.set_defaults(func=cmd_l2e)

    p = sub.add_parser("bench", help="time Riccati sweeps against power-iteration steps")
    p.add_argument("--orders", type=_int_list, default=[10, 50, 100])
    p.add_argument("--samples", type=int, default=3)
    p.add_argument("--horizon", type=_positive, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=_positive, default=1e-2)
    p.add_argument("--no-compare", action="store_true", help="skip timing the three full algorithms")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="CSV path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="check a system spec")
    p.add_argument("spec")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=_sys.stderr)
        return EXIT_INPUT
    except LtvGainError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    _sys.exit(main())
