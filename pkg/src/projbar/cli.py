"""Command-line front end.

Subcommands: ``solve``, ``verify``, ``approx``, ``curves`` and ``dual``.
Exit codes: 0 success, 2 invalid input, 3 solver non-convergence,
4 verification failure, 5 problem not two-dimensional, 6 point outside the
domain of the duality map.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from typing import List, Optional, Sequence

import numpy as np

from .duality import dual_point, dual_value, primal_from_dual_gradient
from .errors import (DualUndefinedError, InfeasibleStepError, NonConvergenceError,
                     OutsideBijectionError, ProjbarError)
from .geometry import ConvexSetOracle, RegionKind, outer_ellipsoid_radius, ray_radius, set_radius
from .ipm import AFFINE, PROJECTIVE, SolverTrace, analytic_center, optimal_lambda, solve
from .problem import ProblemFileError, load
from .verify import fd_consistency, gamma_samples, verify_lift_equivalence
from .core import nu_from_gamma

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NONCONVERGENCE = 3
EXIT_VIOLATION = 4
EXIT_NOT_2D = 5
EXIT_BIJECTION = 6

GAMMA_TOL = 1e-6
SEED_ENV = "PROJBAR_SEED"
TRACE_HEADER = ["iter", "obj", "decrement", "step_dist", "tau_hat", "gap"]
APPROX_HEADER = ["angle", "r_EF", "r_Ep", "r_X", "r_Gp", "r_GF"]
CURVES_HEADER = ["gamma", "lambda_star", "lambda_low", "norm_lambda_star", "norm_lambda_low"]


def fmt(v: float) -> str:
    """``%.15g`` with ``inf``/``-inf``/``nan`` spelled out."""
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return "%.15g" % v


def _fmt_vec(v) -> str:
    return "[" + ", ".join(fmt(x) for x in np.atleast_1d(v)) + "]"


def _parse_vec(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.replace(" ", "").split(",") if t], dtype=float)
    except ValueError:
        raise ProblemFileError(f"cannot parse vector {text!r}; expected comma-separated numbers") from None


def _write_rows(path: Optional[str], header: Sequence[str], rows: List[List[str]], out) -> None:
    if path is None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def trace_rows(trace: SolverTrace) -> List[List[str]]:
    return [[str(r.iteration), fmt(r.objective), fmt(r.decrement), fmt(r.step_distance),
             fmt(r.tau_estimate), fmt(r.gap_bound)] for r in trace.records]


def _trace_path(path: Optional[str], method: str, both: bool) -> Optional[str]:
    if path is None or not both:
        return path
    root, ext = os.path.splitext(path)
    return f"{root}.{method}{ext or '.csv'}"


def cmd_solve(args, out) -> int:
    prob = load(args.path).instance()
    methods = ["affine", "projective"] if args.method == "both" else [args.method]
    for name in methods:
        method = AFFINE if name == "affine" else PROJECTIVE
        try:
            trace = solve(prob, method, eps=args.eps)
        except NonConvergenceError as exc:
            print(f"{name}: no convergence: {exc}", file=sys.stderr)
            if exc.trace is not None and args.trace:
                _write_rows(_trace_path(args.trace, name, len(methods) > 1), TRACE_HEADER,
                            trace_rows(exc.trace), out)
            return EXIT_NONCONVERGENCE
        except InfeasibleStepError as exc:
            print(f"{name}: step failure: {exc}", file=sys.stderr)
            return EXIT_NONCONVERGENCE
        print(f"method: {name}", file=out)
        print(f"objective: {fmt(trace.objective)}", file=out)
        print(f"iterations: {trace.iterations}", file=out)
        print(f"gap_bound: {fmt(trace.gap_bound)}", file=out)
        print(f"x: {_fmt_vec(trace.x)}", file=out)
        if args.trace:
            _write_rows(_trace_path(args.trace, name, len(methods) > 1), TRACE_HEADER,
                        trace_rows(trace), out)
    return EXIT_OK


def _seed(args) -> int:
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise ProblemFileError(f"{SEED_ENV}={env!r} is not an integer") from None
    return args.seed


def cmd_verify(args, out) -> int:
    pf = load(args.path)
    b = pf.barrier
    seed = _seed(args)
    gs = gamma_samples(b, args.samples, seed)
    lift = verify_lift_equivalence(b, args.samples, seed)
    fd_points = [b.witness]
    try:
        fd_points.append(analytic_center(b, b.witness))
    except ProjbarError:
        pass
    fds = [fd_consistency(b, x, seed=seed) for x in fd_points]
    gamma_ok = gs.estimate <= b.gamma + GAMMA_TOL
    fd_ok = all(r.ok for r in fds)
    print(f"samples: {args.samples}", file=out)
    print(f"seed: {seed}", file=out)
    print(f"gamma_hat: {fmt(gs.estimate)}", file=out)
    print(f"gamma_declared: {fmt(b.gamma)}", file=out)
    print(f"gamma_check: {'PASS' if gamma_ok else 'FAIL'}", file=out)
    print(f"lift_equivalence: {'PASS' if lift.ok else 'FAIL'} "
          f"(worst affine ratio {fmt(lift.worst_affine_ratio)}, "
          f"worst projective ratio {fmt(lift.worst_projective_ratio)})", file=out)
    worst_fd = max(max(r.grad_err, r.hess_err, r.third_err, r.contracted_err or 0.0) for r in fds)
    print(f"fd_consistency: {'PASS' if fd_ok else 'FAIL'} (worst relative error {fmt(worst_fd)})", file=out)
    if gamma_ok and lift.ok and fd_ok:
        return EXIT_OK
    if not gamma_ok:
        i = gs.worst
        print(f"worst sample: x={_fmt_vec(gs.points[i])} h={_fmt_vec(gs.directions[i])} "
              f"ratio={fmt(gs.ratios[i])}", file=out)
    elif not lift.ok:
        z, h = lift.worst_affine_sample if not lift.affine_ok else lift.worst_projective_sample
        print(f"worst sample: x={_fmt_vec(z)} h={_fmt_vec(h)}", file=out)
    return EXIT_VIOLATION


def _center_or_none(b):
    try:
        return analytic_center(b, b.witness)
    except NonConvergenceError:
        return None


def approx_rows(b, x0, rays: int) -> List[List[str]]:
    """Radii per ray; without an analytic center (unbounded set) ``r_GF`` is ``inf``."""
    o = ConvexSetOracle.from_barrier(b)
    center = _center_or_none(b)
    rows = []
    for k in range(rays):
        ang = 2.0 * math.pi * k / rays
        h = np.array([math.cos(ang), math.sin(ang)])
        h[np.abs(h) < 1e-15] = 0.0
        rows.append([fmt(ang),
                     fmt(ray_radius(b, x0, h, RegionKind.CLASSIC_ELLIPSOID)),
                     fmt(ray_radius(b, x0, h, RegionKind.DIKIN_SET)),
                     fmt(set_radius(o, x0, h)),
                     fmt(ray_radius(b, x0, h, RegionKind.OUTER_SET)),
                     fmt(math.inf if center is None else outer_ellipsoid_radius(b, center, h, x0=x0))])
    return rows


def cmd_approx(args, out) -> int:
    pf = load(args.path)
    b = pf.barrier
    if b.dim != 2:
        print(f"approx needs a two-dimensional problem, got dimension {b.dim}", file=sys.stderr)
        return EXIT_NOT_2D
    if args.center is not None:
        x0 = _parse_vec(args.center)
        if x0.shape[0] != 2 or not b.contains(x0):
            raise ProblemFileError(f"--center {args.center!r} is not an interior point")
    elif pf.x0 is not None:
        x0 = pf.x0
    else:
        x0 = _center_or_none(b)
        x0 = b.witness if x0 is None else x0
    if args.rays < 1:
        raise ProblemFileError("--rays must be positive")
    _write_rows(args.out, APPROX_HEADER, approx_rows(b, x0, args.rays), out)
    return EXIT_OK


def parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (IndexError, ValueError):
        raise ProblemFileError(f"--gamma-grid {text!r}: expected a:b:n") from None
    if len(parts) != 3 or n < 1 or a < 0.0 or b < a:
        raise ProblemFileError(f"--gamma-grid {text!r}: need 0 <= a <= b and n >= 1")
    return np.linspace(a, b, n)


def curves_rows(grid) -> List[List[str]]:
    rows = []
    for g in grid:
        lam, low = optimal_lambda(float(g))
        k = math.sqrt(nu_from_gamma(float(g)))
        rows.append([fmt(g), fmt(lam), fmt(low), fmt(lam * k), fmt(low * k)])
    lam, low = optimal_lambda(AFFINE)
    # gamma -> infinity: unnormalized values vanish, normalized ones tend to the affine optimum
    rows.append(["inf", fmt(0.0), fmt(0.0), fmt(lam), fmt(low)])
    return rows


def cmd_curves(args, out) -> int:
    _write_rows(args.out, CURVES_HEADER, curves_rows(parse_grid(args.gamma_grid)), out)
    return EXIT_OK


def cmd_dual(args, out) -> int:
    pf = load(args.path)
    b = pf.barrier
    x = _parse_vec(args.point)
    if x.shape[0] != b.dim or not b.contains(x):
        raise ProblemFileError(f"--point {args.point!r} is not an interior point of dimension {b.dim}")
    try:
        p = dual_point(b, x)
    except OutsideBijectionError as exc:
        print(f"outside the duality map domain: {exc}", file=sys.stderr)
        return EXIT_BIJECTION
    try:
        val, x_min = dual_value(b, p, x_start=x)
    except DualUndefinedError as exc:
        print(f"dual function undefined: {exc}", file=sys.stderr)
        return EXIT_BIJECTION
    # f_*'(p) = -x / (1 + <x, p>) at the minimizer
    x_rt = primal_from_dual_gradient(p, -x_min / (1.0 + float(p @ x_min)))
    print(f"p: {_fmt_vec(p)}", file=out)
    print(f"f_star: {fmt(val)}", file=out)
    print(f"roundtrip_residual: {fmt(float(np.max(np.abs(x_rt - x))))}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="projbar", description="Projectively self-concordant barriers.")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve min <c, x> with a short-step method")
    s.add_argument("path")
    s.add_argument("--method", choices=["affine", "projective", "both"], default="projective")
    s.add_argument("--eps", type=float, default=1e-6)
    s.add_argument("--trace", default=None, help="CSV file for the iteration trace")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="sample the barrier inequalities")
    v.add_argument("path")
    v.add_argument("--samples", type=int, default=2000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("approx", help="per-ray radii of the inner and outer approximations (2-D)")
    a.add_argument("path")
    a.add_argument("--center", default=None, help="comma-separated interior point")
    a.add_argument("--rays", type=int, default=64)
    a.add_argument("--out", default=None)
    a.set_defaults(func=cmd_approx)

    c = sub.add_parser("curves", help="optimal decrements over a grid of gamma")
    c.add_argument("--gamma-grid", default="0:10:21")
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_curves)

    d = sub.add_parser("dual", help="map a point to the dual and evaluate the dual function")
    d.add_argument("path")
    d.add_argument("--point", required=True, help="comma-separated interior point")
    d.set_defaults(func=cmd_dual)
    return ap


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_PARSE
    try:
        return args.func(args, out)
    except ProblemFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except ProjbarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
