"""Command-line front end: ``designforge <command> [flags]``.

Exit codes: 0 success, 2 usage error, 3 verification failure, 4 solver
non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import os
import sys
import time
from contextlib import nullcontext

import numpy as np

from . import io as dio
from .core import DEFAULT_TOL, DesignProblem, estimate_K, verify_design
from .errors import ArgumentError, ConvergenceError, DesignForgeError
from .interval import interval_design
from .orthopoly import JacobiParams
from .refine import RefinementConfig
from .sphere.design import min_design_size, sphere_design
from .sphere.graph import SphereGraphParams

__all__ = ["main", "build_parser", "scan_sizes", "find_min_size", "EXIT_OK", "EXIT_USAGE",
           "EXIT_VERIFY", "EXIT_CONVERGENCE"]

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_CONVERGENCE = 0, 2, 3, 4
SCAN_CONFIG = RefinementConfig(max_iterations=100, restarts=3)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(kind):
    def parse(text):
        value = kind(text)
        if not value > 0:
            raise argparse.ArgumentTypeError(f"expected a positive value, got {text}")
        return value
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="designforge", allow_abbrev=False,
                     description="Generate and verify equal-weight designs on intervals and spheres.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *, jacobi=False, sphere=False, size=False, out=False):
        if jacobi:
            p.add_argument("--alpha", type=float, default=None, help="Jacobi exponent at x = 1")
            p.add_argument("--beta", type=float, default=None, help="Jacobi exponent at x = -1")
        if sphere:
            p.add_argument("--d", type=int, default=None, help="sphere dimension (S^d in R^{d+1})")
        if size:
            p.add_argument("--N", type=int, default=None, help="number of points")
            p.add_argument("--auto-N", action="store_true", help="choose N from the size heuristic")
            p.add_argument("--seed", type=int, default=0, help="seed for refinement restarts")
        p.add_argument("--tol", type=_positive(float), default=None, help="residual tolerance")
        if out:
            p.add_argument("--out", default=None, help="output path (stdout when omitted)")
            p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("gen-interval", allow_abbrev=False, help="equal-weight design for mu_{alpha,beta}")
    common(p, jacobi=True, size=True, out=True)
    p.add_argument("--n", type=int, required=True, help="polynomial degree")

    p = sub.add_parser("gen-sphere", allow_abbrev=False, help="equal-weight spherical design")
    common(p, sphere=True, size=True, out=True)
    p.add_argument("--n", type=int, required=True, help="design strength")
    p.add_argument("--A", type=_positive(float), default=SphereGraphParams.A, help="graph constant A")
    p.add_argument("--B", type=_positive(float), default=SphereGraphParams.B, help="graph constant B")

    p = sub.add_parser("verify", allow_abbrev=False, help="check a design file")
    common(p, jacobi=True, sphere=True)
    p.add_argument("--file", required=True, help="design file (.json or .csv)")
    p.add_argument("--n", type=int, default=None, help="degree to check (defaults to the file's)")

    p = sub.add_parser("scan-sizes", allow_abbrev=False, help="smallest converging N for several n")
    common(p, jacobi=True, sphere=True, out=True)
    p.add_argument("--n", type=int, nargs="+", required=True, help="degrees to scan")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--N", type=int, default=None, help="upper cap on N (default 64 n^2 or so)")

    p = sub.add_parser("info", allow_abbrev=False, help="problem dimensions and size thresholds")
    common(p, jacobi=True, sphere=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _problem_from_args(args) -> DesignProblem:
    if args.d is not None:
        if args.alpha is not None or args.beta is not None:
            raise ArgumentError("give either --d (sphere) or --alpha/--beta (interval), not both")
        return DesignProblem.sphere(args.d, args.n)
    alpha = 0.0 if args.alpha is None else args.alpha
    beta = 0.0 if args.beta is None else args.beta
    return DesignProblem.interval(alpha, beta, args.n)


def _size_arg(args):
    if args.N is not None and args.auto_N:
        raise ArgumentError("--N and --auto-N are mutually exclusive")
    return "auto" if args.N is None else args.N


def _emit(args, problem, points, residual_sup, tol, out):
    record = dio.design_record(problem, points, tol, residual_sup)
    if args.out:
        dio.write_design(args.out, record, args.format)
    elif args.format == "csv":
        buf = _io.StringIO()
        writer = csv.writer(buf)
        for row in np.asarray(record["points"]):
            writer.writerow([repr(float(v)) for v in row])
        out.write(buf.getvalue())
    else:
        out.write(json.dumps(record, indent=2) + "\n")


def _cmd_gen_interval(args, out):
    alpha = 0.0 if args.alpha is None else args.alpha
    beta = 0.0 if args.beta is None else args.beta
    JacobiParams(alpha, beta)
    problem = DesignProblem.interval(alpha, beta, args.n)
    tol = args.tol or DEFAULT_TOL["interval"]
    config = RefinementConfig(residual_target=min(tol, 1e-12), restart_seed=args.seed)
    result = interval_design((alpha, beta), args.n, _size_arg(args), config)
    passed, report = verify_design(problem, result.design, tol)
    _emit(args, problem, result.design.points, report.sup_norm, tol, out)
    sys.stderr.write(f"{'PASS' if passed else 'FAIL'} N={result.N} residual_sup={report.sup_norm:.3e} "
                     f"tol={tol:.1e} iterations={result.iterations}\n")
    return EXIT_OK if passed else EXIT_VERIFY


def _cmd_gen_sphere(args, out):
    if args.d is None:
        raise ArgumentError("gen-sphere needs --d")
    problem = DesignProblem.sphere(args.d, args.n)
    tol = args.tol or DEFAULT_TOL["sphere"]
    config = RefinementConfig(residual_target=min(tol, 1e-12), restart_seed=args.seed)
    params = SphereGraphParams(args.A, args.B, args.d, args.n)
    result = sphere_design(args.d, args.n, _size_arg(args), params, config)
    passed, report = verify_design(problem, result.design, tol)
    _emit(args, problem, result.design.points, report.sup_norm, tol, out)
    sys.stderr.write(f"{'PASS' if passed else 'FAIL'} N={result.N} residual_sup={report.sup_norm:.3e} "
                     f"tol={tol:.1e} iterations={result.iterations}\n")
    return EXIT_OK if passed else EXIT_VERIFY


def _cmd_verify(args, out):
    record = dio.read_design(args.file)
    pts = record["points"]
    space = record["space"]
    if args.d is not None:
        space = "sphere"
    elif args.alpha is not None or args.beta is not None:
        space = "interval"
    if space is None:
        space = "interval" if pts.shape[1] == 1 else "sphere"
    degree = args.n if args.n is not None else record["degree"]
    if degree is None:
        raise ArgumentError("degree unknown: pass --n")
    if space == "sphere":
        d = args.d if args.d is not None else (record["d"] if record["d"] is not None else pts.shape[1] - 1)
        if pts.shape[1] != d + 1:
            raise ArgumentError(f"points have {pts.shape[1]} coordinates, expected {d + 1} for S^{d}")
        problem = DesignProblem.sphere(d, degree)
    else:
        alpha = args.alpha if args.alpha is not None else (record["alpha"] or 0.0)
        beta = args.beta if args.beta is not None else (record["beta"] or 0.0)
        if pts.shape[1] != 1:
            raise ArgumentError("interval designs have one coordinate per point")
        problem = DesignProblem.interval(alpha, beta, degree)
        pts = pts[:, 0]
    tol = args.tol or record["tolerance"] or problem.default_tolerance
    passed, report = verify_design(problem, pts, tol)
    out.write(f"{'PASS' if passed else 'FAIL'} residual_sup={report.sup_norm:.3e} tol={tol:.1e} "
              f"N={report.n_points}\n")
    return EXIT_OK if passed else EXIT_VERIFY


def find_min_size(converges, lo: int, cap: int):
    """Doubling from ``lo`` until ``converges(N)`` holds, then bisection back down.

    ``converges`` returns ``(ok, residual)``.  Convergence need not be
    monotone in N, so the result is the smallest success seen by this
    search, an upper bound on the true minimum.  Returns
    ``(N, residual)`` or ``(None, best_residual)`` when even ``cap`` fails.
    """
    lo = max(1, int(lo))
    ok, res = converges(lo)
    if ok:
        return lo, res
    fail, N = lo, lo
    best_fail = res
    while True:
        N = min(2 * N, cap)
        ok, res = converges(N)
        if ok:
            break
        best_fail = min(best_fail, res)
        fail = N
        if N >= cap:
            return None, best_fail
    good, good_res = N, res
    while good - fail > 1:
        mid = (good + fail) // 2
        ok, res = converges(mid)
        if ok:
            good, good_res = mid, res
        else:
            fail = mid
    return good, good_res


def scan_sizes(problem_for, degrees, seed: int = 0, cap=None, config: RefinementConfig | None = None):
    """Rows ``(n, N_min, residual, wall_time)``; ``problem_for(n)`` gives a DesignProblem."""
    config = config or SCAN_CONFIG
    config = RefinementConfig(**{**config.__dict__, "restart_seed": seed})
    rows = []
    for n in degrees:
        problem = problem_for(n)
        tol = problem.default_tolerance

        if problem.space == "interval":
            lo = n
            top = cap or 64 * n * n + 64

            def converges(N, problem=problem, n=n):
                try:
                    r = interval_design(problem.params, n, N, config)
                except ConvergenceError as exc:
                    return False, exc.best_residual
                return r.report.sup_norm <= tol, r.report.sup_norm
        else:
            lo = min_design_size(problem.d, n)
            top = cap or 64 * n ** problem.d + 64

            def converges(N, problem=problem, n=n):
                try:
                    r = sphere_design(problem.d, n, N, config=config, max_doublings=0)
                except ConvergenceError as exc:
                    return False, exc.best_residual
                return r.report.sup_norm <= tol, r.report.sup_norm

        t0 = time.perf_counter()
        N_min, res = find_min_size(converges, lo, top)
        rows.append((n, N_min, res, time.perf_counter() - t0))
    return rows


def _cmd_scan(args, out):
    if any(n < 1 for n in args.n):
        raise ArgumentError("degrees must be >= 1")

    def problem_for(n):
        ns = argparse.Namespace(**{**vars(args), "n": n})
        return _problem_from_args(ns)

    rows = scan_sizes(problem_for, args.n, seed=args.seed, cap=args.N)
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "N_min", "residual", "wall_time"])
    for n, N_min, res, wall in rows:
        writer.writerow([n, "" if N_min is None else N_min, f"{res:.3e}", f"{wall:.3f}"])
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        out.write(buf.getvalue())
    return EXIT_OK if all(r[1] is not None for r in rows) else EXIT_CONVERGENCE


def _cmd_info(args, out):
    problem = _problem_from_args(args)
    M = problem.basis_size
    K = estimate_K(problem, seed=args.seed)
    out.write(f"space={problem.space} degree={problem.degree}\n")
    out.write(f"M={M}\n")
    out.write(f"K_est={K:.6g}\n")
    out.write(f"N > (M-1)(K+1) = {(M - 1) * (K + 1):.6g}\n")
    out.write(f"N > M(M-1) = {M * (M - 1)}\n")
    return EXIT_OK


_COMMANDS = {
    "gen-interval": _cmd_gen_interval,
    "gen-sphere": _cmd_gen_sphere,
    "verify": _cmd_verify,
    "scan-sizes": _cmd_scan,
    "info": _cmd_info,
}


def _thread_limit():
    raw = os.environ.get("DESIGNFORGE_THREADS")
    if not raw:
        return nullcontext()
    try:
        limit = int(raw)
        if limit < 1:
            raise ValueError
    except ValueError:
        raise ArgumentError(f"DESIGNFORGE_THREADS must be a positive integer, got {raw!r}") from None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=limit)


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "n", None) is not None and not isinstance(args.n, list) and args.n < 1:
        parser.error("--n must be >= 1")
    try:
        with _thread_limit():
            return _COMMANDS[args.command](args, out)
    except ConvergenceError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONVERGENCE
    except (ArgumentError, DesignForgeError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
