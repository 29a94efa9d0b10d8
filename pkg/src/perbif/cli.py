"""Command-line interface.

Exit codes: 0 success, 2 invalid arguments, 3 no branch at the requested mu,
4 solver failure, 5 malformed input document, 6 verification failure.
Log verbosity is read from the ``PERBIF_LOG`` environment variable
(e.g. ``PERBIF_LOG=DEBUG``); default WARNING.
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import math
import os
import sys

from . import io as pio
from .continuation import (ContinuationError, NoBranchError, ShootingConfig, continue_branch,
                           distinct_solutions, solve_branch_point)
from .integrator import IntegrationError
from .model import ProblemParams
from .spectrum import count_lower_bound, degeneracy_instant
from .verify import verify
from .yamabe import (GeometryParams, critical_radii, curvature_deviation, relative_volume,
                     solutions_for_radius, to_ode_params)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_BRANCH = 3
EXIT_SOLVER = 4
EXIT_MALFORMED = 5
EXIT_VERIFY = 6

TWO_PI = 2.0 * math.pi

log = logging.getLogger("perbif")


class UsageError(Exception):
    pass


def _fail(code, message):
    print(f"error: {message}", file=sys.stderr)
    return code


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _cfg(args):
    return ShootingConfig(grid_size=args.grid)


def cmd_instants(args):
    if not args.k_max >= 1:
        raise UsageError("k-max must be at least 1")
    rows = []
    for k in range(1, args.k_max + 1):
        inst = degeneracy_instant(args.q, args.T, k)
        rows.append((k, inst.mu_k, inst.omega_k))
    with _output(args.out) as fh:
        pio.write_csv(fh, ["k", "mu_k", "omega_k"], rows)
    return EXIT_OK


def _write_solution(sol, report, json_path, csv_path):
    doc = pio.solution_document(sol, report)
    with _output(json_path) as fh:
        fh.write(pio.dumps(doc))
    if csv_path:
        with _output(csv_path) as fh:
            pio.write_csv(fh, ["t", "u", "du"], zip(sol.t, sol.u, sol.du))


def cmd_solve(args):
    p = ProblemParams(args.q, args.mu, args.T)
    if args.k < 1:
        raise UsageError("k must be a positive integer")
    try:
        sol = solve_branch_point(p, args.k, None, _cfg(args))
    except NoBranchError as exc:
        return _fail(EXIT_NO_BRANCH, f"below degeneracy instant k={args.k}: {exc}")
    report = verify(sol)
    _write_solution(sol, report, args.out, args.csv)
    if not report.passed:
        failed = [name for name, ok in report.passes.items() if not ok]
        return _fail(EXIT_VERIFY, "verification failed: " + ", ".join(failed))
    return EXIT_OK


def cmd_diagram(args):
    if args.branches < 1:
        raise UsageError("branches must be at least 1")
    mu1 = degeneracy_instant(args.q, args.T, 1).mu_k
    ProblemParams(args.q, args.mu_max, args.T)
    if not args.mu_max > mu1:
        return _fail(EXIT_NO_BRANCH, f"mu-max={args.mu_max!r} does not exceed mu_1={mu1!r}; "
                                     "the diagram is empty")
    status = {}
    rows = []
    for k in range(1, args.branches + 1):
        mu_k = degeneracy_instant(args.q, args.T, k).mu_k
        if not args.mu_max > mu_k:
            status[k] = f"not present below mu-max (mu_k={mu_k!r})"
            continue
        try:
            branch = continue_branch(args.q, args.T, k, args.mu_max, _cfg(args))
        except (ContinuationError, IntegrationError) as exc:
            status[k] = f"failed: {exc}"
            continue
        for mu, sol in branch.points:
            rows.append((k, mu, sol.a, sol.b, sol.E, sol.zero_count))
        status[k] = f"ok ({len(branch.points)} points)"
        for note in branch.findings:
            status[k] += f"; {note}"
    with _output(args.out) as fh:
        pio.write_csv(fh, ["branch_k", "mu", "u_max", "u_min", "energy", "zero_count"], rows)
    print("branch status:", file=sys.stderr)
    for k, text in status.items():
        print(f"  k={k}: {text}", file=sys.stderr)
    return EXIT_SOLVER if any(t.startswith("failed") for t in status.values()) else EXIT_OK


def cmd_count(args):
    p = ProblemParams(args.q, args.mu, args.T)
    sols = distinct_solutions(p.q, p.T, p.mu, _cfg(args))
    bound = count_lower_bound(p.q, p.T, p.mu)
    entries = []
    found = 0
    bad_verify = False
    for sol in sols:
        report = verify(sol)
        found += report.passed
        bad_verify |= not report.passed
        entries.append({"k": sol.k, "status": sols.status.get(sol.k, "ok"),
                        "zero_count": sol.zero_count, "u_max": sol.a, "u_min": sol.b,
                        "verified": report.passed})
    for k, text in sols.status.items():
        if text != "ok":
            entries.append({"k": k, "status": text, "zero_count": None, "u_max": None,
                            "u_min": None, "verified": False})
    entries.sort(key=lambda e: e["k"])
    print(f"lower_bound={bound} found={found}")
    summary = {"params": {"q": p.q, "mu": p.mu, "T": p.T}, "lower_bound": bound,
               "found": found, "branches": entries}
    with _output(args.out) as fh:
        fh.write(pio.dumps(summary))
    if any(text != "ok" for text in sols.status.values()):
        return EXIT_SOLVER
    return EXIT_VERIFY if bad_verify else EXIT_OK


def cmd_yamabe(args):
    g = GeometryParams(args.n, args.RN, args.r)
    p = to_ode_params(g)
    radii = critical_radii(g, max(1, int(math.ceil(g.r / math.sqrt(g.n / g.R_N))) + 1))
    below = [r for r in radii if r < g.r]
    print(f"q={pio.format_float(p.q)} mu={pio.format_float(p.mu)}")
    print("critical_radii_below_r=" + ",".join(pio.format_float(r) for r in below))
    sols = solutions_for_radius(g, _cfg(args))
    rows = []
    all_ok = True
    for sol in sols:
        report = verify(sol)
        all_ok &= report.passed
        rows.append((sol.k, sol.a, sol.b, curvature_deviation(g, sol),
                     curvature_deviation(g, sol, "spectral"), relative_volume(g, sol),
                     str(report.passed).lower()))
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            path = os.path.join(args.out, f"factor_k{sol.k}.json")
            _write_solution(sol, report, path, None)
    # spectral: u'' from the stored u' samples; loses accuracy like u_min^(1-q)
    pio.write_csv(sys.stdout, ["k", "u_max", "u_min", "curvature_residual",
                               "curvature_residual_spectral", "relative_volume", "verified"], rows)
    failed = {k: t for k, t in sols.status.items() if t != "ok"}
    for k, text in failed.items():
        print(f"branch k={k}: {text}", file=sys.stderr)
    if failed:
        return EXIT_SOLVER
    return EXIT_OK if all_ok else EXIT_VERIFY


def cmd_verify(args):
    try:
        sol = pio.load_solution(args.input)
    except pio.MalformedDocument as exc:
        return _fail(EXIT_MALFORMED, str(exc))
    try:
        report = verify(sol)
    except (IntegrationError, ValueError, FloatingPointError) as exc:
        return _fail(EXIT_MALFORMED, f"document cannot be verified: {exc}")
    with _output(args.out) as fh:
        fh.write(pio.dumps(pio.report_to_dict(report)))
    if not report.passed:
        failed = [name for name, ok in report.passes.items() if not ok]
        return _fail(EXIT_VERIFY, "verification failed: " + ", ".join(failed))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="perbif", description="Positive periodic solutions of "
                     "u'' = mu (u - |u|^(q-1) u): branches, counts and verification.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, mu=True):
        sp.add_argument("--q", type=float, required=True, help="exponent q > 1")
        if mu:
            sp.add_argument("--mu", type=float, required=True, help="parameter mu > 0")
        sp.add_argument("--T", type=float, default=TWO_PI, help="period (default 2 pi)")
        sp.add_argument("--grid", type=int, default=1024, help="samples per period (power of 2)")

    sp = sub.add_parser("instants", help="degeneracy instants mu_k as CSV")
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--T", type=float, default=TWO_PI)
    sp.add_argument("--k-max", type=int, required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_instants)

    sp = sub.add_parser("solve", help="solution on branch k at mu (JSON document)")
    common(sp)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--out", help="JSON path (default stdout)")
    sp.add_argument("--csv", help="also write the (t, u, du) profile as CSV")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("diagram", help="continuation points of branches 1..B as CSV")
    common(sp, mu=False)
    sp.add_argument("--mu-max", type=float, required=True)
    sp.add_argument("--branches", type=int, required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_diagram)

    sp = sub.add_parser("count", help="guaranteed vs found number of solutions")
    common(sp)
    sp.add_argument("--out", help="JSON summary path (default stdout)")
    sp.set_defaults(func=cmd_count)

    sp = sub.add_parser("yamabe", help="basic Yamabe factors on N x S^1(r); mapping tori "
                        "of isometries of N reduce to the same problem")
    sp.add_argument("--n", type=int, required=True, help="dimension of N (>= 2)")
    sp.add_argument("--RN", type=float, required=True, help="scalar curvature of N (> 0)")
    sp.add_argument("--r", type=float, required=True, help="circle radius (> 0)")
    sp.add_argument("--grid", type=int, default=1024)
    sp.add_argument("--out", help="directory for per-factor JSON documents")
    sp.set_defaults(func=cmd_yamabe)

    sp = sub.add_parser("verify", help="re-run every check on a solution document")
    sp.add_argument("input")
    sp.add_argument("--out", help="report path (default stdout)")
    sp.set_defaults(func=cmd_verify)
    return parser


def _configure_logging():
    level = os.environ.get("PERBIF_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except ValueError as exc:
        # parameter validation (q must exceed 1, ...)
        return _fail(EXIT_USAGE, str(exc))
    except (ContinuationError, IntegrationError) as exc:
        diag = getattr(exc, "diagnostics", None)
        msg = f"solver failure: {exc}"
        if diag:
            msg += "\n  diagnostics: " + ", ".join(f"{k}={v!r}" for k, v in diag.items())
        return _fail(EXIT_SOLVER, msg)


if __name__ == "__main__":
    sys.exit(main())
