"""Command-line driver: ``solve``, ``bench`` and ``check``.

The exit code is 0 only when every solve reached a definitive status
(Solved, PrimalInfeasible or DualInfeasible), or, for ``check``, when every
invariant passed.  Input and usage errors exit with 2.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import FAMILIES, FORMULATIONS, run_bench, suite_cases
from .checks import run_checks
from .errors import ParseError, ValidationError
from .problem import read_problem
from .solver import Settings, solve


def _settings(args) -> Settings:
    return Settings(max_iter=args.max_iter, eps=args.eps, verbose=getattr(args, "verbose", False))


def cmd_solve(args) -> int:
    try:
        problem = read_problem(args.file)
    except (ParseError, ValidationError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    res = solve(problem, _settings(args))
    print(f"status:     {res.status}")
    print(f"iterations: {res.iterations}")
    print(f"primal obj: {res.primal_objective:.10g}")
    print(f"dual obj:   {res.dual_objective:.10g}")
    print(f"time:       {1e3 * res.solve_time:.1f} ms")
    if args.out:
        out = {
            "status": str(res.status),
            "iterations": res.iterations,
            "primal_objective": res.primal_objective,
            "dual_objective": res.dual_objective,
            "x": res.x.tolist(),
            "y": res.y.tolist(),
            "z": res.z.tolist(),
            "s": res.s.tolist(),
        }
        # NaN marks the half of an infeasibility certificate that does not exist
        Path(args.out).write_text(json.dumps(out, indent=1).replace("NaN", "null") + "\n")
    return 0 if res.status.definitive else 1


def cmd_bench(args) -> int:
    try:
        cases = suite_cases(args.suite, args.sizes, args.seed, args.formulations)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    report = run_bench(cases, _settings(args), repeats=args.repeats)
    md = report.to_markdown()
    print(md, end="")
    for row in report.rows:
        if row.error:
            print(f"{row.case.family}/{row.case.formulation}/{row.case.n_or_d}: {row.error}", file=sys.stderr)
    if args.out:
        out = Path(args.out)
        out.write_text(report.to_csv())
        out.with_suffix(".md").write_text(md)
    return 0 if report.all_definitive else 1


def cmd_check(args) -> int:
    results = run_checks(args.samples, args.seed)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nsconic", description="Conic interior-point solver for nonsymmetric cones.")
    sub = p.add_subparsers(dest="command", required=True)

    def solver_flags(sp):
        sp.add_argument("--eps", type=float, default=1e-8, help="termination tolerance (default 1e-8)")
        sp.add_argument("--max-iter", type=int, default=200, help="iteration cap (default 200)")

    sp = sub.add_parser("solve", help="solve a JSON problem file")
    sp.add_argument("file", help="problem file (JSON)")
    sp.add_argument("--out", help="write the solution as JSON")
    sp.add_argument("-v", "--verbose", action="store_true", help="print the iteration log")
    solver_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("bench", help="run a benchmark suite")
    sp.add_argument("suite", choices=FAMILIES + ("all",))
    sp.add_argument("--sizes", type=int, nargs="+", help="problem sizes (default 50 100)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--formulations", nargs="+", choices=FORMULATIONS, help="default: native split3d")
    sp.add_argument("--repeats", type=int, default=3, help="timed repeats per case; the median is reported")
    sp.add_argument("--out", help="CSV report path; a markdown copy is written next to it")
    solver_flags(sp)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("check", help="run the numerical invariant checks")
    sp.add_argument("--samples", type=int, default=200, help="random points per family")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
