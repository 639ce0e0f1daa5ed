"""Command-line entry point: ``thpe <subcommand> ...``.

Exit status is 0 on success, 1 on input errors (or an invalid certificate
for ``verify``) and 2 when the solver reports no convergence.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from thpe.circuit import serialize
from thpe.compiler import compile_f_eps, emit_fixp_instance, serialize_fixp
from thpe.game import (GameFormatError, MixedProfile, format_profile, parse_profile,
                       parse_rational, read_game)
from thpe.logic import bound_report, emit_eps_pe, emit_pe, emit_pe_bound, smt2_script
from thpe.solver import (CONVERGED, SolveConfig, StageRecord, approximate_pe, grid_oracle,
                         parse_trace_line, solve_fixed_point)
from thpe.verifier import check_certificate, format_certificate

EXIT_OK, EXIT_INPUT, EXIT_NO_CONVERGENCE = 0, 1, 2


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--damping", type=_rational, default=Fraction(1, 2))
    p.add_argument("--tol", type=_rational, default=Fraction(1, 10 ** 12),
                   help="residual tolerance (default 1e-12)")
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="threads for the starts")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--precision-bits", type=int, default=None)
    mode.add_argument("--exact", action="store_true",
                      help="iterate in exact rationals (slow; small games only)")
    p.add_argument("--decimal", type=int, default=None, metavar="DIGITS",
                   help="print the profile rounded to DIGITS decimals")


def _config(args, **extra) -> SolveConfig:
    return SolveConfig(damping=args.damping, residual_tol=args.tol, max_iters=args.max_iters,
                       starts=args.starts, seed=args.seed, workers=args.workers,
                       precision_bits=args.precision_bits or 128, exact=args.exact, **extra)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thpe", description="Perfect-equilibrium fixed-point toolkit for strategic-form games.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="approximate a trembling-hand perfect equilibrium")
    p.add_argument("game")
    p.add_argument("--delta", type=_rational, required=True)
    p.add_argument("--max-stages", type=int, default=40)
    _solver_args(p)

    p = sub.add_parser("solve-eps", help="fixed point of F^eps for a single eps")
    p.add_argument("game")
    p.add_argument("--eps", type=_rational, required=True)
    _solver_args(p)

    p = sub.add_parser("compile", help="write the F^eps circuit")
    p.add_argument("game")
    p.add_argument("-o", "--output")

    p = sub.add_parser("verify", help="eps-perfect certificate for a profile file")
    p.add_argument("game")
    p.add_argument("profile")
    p.add_argument("--eps", type=_rational, required=True)
    p.add_argument("--slack", type=_rational, default=Fraction(0))

    p = sub.add_parser("emit-fixp", help="write the closed FIXP instance")
    p.add_argument("game")
    p.add_argument("--delta", type=_rational, required=True)
    p.add_argument("--c", "--c-constant", dest="c", type=_rational, default=Fraction(1))
    p.add_argument("-o", "--output")

    p = sub.add_parser("emit-logic", help="write EPS-PE, PE or PE-bound as SMT-LIB")
    p.add_argument("game")
    p.add_argument("--kind", choices=("eps-pe", "pe", "pe-bound"), default="eps-pe")
    p.add_argument("--delta", type=_rational, default=None)
    p.add_argument("--no-prune", action="store_true",
                   help="keep the trivially true k == l clauses")
    p.add_argument("-o", "--output")

    p = sub.add_parser("bound", help="report log2(1/eps*) and formula bookkeeping")
    p.add_argument("game")
    p.add_argument("--delta", type=_rational, required=True)
    p.add_argument("--c", "--c-constant", dest="c", type=_rational, default=Fraction(1))
    p.add_argument("-o", "--output")

    p = sub.add_parser("oracle", help="brute-force grid search for a fixed point")
    p.add_argument("game")
    p.add_argument("--eps", type=_rational, required=True)
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--budget", type=int, default=2_000_000)
    return parser


def _emit(text: str, path: str | None, out) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        out.write(text)


def format_solve_output(trace: tuple[StageRecord, ...], status: str, note: str,
                        profile: MixedProfile, decimal: int | None = None) -> str:
    lines = [r.line() for r in trace]
    lines.append(f"status {status}")
    if note:
        lines.append(f"note {note}")
    lines.append("profile")
    return "\n".join(lines) + "\n" + format_profile(profile, decimal)


def parse_solve_output(text: str) -> tuple[list[StageRecord], str, MixedProfile]:
    lines = text.splitlines()
    trace = [parse_trace_line(ln) for ln in lines if ln.startswith("eps=")]
    status = next(ln.split(None, 1)[1] for ln in lines if ln.startswith("status "))
    start = lines.index("profile")
    return trace, status, parse_profile("\n".join(lines[start + 1:]))


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        g = read_game(args.game)
        cmd = args.command
        if cmd == "solve":
            res = approximate_pe(g, args.delta, _config(args, max_stages=args.max_stages))
            out.write(format_solve_output(res.trace, res.status, res.note, res.profile,
                                          args.decimal))
            return EXIT_OK if res.converged else EXIT_NO_CONVERGENCE
        if cmd == "solve-eps":
            res = solve_fixed_point(g, args.eps, _config(args))
            record = StageRecord(args.eps, res.iterations, res.residual, res.profile,
                                 res.converged)
            out.write(format_solve_output((record,), res.status, "", res.profile,
                                          args.decimal))
            return EXIT_OK if res.status == CONVERGED else EXIT_NO_CONVERGENCE
        if cmd == "compile":
            _emit(serialize(compile_f_eps(g)), args.output, out)
        elif cmd == "verify":
            with open(args.profile) as fh:
                x = parse_profile(fh.read())
            cert, ok = check_certificate(g, x, args.eps, args.slack)
            out.write(format_certificate(cert))
            return EXIT_OK if ok else EXIT_INPUT
        elif cmd == "emit-fixp":
            _emit(serialize_fixp(emit_fixp_instance(g, args.delta, args.c)), args.output, out)
        elif cmd == "emit-logic":
            prune = not args.no_prune
            if args.kind == "eps-pe":
                f = emit_eps_pe(g, prune=prune)
            elif args.kind == "pe":
                f = emit_pe(g, prune=prune)
            else:
                if args.delta is None:
                    raise ValueError("--kind pe-bound needs --delta")
                f = emit_pe_bound(g, args.delta, prune=prune)
            _emit(smt2_script(f, comment=f"{args.kind} for a game with strategy counts "
                                         f"{' '.join(map(str, g.strategy_counts))}"),
                  args.output, out)
        elif cmd == "bound":
            report = bound_report(g.n, g.m, g.payoff_bound, args.delta, args.c)
            _emit(report.text(), args.output, out)
        elif cmd == "oracle":
            x = grid_oracle(g, args.eps, args.resolution, budget=args.budget)
            out.write(format_profile(x))
    except GameFormatError as exc:
        print(f"{args.game}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
