"""Command line: ``ulproof prove|synth|oracle FILE``.

Exit status: 0 proven (or oracle Holds), 1 unproven (or Counterexample),
2 error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .benchmark import BenchmarkError, load_benchmark
from .gimp import GrammarError
from .logic import LogicError
from .oracle import OracleError, check_triple
from .prover import Options, prepare, prove, report_text, synth
from .sexpr import ParseError
from .skeleton import SkeletonError, render
from .solver import ERROR, SolverConfig, SolverError, SolverSession
from .store import StoreError, SummaryStore
from .synth import SynthError
from .vcgen import VcError, pvc_text

log = logging.getLogger("ulproof")

EXPECTED = (BenchmarkError, GrammarError, LogicError, OracleError, ParseError, SkeletonError,
            SolverError, StoreError, SynthError, VcError, OSError)


def _domain(text):
    try:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError("empty domain")
    return range(lo, hi + 1)


def _positive(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return n


def build_parser():
    p = argparse.ArgumentParser(prog="ulproof", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file")
    common.add_argument("--skeleton", action="store_true", help="print the proof skeleton and stop")
    common.add_argument("--dump-vcs", action="store_true", help="print the PVCs (raw and optimized) and stop")
    common.add_argument("--skolemize", action="store_true",
                        help="race a SyGuS query for right-hand existentials against the SMT query")
    common.add_argument("--no-optimize", action="store_true", help="discharge PVCs as extracted")
    common.add_argument("--ctx", metavar="STORE", help="assume proven summaries from this store")
    common.add_argument("--no-ctx", action="store_true", help="ignore --ctx")
    common.add_argument("--timeout", type=float, metavar="N", help="per-VC solver timeout in seconds")
    common.add_argument("--solver-config", metavar="PATH", help="JSON solver configuration")

    sub.add_parser("prove", parents=[common], help="check a triple with the given summaries")
    sp = sub.add_parser("synth", parents=[common], help="synthesize summaries and invariants")
    sp.add_argument("--unconstrained", action="store_true",
                    help="use the default linear-arithmetic grammar for parameters without a template")
    sp.add_argument("--save-ctx", metavar="STORE", help="record proven summaries in this store")

    op = sub.add_parser("oracle", help="brute-force check of the triple")
    op.add_argument("file")
    op.add_argument("--depth", type=_positive, default=4)
    op.add_argument("--domain", type=_domain, default=range(0, 4), metavar="LO..HI")
    op.add_argument("--fuel", type=_positive, default=50)
    return p


def _session(args):
    cfg = SolverConfig.load(args.solver_config) if args.solver_config else SolverConfig()
    if args.timeout is not None:
        cfg.timeout = args.timeout
    return SolverSession(cfg)


def _options(args):
    store = SummaryStore(args.ctx) if args.ctx and not args.no_ctx else None
    return Options(optimize=not args.no_optimize, skolemize=args.skolemize, store=store,
                   use_ctx=not args.no_ctx)


def _status(report):
    if any(o.verdict.outcome == ERROR for o in report.outcomes):
        return 2
    return 0 if report.proven else 1


def cmd_prove(args, out):
    bench = load_benchmark(args.file)
    opts = _options(args)
    if args.skeleton or args.dump_vcs:
        prep = prepare(bench, opts)
        if args.skeleton:
            print(render(prep.skeleton.root), file=out)
        if args.dump_vcs:
            print("; raw", file=out)
            print(pvc_text(prep.raw), file=out)
            if opts.optimize:
                print("; optimized", file=out)
                print(pvc_text(prep.pvcs), file=out)
        return 0
    report = prove(bench, _session(args), opts)
    print(report_text(report), file=out)
    return _status(report)


def cmd_synth(args, out):
    bench = load_benchmark(args.file)
    if args.skeleton or args.dump_vcs:
        return cmd_prove(args, out)
    save = SummaryStore(args.save_ctx) if args.save_ctx else None
    report = synth(bench, _session(args), _options(args), args.unconstrained, save)
    res = report.synth
    if res is not None:
        print(f"; {res.engine} search: {res.candidates} candidates, {res.pruned} pruned by "
              f"counterexamples", file=out)
    print(report_text(report), file=out)
    if res is not None and not res.found:
        return 1
    return _status(report)


def cmd_oracle(args, out):
    bench = load_benchmark(args.file)
    res = check_triple(bench.pre, bench.grammar, bench.program, bench.post, args.domain,
                       fuel=args.fuel, depth=args.depth, k=bench.k)
    print(res, file=out)
    return 0 if res.ok else 1


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"prove": cmd_prove, "synth": cmd_synth, "oracle": cmd_oracle}[args.command]
    try:
        return handler(args, out)
    except EXPECTED as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
