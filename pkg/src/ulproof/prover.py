"""End-to-end pipelines: prove a benchmark with given summaries, or synthesize them."""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field

from . import gimp
from .benchmark import Benchmark, BenchmarkError, provided_assignment, resolve_name
from .logic import expand_sig, params_of
from .skeleton import Skeleton, build
from .solver import SolverSession, Verdict, skolem_query
from .store import StoreError, SummaryStore
from .synth import SynthError, SynthResult, default_grammar, parse_template, synthesize
from .vcgen import (
    SummaryAssignment, expand_pvcs, extract_pvcs, optimize_pvcs, plug_pvc, skolemize_rhs_existentials,
    sort_pvcs,
)

log = logging.getLogger(__name__)


@dataclass
class Options:
    optimize: bool = True
    skolemize: bool = False
    store: SummaryStore | None = None
    use_ctx: bool = True


@dataclass
class VcOutcome:
    id: str
    formula: object  # plugged, closed formula
    verdict: Verdict


@dataclass
class Report:
    proven: bool
    skeleton: Skeleton
    raw: list
    pvcs: list
    outcomes: list = field(default_factory=list)
    assignment: SummaryAssignment | None = None
    store_hits: dict = field(default_factory=dict)  # nonterminal -> param name
    solver_calls: int = 0
    time: float = 0.0
    message: str = ""
    synth: SynthResult | None = None


@dataclass
class Prepared:
    skeleton: Skeleton
    raw: list
    pvcs: list
    hits: SummaryAssignment
    hit_sites: dict


def _store_hits(bench: Benchmark, opts: Options):
    if opts.store is None or not opts.use_ctx:
        return {}
    g = bench.grammar
    candidates = gimp.refs(bench.program)
    for n in list(candidates):
        candidates += [m for m in gimp.reachable(g, n) if m not in candidates]
    hits = {}
    for n in candidates:
        if gimp.is_recursive(g, n):
            e = opts.store.lookup(g, n, bench.k)
            if e is not None:
                hits[n] = e
    return hits


def prepare(bench: Benchmark, opts: Options) -> Prepared:
    """Skeleton and PVCs, with store hits assumed in the initial context."""
    entries = _store_hits(bench, opts)
    sk = build(bench.grammar, bench.pre, bench.program, bench.post, bench.k, assume=tuple(entries))
    hits = SummaryAssignment()
    sites = {}
    for n, e in entries.items():
        sig = resolve_name(n, sk.params)
        hits.add(sig, e.body_for(sig))
        sites[n] = sig.name
    raw = extract_pvcs(sk.root, bench.grammar)
    pvcs = expand_pvcs(raw, bench.k)
    if opts.optimize:
        pvcs = optimize_pvcs(pvcs)
    return Prepared(sk, raw, sort_pvcs(pvcs), hits, sites)


def discharge(pvcs, a: SummaryAssignment, session: SolverSession, k=None, skolemize=False) -> list:
    """Plug ``a`` into every PVC and check each resulting VC."""
    a_exp = a.expanded(k) if k is not None else a
    plugged = [plug_pvc(p, a_exp) for p in pvcs]
    items = []
    names = (f"f{i}" for i in itertools.count(1))
    for p in plugged:
        sygus = None
        if skolemize:
            sp = skolemize_rhs_existentials(p, names)
            sygus = skolem_query(sp)
        items.append((p.body, sygus))
    verdicts = session.check_many(items)
    return [VcOutcome(p.id, p.formula, v) for p, v in zip(plugged, verdicts)]


def prove(bench: Benchmark, session: SolverSession, opts: Options | None = None) -> Report:
    opts = opts or Options()
    start = time.monotonic()
    calls0 = session.calls
    prep = prepare(bench, opts)
    a = provided_assignment(bench, prep.skeleton.params, skip=set(prep.hit_sites.values()))
    a = a.merged(prep.hits)
    needed = sorted({n for p in prep.pvcs for n in params_of(p.body)})
    missing = [n for n in needed if n not in a]
    if missing:
        raise BenchmarkError("no summary or invariant given for " + ", ".join(missing)
                             + " (provide one, or run synth)")
    outcomes = discharge(prep.pvcs, a, session, bench.k, opts.skolemize)
    proven = all(o.verdict.valid for o in outcomes)
    return Report(proven, prep.skeleton, prep.raw, prep.pvcs, outcomes, a, prep.hit_sites,
                  session.calls - calls0, time.monotonic() - start)


def template_grammars(bench: Benchmark, sigs: dict, names, unconstrained=False, k=None):
    """Grammar for each parameter in ``names``; returns (grammars, sigs used for synthesis)."""
    grammars, used = {}, {}
    by_param = {}
    for key, sx in bench.templates.items():
        sig = resolve_name(key, sigs)
        if sig is None:
            raise BenchmarkError(f"summary-grammar for {key} does not match any parameter")
        by_param[sig.name] = sx
    for n in names:
        sig = sigs[n]
        if n in by_param:
            grammars[n] = parse_template(by_param[n], sig)
            used[n] = sig
        elif unconstrained:
            s = expand_sig(sig, k) if k is not None else sig
            grammars[n] = default_grammar(s)
            used[n] = s
        else:
            raise SynthError(f"no summary-grammar for {n} (add one or use --unconstrained)")
    return grammars, used


def synth(bench: Benchmark, session: SolverSession, opts: Options | None = None, unconstrained=False,
          save: SummaryStore | None = None, use_cache=True, max_candidates=None) -> Report:
    opts = opts or Options()
    start = time.monotonic()
    calls0 = session.calls
    prep = prepare(bench, opts)
    sigs = prep.skeleton.params
    given = provided_assignment(bench, sigs, skip=set(prep.hit_sites.values())).merged(prep.hits)
    given_exp = given.expanded(bench.k) if bench.k is not None else given
    partially = [plug_pvc_partial(p, given_exp) for p in prep.pvcs]
    names = sorted({n for p in partially for n in params_of(p.body)})
    grammars, used = template_grammars(bench, sigs, names, unconstrained, bench.k)
    res = synthesize(partially, grammars, session, used, k=bench.k, use_cache=use_cache,
                     max_candidates=max_candidates)
    report = Report(False, prep.skeleton, prep.raw, prep.pvcs, [], None, prep.hit_sites, 0, 0.0, synth=res)
    if res.found:
        a = given.merged(res.assignment)
        report.assignment = a
        report.outcomes = discharge(prep.pvcs, a, session, bench.k, opts.skolemize)
        report.proven = all(o.verdict.valid for o in report.outcomes)
        if report.proven and save is not None:
            _save(bench, prep, a, save)
    else:
        report.message = f"no summaries found: {res.reason}"
    report.solver_calls = session.calls - calls0
    report.time = time.monotonic() - start
    return report


def plug_pvc_partial(p, a: SummaryAssignment):
    present = set(params_of(p.body)) & set(a.entries)
    if not present:
        return p
    sub = SummaryAssignment({n: a.entries[n] for n in present})
    return plug_pvc(p, sub)


def _save(bench, prep, a, store):
    for name, sig in prep.skeleton.params.items():
        if sig.kind != "summary" or name not in a or sig.site in prep.hit_sites:
            continue
        formals, body = a[name]
        if tuple(formals) != tuple(sig.formals):
            # synthesized over expanded scalars; only vector-level summaries are stored
            continue
        try:
            store.save(bench.grammar, sig.site, bench.k, sig, body, "proven",
                       {"benchmark": bench.path or ""})
        except StoreError as exc:
            log.error("%s", exc)
            raise


def report_text(r: Report, show_assignment=True) -> str:
    lines = []
    if r.store_hits:
        lines.append("assumed from store: " + ", ".join(f"{n} ({p})" for n, p in r.store_hits.items()))
    if show_assignment and r.assignment is not None and len(r.assignment):
        lines.append(r.assignment.show())
    for o in r.outcomes:
        lines.append(f"{o.id}: {o.verdict}")
    if r.message:
        lines.append(r.message)
    status = "proven" if r.proven else "unproven"
    lines.append(f"{status}: {sum(o.verdict.valid for o in r.outcomes)}/{len(r.outcomes)} VCs valid, "
                 f"{r.solver_calls} solver calls, {r.time:.2f}s")
    return "\n".join(lines)
