"""Summary and invariant synthesis over template grammars.

Two engines: an external SyGuS solver when one is configured, and an
enumerative fallback that walks the template grammar by formula size and
checks candidates against the PVCs with a counterexample cache.
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field

from .logic import (
    App, Const, EvalError, Evaluator, Expr, Fun, Lam, Param, ParamSig, Quant, Scope, Sel, Sort,
    Var, expand, expand_sig, params_of, parse_formula, subst,
)
from .sexpr import ParseError, dumps, parse_all, where
from .solver import INVALID, VALID, SolverSession, SynthFun, emit_sygus
from .vcgen import Pvc, SummaryAssignment, plug_pvc

log = logging.getLogger(__name__)

DEFAULT_CONSTANTS = (-1, 0, 1, 2, 3, 100)
DEFAULT_BOUND = 9


class SynthError(Exception):
    pass


# ---------------------------------------------------------------------------
# template grammars

@dataclass
class TemplateGrammar:
    """Productions for one parameter; the first nonterminal is the start symbol."""

    param: str
    formals: tuple  # ((name, Sort), ...)
    nonterminals: tuple  # ((name, Sort), ...)
    rules: dict  # nonterminal -> list of raw s-expressions
    bound: int = DEFAULT_BOUND
    patterns: dict = field(default=None, repr=False)

    def __post_init__(self):
        names = [n for n, _ in self.nonterminals]
        if not names:
            raise SynthError(f"grammar for {self.param} has no nonterminals")
        if self.nonterminals[0][1] is not Sort.BOOL:
            raise SynthError(f"start symbol of the grammar for {self.param} must be Bool")
        clash = set(names) & {n for n, _ in self.formals}
        if clash:
            raise SynthError(f"grammar nonterminals clash with formals: {sorted(clash)}")
        if self.patterns is None:
            self.patterns = self._compile()

    @property
    def start(self):
        return self.nonterminals[0][0]

    def _compile(self):
        sorts = dict(self.nonterminals)
        vectors = {n: _elem(s) for n, s in self.formals if s.is_vector}
        scalars = {n: s for n, s in self.formals if not s.is_vector}
        scope = Scope(vectors=vectors, scalars={**scalars, **sorts}, strict=True)
        out = {}
        for n, s in self.nonterminals:
            if n not in self.rules:
                raise SynthError(f"no productions for {n} in the grammar for {self.param}")
            pats = []
            for sx in self.rules[n]:
                try:
                    e = parse_formula(sx, scope, expect=s)
                except Exception as exc:
                    raise SynthError(f"bad production {dumps(sx)} for {n}: {exc}") from None
                holes = _holes(e, sorts)
                pats.append((e, holes, _size(e) - len(holes)))
            out[n] = pats
        return out

    def sygus_text(self):
        decl = " ".join(f"({n} {s.value})" for n, s in self.nonterminals)
        groups = " ".join(
            f"({n} {s.value} ({' '.join(dumps(p) for p in self.rules[n])}))" for n, s in self.nonterminals
        )
        return f"({decl})\n  ({groups})"

    def renamed(self, param, formals):
        """Same grammar for a parameter whose formals are renamed positionally."""
        if len(formals) != len(self.formals):
            raise SynthError(f"grammar for {self.param} has {len(self.formals)} formals, {param} needs {len(formals)}")
        ren = {a: b for (a, _), (b, _) in zip(self.formals, formals)}
        rules = {n: [_rename_sx(p, ren) for p in ps] for n, ps in self.rules.items()}
        return TemplateGrammar(param, tuple(formals), self.nonterminals, rules, self.bound)


def _elem(s):
    return Sort.INT if s is Sort.VINT else Sort.BOOL


def _rename_sx(sx, ren):
    if isinstance(sx, list):
        return [_rename_sx(x, ren) for x in sx]
    if sx in ren:
        return ren[sx]
    if "[" in sx:
        head, rest = sx.split("[", 1)
        return f"{ren.get(head, head)}[{rest}"
    return sx


def parse_template(sx, sig: ParamSig, bound=DEFAULT_BOUND) -> TemplateGrammar:
    """Read ``(summary-grammar NAME ((B Bool) ...) ((B Bool (prods...)) ...))``."""
    if len(sx) != 4 or not isinstance(sx[2], list) or not isinstance(sx[3], list):
        raise ParseError(f"malformed summary-grammar{where(sx)}")
    decls = []
    for d in sx[2]:
        if not isinstance(d, list) or len(d) != 2 or d[1] not in ("Int", "Bool"):
            raise ParseError(f"malformed grammar nonterminal {dumps(d)}{where(sx)}")
        decls.append((str(d[0]), Sort(str(d[1]))))
    rules = {}
    for r in sx[3]:
        if not isinstance(r, list) or len(r) != 3 or not isinstance(r[2], list):
            raise ParseError(f"malformed grammar rule {dumps(r)}{where(sx)}")
        rules[str(r[0])] = list(r[2])
    return TemplateGrammar(sig.name, tuple(sig.formals), tuple(decls), rules, bound)


def default_grammar(sig: ParamSig, constants=DEFAULT_CONSTANTS, bound=DEFAULT_BOUND) -> TemplateGrammar:
    """Quantifier-free linear integer arithmetic over the parameter's scalar formals."""
    if any(s.is_vector for _, s in sig.formals):
        raise SynthError(f"the unconstrained grammar needs scalar formals; expand {sig.name} first")
    ints = [n for n, s in sig.formals if s is Sort.INT]
    bools = [n for n, s in sig.formals if s is Sort.BOOL]
    cs = [str(c) if c >= 0 else f"(- {-c})" for c in constants]
    btext = ["true", "false", *bools, "(not B)", "(and B B)", "(or B B)", "(= I I)", "(< I I)", "(<= I I)"]
    itext = [*cs, *ints, "(+ I I)", "(- I I)"]
    rules = {"B": parse_all(" ".join(btext)), "I": parse_all(" ".join(itext))}
    return TemplateGrammar(sig.name, tuple(sig.formals), (("B", Sort.BOOL), ("I", Sort.INT)), rules, bound)


# ---------------------------------------------------------------------------
# enumeration

def _size(e: Expr) -> int:
    t = type(e)
    if t in (App, Param, Fun):
        return 1 + sum(_size(a) for a in e.args)
    if t in (Quant, Lam):
        return 1 + _size(e.body)
    if t is Sel:
        return 1 + _size(e.index)
    return 1


def _holes(e, sorts, bound=frozenset()):
    t = type(e)
    if t is Var:
        return [e.name] if e.name in sorts and e.name not in bound else []
    if t in (App, Param, Fun):
        return [h for a in e.args for h in _holes(a, sorts, bound)]
    if t in (Quant, Lam):
        return _holes(e.body, sorts, bound | {e.var})
    if t is Sel:
        return _holes(e.index, sorts, bound)
    return []


def _fill(e, sorts, fillers):
    """Replace hole occurrences left to right with ``fillers`` (an iterator)."""
    t = type(e)
    if t is Var and e.name in sorts:
        return next(fillers)
    if t is App:
        return App(e.op, tuple(_fill(a, sorts, fillers) for a in e.args))
    if t is Quant:
        return Quant(e.kind, e.var, e.vsort, _fill(e.body, sorts, fillers))
    if t is Sel:
        return Sel(e.vec, _fill(e.index, sorts, fillers), e.sort)
    return e


_COMMUTATIVE = {"and", "or", "=", "+", "*", "distinct"}


def comm_key(e: Expr):
    """Structural key that ignores argument order of commutative operators."""
    t = type(e)
    if t is App:
        args = [comm_key(a) for a in e.args]
        if e.op in _COMMUTATIVE:
            args.sort(key=repr)
        return (e.op, tuple(args))
    if t is Quant:
        return (e.kind, e.var, e.vsort.value, comm_key(e.body))
    if t is Sel:
        return ("sel", e.vec, comm_key(e.index))
    if t is Const:
        return ("c", e.value, e.sort.value)
    if t is Var:
        return ("v", e.name)
    return repr(e)


def _compositions(total, parts):
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class Enumerator:
    """Terms of each grammar nonterminal bucketed by exact size."""

    def __init__(self, g: TemplateGrammar):
        self.g = g
        self.sorts = dict(g.nonterminals)
        self.buckets = {n: {} for n in self.sorts}
        self.seen = {n: set() for n in self.sorts}

    def of_size(self, n, s):
        b = self.buckets[n]
        if s not in b:
            for smaller in range(1, s):
                if smaller not in b:
                    self.of_size(n, smaller)
            b[s] = self._build(n, s)
        return b[s]

    def _build(self, n, s):
        out = []
        for pat, holes, base in self.g.patterns[n]:
            if not holes:
                cands = [pat] if base == s else []
            else:
                cands = self._fills(pat, holes, s - base)
            for c in cands:
                key = comm_key(c)
                if key not in self.seen[n]:
                    self.seen[n].add(key)
                    out.append(c)
        return out

    def _fills(self, pat, holes, budget):
        if budget < len(holes):
            return []
        out = []
        for sizes in _compositions(budget, len(holes)):
            pools = [self.of_size(h, sz) for h, sz in zip(holes, sizes)]
            if any(not p for p in pools):
                continue
            for combo in itertools.product(*pools):
                out.append(_fill(pat, self.sorts, iter(combo)))
        return out


def enumerate_candidates(g: TemplateGrammar, bound: int | None = None):
    """Formulas of the start symbol in nondecreasing size, up to ``bound`` nodes."""
    bound = g.bound if bound is None else bound
    en = Enumerator(g)
    for s in range(1, bound + 1):
        yield from en.of_size(g.start, s)


def candidates_by_size(g: TemplateGrammar, bound: int | None = None):
    bound = g.bound if bound is None else bound
    en = Enumerator(g)
    return {s: en.of_size(g.start, s) for s in range(1, bound + 1)}


# ---------------------------------------------------------------------------
# counterexample filtering

def falsified(pvc: Pvc, defs: dict, cex: dict) -> bool:
    """Whether the PVC, with parameters read from ``defs``, is false at ``cex``."""
    env = {n: cex.get(n, False if s is Sort.BOOL else 0) for n, s in pvc.universals}
    try:
        return not Evaluator(None, None, defs)(pvc.body, env)
    except EvalError:
        return False


def counterexample_filter(candidates, cache, pvcs):
    """Drop assignments falsified by a cached counterexample of some PVC.

    ``candidates`` yields ``defs`` dicts (parameter -> (formals, body));
    ``cache`` maps a PVC id to a list of ground valuations.
    """
    by_id = {p.id: p for p in pvcs}
    for defs in candidates:
        if any(falsified(by_id[pid], defs, c) for pid, cs in cache.items() if pid in by_id for c in cs):
            continue
        yield defs


# ---------------------------------------------------------------------------
# synthesis

@dataclass
class SynthResult:
    assignment: SummaryAssignment | None
    reason: str = ""
    candidates: int = 0
    pruned: int = 0
    solver_calls: int = 0
    engine: str = "enumerative"
    time: float = 0.0

    @property
    def found(self):
        return self.assignment is not None


class _Checker:
    """Checks candidate assignments PVC by PVC, remembering verdicts and counterexamples."""

    def __init__(self, pvcs, session, use_cache=True):
        self.pvcs = list(pvcs)
        self.session = session
        self.use_cache = use_cache
        self.cex = {}
        self.memo = {}
        self.relevant = {p.id: sorted(params_of(p.body)) for p in self.pvcs}
        self.unknown = 0

    def ok(self, a: SummaryAssignment, keys: dict):
        defs = a.entries
        if self.use_cache:
            for p in self.pvcs:
                for c in self.cex.get(p.id, ()):
                    if falsified(p, defs, c):
                        return False, True
        for p in self.pvcs:
            mk = (p.id, tuple(keys[n] for n in self.relevant[p.id]))
            v = self.memo.get(mk)
            if v is None:
                verdict = self.session.check(plug_pvc(p, a).body)
                v = verdict.outcome
                self.memo[mk] = v
                if v == INVALID and verdict.model is not None:
                    self.cex.setdefault(p.id, []).append(verdict.model)
                elif v != VALID:
                    self.unknown += 1
            if v != VALID:
                # try the failing PVC first next time
                self.pvcs.remove(p)
                self.pvcs.insert(0, p)
                return False, False
        return True, False


def _expanded_def(sig: ParamSig, body: Expr, k):
    if k is None or not any(s.is_vector for _, s in sig.formals):
        return (tuple(sig.formals), body)
    es = expand_sig(sig, k)
    return (tuple(es.formals), expand(body, k))


def synthesize(pvcs, grammars: dict, session: SolverSession, sigs: dict, k=None,
               use_cache=True, max_candidates=None, external=True) -> SynthResult:
    """Find an assignment for every parameter of ``pvcs`` making all of them valid.

    ``pvcs`` are optimized and, in vector mode, expanded for ``k``; ``sigs``
    and ``grammars`` describe the unexpanded parameters.  A returned
    assignment (over the unexpanded formals) has been re-verified.
    """
    start = time.monotonic()
    calls0 = session.calls
    pvcs = list(pvcs)
    names = sorted({n for p in pvcs for n in params_of(p.body)})
    missing = [n for n in names if n not in grammars]
    if missing:
        raise SynthError(f"no template grammar for {', '.join(missing)}")

    def done(a, reason, **kw):
        return SynthResult(a, reason, solver_calls=session.calls - calls0,
                           time=time.monotonic() - start, **kw)

    if not names:
        for p in pvcs:
            v = session.check(p.body)
            if not v.valid:
                return done(None, f"{p.id} is {v.outcome}")
        return done(SummaryAssignment(), "no parameters")

    if external and k is None and session.cfg.sygus_available():
        res = _external(pvcs, names, grammars, session, sigs)
        if res is not None:
            return done(res, "SyGuS solution re-verified", engine="sygus")
        log.info("SyGuS engine gave no verified answer; falling back to enumeration")

    checker = _Checker(pvcs, session, use_cache)
    closed = [p for p in pvcs if not params_of(p.body)]
    for p in closed:
        v = session.check(p.body)
        if not v.valid:
            return done(None, f"parameter-free VC {p.id} is {v.outcome}")
    checker.pvcs = [p for p in pvcs if params_of(p.body)]

    enums = {n: Enumerator(grammars[n]) for n in names}
    bounds = {n: grammars[n].bound for n in names}
    tried = pruned = 0
    for total in range(len(names), sum(bounds.values()) + 1):
        for sizes in _compositions(total, len(names)):
            if any(s > bounds[n] for n, s in zip(names, sizes)):
                continue
            pools = [enums[n].of_size(grammars[n].start, s) for n, s in zip(names, sizes)]
            if any(not p for p in pools):
                continue
            for combo in itertools.product(*pools):
                if session.remaining() <= 0:
                    return done(None, "time budget exhausted", candidates=tried, pruned=pruned)
                if max_candidates is not None and tried >= max_candidates:
                    return done(None, "candidate budget exhausted", candidates=tried, pruned=pruned)
                tried += 1
                a = SummaryAssignment()
                keys = {}
                for n, body in zip(names, combo):
                    a.entries[n] = _expanded_def(sigs[n], body, k)
                    keys[n] = comm_key(body)
                good, was_pruned = checker.ok(a, keys)
                pruned += was_pruned
                if good:
                    out = SummaryAssignment()
                    for n, body in zip(names, combo):
                        out.add(sigs[n], body)
                    return done(out, "all VCs valid", candidates=tried, pruned=pruned)
    why = "grammar exhausted within the size bound"
    if checker.unknown:
        why += f" ({checker.unknown} checks were inconclusive)"
    return done(None, why, candidates=tried, pruned=pruned)


def _external(pvcs, names, grammars, session, sigs):
    funs = [SynthFun(n, tuple(sigs[n].formals), Sort.BOOL, grammars[n].sygus_text()) for n in names]
    try:
        q = emit_sygus([p.body for p in pvcs], funs, timeout=session.cfg.timeout)
    except Exception as exc:
        log.info("cannot pose SyGuS problem: %s", exc)
        return None
    v = session.synth(q)
    if v.outcome != VALID or not v.solution:
        log.info("SyGuS solver: %s", v)
        return None
    a = SummaryAssignment()
    for n in names:
        got_formals, body = v.solution[n]
        ren = {g: Var(f, s) for (g, _), (f, s) in zip(got_formals, sigs[n].formals) if g != f}
        if ren:
            body = subst(body, ren)
        a.add(sigs[n], body)
    for p in pvcs:
        if not session.check(plug_pvc(p, a).body).valid:
            log.warning("SyGuS solution failed re-verification on %s", p.id)
            return None
    return a
