"""Benchmark files: grammar, triple, provided summaries, and template grammars.

Format (s-expressions, any order)::

    (set-vector-length 3)            ; optional, vector-state mode
    (nonterm N IntExpr (2) (+ 2 N))  ; first nonterm is the default program
    (pre true)
    (program N)                      ; optional partial program
    (post (not (= e_t 3)))
    (summary N (= (mod e_t 2) 0))    ; by nonterminal or parameter name
    (invariant I1 (<= x 10))
    (summary-grammar N ((B Bool) (C Int)) ((B Bool ((= (mod e_t C) 0))) (C Int (2 3))))
    (examples ((in (x 1)) (out (x 3))) ...)   ; sugar for a vector triple
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import gimp
from .gimp import Rtg, Term, parse_nonterm_decls, parse_term
from .logic import (
    Scope, Sort, conj, disj, eq, ne, num, parse_formula, Sel, TRUE,
)
from .sexpr import ParseError, dumps, parse_all, where
from .vcgen import SummaryAssignment, VcError

KNOWN = {
    "set-vector-length", "nonterm", "pre", "program", "post", "summary", "invariant",
    "summary-grammar", "examples",
}


class BenchmarkError(Exception):
    pass


@dataclass
class Benchmark:
    grammar: Rtg
    pre: object
    program: Term
    post: object
    k: int | None = None
    summaries: dict = field(default_factory=dict)  # name -> raw formula
    templates: dict = field(default_factory=dict)  # name -> raw summary-grammar form
    path: str | None = None

    @property
    def vector(self):
        return self.k is not None

    def scope(self):
        return formula_scope(self.grammar, self.k)


def formula_scope(g: Rtg, k) -> Scope:
    if k is None:
        return Scope(scalars={"b_t": Sort.BOOL})
    vecs = {v: Sort.INT for v in gimp.grammar_vars(g)}
    vecs.update({"e_t": Sort.INT, "b_t": Sort.BOOL})
    return Scope(vectors=vecs)


def _err(msg, sx):
    return ParseError(msg + where(sx), getattr(sx, "line", None), getattr(sx, "col", None))


def _examples(forms, g, k_decl):
    rows = []
    for ex in forms:
        io = {}
        if not isinstance(ex, list):
            raise _err("malformed example", ex)
        for part in ex:
            if not isinstance(part, list) or not part or part[0] not in ("in", "out"):
                raise _err("example parts must be (in ...) or (out ...)", ex)
            vals = {}
            for b in part[1:]:
                if not isinstance(b, list) or len(b) != 2:
                    raise _err("expected (variable value)", part)
                try:
                    vals[str(b[0])] = int(b[1]) if not isinstance(b[1], list) else -int(b[1][1])
                except (ValueError, IndexError):
                    raise _err("example values must be integers", part) from None
            io[str(part[0])] = vals
        rows.append((io.get("in", {}), io.get("out", {})))
    k = len(rows)
    if k == 0:
        raise BenchmarkError("examples form is empty")
    if k_decl is not None and k_decl != k:
        raise BenchmarkError(f"set-vector-length {k_decl} disagrees with {k} examples")
    pre = conj([eq(Sel(v, num(i), Sort.INT), num(val))
                for i, (ins, _) in enumerate(rows, 1) for v, val in ins.items()])
    post = disj([ne(Sel(v, num(i), Sort.INT), num(val))
                 for i, (_, outs) in enumerate(rows, 1) for v, val in outs.items()])
    return k, pre, post


def parse_benchmark(text: str, path=None) -> Benchmark:
    forms = parse_all(text)
    groups = {}
    for f in forms:
        if not isinstance(f, list) or not f or isinstance(f[0], list):
            raise _err("expected a (keyword ...) form", f)
        if f[0] not in KNOWN:
            raise _err(f"unknown form {f[0]}", f)
        groups.setdefault(str(f[0]), []).append(f)

    def single(key, required=False):
        fs = groups.get(key, [])
        if len(fs) > 1:
            raise _err(f"duplicate {key}", fs[1])
        if required and not fs:
            raise BenchmarkError(f"missing ({key} ...)")
        return fs[0] if fs else None

    if "nonterm" not in groups:
        raise BenchmarkError("no nonterminals declared")
    g = parse_nonterm_decls(groups["nonterm"])
    k = None
    kf = single("set-vector-length")
    if kf is not None:
        try:
            k = int(kf[1])
        except (IndexError, ValueError):
            raise _err("set-vector-length expects an integer", kf) from None
        if k < 1:
            raise _err("vector length must be positive", kf)

    pf = single("program")
    if pf is not None:
        if len(pf) != 2:
            raise _err("program expects one term", pf)
        program = parse_term(pf[1], set(g.sorts))
        gimp.kind_of(program, g)
    else:
        program = gimp.nt(g.start)

    ex = single("examples")
    if ex is not None:
        if "pre" in groups or "post" in groups:
            raise _err("examples cannot be combined with pre/post", ex)
        k, pre, post = _examples(ex[1:], g, k)
    scope = formula_scope(g, k)
    if ex is None:
        pre_f = single("pre")
        post_f = single("post", required=True)
        pre = parse_formula(pre_f[1], scope) if pre_f is not None else TRUE
        post = parse_formula(post_f[1], scope)

    summaries = {}
    for f in groups.get("summary", []) + groups.get("invariant", []):
        if len(f) != 3 or isinstance(f[1], list):
            raise _err(f"{f[0]} expects a name and a formula", f)
        if str(f[1]) in summaries:
            raise _err(f"duplicate summary for {f[1]}", f)
        summaries[str(f[1])] = f[2]
    templates = {}
    for f in groups.get("summary-grammar", []):
        if len(f) < 2 or isinstance(f[1], list):
            raise _err("summary-grammar expects a name", f)
        templates[str(f[1])] = f
    return Benchmark(g, pre, program, post, k, summaries, templates, path)


def load_benchmark(path) -> Benchmark:
    with open(path) as fh:
        return parse_benchmark(fh.read(), str(path))


def resolve_name(name, params: dict):
    """Parameter signature named by ``name``: a parameter name, a nonterminal
    (for summaries) or a loop site such as ``loop1`` (for invariants)."""
    if name in params:
        return params[name]
    for sig in params.values():
        if sig.site == name:
            return sig
    return None


def sig_scope(sig) -> Scope:
    vectors = {n: (Sort.INT if s is Sort.VINT else Sort.BOOL) for n, s in sig.formals if s.is_vector}
    scalars = {n: s for n, s in sig.formals if not s.is_vector}
    return Scope(vectors=vectors, scalars=scalars, strict=True)


def provided_assignment(bench: Benchmark, params: dict, skip=()) -> SummaryAssignment:
    """Parse the benchmark's summaries against the skeleton's parameters."""
    a = SummaryAssignment()
    for name, sx in bench.summaries.items():
        sig = resolve_name(name, params)
        if sig is None:
            raise BenchmarkError(f"summary for {name} does not match any parameter of this skeleton "
                                 f"(parameters: {', '.join(params) or 'none'})")
        if sig.name in skip:
            continue
        try:
            body = parse_formula(sx, sig_scope(sig))
            a.add(sig, body)
        except (ParseError, VcError) as exc:
            raise BenchmarkError(f"summary for {name}: {exc}") from None
        except Exception as exc:
            raise BenchmarkError(f"summary for {name}{where(sx)}: {exc}") from None
    return a


def benchmark_text(b: Benchmark) -> str:
    from .logic import show
    lines = []
    if b.k is not None:
        lines.append(f"(set-vector-length {b.k})")
    lines.append(gimp.grammar_text(b.grammar))
    lines.append(f"(pre {show(b.pre)})")
    lines.append(f"(program {gimp.show_term(b.program)})")
    lines.append(f"(post {show(b.post)})")
    for n, sx in b.summaries.items():
        lines.append(f"(summary {n} {dumps(sx)})")
    for sx in b.templates.values():
        lines.append(dumps(sx))
    return "\n".join(lines) + "\n"
