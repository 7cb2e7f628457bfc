"""Concrete interpreter, bounded program enumeration, and brute-force triple checking."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .gimp import Kind, Rtg, Term, is_closed, kind_of, program_vars, show_term
from .logic import EvalError, Evaluator, Sort, free_vars

DIVERGED = "diverged"


class OracleError(Exception):
    pass


class _Diverged(Exception):
    pass


# ---------------------------------------------------------------------------
# interpreter

def _run(t: Term, st: dict, fuel: int):
    tag = t.tag
    if tag == "IntLit":
        st["e_t"] = t.value
    elif tag == "BoolLit":
        st["b_t"] = t.value
    elif tag == "Var":
        try:
            st["e_t"] = st[t.value]
        except KeyError:
            raise OracleError(f"unbound variable {t.value}") from None
    elif tag == "Plus":
        _run(t.children[0], st, fuel)
        left = st["e_t"]
        _run(t.children[1], st, fuel)
        st["e_t"] = left + st["e_t"]
    elif tag in ("Lt", "Eq"):
        _run(t.children[0], st, fuel)
        left = st["e_t"]
        _run(t.children[1], st, fuel)
        st["b_t"] = left < st["e_t"] if tag == "Lt" else left == st["e_t"]
    elif tag == "Not":
        _run(t.children[0], st, fuel)
        st["b_t"] = not st["b_t"]
    elif tag == "And":
        # both operands are evaluated, as in the proof rule
        _run(t.children[0], st, fuel)
        left = st["b_t"]
        _run(t.children[1], st, fuel)
        st["b_t"] = left and st["b_t"]
    elif tag == "Assign":
        _run(t.children[0], st, fuel)
        st[t.value] = st["e_t"]
    elif tag == "Seq":
        _run(t.children[0], st, fuel)
        _run(t.children[1], st, fuel)
    elif tag == "Skip":
        pass
    elif tag == "IfThenElse":
        _run(t.children[0], st, fuel)
        _run(t.children[1] if st["b_t"] else t.children[2], st, fuel)
    elif tag == "While":
        n = 0
        while True:
            _run(t.children[0], st, fuel)
            if not st["b_t"]:
                break
            n += 1
            if n > fuel:
                raise _Diverged()
            _run(t.children[1], st, fuel)
    else:
        raise OracleError(f"cannot execute a {tag}")


def exec_program(p: Term, state: dict, fuel: int = 100, k: int | None = None):
    """Final state after running ``p``, or ``DIVERGED``.

    With ``k`` set, vector-valued entries (tuples of length k) are run
    pointwise; the run diverges if any index does.
    """
    if not is_closed(p):
        raise OracleError("cannot execute a partial program")
    if k is None:
        st = dict(state)
        st.setdefault("e_t", 0)
        st.setdefault("b_t", False)
        try:
            _run(p, st, fuel)
        except _Diverged:
            return DIVERGED
        return st
    vec = {n for n, v in state.items() if isinstance(v, tuple)}
    for n in vec:
        if len(state[n]) != k:
            raise OracleError(f"vector {n} has length {len(state[n])}, expected {k}")
    finals = []
    for i in range(k):
        st = {n: (v[i] if n in vec else v) for n, v in state.items()}
        st.setdefault("e_t", 0)
        st.setdefault("b_t", False)
        try:
            _run(p, st, fuel)
        except _Diverged:
            return DIVERGED
        finals.append(st)
    out = {}
    for n in finals[0]:
        if n in vec or n in ("e_t", "b_t") or n not in state:
            out[n] = tuple(f[n] for f in finals)
        else:
            out[n] = finals[0][n]
    return out


# ---------------------------------------------------------------------------
# enumeration

class _Enum:
    def __init__(self, g: Rtg):
        self.g = g
        self.memo = {}

    def nt(self, n, depth):
        if depth < 1:
            return []
        key = (n, depth)
        if key not in self.memo:
            seen, out = set(), []
            for prod in self.g.productions[n]:
                for t in self.term(prod, depth - 1):
                    if t not in seen:
                        seen.add(t)
                        out.append(t)
            self.memo[key] = out
        return self.memo[key]

    def term(self, t: Term, depth):
        if t.tag == "NonterminalRef":
            return self.nt(t.value, depth)
        if not t.children:
            return [t]
        options = [self.term(c, depth) for c in t.children]
        return [Term(t.tag, kids, t.value) for kids in itertools.product(*options)]


def enumerate_programs(g: Rtg, n: str, depth: int) -> list:
    """Complete derivations of ``n`` with nonterminal nesting at most ``depth``."""
    return _Enum(g).nt(n, depth)


def enumerate_term(g: Rtg, t: Term, depth: int) -> list:
    """Completions of a partial program; each hole gets ``depth`` levels."""
    seen, out = set(), []
    for p in _Enum(g).term(t, depth):
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


# ---------------------------------------------------------------------------
# triple checking

@dataclass(frozen=True)
class Holds:
    programs: int
    states: int

    ok = True

    def __str__(self):
        return f"Holds ({self.programs} programs, {self.states} initial states)"


@dataclass(frozen=True)
class Counterexample:
    program: Term
    state: dict
    final: dict

    ok = False

    def __str__(self):
        def fmt(s):
            return "{" + ", ".join(f"{k}={list(v) if isinstance(v, tuple) else v}" for k, v in sorted(s.items())) + "}"
        return f"Counterexample({show_term(self.program)}; {fmt(self.state)} -> {fmt(self.final)})"


def state_vars(g: Rtg | None, program: Term, pre, post):
    assigned, read = program_vars(g, program)
    names = list(dict.fromkeys([*assigned, *read]))
    for f in (pre, post):
        for n, s in free_vars(f).items():
            if n not in names and n not in ("e_t", "b_t"):
                names.append(n)
    return names


def initial_states(names, domain, k=None, vectors=(), sorts=None, var_domains=None):
    sorts = sorts or {}
    var_domains = var_domains or {}
    axes = []
    for n in names:
        base = list(var_domains.get(n, domain))
        if sorts.get(n) is Sort.BOOL:
            base = [False, True]
        if k is not None and n in vectors:
            axes.append(list(itertools.product(base, repeat=k)))
        else:
            axes.append(base)
    for combo in itertools.product(*axes):
        yield dict(zip(names, combo))


def check_triple(pre, g: Rtg, program: Term, post, domain, fuel=50, depth=4, k=None,
                 var_domains=None, programs=None):
    """Brute-force partial-correctness check of ``{pre} program {post}``.

    ``program`` may be a partial program; its holes are filled from ``g`` up
    to ``depth``.  Integer quantifiers in the formulas range over ``domain``.
    In vector mode every program variable is a ``k``-vector.
    """
    domain = list(domain)
    ev = Evaluator(domain, k)
    if programs is None:
        programs = enumerate_term(g, program, depth)
    names = state_vars(g, program, pre, post)
    pv = set(itertools.chain(*program_vars(g, program)))
    fv = {**free_vars(pre), **free_vars(post)}
    vectors = {n for n in names if n in pv or (fv.get(n) is not None and fv[n].is_vector)}
    sorts = {n: s for n, s in fv.items()}
    # reserved result variables that the program's sort never sets
    hidden = {Kind.STMT: {"e_t", "b_t"}, Kind.INT: {"b_t"}, Kind.BOOL: {"e_t"}}[kind_of(program, g)]
    starts = []
    for st in initial_states(names, domain, k, vectors, sorts, var_domains):
        try:
            if ev(pre, st):
                starts.append(st)
        except EvalError as exc:
            raise OracleError(f"cannot evaluate precondition: {exc}") from exc
    for p in programs:
        for st in starts:
            final = exec_program(p, st, fuel, k if vectors else None)
            if final is DIVERGED:
                continue
            if not ev(post, final):
                shown = {n: v for n, v in final.items() if n not in hidden}
                return Counterexample(p, st, shown)
    return Holds(len(programs), len(starts))
