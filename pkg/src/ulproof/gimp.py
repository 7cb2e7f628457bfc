"""The base imperative language, regular tree grammars over it, and partial programs."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .logic import fresh_name
from .sexpr import ParseError, dumps, where


class GrammarError(Exception):
    pass


class Kind(str, Enum):
    STMT = "Stmt"
    INT = "IntExpr"
    BOOL = "BoolExpr"


RESERVED = {"e_t", "b_t"}

ARITY = {
    "IntLit": 0, "BoolLit": 0, "Var": 0, "NonterminalRef": 0, "Skip": 0,
    "Not": 1, "Assign": 1,
    "Plus": 2, "And": 2, "Lt": 2, "Eq": 2, "Seq": 2, "While": 2,
    "IfThenElse": 3,
}

RESULT = {
    "IntLit": Kind.INT, "Var": Kind.INT, "Plus": Kind.INT,
    "BoolLit": Kind.BOOL, "Not": Kind.BOOL, "And": Kind.BOOL, "Lt": Kind.BOOL, "Eq": Kind.BOOL,
    "Assign": Kind.STMT, "Seq": Kind.STMT, "IfThenElse": Kind.STMT, "While": Kind.STMT,
    "Skip": Kind.STMT,
}

CHILDREN = {
    "Not": (Kind.BOOL,), "And": (Kind.BOOL, Kind.BOOL),
    "Plus": (Kind.INT, Kind.INT), "Lt": (Kind.INT, Kind.INT), "Eq": (Kind.INT, Kind.INT),
    "Assign": (Kind.INT,), "Seq": (Kind.STMT, Kind.STMT),
    "IfThenElse": (Kind.BOOL, Kind.STMT, Kind.STMT), "While": (Kind.BOOL, Kind.STMT),
}


@dataclass(frozen=True)
class Term:
    """A node of a (partial) program.

    ``value`` holds the literal for IntLit/BoolLit, the variable name for
    Var/Assign, and the nonterminal name for NonterminalRef.
    """

    tag: str
    children: tuple = ()
    value: object = None

    def __post_init__(self):
        if self.tag not in ARITY:
            raise GrammarError(f"unknown constructor {self.tag}")
        if len(self.children) != ARITY[self.tag]:
            raise GrammarError(f"{self.tag} takes {ARITY[self.tag]} children, got {len(self.children)}")

    def __str__(self):
        return pretty(self)


def int_lit(n):
    return Term("IntLit", (), int(n))


def bool_lit(b):
    return Term("BoolLit", (), bool(b))


def var(name):
    return Term("Var", (), name)


def nt(name):
    return Term("NonterminalRef", (), name)


def plus(a, b):
    return Term("Plus", (a, b))


def not_(a):
    return Term("Not", (a,))


def and_(a, b):
    return Term("And", (a, b))


def lt(a, b):
    return Term("Lt", (a, b))


def eq(a, b):
    return Term("Eq", (a, b))


def assign(x, e):
    return Term("Assign", (e,), x)


def seq(a, b):
    return Term("Seq", (a, b))


def ite(b, s1, s2):
    return Term("IfThenElse", (b, s1, s2))


def while_(b, s):
    return Term("While", (b, s))


SKIP = Term("Skip")


@dataclass
class Rtg:
    sorts: dict  # nonterminal -> Kind, in declaration order
    productions: dict  # nonterminal -> tuple of Term
    start: str = None

    def __post_init__(self):
        if self.start is None and self.sorts:
            self.start = next(iter(self.sorts))
        self.validate()

    def validate(self):
        for n, prods in self.productions.items():
            if n not in self.sorts:
                raise GrammarError(f"productions for undeclared nonterminal {n}")
            if not prods:
                raise GrammarError(f"nonterminal {n} has no productions")
            for p in prods:
                k = kind_of(p, self)
                if k is not self.sorts[n]:
                    raise GrammarError(
                        f"production {pretty(p)} of {n} has sort {k.value}, expected {self.sorts[n].value}")
        for n in self.sorts:
            if n not in self.productions:
                raise GrammarError(f"nonterminal {n} has no productions")
        if self.start is not None and self.start not in self.sorts:
            raise GrammarError(f"unknown start symbol {self.start}")

    def with_productions(self, name, prods):
        p = dict(self.productions)
        p[name] = tuple(prods)
        return Rtg(dict(self.sorts), p, self.start)


def kind_of(t: Term, g: Rtg | None = None) -> Kind:
    """Sort of a (partial) program, checking the sort discipline on the way."""
    if t.tag == "NonterminalRef":
        if g is None or t.value not in g.sorts:
            raise GrammarError(f"undeclared nonterminal {t.value}")
        return g.sorts[t.value]
    if t.tag in ("Var", "Assign") and t.value in RESERVED:
        raise GrammarError(f"{t.value} is reserved and may not appear in programs")
    want = CHILDREN.get(t.tag, ())
    for i, (c, w) in enumerate(zip(t.children, want)):
        k = kind_of(c, g)
        if k is not w:
            raise GrammarError(f"child {i} of {t.tag} in {pretty(t)} has sort {k.value}, expected {w.value}")
    return RESULT[t.tag]


# ---------------------------------------------------------------------------
# structure queries

def refs(t: Term) -> list:
    """Nonterminals referenced in ``t``, first-occurrence order."""
    out = []

    def go(x):
        if x.tag == "NonterminalRef":
            if x.value not in out:
                out.append(x.value)
        for c in x.children:
            go(c)

    go(t)
    return out


def reachable(g: Rtg, n: str) -> list:
    """Nonterminals reachable from the productions of ``n`` (one or more steps)."""
    seen, stack = [], [n]
    while stack:
        cur = stack.pop()
        for p in g.productions[cur]:
            for m in refs(p):
                if m not in seen:
                    seen.append(m)
                    stack.append(m)
    return seen


def is_recursive(g: Rtg, n: str) -> bool:
    if n not in g.sorts:
        raise GrammarError(f"unknown nonterminal {n}")
    return n in reachable(g, n)


def is_closed(t: Term) -> bool:
    return not refs(t)


def _collect_vars(g, t, assigned, read, seen):
    if t.tag == "NonterminalRef":
        if t.value in seen:
            return
        seen.add(t.value)
        for p in g.productions[t.value]:
            _collect_vars(g, p, assigned, read, seen)
        return
    if t.tag == "Var" and t.value not in read:
        read.append(t.value)
    if t.tag == "Assign" and t.value not in assigned:
        assigned.append(t.value)
    for c in t.children:
        _collect_vars(g, c, assigned, read, seen)


def program_vars(g: Rtg | None, t: Term):
    """(assigned, read-only) program variables of every program derivable from ``t``."""
    assigned, read = [], []
    _collect_vars(g, t, assigned, read, set())
    return assigned, [v for v in read if v not in assigned]


def grammar_vars(g: Rtg) -> list:
    out = []
    for prods in g.productions.values():
        for p in prods:
            a, r = program_vars(g, p)
            for v in a + r:
                if v not in out:
                    out.append(v)
    return out


@dataclass(frozen=True)
class VarProfile:
    """Variables relevant to the summary of a set of programs.

    ``x_vars`` are the mutable program variables followed by e_t/b_t for
    expression sorts; ``read_vars`` are variables only read.  Ghost
    (``z_vars``) and poststate (``y_vars``) names pair up with the mutable
    program variables and with every x-var respectively.
    """

    x_vars: tuple
    read_vars: tuple = ()
    z_vars: tuple = ()
    y_vars: tuple = ()

    @property
    def mutable(self):
        return tuple(v for v in self.x_vars if v not in RESERVED)


def var_profile(g: Rtg, n, avoid=()) -> VarProfile:
    """Profile of nonterminal ``n`` (or of a partial program ``n``)."""
    t = nt(n) if isinstance(n, str) else n
    kind = kind_of(t, g)
    assigned, read = program_vars(g, t)
    x = list(assigned)
    if kind is Kind.INT:
        x.append("e_t")
    elif kind is Kind.BOOL:
        x.append("b_t")
    taken = set(grammar_vars(g)) | set(x) | set(read) | RESERVED | set(avoid)
    z, y = [], []
    for v in assigned:
        name = fresh_name(f"{v}_z", taken)
        taken.add(name)
        z.append(name)
    for v in x:
        name = fresh_name(f"{v}_y", taken)
        taken.add(name)
        y.append(name)
    return VarProfile(tuple(x), tuple(read), tuple(z), tuple(y))


# ---------------------------------------------------------------------------
# text forms

_INT_RE = re.compile(r"^-?\d+$")
_NAME_RE = re.compile(r"^[A-Za-z_][\w']*$")
KIND_NAMES = {k.value: k for k in Kind}


def parse_term(sx, nonterminals) -> Term:
    """Build a term from its s-expression; names in ``nonterminals`` become references."""
    if isinstance(sx, list):
        if len(sx) == 1:
            return parse_term(sx[0], nonterminals)
        if not sx or isinstance(sx[0], list):
            raise ParseError(f"malformed program term{where(sx)}", getattr(sx, "line", None), getattr(sx, "col", None))
        head, args = sx[0], sx[1:]
        sub = [parse_term(a, nonterminals) for a in args] if head != ":=" else None

        def need(n):
            if len(args) != n:
                raise ParseError(f"{head} takes {n} arguments{where(sx)}", getattr(sx, "line", None), getattr(sx, "col", None))

        if head == "+":
            need(2)
            return plus(*sub)
        if head == "not":
            need(1)
            return not_(*sub)
        if head == "and":
            need(2)
            return and_(*sub)
        if head == "<":
            need(2)
            return lt(*sub)
        if head in ("=", "=="):
            need(2)
            return eq(*sub)
        if head == ":=":
            need(2)
            target = args[0]
            if isinstance(target, list) or not _NAME_RE.match(target) or target in nonterminals:
                raise ParseError(f"assignment target must be a variable{where(sx)}", getattr(sx, "line", None), getattr(sx, "col", None))
            if target in RESERVED:
                raise GrammarError(f"{target} is reserved{where(sx)}")
            return assign(str(target), parse_term(args[1], nonterminals))
        if head == "seq":
            if len(sub) < 2:
                need(2)
            out = sub[-1]
            for s in reversed(sub[:-1]):
                out = seq(s, out)
            return out
        if head in ("ite", "if"):
            need(3)
            return ite(*sub)
        if head == "while":
            need(2)
            return while_(*sub)
        raise ParseError(f"unknown program constructor {head}{where(sx)}", getattr(sx, "line", None), getattr(sx, "col", None))
    tok = sx
    if _INT_RE.match(tok):
        return int_lit(int(tok))
    if tok in ("true", "false"):
        return bool_lit(tok == "true")
    if tok in nonterminals:
        return nt(str(tok))
    if tok in RESERVED:
        raise GrammarError(f"{tok} is reserved and may not appear in programs{where(tok)}")
    if tok[:1].isupper():
        # program variables are lower-case by convention; capitalized names are nonterminals
        raise GrammarError(f"undeclared nonterminal {tok}{where(tok)}")
    if not _NAME_RE.match(tok):
        raise ParseError(f"bad identifier {tok}", getattr(tok, "line", None), getattr(tok, "col", None))
    return var(str(tok))


def term_sx(t: Term):
    tag = t.tag
    if tag == "IntLit":
        return str(t.value)
    if tag == "BoolLit":
        return "true" if t.value else "false"
    if tag in ("Var", "NonterminalRef"):
        return t.value
    if tag == "Skip":
        return "skip"
    if tag == "Assign":
        return [":=", t.value, term_sx(t.children[0])]
    head = {"Plus": "+", "Not": "not", "And": "and", "Lt": "<", "Eq": "=", "Seq": "seq",
            "IfThenElse": "ite", "While": "while"}[tag]
    return [head, *(term_sx(c) for c in t.children)]


def show_term(t: Term) -> str:
    return dumps(term_sx(t))


_INFIX = {"Plus": "+", "And": "&&", "Lt": "<", "Eq": "=="}


def pretty(t: Term) -> str:
    """Human-readable infix rendering."""
    tag = t.tag
    if tag in ("IntLit", "BoolLit", "Var", "NonterminalRef", "Skip"):
        return term_sx(t) if tag != "BoolLit" else ("true" if t.value else "false")

    def sub(c):
        s = pretty(c)
        return f"({s})" if ARITY[c.tag] >= 1 and c.tag != "Not" else s

    if tag in _INFIX:
        return f"{sub(t.children[0])} {_INFIX[tag]} {sub(t.children[1])}"
    if tag == "Not":
        return f"!{sub(t.children[0])}"
    if tag == "Assign":
        return f"{t.value} := {pretty(t.children[0])}"
    if tag == "Seq":
        return f"{sub(t.children[0])}; {sub(t.children[1])}"
    if tag == "IfThenElse":
        b, s1, s2 = t.children
        return f"if {pretty(b)} then {sub(s1)} else {sub(s2)}"
    b, s = t.children
    return f"while {pretty(b)} do {sub(s)}"


def parse_nonterm_decls(forms) -> Rtg:
    """Build a grammar from ``(nonterm NAME SORT rhs...)`` forms (in order)."""
    sorts, raw = {}, {}
    for f in forms:
        if len(f) < 3:
            raise ParseError(f"malformed nonterm declaration{where(f)}", getattr(f, "line", None), getattr(f, "col", None))
        name, kind = f[1], f[2]
        if isinstance(name, list) or not _NAME_RE.match(name):
            raise ParseError(f"bad nonterminal name{where(f)}", getattr(f, "line", None), getattr(f, "col", None))
        if kind not in KIND_NAMES:
            raise ParseError(f"unknown sort {kind}{where(f)}", getattr(f, "line", None), getattr(f, "col", None))
        if name in sorts:
            raise GrammarError(f"nonterminal {name} declared twice{where(f)}")
        if name in RESERVED:
            raise GrammarError(f"{name} is reserved")
        sorts[str(name)] = KIND_NAMES[kind]
        raw[str(name)] = f[3:]
    names = set(sorts)
    prods = {}
    for n, rhss in raw.items():
        out = []
        for r in rhss:
            out.append(parse_term(r, names))
        prods[n] = tuple(out)
    return Rtg(sorts, prods)


def parse_grammar(text: str) -> Rtg:
    """Parse the ``nonterm`` declarations of a benchmark text."""
    from .sexpr import parse_all
    forms = [f for f in parse_all(text) if isinstance(f, list) and f and f[0] == "nonterm"]
    return parse_nonterm_decls(forms)


def grammar_text(g: Rtg) -> str:
    lines = []
    for n, k in g.sorts.items():
        rhs = " ".join(dumps(term_sx(p)) if ARITY[p.tag] else f"({term_sx(p)})" for p in g.productions[n])
        lines.append(f"(nonterm {n} {k.value} {rhs})")
    return "\n".join(lines)
