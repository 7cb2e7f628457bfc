"""First-order formulas with finite-vector variables and second-order parameters.

Formulas and terms share one tree type.  Scalar variables are ``Var``; an
element of a vector variable is ``Sel(vec, index)``.  A vector-valued
argument (only allowed inside parameter applications) is a ``Lam`` from an
index variable to an element term.  Parameters (summaries and invariants)
are ``Param`` applications; skolem functions are ``Fun`` applications.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from enum import Enum

from .sexpr import ParseError, Sym, dumps, where


class LogicError(Exception):
    pass


class SortError(LogicError):
    pass


class EvalError(LogicError):
    pass


class Sort(Enum):
    INT = "Int"
    BOOL = "Bool"
    IDX = "Idx"
    VINT = "VecInt"
    VBOOL = "VecBool"

    @property
    def is_vector(self):
        return self in (Sort.VINT, Sort.VBOOL)


def elem_sort(s: Sort) -> Sort:
    return {Sort.VINT: Sort.INT, Sort.VBOOL: Sort.BOOL}[s]


def vec_sort(s: Sort) -> Sort:
    return {Sort.INT: Sort.VINT, Sort.BOOL: Sort.VBOOL}[s]


class Expr:
    __slots__ = ()

    def __str__(self):
        return show(self)


@dataclass(frozen=True)
class Const(Expr):
    value: object
    sort: Sort


@dataclass(frozen=True)
class Var(Expr):
    name: str
    sort: Sort = Sort.INT


@dataclass(frozen=True)
class Sel(Expr):
    """Element ``vec[index]`` of a vector variable (1-based)."""

    vec: str
    index: Expr
    sort: Sort = Sort.INT


@dataclass(frozen=True)
class App(Expr):
    op: str
    args: tuple


@dataclass(frozen=True)
class Quant(Expr):
    kind: str  # "forall" | "exists"
    var: str
    vsort: Sort
    body: Expr


@dataclass(frozen=True)
class Param(Expr):
    """Application of a second-order parameter; always Boolean."""

    name: str
    args: tuple


@dataclass(frozen=True)
class Fun(Expr):
    """Application of an uninterpreted (skolem) function."""

    name: str
    args: tuple
    sort: Sort = Sort.INT


@dataclass(frozen=True)
class Lam(Expr):
    """Vector-valued term: index variable ``var`` maps to element ``body``."""

    var: str
    body: Expr


@dataclass(frozen=True)
class ParamSig:
    name: str
    kind: str  # "summary" | "invariant"
    site: str
    formals: tuple  # ((name, Sort), ...)

    def app(self, args=None) -> Param:
        if args is None:
            args = [ref(n, s) for n, s in self.formals]
        args = tuple(args)
        if len(args) != len(self.formals):
            raise SortError(f"{self.name} expects {len(self.formals)} arguments, got {len(args)}")
        return Param(self.name, args)


TRUE = Const(True, Sort.BOOL)
FALSE = Const(False, Sort.BOOL)

ARITH = {"+", "-", "*", "mod", "div", "abs"}
CMP = {"<", "<=", ">", ">="}
CONNECTIVES = {"not", "and", "or", "=>"}
COMMUTATIVE = {"and", "or", "=", "+", "*", "distinct"}
LAMBDA_VAR = "_j"


def num(n: int) -> Const:
    return Const(int(n), Sort.INT)


def boolc(b: bool) -> Const:
    return TRUE if b else FALSE


def ref(name: str, sort: Sort) -> Expr:
    """A reference to a variable of any sort, usable as a parameter argument."""
    if sort.is_vector:
        return Lam(LAMBDA_VAR, Sel(name, Var(LAMBDA_VAR), elem_sort(sort)))
    if sort is Sort.IDX:
        return Var(name, Sort.INT)
    return Var(name, sort)


def conj(*fs) -> Expr:
    if len(fs) == 1 and isinstance(fs[0], (list, tuple)):
        fs = tuple(fs[0])
    if not fs:
        return TRUE
    if len(fs) == 1:
        return fs[0]
    return App("and", tuple(fs))


def disj(*fs) -> Expr:
    if len(fs) == 1 and isinstance(fs[0], (list, tuple)):
        fs = tuple(fs[0])
    if not fs:
        return FALSE
    if len(fs) == 1:
        return fs[0]
    return App("or", tuple(fs))


def neg(f):
    return App("not", (f,))


def imp(a, b):
    return App("=>", (a, b))


def eq(a, b):
    return App("=", (a, b))


def ne(a, b):
    return neg(eq(a, b))


def lt(a, b):
    return App("<", (a, b))


def add(a, b):
    return App("+", (a, b))


def forall(binders, body):
    for name, s in reversed(list(binders)):
        body = Quant("forall", name, s, body)
    return body


def exists(binders, body):
    for name, s in reversed(list(binders)):
        body = Quant("exists", name, s, body)
    return body


def vec_eq(a: str, b: str, s: Sort = Sort.INT, idx="i") -> Expr:
    """Pointwise equality of two vector variables."""
    return Quant("forall", idx, Sort.IDX, eq(Sel(a, Var(idx), s), Sel(b, Var(idx), s)))


def sort_of(e: Expr) -> Sort:
    t = type(e)
    if t is Const or t is Var or t is Sel or t is Fun:
        return e.sort
    if t is App:
        if e.op in ARITH:
            return Sort.INT
        if e.op == "ite":
            return sort_of(e.args[1])
        return Sort.BOOL
    if t is Quant or t is Param:
        return Sort.BOOL
    if t is Lam:
        return vec_sort(sort_of(e.body))
    raise LogicError(f"not a formula: {e!r}")


def check_app(op, args):
    """Raise SortError unless ``op`` applied to ``args`` is well sorted."""
    sorts = [sort_of(a) for a in args]
    if any(s.is_vector for s in sorts):
        raise SortError(f"vector argument to {op}")
    if op in ARITH or op in CMP:
        if any(s is not Sort.INT for s in sorts):
            raise SortError(f"{op} expects integer arguments")
        n = len(args)
        ok = {"-": n in (1, 2), "+": n >= 2, "*": n >= 2, "abs": n == 1}.get(op, n == 2)
        if not ok:
            raise SortError(f"wrong number of arguments to {op}")
    elif op in CONNECTIVES:
        if any(s is not Sort.BOOL for s in sorts):
            raise SortError(f"{op} expects Boolean arguments")
        if op == "not" and len(args) != 1 or op == "=>" and len(args) != 2:
            raise SortError(f"wrong number of arguments to {op}")
    elif op in ("=", "distinct"):
        if len(args) < 2 or len(set(sorts)) != 1:
            raise SortError(f"{op} expects arguments of one sort")
    elif op == "ite":
        if len(args) != 3 or sorts[0] is not Sort.BOOL or sorts[1] is not sorts[2]:
            raise SortError("ite expects (Bool, T, T)")
    else:
        raise SortError(f"unknown operator {op}")


# ---------------------------------------------------------------------------
# traversal helpers

def free_vars(e: Expr) -> dict:
    """Free first-order variables in first-occurrence order, mapped to sorts.

    Vector variables are reported with their vector sort.
    """
    out = {}
    _fv(e, frozenset(), out)
    return out


def _fv(e, bound, out):
    t = type(e)
    if t is Var:
        if e.name not in bound:
            out.setdefault(e.name, e.sort)
    elif t is Sel:
        if e.vec not in bound:
            out.setdefault(e.vec, vec_sort(e.sort))
        _fv(e.index, bound, out)
    elif t is App or t is Param or t is Fun:
        for a in e.args:
            _fv(a, bound, out)
    elif t is Quant or t is Lam:
        _fv(e.body, bound | {e.var}, out)


def params_of(e: Expr) -> dict:
    """Parameter names applied in ``e`` mapped to their arities."""
    out = {}

    def go(x):
        t = type(x)
        if t is Param:
            out.setdefault(x.name, len(x.args))
        if t in (App, Param, Fun):
            for a in x.args:
                go(a)
        elif t in (Quant, Lam):
            go(x.body)
        elif t is Sel:
            go(x.index)

    go(e)
    return out


def funs_of(e: Expr) -> dict:
    out = {}

    def go(x):
        t = type(x)
        if t is Fun:
            out.setdefault(x.name, (len(x.args), x.sort))
        if t in (App, Param, Fun):
            for a in x.args:
                go(a)
        elif t in (Quant, Lam):
            go(x.body)
        elif t is Sel:
            go(x.index)

    go(e)
    return out


def binders(e: Expr) -> list:
    """Bound variable names at each binding site, in pre-order."""
    out = []

    def go(x):
        t = type(x)
        if t in (Quant, Lam):
            out.append(x.var)
            go(x.body)
        elif t in (App, Param, Fun):
            for a in x.args:
                go(a)
        elif t is Sel:
            go(x.index)

    go(e)
    return out


def fresh_name(base: str, avoid) -> str:
    if base not in avoid:
        return base
    stem = base.rstrip("0123456789") or base
    n = 1
    while f"{stem}{n}" in avoid:
        n += 1
    return f"{stem}{n}"


def _renaming(new: str, vsort: Sort) -> Expr:
    if vsort.is_vector:
        return ref(new, vsort)
    if vsort is Sort.BOOL:
        return Var(new, Sort.BOOL)
    return Var(new, Sort.INT)


# ---------------------------------------------------------------------------
# substitution

def subst(e: Expr, mapping: dict) -> Expr:
    """Simultaneous capture-avoiding substitution.

    ``mapping`` sends scalar variable names to terms and vector variable names
    to ``Lam`` terms (elementwise replacement).
    """
    if not mapping:
        return e
    return _subst(e, mapping)


def _subst(e, m):
    t = type(e)
    if t is Var:
        r = m.get(e.name)
        if r is None:
            return e
        if type(r) is Lam:
            raise SortError(f"vector replacement for scalar variable {e.name}")
        if sort_of(r) is not e.sort:
            raise SortError(f"cannot replace {e.name}:{e.sort.value} by a {sort_of(r).value} term")
        return r
    if t is Const:
        return e
    if t is Sel:
        idx = _subst(e.index, m)
        r = m.get(e.vec)
        if r is None:
            return e if idx is e.index else Sel(e.vec, idx, e.sort)
        if type(r) is not Lam:
            raise SortError(f"scalar replacement for vector variable {e.vec}")
        if sort_of(r.body) is not e.sort:
            raise SortError(f"element sort mismatch replacing {e.vec}")
        return subst(r.body, {r.var: idx})
    if t is App:
        return App(e.op, tuple(_subst(a, m) for a in e.args))
    if t is Param:
        return Param(e.name, tuple(_subst(a, m) for a in e.args))
    if t is Fun:
        return Fun(e.name, tuple(_subst(a, m) for a in e.args), e.sort)
    if t is Quant or t is Lam:
        body_fv = free_vars(e.body)
        inner = {k: v for k, v in m.items() if k != e.var and k in body_fv}
        if not inner:
            return e
        repl_fv = set()
        for v in inner.values():
            repl_fv.update(free_vars(v))
        var = e.var
        if var in repl_fv:
            vsort = e.vsort if t is Quant else Sort.IDX
            var = fresh_name(var, repl_fv | set(body_fv) | set(inner))
            inner[e.var] = _renaming(var, vsort)
        body = _subst(e.body, inner)
        if t is Quant:
            return Quant(e.kind, var, e.vsort, body)
        return Lam(var, body)
    raise LogicError(f"cannot substitute into {e!r}")


def substitute(f: Expr, target, replacement: Expr) -> Expr:
    """Replace a variable (``"x"``) or a vector element (``("x", idx)``)."""
    if isinstance(target, tuple):
        vec, idx = target
        s = sort_of(replacement)
        j = LAMBDA_VAR
        lam = Lam(j, App("ite", (eq(Var(j), idx), replacement, Sel(vec, Var(j), s))))
        out = subst(f, {vec: lam})
        return fold_indices(out)
    return subst(f, {target: replacement})


def vec_substitute(f: Expr, vec: str, elementwise) -> Expr:
    """Replace every ``vec[i]`` by ``elementwise(i)``.

    ``elementwise`` is a ``Lam`` or a Python function from index term to
    element term.
    """
    if isinstance(elementwise, Lam):
        return subst(f, {vec: elementwise})
    j = fresh_name(LAMBDA_VAR, set(free_vars(f)))
    return subst(f, {vec: Lam(j, elementwise(Var(j)))})


def instantiate(e: Expr, defs: dict) -> Expr:
    """Replace parameter/function applications by their definitions.

    ``defs`` maps a name to ``(formals, body)`` where ``formals`` is a
    sequence of ``(name, Sort)``.
    """
    t = type(e)
    if t is Param or t is Fun:
        args = tuple(instantiate(a, defs) for a in e.args)
        d = defs.get(e.name)
        if d is None:
            return type(e)(e.name, args) if t is Param else Fun(e.name, args, e.sort)
        formals, body = d
        if len(formals) != len(args):
            raise SortError(f"{e.name}: arity mismatch ({len(formals)} formals, {len(args)} args)")
        return subst(body, {n: a for (n, _), a in zip(formals, args)})
    if t is App:
        return App(e.op, tuple(instantiate(a, defs) for a in e.args))
    if t is Quant:
        return Quant(e.kind, e.var, e.vsort, instantiate(e.body, defs))
    if t is Lam:
        return Lam(e.var, instantiate(e.body, defs))
    if t is Sel:
        return Sel(e.vec, instantiate(e.index, defs), e.sort)
    return e


# ---------------------------------------------------------------------------
# folding, canonical renaming

def _euclid(a, b, op):
    if b == 0:
        raise EvalError(f"{op} by zero")
    r = a % abs(b)
    q = (a - r) // b
    return r if op == "mod" else q


def _arith(op, vals):
    if op == "+":
        return sum(vals)
    if op == "-":
        return -vals[0] if len(vals) == 1 else vals[0] - sum(vals[1:])
    if op == "*":
        out = 1
        for v in vals:
            out *= v
        return out
    if op in ("mod", "div"):
        return _euclid(vals[0], vals[1], op)
    if op == "abs":
        return abs(vals[0])
    raise EvalError(op)


def fold(e: Expr) -> Expr:
    """Constant-fold integer arithmetic and comparisons of literals."""
    if type(e) is App:
        args = tuple(fold(a) for a in e.args)
        if all(type(a) is Const and a.sort is Sort.INT for a in args):
            vals = [a.value for a in args]
            try:
                if e.op in ARITH:
                    return num(_arith(e.op, vals))
                if e.op in CMP or e.op == "=":
                    return boolc(_cmp(e.op, vals))
            except EvalError:
                pass
        if e.op == "ite" and type(args[0]) is Const:
            return args[1] if args[0].value else args[2]
        return App(e.op, args)
    return e


def fold_indices(e: Expr) -> Expr:
    t = type(e)
    if t is Sel:
        return Sel(e.vec, fold(fold_indices(e.index)), e.sort)
    if t is App:
        return App(e.op, tuple(fold_indices(a) for a in e.args))
    if t is Param:
        return Param(e.name, tuple(fold_indices(a) for a in e.args))
    if t is Fun:
        return Fun(e.name, tuple(fold_indices(a) for a in e.args), e.sort)
    if t is Quant:
        return Quant(e.kind, e.var, e.vsort, fold_indices(e.body))
    if t is Lam:
        return Lam(e.var, fold_indices(e.body))
    return e


def canon(e: Expr) -> Expr:
    """Rename bound variables to ``_b0, _b1, ...`` in pre-order."""
    counter = itertools.count()

    def go(x, ren):
        t = type(x)
        if t is Var:
            n = ren.get(x.name)
            return x if n is None else Var(n, x.sort)
        if t is Sel:
            return Sel(ren.get(x.vec, x.vec), go(x.index, ren), x.sort)
        if t is App:
            return App(x.op, tuple(go(a, ren) for a in x.args))
        if t is Param:
            return Param(x.name, tuple(go(a, ren) for a in x.args))
        if t is Fun:
            return Fun(x.name, tuple(go(a, ren) for a in x.args), x.sort)
        if t is Quant or t is Lam:
            new = f"_b{next(counter)}"
            body = go(x.body, {**ren, x.var: new})
            if t is Quant:
                return Quant(x.kind, new, x.vsort, body)
            return Lam(new, body)
        return x

    return go(e, {})


def alpha_eq(a: Expr, b: Expr) -> bool:
    return canon(a) == canon(b)


# ---------------------------------------------------------------------------
# the T transformation for vector-state conditionals

def t_transform(q: Expr, b_loop: str, ymap: dict, form: str = "implications") -> Expr:
    """Rewrite ``q`` so it describes the state after a pointwise branch.

    ``ymap`` sends each mutable program vector to its fresh poststate
    vector.  Entries at indices where ``b_loop`` is true are read from the
    poststate vector.  Each atom mentioning mutable vectors at index terms
    a1..an becomes a case split over the 2^n sign patterns of
    ``b_loop[a1..an]``; ``form`` picks between a conjunction of
    implications and a disjunction of conjunctions.  Parameter and function
    arguments are rewritten pointwise with ``ite``.
    """
    fv = free_vars(q)
    if b_loop in fv:
        raise LogicError(f"{b_loop} is reserved and may not occur in the formula")
    if form not in ("implications", "disjunction"):
        raise ValueError(form)
    return _T(q, b_loop, dict(ymap), form)


def _T(e, bl, ymap, form):
    t = type(e)
    if t is Quant:
        ym = {k: v for k, v in ymap.items() if k != e.var}
        taken = {bl, *ym.values()}
        if e.var in taken:
            new = fresh_name(e.var, taken | set(free_vars(e.body)))
            e = Quant(e.kind, new, e.vsort, subst(e.body, {e.var: _renaming(new, e.vsort)}))
        return Quant(e.kind, e.var, e.vsort, _T(e.body, bl, ym, form))
    if t is App and (e.op in CONNECTIVES or (e.op in ("=", "ite") and sort_of(e) is Sort.BOOL
                                              and all(sort_of(a) is Sort.BOOL for a in e.args[-2:]))):
        return App(e.op, tuple(_T(a, bl, ymap, form) for a in e.args))
    if t is Param or t is Fun:
        args = tuple(_pointwise_select(a, bl, ymap) for a in e.args)
        return Param(e.name, args) if t is Param else Fun(e.name, args, e.sort)
    return _t_atom(e, bl, ymap, form)


def _pointwise_select(arg, bl, ymap):
    fv = free_vars(arg)
    j = fresh_name(LAMBDA_VAR, set(fv) | {bl, *ymap.values()})
    m = {}
    for v, y in ymap.items():
        if v in fv and fv[v].is_vector:
            s = elem_sort(fv[v])
            pick = App("ite", (Sel(bl, Var(j), Sort.BOOL), Sel(y, Var(j), s), Sel(v, Var(j), s)))
            m[v] = Lam(j, pick)
    return subst(arg, m)


def _collect_indices(e, ymap, acc):
    t = type(e)
    if t is Sel:
        _collect_indices(e.index, ymap, acc)
        if e.vec in ymap:
            a = fold(e.index)
            if a not in acc:
                acc.append(a)
    elif t in (App, Param, Fun):
        for a in e.args:
            _collect_indices(a, ymap, acc)
    elif t in (Quant, Lam):
        _collect_indices(e.body, ymap, acc)


def _rename_at(e, ymap, chosen):
    t = type(e)
    if t is Sel:
        idx = _rename_at(e.index, ymap, chosen)
        if e.vec in ymap and fold(e.index) in chosen:
            return Sel(ymap[e.vec], idx, e.sort)
        return Sel(e.vec, idx, e.sort)
    if t is App:
        return App(e.op, tuple(_rename_at(a, ymap, chosen) for a in e.args))
    return e


def _t_atom(e, bl, ymap, form):
    idxs = []
    _collect_indices(e, ymap, idxs)
    if not idxs:
        return e
    cases = []
    for signs in itertools.product((True, False), repeat=len(idxs)):
        guard = conj([Sel(bl, a, Sort.BOOL) if s else neg(Sel(bl, a, Sort.BOOL))
                      for a, s in zip(idxs, signs)])
        chosen = [a for a, s in zip(idxs, signs) if s]
        body = _rename_at(e, ymap, chosen)
        cases.append(imp(guard, body) if form == "implications" else conj(guard, body))
    return conj(cases) if form == "implications" else disj(cases)


# ---------------------------------------------------------------------------
# finite-vector expansion

def scalar_name(vec: str, i: int) -> str:
    return f"{vec}@{i}"


def expand_sig(sig: ParamSig, k: int) -> ParamSig:
    formals = []
    for n, s in sig.formals:
        if s.is_vector:
            formals.extend((scalar_name(n, i), elem_sort(s)) for i in range(1, k + 1))
        else:
            formals.append((n, s))
    return ParamSig(sig.name, sig.kind, sig.site, tuple(formals))


def expand(e: Expr, k: int) -> Expr:
    """Eliminate index quantifiers, vector quantifiers and vector variables.

    ``x[c]`` becomes the scalar ``x@c``; index quantifiers become finite
    conjunctions/disjunctions.  The result mentions no ``Sel``/``Lam``.
    """
    t = type(e)
    if t is Quant:
        if e.vsort is Sort.IDX:
            parts = [expand(subst(e.body, {e.var: num(c)}), k) for c in range(1, k + 1)]
            return conj(parts) if e.kind == "forall" else disj(parts)
        body = expand(e.body, k)
        if e.vsort.is_vector:
            s = elem_sort(e.vsort)
            for c in range(k, 0, -1):
                body = Quant(e.kind, scalar_name(e.var, c), s, body)
            return body
        return Quant(e.kind, e.var, e.vsort, body)
    if t is Sel:
        idx = fold(expand(e.index, k))
        if type(idx) is not Const:
            raise LogicError(f"index of {e.vec} is not a closed term after expansion: {show(idx)}")
        if not 1 <= idx.value <= k:
            raise LogicError(f"index {idx.value} of {e.vec} outside 1..{k}")
        return Var(scalar_name(e.vec, idx.value), e.sort)
    if t is App:
        return App(e.op, tuple(expand(a, k) for a in e.args))
    if t is Param or t is Fun:
        args = []
        for a in e.args:
            if type(a) is Lam:
                args.extend(expand(subst(a.body, {a.var: num(c)}), k) for c in range(1, k + 1))
            else:
                args.append(expand(a, k))
        return Param(e.name, tuple(args)) if t is Param else Fun(e.name, tuple(args), e.sort)
    if t is Lam:
        raise LogicError("vector-valued term outside a parameter application")
    return e


# ---------------------------------------------------------------------------
# evaluation

def _cmp(op, vals):
    a, b = vals
    return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b, "=": a == b}[op]


class Evaluator:
    """Evaluate formulas over concrete values.

    Integer quantifiers range over ``domain`` (required if one is met);
    index quantifiers range over 1..k; vector quantifiers over all k-tuples.
    ``defs`` interprets parameters and functions: a name maps to
    ``(formals, body)`` or a Python callable.
    """

    def __init__(self, domain=None, k=None, defs=None):
        self.domain = None if domain is None else list(domain)
        self.k = k
        self.defs = defs or {}

    def __call__(self, e, env):
        return self.ev(e, env)

    def _range(self, s):
        if s is Sort.BOOL:
            return (False, True)
        if s is Sort.INT:
            if self.domain is None:
                raise EvalError("unbounded integer quantifier")
            return self.domain
        if s is Sort.IDX:
            return range(1, self._k() + 1)
        base = self._range(elem_sort(s))
        return itertools.product(base, repeat=self._k())

    def _k(self):
        if self.k is None:
            raise EvalError("vector length not set")
        return self.k

    def ev(self, e, env):
        t = type(e)
        if t is Const:
            return e.value
        if t is Var:
            try:
                return env[e.name]
            except KeyError:
                raise EvalError(f"unbound variable {e.name}") from None
        if t is Sel:
            i = self.ev(e.index, env)
            try:
                v = env[e.vec]
            except KeyError:
                raise EvalError(f"unbound vector {e.vec}") from None
            if not 1 <= i <= len(v):
                raise EvalError(f"index {i} out of range for {e.vec}")
            return v[i - 1]
        if t is App:
            return self._app(e, env)
        if t is Quant:
            env2 = dict(env)
            want = e.kind == "forall"
            for val in self._range(e.vsort):
                env2[e.var] = val
                if bool(self.ev(e.body, env2)) != want:
                    return not want
            return want
        if t is Lam:
            env2 = dict(env)
            out = []
            for i in range(1, self._k() + 1):
                env2[e.var] = i
                out.append(self.ev(e.body, env2))
            return tuple(out)
        if t is Param or t is Fun:
            vals = [self.ev(a, env) for a in e.args]
            d = self.defs.get(e.name)
            if d is None:
                raise EvalError(f"no interpretation for {e.name}")
            if callable(d):
                return d(*vals)
            formals, body = d
            return self.ev(body, {n: v for (n, _), v in zip(formals, vals)})
        raise EvalError(f"cannot evaluate {e!r}")

    def _app(self, e, env):
        op = e.op
        if op == "and":
            return all(self.ev(a, env) for a in e.args)
        if op == "or":
            return any(self.ev(a, env) for a in e.args)
        if op == "not":
            return not self.ev(e.args[0], env)
        if op == "=>":
            return (not self.ev(e.args[0], env)) or bool(self.ev(e.args[1], env))
        if op == "ite":
            return self.ev(e.args[1] if self.ev(e.args[0], env) else e.args[2], env)
        vals = [self.ev(a, env) for a in e.args]
        if op in ARITH:
            return _arith(op, vals)
        if op == "=":
            return all(v == vals[0] for v in vals[1:])
        if op == "distinct":
            return len(set(vals)) == len(vals)
        return _cmp(op, vals)


def evaluate(e, env, domain=None, k=None, defs=None):
    return Evaluator(domain, k, defs).ev(e, env)


# ---------------------------------------------------------------------------
# printing

def to_sx(e: Expr):
    t = type(e)
    if t is Const:
        if e.sort is Sort.BOOL:
            return "true" if e.value else "false"
        return str(e.value) if e.value >= 0 else ["-", str(-e.value)]
    if t is Var:
        return e.name
    if t is Sel:
        i = e.index
        if type(i) is Var or (type(i) is Const and i.sort is Sort.INT and i.value >= 0):
            return f"{e.vec}[{to_sx(i)}]"
        return ["sel", e.vec, to_sx(i)]
    if t is App:
        return [e.op, *(to_sx(a) for a in e.args)]
    if t is Quant:
        bs, body = [], e
        while type(body) is Quant and body.kind == e.kind:
            bs.append([body.var, body.vsort.value])
            body = body.body
        return [e.kind, bs, to_sx(body)]
    if t is Param or t is Fun:
        if not e.args:
            return e.name
        return [e.name, *(to_sx(a) for a in e.args)]
    if t is Lam:
        b = e.body
        if type(b) is Sel and b.index == Var(e.var):
            return b.vec
        return ["lambda", [[e.var, "Idx"]], to_sx(b)]
    raise LogicError(repr(e))


def show(e: Expr) -> str:
    return dumps(to_sx(e))


# ---------------------------------------------------------------------------
# parsing

_INT_RE = re.compile(r"^-?\d+$")
_SEL_RE = re.compile(r"^([A-Za-z_][\w@.']*)\[([^\[\]]+)\]$")
SORT_NAMES = {s.value: s for s in Sort}
OP_ALIASES = {"==": "=", "->": "=>", "&&": "and", "||": "or", "!": "not"}


@dataclass
class Scope:
    """Sorting information for parsing formulas."""

    vectors: dict = None  # vector name -> element Sort
    scalars: dict = None  # scalar name -> Sort (default Int)
    params: dict = None  # name -> ParamSig
    funs: dict = None  # name -> (arity, Sort)
    strict: bool = False  # reject undeclared identifiers

    def __post_init__(self):
        self.vectors = dict(self.vectors or {})
        self.scalars = dict(self.scalars or {})
        self.params = dict(self.params or {})
        self.funs = dict(self.funs or {})


def parse_formula(sx, scope: Scope | None = None, expect: Sort | None = Sort.BOOL) -> Expr:
    scope = scope or Scope()
    e = _parse(sx, scope, {})
    if expect is not None and sort_of(e) is not expect:
        raise SortError(f"expected a {expect.value} term{where(sx)}, got {show(e)}")
    return e


def parse_formula_text(text: str, scope: Scope | None = None, expect=Sort.BOOL) -> Expr:
    from .sexpr import parse_one
    return parse_formula(parse_one(text), scope, expect)


def _lookup_vec(name, scope, env):
    if name in env:
        s = env[name]
        return elem_sort(s) if s.is_vector else None
    return scope.vectors.get(name)


def _parse_atom(tok, scope, env, as_arg=False):
    if tok == "true":
        return TRUE
    if tok == "false":
        return FALSE
    if _INT_RE.match(tok):
        return num(int(tok))
    m = _SEL_RE.match(tok)
    if m:
        vec, idx = m.groups()
        es = _lookup_vec(vec, scope, env)
        if es is None:
            raise SortError(f"{vec} is not a vector variable{where(tok)}")
        return Sel(vec, _parse_atom(Sym(idx), scope, env), es)
    if tok in env:
        s = env[tok]
        if s.is_vector:
            if as_arg:
                return ref(tok, s)
            raise SortError(f"vector {tok} used as a scalar{where(tok)}")
        return Var(tok, Sort.INT if s is Sort.IDX else s)
    if tok in scope.vectors:
        if as_arg:
            return ref(tok, vec_sort(scope.vectors[tok]))
        raise SortError(f"vector {tok} used as a scalar{where(tok)}")
    if tok in scope.params:
        return _mk_param(scope.params[tok], [], tok)
    if tok in scope.scalars:
        return Var(tok, scope.scalars[tok])
    if tok == "b_t":
        return Var(tok, Sort.BOOL)
    if scope.strict:
        raise ParseError(f"undeclared identifier {tok}", getattr(tok, "line", None), getattr(tok, "col", None))
    return Var(str(tok), Sort.INT)


def _mk_param(sig, args, sx):
    if len(args) != len(sig.formals):
        raise SortError(f"{sig.name} expects {len(sig.formals)} arguments{where(sx)}")
    for a, (n, s) in zip(args, sig.formals):
        want = s if s is not Sort.IDX else Sort.INT
        if sort_of(a) is not want:
            raise SortError(f"argument {n} of {sig.name} has the wrong sort{where(sx)}")
    return Param(sig.name, tuple(args))


def _parse(sx, scope, env):
    if not isinstance(sx, list):
        return _parse_atom(sx, scope, env)
    if not sx:
        raise ParseError("empty list", getattr(sx, "line", None), getattr(sx, "col", None))
    head = sx[0]
    if isinstance(head, list):
        raise ParseError(f"operator expected{where(sx)}")
    head = OP_ALIASES.get(head, head)
    if head in ("forall", "exists"):
        if len(sx) != 3 or not isinstance(sx[1], list):
            raise ParseError(f"malformed binder{where(sx)}")
        binds = []
        for b in sx[1]:
            if not isinstance(b, list) or len(b) != 2 or b[1] not in SORT_NAMES:
                raise ParseError(f"malformed binding {dumps(b)}{where(sx)}")
            binds.append((str(b[0]), SORT_NAMES[b[1]]))
        env2 = dict(env)
        env2.update(binds)
        body = _parse(sx[2], scope, env2)
        if sort_of(body) is not Sort.BOOL:
            raise SortError(f"quantifier body must be Boolean{where(sx)}")
        return (forall if head == "forall" else exists)(binds, body)
    if head == "sel":
        vec = sx[1]
        es = _lookup_vec(vec, scope, env)
        if es is None:
            raise SortError(f"{vec} is not a vector variable{where(sx)}")
        idx = _parse(sx[2], scope, env)
        return Sel(str(vec), idx, es)
    if head == "lambda":
        (b,) = sx[1]
        env2 = {**env, str(b[0]): Sort.IDX}
        return Lam(str(b[0]), _parse(sx[2], scope, env2))
    if head == "!=":
        return neg(_parse(["=", *sx[1:]], scope, env))
    if head in scope.params:
        args = [_parse_arg(a, scope, env) for a in sx[1:]]
        return _mk_param(scope.params[head], args, sx)
    if head in scope.funs:
        arity, s = scope.funs[head]
        args = [_parse(a, scope, env) for a in sx[1:]]
        if len(args) != arity:
            raise SortError(f"{head} expects {arity} arguments{where(sx)}")
        return Fun(str(head), tuple(args), s)
    args = tuple(_parse(a, scope, env) for a in sx[1:])
    if head == "-" and len(args) == 1 and type(args[0]) is Const:
        return num(-args[0].value)
    try:
        check_app(head, args)
    except SortError as exc:
        raise SortError(f"{exc}{where(sx)}") from None
    return App(str(head), args)


def _parse_arg(sx, scope, env):
    if not isinstance(sx, list):
        return _parse_atom(sx, scope, env, as_arg=True)
    return _parse(sx, scope, env)
