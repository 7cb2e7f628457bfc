"""Verification conditions from proof skeletons, plugging, and VC optimization."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from .logic import (
    App, Expr, Fun, ParamSig, Quant, Sort, conj, expand, expand_sig, forall,
    free_vars, fresh_name, imp, instantiate, params_of, ref, show, subst,
)
from .skeleton import Node, check_syntactic, path_id, path_key, walk


class VcError(Exception):
    pass


@dataclass(frozen=True)
class Pvc:
    """``forall universals. body`` where body is ``P -> P'``."""

    id: str
    universals: tuple  # ((name, Sort), ...)
    body: Expr
    origin: str
    skolems: tuple = ()  # ((fun name, ((input, Sort), ...), Sort), ...)

    @property
    def formula(self) -> Expr:
        return forall(self.universals, self.body)

    @property
    def lhs(self):
        return self.body.args[0]

    @property
    def rhs(self):
        return self.body.args[1]

    def __str__(self):
        return show(self.formula)


def _pvc(pid, body, origin, skolems=()):
    return Pvc(pid, tuple(free_vars(body).items()), body, origin, tuple(skolems))


@dataclass
class SummaryAssignment:
    """Concrete formulas for parameters: name -> (formals, body)."""

    entries: dict = field(default_factory=dict)

    def __contains__(self, name):
        return name in self.entries

    def __getitem__(self, name):
        return self.entries[name]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def items(self):
        return self.entries.items()

    def add(self, sig: ParamSig, body: Expr):
        extra = set(free_vars(body)) - {n for n, _ in sig.formals}
        if extra:
            raise VcError(f"summary for {sig.name} mentions non-formal variables {sorted(extra)}")
        if params_of(body):
            raise VcError(f"summary for {sig.name} mentions parameters")
        self.entries[sig.name] = (tuple(sig.formals), body)
        return self

    def merged(self, other):
        out = SummaryAssignment(dict(self.entries))
        out.entries.update(other.entries)
        return out

    def expanded(self, k):
        """Scalar form for ``k``-vectors (see ``logic.expand``)."""
        out = SummaryAssignment()
        for name, (formals, body) in self.entries.items():
            sig = expand_sig(ParamSig(name, "", "", formals), k)
            out.entries[name] = (sig.formals, expand(body, k))
        return out

    def show(self):
        lines = []
        for name, (formals, body) in self.entries.items():
            args = ", ".join(n for n, _ in formals)
            lines.append(f"{name}({args}) := {show(body)}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# extraction and plugging

def extract_pvcs(root: Node, grammar=None, check=True) -> list:
    """One PVC per Weaken node, in pre-order."""
    if check:
        bad = check_syntactic(root, grammar)
        if bad:
            raise VcError("skeleton is not syntactically valid: " + "; ".join(map(str, bad)))
    out = []
    for path, node in walk(root):
        if node.rule == "Weaken":
            pid = path_id(root, path)
            out.append(_pvc(pid, imp(node.pre, node.children[0].pre), pid))
    return out


def expand_pvcs(pvcs, k) -> list:
    """Expand index and vector quantifiers of every PVC for ``k``-vectors."""
    if k is None:
        return list(pvcs)
    return [_pvc(p.id, expand(p.body, k), p.origin, p.skolems) for p in pvcs]


def plug(e: Expr, a: SummaryAssignment) -> Expr:
    missing = set(params_of(e)) - set(a.entries)
    if missing:
        raise VcError(f"no summary for parameter(s) {', '.join(sorted(missing))}")
    return instantiate(e, a.entries)


def plug_pvc(p: Pvc, a: SummaryAssignment) -> Pvc:
    return Pvc(p.id, p.universals, plug(p.body, a), p.origin, p.skolems)


def plug_in(root: Node, a: SummaryAssignment) -> Node:
    """Concrete proof tree: every parameter replaced by its assigned formula."""

    def go(n):
        kids = tuple(go(c) for c in n.children)
        meta = dict(n.meta)
        meta["assignment"] = a.entries
        ctx = tuple(replace(e, pre=plug(e.pre, a), post=plug(e.post, a)) for e in n.ctx)
        return Node(n.rule, plug(n.pre, a), n.program, plug(n.post, a), ctx, kids, meta, source=n)

    return go(root)


# ---------------------------------------------------------------------------
# optimization

def _take(var, avoid):
    new = fresh_name(var, avoid)
    avoid.add(new)
    return new


def _rename_bound(q: Quant, new: str):
    if new == q.var:
        return q.body
    return subst(q.body, {q.var: ref(new, q.vsort)})


def _pull_lhs_exists(lhs, univ, avoid):
    t = type(lhs)
    if t is Quant and lhs.kind == "exists":
        new = _take(lhs.var, avoid)
        univ.append((new, lhs.vsort))
        return _pull_lhs_exists(_rename_bound(lhs, new), univ, avoid)
    if t is App and lhs.op == "and":
        return App("and", tuple(_pull_lhs_exists(a, univ, avoid) for a in lhs.args))
    return lhs


def _normalize(univ, lhs, rhs, avoid, out):
    lhs = _pull_lhs_exists(lhs, univ, avoid)
    t = type(rhs)
    if t is Quant and rhs.kind == "forall":
        new = _take(rhs.var, avoid)
        _normalize(univ + [(new, rhs.vsort)], lhs, _rename_bound(rhs, new), avoid, out)
    elif t is App and rhs.op == "=>":
        _normalize(univ, App("and", (lhs, rhs.args[0])), rhs.args[1], avoid, out)
    elif t is App and rhs.op == "and":
        for part in rhs.args:
            _normalize(list(univ), lhs, part, avoid, out)
    else:
        out.append(imp(lhs, rhs))


def optimize_pvc(p: Pvc) -> list:
    body = p.body
    if not (type(body) is App and body.op == "=>"):
        body = imp(conj(), body)
    avoid = set(free_vars(body))
    avoid.update(n for n, _ in p.universals)
    out = []
    _normalize([], body.args[0], body.args[1], avoid, out)
    if len(out) == 1:
        return [_pvc(p.id, out[0], p.origin, p.skolems)]
    return [_pvc(f"{p.id}#{i}", b, p.origin, p.skolems) for i, b in enumerate(out)]


def optimize_pvcs(pvcs) -> list:
    """Flatten nested implications, pull quantifiers to the front, split conjunctions."""
    out = []
    for p in pvcs:
        out.extend(optimize_pvc(p))
    return out


def skolemize_rhs_existentials(p: Pvc, names=None) -> Pvc:
    """Replace positive right-hand existentials by fresh function symbols.

    Each function takes the PVC's universals (and any enclosing positive
    universal) as inputs.  ``names`` is an iterator of candidate function
    names shared across PVCs of one run.
    """
    taken = set(free_vars(p.body)) | set(params_of(p.body))
    names = names if names is not None else (f"f{i}" for i in itertools.count(1))
    skolems = list(p.skolems)

    def fresh():
        while True:
            n = next(names)
            if n not in taken:
                taken.add(n)
                return n

    def go(e, inputs):
        t = type(e)
        if t is Quant and e.kind == "exists" and not e.vsort.is_vector and e.vsort is not Sort.IDX:
            f = fresh()
            skolems.append((f, tuple(inputs), e.vsort))
            app = Fun(f, tuple(ref(n, s) for n, s in inputs), e.vsort)
            return go(subst(e.body, {e.var: app}), inputs)
        if t is Quant and e.kind == "forall":
            return Quant(e.kind, e.var, e.vsort, go(e.body, inputs + [(e.var, e.vsort)]))
        if t is App and e.op in ("and", "or"):
            return App(e.op, tuple(go(a, inputs) for a in e.args))
        if t is App and e.op == "=>":
            return App("=>", (e.args[0], go(e.args[1], inputs)))
        return e

    body = p.body
    if not (type(body) is App and body.op == "=>"):
        return p
    rhs = go(body.args[1], list(p.universals))
    if len(skolems) == len(p.skolems):
        return p
    return Pvc(p.id, p.universals, imp(body.args[0], rhs), p.origin, tuple(skolems))


def sort_pvcs(pvcs) -> list:
    return sorted(pvcs, key=lambda p: path_key(p.id))


def pvc_text(pvcs) -> str:
    """Benchmark-format listing, one ``(vc ID FORMULA)`` per line."""
    return "\n".join(f"(vc {p.id} {show(p.formula)})" for p in pvcs)


def equivalent_sets(a, b, evaluator, envs) -> bool:
    """Whether the conjunctions of two PVC lists agree on every environment."""
    for env in envs:
        va = all(evaluator(p.formula, env) for p in a)
        vb = all(evaluator(p.formula, env) for p in b)
        if va != vb:
            return False
    return True
