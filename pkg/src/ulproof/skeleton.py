"""Syntax-directed construction of proof skeletons.

Every rule is applied backwards from a postcondition: the precondition of a
node is the weakest one the rule allows.  Unknown summaries of recursive
nonterminals and unknown loop invariants become second-order parameters.
Only ``Weaken`` nodes carry semantic obligations; all other nodes are valid
by construction, which ``check_syntactic`` re-verifies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import gimp
from .gimp import Kind, Rtg, Term, kind_of, program_vars
from .logic import (
    LAMBDA_VAR, App, Const, Expr, Lam, Param, ParamSig, Quant, Sel, Sort, Var, add,
    alpha_eq, conj, eq, forall, free_vars, fresh_name, imp, instantiate, lt, neg, num,
    params_of, ref, show, subst, t_transform, vec_eq,
)


class SkeletonError(Exception):
    pass


@dataclass(frozen=True)
class CtxEntry:
    """A summary triple ``{x = z} N {Q_N(x, z, r)}`` placed in the context."""

    nonterminal: str
    sig: ParamSig
    pre: Expr
    post: Expr


@dataclass(frozen=True)
class Node:
    rule: str
    pre: Expr
    program: Term
    post: Expr
    ctx: tuple = ()
    children: tuple = ()
    meta: dict = field(default_factory=dict)
    source: "Node | None" = None  # parametrized original of a plugged node

    @property
    def label(self):
        if self.rule in ("Bin", "Comp"):
            return f"{self.rule}-{self.meta['op']}"
        return self.rule


@dataclass
class Skeleton:
    root: Node
    params: dict  # name -> ParamSig, in creation order
    grammar: Rtg
    k: int | None = None
    assumed: tuple = ()  # nonterminals whose summaries were placed in the initial context


OPS = {"Plus": "+", "And": "and", "Lt": "<", "Eq": "="}
OP_NAMES = {"Plus": "Plus", "And": "And", "Lt": "Lt", "Eq": "Eq"}


def _lift(vector, fn):
    """Turn a per-element template into a substitution value."""
    if not vector:
        return fn(lambda n, s=Sort.INT: Var(n, s))
    j = LAMBDA_VAR
    return Lam(j, fn(lambda n, s=Sort.INT: Sel(n, Var(j), s)))


def _sort(vector, s=Sort.INT):
    if not vector:
        return s
    return Sort.VINT if s is Sort.INT else Sort.VBOOL


def _xz(pairs, vector):
    """The formula x = z over (program var, ghost) pairs."""
    if vector:
        return conj([vec_eq(x, z) for x, z in pairs])
    return conj([eq(Var(x), Var(z)) for x, z in pairs])


def _all_bt_false():
    return Quant("forall", "i", Sort.IDX, neg(Sel("b_t", Var("i"), Sort.BOOL)))


def _bloop_is_bt(b_loop):
    return Quant("forall", "i", Sort.IDX, eq(Sel(b_loop, Var("i"), Sort.BOOL), Sel("b_t", Var("i"), Sort.BOOL)))


def _adapt_pre(q, ymap, zmap, xsorts, r):
    """∀y. Q[x↦y][z↦x] → R[x↦y] for the summary application ``q``."""
    q = subst(q, {x: ref(y, xsorts[x]) for x, y in ymap.items()})
    q = subst(q, {z: ref(x, xsorts[x]) for x, z in zmap.items()})
    body = imp(q, subst(r, {x: ref(y, xsorts[x]) for x, y in ymap.items()}))
    return forall([(y, xsorts[x]) for x, y in ymap.items()], body)


def vs_rules_selector(k):
    """Conditional/loop rules used for scalar (``k is None``) or vector states."""
    if k is None:
        return {"IfThenElse": "SimpleIf", "While": "SimpleWhile"}
    return {"IfThenElse": "VSIf", "While": "VSWhile"}


class Builder:
    """Stateful helper holding the fresh-name counters of one skeleton build."""

    def __init__(self, grammar: Rtg, k: int | None = None, used=()):
        self.g = grammar
        self.k = k
        self.vector = k is not None
        self.rules = vs_rules_selector(k)
        self.used = set(gimp.grammar_vars(grammar)) | set(grammar.sorts) | gimp.RESERVED | set(used)
        # ghost names only need to avoid these: Adapt replaces a summary's
        # ghosts before its formula can meet another summary's
        self.base = set(self.used)
        self.params = {}
        self.summaries = {}  # nonterminal -> (sig, zmap, xsorts)
        self._inv = 0

    # -- names ---------------------------------------------------------------
    def fresh(self, base):
        name = fresh_name(base, self.used)
        self.used.add(name)
        return name

    def fresh_numbered(self, stem):
        n = 1
        while f"{stem}{n}" in self.used:
            n += 1
        name = f"{stem}{n}"
        self.used.add(name)
        return name

    def note(self, *formulas):
        for f in formulas:
            self.used.update(free_vars(f))
            self.used.update(params_of(f))

    # -- parameters ----------------------------------------------------------
    def summary(self, n):
        if n in self.summaries:
            return self.summaries[n]
        prof = gimp.var_profile(self.g, n)
        xsorts = {}
        for x in prof.x_vars:
            xsorts[x] = _sort(self.vector, Sort.BOOL if x == "b_t" else Sort.INT)
        zmap = {x: fresh_name(f"{x}_z", self.base) for x in prof.mutable}
        self.used.update(zmap.values())
        formals = [(x, xsorts[x]) for x in prof.x_vars]
        formals += [(zmap[x], xsorts[x]) for x in prof.mutable]
        formals += [(r, _sort(self.vector)) for r in prof.read_vars]
        name = fresh_name(f"Q_{n}", self.used | set(self.params))
        self.used.add(name)
        sig = ParamSig(name, "summary", n, tuple(formals))
        self.params[name] = sig
        self.summaries[n] = (sig, zmap, xsorts)
        return self.summaries[n]

    def entry(self, n):
        sig, zmap, _ = self.summary(n)
        return CtxEntry(n, sig, _xz(zmap.items(), self.vector), sig.app())

    def invariant(self, loop: Term, q: Expr):
        assigned, read = program_vars(self.g, loop)
        formals = [(v, _sort(self.vector)) for v in assigned + read]
        seen = {v for v, _ in formals}
        for v, s in free_vars(q).items():
            if v not in seen:
                formals.append((v, s))
                seen.add(v)
        name = self.fresh_numbered("I")
        sig = ParamSig(name, "invariant", f"loop{name[1:]}", tuple(formals))
        self.params[name] = sig
        return sig

    # -- the algorithm -------------------------------------------------------
    def w(self, ctx, s: Term, q: Expr) -> Node:
        if s.tag == "NonterminalRef":
            return self._nonterminal(ctx, s, q)
        return getattr(self, "_" + s.tag)(ctx, s, q)

    def lift(self, fn):
        return _lift(self.vector, fn)

    def _IntLit(self, ctx, s, q):
        pre = subst(q, {"e_t": self.lift(lambda at: num(s.value))})
        return Node("Int", pre, s, q, ctx, meta={"vec": self.vector})

    def _BoolLit(self, ctx, s, q):
        pre = subst(q, {"b_t": self.lift(lambda at: Const(s.value, Sort.BOOL))})
        return Node("True" if s.value else "False", pre, s, q, ctx, meta={"vec": self.vector})

    def _Var(self, ctx, s, q):
        pre = subst(q, {"e_t": self.lift(lambda at: at(s.value))})
        return Node("Var", pre, s, q, ctx, meta={"vec": self.vector})

    def _Not(self, ctx, s, q):
        post = subst(q, {"b_t": self.lift(lambda at: neg(at("b_t", Sort.BOOL)))})
        c = self.w(ctx, s.children[0], post)
        return Node("Not", c.pre, s, q, ctx, (c,), {"vec": self.vector})

    def _binary(self, ctx, s, q, rule, tmp_sort, result, combine):
        tmp = self.fresh_numbered("x")
        post2 = subst(q, {result: self.lift(lambda at: combine(at(tmp, tmp_sort), at(_res(tmp_sort), tmp_sort)))})
        c2 = self.w(ctx, s.children[1], post2)
        post1 = subst(c2.pre, {tmp: self.lift(lambda at: at(_res(tmp_sort), tmp_sort))})
        c1 = self.w(ctx, s.children[0], post1)
        meta = {"op": OP_NAMES[s.tag], "tmp": tmp, "vec": self.vector}
        return Node(rule, c1.pre, s, q, ctx, (c1, c2), meta)

    def _Plus(self, ctx, s, q):
        return self._binary(ctx, s, q, "Bin", Sort.INT, "e_t", add)

    def _And(self, ctx, s, q):
        return self._binary(ctx, s, q, "And", Sort.BOOL, "b_t", lambda a, b: App("and", (a, b)))

    def _Lt(self, ctx, s, q):
        return self._binary(ctx, s, q, "Comp", Sort.INT, "b_t", lt)

    def _Eq(self, ctx, s, q):
        return self._binary(ctx, s, q, "Comp", Sort.INT, "b_t", eq)

    def _Assign(self, ctx, s, q):
        post = subst(q, {s.value: self.lift(lambda at: at("e_t"))})
        c = self.w(ctx, s.children[0], post)
        return Node("Assign", c.pre, s, q, ctx, (c,), {"vec": self.vector})

    def _Seq(self, ctx, s, q):
        c2 = self.w(ctx, s.children[1], q)
        c1 = self.w(ctx, s.children[0], c2.pre)
        return Node("Seq", c1.pre, s, q, ctx, (c1, c2))

    def _Skip(self, ctx, s, q):
        return Node("Skip", q, s, q, ctx)

    def _IfThenElse(self, ctx, s, q):
        if self.vector:
            return self._vs_if(ctx, s, q)
        b, s1, s2 = s.children
        c3 = self.w(ctx, s2, q)
        c2 = self.w(ctx, s1, q)
        bt = Var("b_t", Sort.BOOL)
        post_b = conj(imp(bt, c2.pre), imp(neg(bt), c3.pre))
        c1 = self.w(ctx, b, post_b)
        return Node("SimpleIf", c1.pre, s, q, ctx, (c1, c2, c3))

    def _vs_if(self, ctx, s, q):
        b, s1, s2 = s.children
        mutable, _ = program_vars(self.g, gimp.seq(s1, s2))
        self.note(q)
        b_loop = self.fresh("b_loop")
        ymap = {m: self.fresh(f"{m}_y") for m in mutable}
        zmap = {m: self.fresh(f"{m}_z") for m in mutable}
        tq = t_transform(q, b_loop, ymap)
        c3 = self.w(ctx, s2, tq)
        post2 = subst(c3.pre, {m: ref(z, Sort.VINT) for m, z in zmap.items()})
        post2 = subst(post2, {y: ref(m, Sort.VINT) for m, y in ymap.items()})
        c2 = self.w(ctx, s1, post2)
        p1 = subst(c2.pre, {z: ref(m, Sort.VINT) for m, z in zmap.items()})
        c1 = self.w(ctx, b, imp(_bloop_is_bt(b_loop), p1))
        meta = {"b_loop": b_loop, "ymap": ymap, "zmap": zmap}
        return Node("VSIf", c1.pre, s, q, ctx, (c1, c2, c3), meta)

    def _While(self, ctx, s, q):
        b, body = s.children
        self.note(q)
        sig = self.invariant(s, q)
        inv = sig.app()
        if self.vector:
            loop_body = gimp.ite(b, body, gimp.SKIP)
            cb = self.w(ctx, loop_body, inv)
            wb = Node("Weaken", inv, loop_body, inv, ctx, (cb,))
            post_g = imp(_all_bt_false(), q)
            cg = self.w(ctx, b, post_g)
            wg = Node("Weaken", inv, b, post_g, ctx, (cg,))
            return Node("VSWhile", inv, s, q, ctx, (wg, wb), {"param": sig.name})
        cb = self.w(ctx, body, inv)
        bt = Var("b_t", Sort.BOOL)
        post_g = conj(imp(neg(bt), q), imp(bt, cb.pre))
        cg = self.w(ctx, b, post_g)
        wg = Node("Weaken", inv, b, post_g, ctx, (cg,))
        return Node("SimpleWhile", inv, s, q, ctx, (wg, cb), {"param": sig.name})

    def _nonterminal(self, ctx, s, q):
        n = s.value
        prods = self.g.productions[n]
        if not gimp.is_recursive(self.g, n):
            kids = tuple(self.w(ctx, p, q) for p in prods)
            return Node("GrmDisj", conj([c.pre for c in kids]), s, q, ctx, kids, {"nonterminal": n})
        found = [e for e in ctx if e.nonterminal == n]
        if found:
            e = found[0]
            inner = Node("ApplyHP", e.pre, s, e.post, ctx, meta={"nonterminal": n})
        else:
            e = self.entry(n)
            ctx2 = ctx + (e,)
            kids = tuple(self.w(ctx2, p, e.post) for p in prods)
            hp = Node("HP", conj([c.pre for c in kids]), s, e.post, ctx, kids,
                      {"nonterminal": n, "param": e.sig.name})
            inner = Node("Weaken", e.pre, s, e.post, ctx, (hp,))
        return self._adapt(ctx, inner, q, n)

    def _adapt(self, ctx, inner, q, n):
        sig, zmap, xsorts = self.summaries[n]
        avoid = set(free_vars(q)) | set(free_vars(inner.post)) | {v for v, _ in sig.formals}
        ymap = {}
        for x in xsorts:
            y = fresh_name(f"{x}_y", avoid)
            avoid.add(y)
            ymap[x] = y
        pre = _adapt_pre(sig.app(), ymap, zmap, xsorts, q)
        meta = {"nonterminal": n, "param": sig.name, "ymap": ymap, "zmap": zmap, "xsorts": xsorts}
        return Node("Adapt", pre, inner.program, q, ctx, (inner,), meta)


def _res(s):
    return "b_t" if s is Sort.BOOL else "e_t"


def _check_reserved(kind, q):
    fv = free_vars(q)
    bad = {Kind.STMT: {"e_t", "b_t"}, Kind.INT: {"b_t"}, Kind.BOOL: {"e_t"}}[kind]
    hit = sorted(bad & set(fv))
    if hit:
        raise SkeletonError(f"postcondition of a {kind.value} program may not mention {', '.join(hit)}")


def new_builder(grammar, k=None, formulas=()):
    b = Builder(grammar, k)
    b.note(*formulas)
    b.base = set(b.used)
    return b


def w_skel(ctx, s: Term, q: Expr, grammar: Rtg, k=None, builder=None) -> Node:
    b = builder or new_builder(grammar, k, [q])
    _check_reserved(kind_of(s, grammar), q)
    return b.w(tuple(ctx), s, q)


def p_skel(ctx, p: Expr, s: Term, q: Expr, grammar: Rtg, k=None, builder=None) -> Node:
    b = builder or new_builder(grammar, k, [p, q])
    _check_reserved(kind_of(s, grammar), q)
    c = b.w(tuple(ctx), s, q)
    return Node("Weaken", p, s, q, tuple(ctx), (c,))


def build(grammar: Rtg, pre: Expr, program: Term, post: Expr, k=None, assume=()) -> Skeleton:
    """Skeleton for ``{pre} program {post}``.

    ``assume`` lists recursive nonterminals whose summary triples start in
    the context (their summaries are taken as already proven).
    """
    b = new_builder(grammar, k, [pre, post])
    ctx = []
    for n in assume:
        if not gimp.is_recursive(grammar, n):
            raise SkeletonError(f"{n} is not recursive; only recursive nonterminals have summaries")
        ctx.append(b.entry(n))
    root = p_skel(ctx, pre, program, post, grammar, k, builder=b)
    return Skeleton(root, dict(b.params), grammar, k, tuple(assume))


# ---------------------------------------------------------------------------
# traversal and rendering

def walk(node: Node, path=None):
    """Yield ``(path, node)`` in pre-order; a path is a tuple of child indices."""
    path = () if path is None else path
    yield path, node
    for i, c in enumerate(node.children):
        yield from walk(c, path + (i,))


def path_id(root: Node, path) -> str:
    parts, n = [f"{root.rule.lower()}0"], root
    for i in path:
        n = n.children[i]
        parts.append(f"{n.rule.lower()}{i}")
    return ".".join(parts)


def path_key(pid: str):
    """Sort key putting ids in pre-order."""
    out = []
    for seg in pid.split("#")[0].split("."):
        digits = ""
        while seg and seg[-1].isdigit():
            digits = seg[-1] + digits
            seg = seg[:-1]
        out.append(int(digits or 0))
    tail = pid.split("#")[1:]
    return tuple(out), tuple(int(t) for t in tail)


def rule_sequence(node: Node, order="post") -> list:
    out = []

    def go(n):
        if order == "pre":
            out.append(n.label)
        for c in n.children:
            go(c)
        if order == "post":
            out.append(n.label)

    go(node)
    return out


def render(node: Node) -> str:
    """Proof-tree layout: premises above their conclusion, indented by depth."""
    lines = []

    def go(n, depth):
        for c in n.children:
            go(c, depth + 1)
        lines.append(f"{'  ' * depth}{n.label:<10} {{{show(n.pre)}}} {gimp.pretty(n.program)} {{{show(n.post)}}}")

    go(node, 0)
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# syntactic checking

@dataclass(frozen=True)
class Violation:
    path: str
    rule: str
    message: str

    def __str__(self):
        return f"{self.path} [{self.rule}]: {self.message}"


class _Checker:
    def __init__(self, grammar):
        self.g = grammar
        self.out = []

    def bad(self, pid, node, msg):
        self.out.append(Violation(pid, node.rule, msg))

    def same(self, a, b):
        return alpha_eq(a, b)

    def run(self, root):
        for path, node in walk(root):
            pid = path_id(root, path)
            msgs = []
            try:
                self.check(node, msgs)
            except Exception as exc:  # malformed nodes are violations, not crashes
                msgs.append(f"malformed node: {exc}")
            if msgs:
                self.bad(pid, node, "; ".join(msgs))
        return self.out

    def check(self, n, msgs):
        rule, kids = n.rule, n.children
        expect_kids = {"Int": 0, "True": 0, "False": 0, "Var": 0, "ApplyHP": 0, "Skip": 0,
                       "Not": 1, "Assign": 1, "Adapt": 1, "Weaken": 1,
                       "Bin": 2, "And": 2, "Comp": 2, "Seq": 2, "SimpleWhile": 2, "VSWhile": 2,
                       "SimpleIf": 3, "VSIf": 3}
        if rule in expect_kids and len(kids) != expect_kids[rule]:
            msgs.append(f"expected {expect_kids[rule]} premises, found {len(kids)}")
            return
        if rule not in ("HP",):
            for c in kids:
                if c.ctx != n.ctx:
                    msgs.append("premise context differs from conclusion context")
        vec = n.meta.get("vec", False)
        lift = lambda fn: _lift(vec, fn)  # noqa: E731
        p = n.program

        def want(cond, msg):
            if not cond:
                msgs.append(msg)

        def want_tag(tag):
            if p.tag != tag:
                msgs.append(f"program {gimp.pretty(p)} does not match rule")
                return False
            return True

        def want_prog(c, t):
            if c.program != t:
                msgs.append(f"premise program {gimp.pretty(c.program)} should be {gimp.pretty(t)}")

        if rule == "Int":
            if want_tag("IntLit"):
                want(self.same(n.pre, subst(n.post, {"e_t": lift(lambda at: num(p.value))})), "pre is not post[e_t := n]")
        elif rule in ("True", "False"):
            if want_tag("BoolLit"):
                want(p.value == (rule == "True"), "literal does not match rule")
                want(self.same(n.pre, subst(n.post, {"b_t": lift(lambda at: Const(p.value, Sort.BOOL))})), "pre is not post[b_t := literal]")
        elif rule == "Var":
            if want_tag("Var"):
                want(self.same(n.pre, subst(n.post, {"e_t": lift(lambda at: at(p.value))})), "pre is not post[e_t := x]")
        elif rule == "Not":
            if want_tag("Not"):
                (c,) = kids
                want_prog(c, p.children[0])
                want(self.same(c.post, subst(n.post, {"b_t": lift(lambda at: neg(at("b_t", Sort.BOOL)))})), "premise post is not post[b_t := !b_t]")
                want(self.same(n.pre, c.pre), "pre differs from premise pre")
        elif rule in ("Bin", "And", "Comp"):
            tags = {"Bin": ("Plus",), "And": ("And",), "Comp": ("Lt", "Eq")}[rule]
            if p.tag not in tags:
                msgs.append(f"program {gimp.pretty(p)} does not match rule")
                return
            c1, c2 = kids
            want_prog(c1, p.children[0])
            want_prog(c2, p.children[1])
            tmp = n.meta["tmp"]
            tsort = Sort.BOOL if rule == "And" else Sort.INT
            res = "e_t" if rule == "Bin" else "b_t"
            comb = {"Plus": add, "And": lambda a, b: App("and", (a, b)), "Lt": lt, "Eq": eq}[p.tag]
            want(tmp not in free_vars(n.post) and tmp not in free_vars(n.pre), f"intermediate {tmp} is not fresh")
            want(self.same(c2.post, subst(n.post, {res: lift(lambda at: comb(at(tmp, tsort), at(_res(tsort), tsort)))})),
                 "right premise post is not post[result := tmp op operand]")
            want(self.same(c1.post, subst(c2.pre, {tmp: lift(lambda at: at(_res(tsort), tsort))})),
                 "left premise post is not right premise pre[tmp := operand]")
            want(self.same(n.pre, c1.pre), "pre differs from left premise pre")
        elif rule == "Assign":
            if want_tag("Assign"):
                (c,) = kids
                want_prog(c, p.children[0])
                want(self.same(c.post, subst(n.post, {p.value: lift(lambda at: at("e_t"))})), "premise post is not post[x := e_t]")
                want(self.same(n.pre, c.pre), "pre differs from premise pre")
        elif rule == "Seq":
            if want_tag("Seq"):
                c1, c2 = kids
                want_prog(c1, p.children[0])
                want_prog(c2, p.children[1])
                want(self.same(c2.post, n.post), "second premise post differs from post")
                want(self.same(c1.post, c2.pre), "first premise post differs from second premise pre")
                want(self.same(n.pre, c1.pre), "pre differs from first premise pre")
        elif rule == "Skip":
            if want_tag("Skip"):
                want(self.same(n.pre, n.post), "pre differs from post")
        elif rule == "SimpleIf":
            if want_tag("IfThenElse"):
                c1, c2, c3 = kids
                for c, t in zip(kids, p.children):
                    want_prog(c, t)
                bt = Var("b_t", Sort.BOOL)
                want(self.same(c2.post, n.post) and self.same(c3.post, n.post), "branch posts differ from post")
                want(self.same(c1.post, conj(imp(bt, c2.pre), imp(neg(bt), c3.pre))), "guard post is not the branch combination")
                want(self.same(n.pre, c1.pre), "pre differs from guard pre")
        elif rule == "VSIf":
            if want_tag("IfThenElse"):
                c1, c2, c3 = kids
                for c, t in zip(kids, p.children):
                    want_prog(c, t)
                bl, ymap, zmap = n.meta["b_loop"], n.meta["ymap"], n.meta["zmap"]
                want(self.same(c3.post, t_transform(n.post, bl, ymap)), "else premise post is not T(post)")
                e2 = subst(c3.pre, {m: ref(z, Sort.VINT) for m, z in zmap.items()})
                e2 = subst(e2, {y: ref(m, Sort.VINT) for m, y in ymap.items()})
                want(self.same(c2.post, e2), "then premise post is not P2[x := z][y := x]")
                e1 = imp(_bloop_is_bt(bl), subst(c2.pre, {z: ref(m, Sort.VINT) for m, z in zmap.items()}))
                want(self.same(c1.post, e1), "guard post is not (b_loop = b_t) -> P1[z := x]")
                want(self.same(n.pre, c1.pre), "pre differs from guard pre")
        elif rule in ("SimpleWhile", "VSWhile"):
            if want_tag("While"):
                wg, cb = kids
                b, body = p.children
                want(wg.rule == "Weaken", "guard premise must be a Weaken")
                want_prog(wg, b)
                inv = n.pre
                want(type(inv) is Param and inv.name == n.meta["param"], "pre is not the invariant")
                want(self.same(wg.pre, inv), "guard premise pre is not the invariant")
                if rule == "SimpleWhile":
                    want_prog(cb, body)
                    want(self.same(cb.post, inv), "body post is not the invariant")
                    bt = Var("b_t", Sort.BOOL)
                    want(self.same(wg.post, conj(imp(neg(bt), n.post), imp(bt, cb.pre))), "guard post malformed")
                else:
                    want(cb.rule == "Weaken", "body premise must be a Weaken")
                    want_prog(cb, gimp.ite(b, body, gimp.SKIP))
                    want(self.same(cb.pre, inv) and self.same(cb.post, inv), "body premise is not {I} if B then S else skip {I}")
                    want(self.same(wg.post, imp(_all_bt_false(), n.post)), "guard post malformed")
        elif rule in ("GrmDisj", "HP"):
            if want_tag("NonterminalRef"):
                name = p.value
                prods = self.g.productions.get(name) if self.g else None
                if prods is not None:
                    want(len(prods) == len(kids), "one premise per production required")
                    for c, t in zip(kids, prods):
                        want_prog(c, t)
                    want((rule == "HP") == gimp.is_recursive(self.g, name), "GrmDisj/HP choice does not match recursiveness")
                for c in kids:
                    want(self.same(c.post, n.post), "premise post differs from post")
                want(self.same(n.pre, conj([c.pre for c in kids])), "pre is not the conjunction of premise pres")
                if rule == "HP":
                    want(type(n.post) is Param and n.post.name == n.meta["param"], "post is not the summary")
                    for c in kids:
                        extra = c.ctx[len(n.ctx):]
                        ok = c.ctx[:len(n.ctx)] == n.ctx and len(extra) == 1 and extra[0].nonterminal == name \
                            and self.same(extra[0].post, n.post)
                        want(ok, "premise context must extend the context with the summary triple")
        elif rule == "ApplyHP":
            if want_tag("NonterminalRef"):
                hit = any(e.nonterminal == p.value and self.same(e.pre, n.pre) and self.same(e.post, n.post)
                          for e in n.ctx)
                want(hit, "cited triple is not in the context")
        elif rule == "Adapt":
            (c,) = kids
            want_prog(c, p)
            want(c.rule in ("ApplyHP", "Weaken"), "premise must be ApplyHP or a weakened HP")
            sig_name = n.meta["param"]
            want(type(c.post) is Param and c.post.name == sig_name, "premise post is not the summary")
            if type(c.post) is Param:
                zmap, ymap, xsorts = n.meta["zmap"], n.meta["ymap"], n.meta["xsorts"]
                want(self.same(c.pre, _xz(zmap.items(), any(s.is_vector for s in xsorts.values()))), "premise pre is not x = z")
                want(self.same(n.pre, _adapt_pre(c.post, ymap, zmap, xsorts, n.post)), "pre is not the adaptation formula")
        elif rule == "Weaken":
            (c,) = kids
            want_prog(c, p)
            want(self.same(c.post, n.post), "premise post differs from post")
        else:
            msgs.append(f"unknown rule {rule}")


def check_syntactic(node: Node, grammar: Rtg | None = None) -> list:
    """Violations of the rule patterns; empty for well-formed skeletons.

    A plugged tree (nodes with ``source``) is checked through its
    parametrized original, and each concrete formula must be the image of
    the original under the recorded assignment.
    """
    if node.source is not None:
        out = _Checker(grammar).run(node.source)
        defs = node.meta.get("assignment", {})
        for (path, n), (_, src) in zip(walk(node), walk(node.source)):
            for attr in ("pre", "post"):
                try:
                    ok = alpha_eq(getattr(n, attr), instantiate(getattr(src, attr), defs))
                except Exception:  # arity errors etc.
                    ok = False
                if not ok:
                    out.append(Violation(path_id(node, path), n.rule, f"{attr} is not the plugged original"))
        return out
    return _Checker(grammar).run(node)
