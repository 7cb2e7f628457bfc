"""Random loop-free benchmarks and random PVC sets for the property suites."""

import random

from ulproof.logic import Sort

VARS = ("x", "y")


def _lit(r):
    return str(r.randint(0, 3))


def _int_leaf(r, has_e):
    opts = [_lit(r), r.choice(VARS)]
    if has_e:
        opts.append("E")
    return r.choice(opts)


def _bool_leaf(r, has_e):
    op = r.choice(["<", "="])
    return f"({op} {_int_leaf(r, has_e)} {_int_leaf(r, has_e)})"


def random_grammar(r: random.Random):
    """Loop-free grammar text with up to 3 nonterminals of up to 3 productions each."""
    has_e = r.random() < 0.7
    has_b = r.random() < 0.4
    cond = (lambda: "B") if has_b else (lambda: _bool_leaf(r, has_e))
    s_base = [f"(:= {v} {_int_leaf(r, has_e)})" for v in VARS]
    s_rec = ["(seq S S)", f"(ite {cond()} S S)", f"(seq (:= {r.choice(VARS)} {_int_leaf(r, has_e)}) S)"]
    s_prods = [r.choice(s_base)] + r.sample(s_base + s_rec, r.randint(0, 2))
    lines = [f"(nonterm S Stmt {' '.join(dict.fromkeys(s_prods))})"]
    if has_e:
        e_base = [_lit(r), r.choice(VARS)]
        e_rec = [f"(+ E {_lit(r)})", f"(+ {r.choice(VARS)} E)", "(+ E E)"]
        e_prods = [r.choice(e_base)] + r.sample(e_base + e_rec, r.randint(0, 2))
        lines.append(f"(nonterm E IntExpr {' '.join(dict.fromkeys(e_prods))})")
    if has_b:
        b_prods = [_bool_leaf(r, has_e)] + r.sample([_bool_leaf(r, has_e), "(not B)"], r.randint(0, 2))
        lines.append(f"(nonterm B BoolExpr {' '.join(dict.fromkeys(b_prods))})")
    return "\n".join(lines)


def _atom(r):
    v = r.choice(VARS)
    c = _lit(r)
    return r.choice([f"(= {v} {c})", f"(< {v} {c})", f"(not (= {v} {c}))", f"(< {c} {v})",
                     f"(= (mod {v} 2) {r.randint(0, 1)})", "(<= x y)"])


def random_triple(r: random.Random):
    pre = r.choice(["true", _atom(r), f"(and {_atom(r)} {_atom(r)})"])
    post = r.choice([_atom(r), f"(or {_atom(r)} {_atom(r)})", f"(and {_atom(r)} {_atom(r)})"])
    return f"(pre {pre})\n(post {post})"


def random_benchmark(r: random.Random):
    return random_grammar(r) + "\n(program S)\n" + random_triple(r) + "\n"


def summary_template(sig):
    """Small template for any summary: bounds, parity and equalities over the formals."""
    ints = [n for n, s in sig.formals if s is Sort.INT]
    bools = [n for n, s in sig.formals if s is Sort.BOOL]
    prods = ["true"]
    prods += [f"(<= C {t})" for t in ints] + [f"(<= {t} C)" for t in ints]
    prods += [f"(= (mod {t} 2) P)" for t in ints]
    prods += [f"(= {a} {b})" for i, a in enumerate(ints) for b in ints[i + 1:]]
    prods += bools + [f"(not {b})" for b in bools]
    return (f"(summary-grammar {sig.name} ((G Bool) (C Int) (P Int)) "
            f"((G Bool ({' '.join(prods)})) (C Int (0 1 2 3)) (P Int (0 1))))")


# ---------------------------------------------------------------------------
# random PVCs over unary parameters P and R

from ulproof.logic import (  # noqa: E402
    FALSE, App, Param, ParamSig, Quant, Var, conj, disj, eq, free_vars, imp, num,
)
from ulproof.vcgen import Pvc  # noqa: E402

PARAMS = {n: ParamSig(n, "summary", n, (("v", Sort.INT),)) for n in ("P", "R")}
NAMES = ("a", "b", "c")


def _term(r, names):
    v = Var(r.choice(names))
    return r.choice([v, v, App("+", (v, num(1))), num(r.randint(0, 3))])


def _patom(r, names):
    k = r.random()
    if k < 0.5:
        return Param(r.choice(list(PARAMS)), (_term(r, names),))
    return App(r.choice(["<", "="]), (_term(r, names), _term(r, names)))


def _lhs(r, names):
    parts = []
    for _ in range(r.randint(1, 2)):
        if r.random() < 0.35:
            v = r.choice(NAMES)
            parts.append(Quant("exists", v, Sort.INT, conj([_patom(r, names + (v,)), _patom(r, names + (v,))])))
        else:
            parts.append(_patom(r, names))
    return conj(parts)


def _rhs(r, names, depth):
    k = r.random()
    if depth == 0 or k < 0.25:
        return _patom(r, names)
    if k < 0.5:
        return conj([_rhs(r, names, depth - 1), _rhs(r, names, depth - 1)])
    if k < 0.7:
        return imp(_lhs(r, names), _rhs(r, names, depth - 1))
    if k < 0.9:
        v = r.choice(NAMES)
        return Quant("forall", v, Sort.INT, _rhs(r, names + (v,), depth - 1))
    v = r.choice(NAMES)
    return Quant("exists", v, Sort.INT, _patom(r, names + (v,)))


def random_pvc(r: random.Random, pid: str) -> Pvc:
    free = tuple(r.sample(NAMES, r.randint(1, 2)))
    body = imp(_lhs(r, free), _rhs(r, free, 3))
    return Pvc(pid, tuple(free_vars(body).items()), body, pid)


def membership(name, members):
    """Summary ``v`` in ``members`` for parameter ``name``."""
    v = Var("v")
    return (PARAMS[name].formals, disj([eq(v, num(c)) for c in sorted(members)]) if members else FALSE)
