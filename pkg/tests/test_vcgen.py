import itertools

import pytest

from ulproof.benchmark import parse_benchmark
from ulproof.logic import (
    Evaluator, ParamSig, Scope, Sort, alpha_eq, free_vars, params_of, parse_formula_text, show,
)
from ulproof.skeleton import build, check_syntactic, walk
from ulproof.vcgen import (
    Pvc, SummaryAssignment, VcError, extract_pvcs, optimize_pvc, optimize_pvcs, plug, plug_in,
    plug_pvc, pvc_text, skolemize_rhs_existentials, sort_pvcs,
)

FIG = """
(nonterm N IntExpr (2) (+ 2 N))
(pre true) (program N) (post (not (= e_t 3)))
"""
QN = ParamSig("Q_N", "summary", "N", (("e_t", Sort.INT),))
SCOPE = Scope(params={"Q_N": QN})


def F(text, scope=SCOPE):
    return parse_formula_text(text, scope)


def fig():
    b = parse_benchmark(FIG)
    return build(b.grammar, b.pre, b.program, b.post)


def test_one_pvc_per_weaken():
    sk = fig()
    pvcs = extract_pvcs(sk.root, sk.grammar)
    assert len(pvcs) == sum(n.rule == "Weaken" for _, n in walk(sk.root)) == 2


def test_figure_raw_pvcs():
    pvcs = extract_pvcs(fig().root)
    want = [
        "(=> true (forall ((y Int)) (=> (Q_N y) (not (= y 3)))))",
        "(=> true (and (Q_N 2) (forall ((y Int)) (=> (Q_N y) (Q_N (+ 2 y))))))",
    ]
    assert [p.universals for p in pvcs] == [(), ()]
    for p, w in zip(pvcs, want):
        assert alpha_eq(p.formula, F(w)), show(p.formula)


def test_figure_optimized_pvcs():
    pvcs = sort_pvcs(optimize_pvcs(extract_pvcs(fig().root)))
    want = [
        "(forall ((y Int)) (=> (and true (Q_N y)) (not (= y 3))))",
        "(=> true (Q_N 2))",
        "(forall ((y Int)) (=> (and true (Q_N y)) (Q_N (+ 2 y))))",
    ]
    assert len(pvcs) == 3
    for p, w in zip(pvcs, want):
        assert alpha_eq(p.formula, F(w)), show(p.formula)
    assert pvcs[1].id.endswith("#0") and pvcs[2].id.endswith("#1")


def _truth_table_equal(a, b, names):
    ev = Evaluator(None)
    for vals in itertools.product([False, True], repeat=len(names)):
        env = dict(zip(names, vals))
        if ev(a, env) != ev(b, env):
            return False
    return True


def test_optimization_flattens_and_splits():
    sc = Scope(scalars={n: Sort.BOOL for n in "abcd"})
    body = parse_formula_text("(=> a (and b (=> c d)))", sc)
    out = optimize_pvc(Pvc("v", (), body, "v"))
    assert [show(p.body) for p in out] == ["(=> a b)", "(=> (and a c) d)"]
    joined = parse_formula_text(f"(and {' '.join(show(p.body) for p in out)})", sc)
    assert _truth_table_equal(body, joined, "abcd")


def test_optimization_pulls_lhs_existential():
    body = F("(=> (exists ((k Int)) (= e_t (* 2 k))) (Q_N e_t))")
    (p,) = optimize_pvc(Pvc("v", (("e_t", Sort.INT),), body, "v"))
    assert isinstance(p.body, type(body)) and "exists" not in show(p.body)
    assert set(free_vars(p.body)) == {"e_t", "k"}


def test_optimization_renames_clashing_binders():
    body = F("(=> (Q_N y) (forall ((y Int)) (Q_N y)))")
    (p,) = optimize_pvc(Pvc("v", (("y", Sort.INT),), body, "v"))
    assert len(p.universals) == 2


def test_plugging_figure_summary():
    sk = fig()
    a = SummaryAssignment().add(QN, F("(= (mod e_t 2) 0)"))
    pvcs = [plug_pvc(p, a) for p in extract_pvcs(sk.root)]
    assert all(not params_of(p.body) for p in pvcs)
    assert "(= (mod (+ 2 " in show(pvcs[1].body)


def test_plug_in_keeps_rule_structure():
    sk = fig()
    a = SummaryAssignment().add(QN, F("(= (mod e_t 2) 0)"))
    tree = plug_in(sk.root, a)
    assert tree.source is sk.root
    assert check_syntactic(tree, sk.grammar) == []
    assert [n.rule for _, n in walk(tree)] == [n.rule for _, n in walk(sk.root)]


def test_missing_parameter():
    (p, *_) = extract_pvcs(fig().root)
    with pytest.raises(VcError):
        plug(p.body, SummaryAssignment())


def test_summary_with_foreign_variables_rejected():
    with pytest.raises(VcError):
        SummaryAssignment().add(QN, F("(< e_t w)"))


def test_skolemize_right_existential():
    sc = Scope(scalars={"a": Sort.INT, "b": Sort.INT})
    body = parse_formula_text("(=> (= a b) (exists ((k Int)) (= (+ a b) (* 2 k))))", sc)
    p = Pvc("v", (("a", Sort.INT), ("b", Sort.INT)), body, "v")
    s = skolemize_rhs_existentials(p)
    assert show(s.body) == "(=> (= a b) (= (+ a b) (* 2 (f1 a b))))"
    assert s.skolems == (("f1", (("a", Sort.INT), ("b", Sort.INT)), Sort.INT),)


def test_skolemize_leaves_negative_existentials():
    sc = Scope(scalars={"a": Sort.INT})
    body = parse_formula_text("(=> (exists ((k Int)) (= a k)) (not (exists ((k Int)) (< a k))))", sc)
    p = Pvc("v", (("a", Sort.INT),), body, "v")
    assert skolemize_rhs_existentials(p) is p


def test_skolem_inputs_include_enclosing_universals():
    sc = Scope(scalars={"a": Sort.INT})
    body = parse_formula_text("(=> true (forall ((u Int)) (exists ((k Int)) (< (+ a u) k))))", sc)
    s = skolemize_rhs_existentials(Pvc("v", (("a", Sort.INT),), body, "v"))
    assert [n for n, _ in s.skolems[0][1]] == ["a", "u"]


def test_pvc_text_format():
    text = pvc_text(extract_pvcs(fig().root)).splitlines()
    assert text[0].startswith("(vc weaken0 ")
    assert len(text) == 2


def test_skolem_witness_closes_obligation():
    """With P(a, b) := a = b the skolem function f(a, b) = a discharges a + b = 2 f(a, b)."""
    sig = ParamSig("P", "summary", "S", (("a", Sort.INT), ("b", Sort.INT)))
    sc = Scope(scalars={"a": Sort.INT, "b": Sort.INT}, params={"P": sig})
    body = parse_formula_text("(=> (P a b) (exists ((k Int)) (= (+ a b) (* 2 k))))", sc)
    s = skolemize_rhs_existentials(Pvc("v", (("a", Sort.INT), ("b", Sort.INT)), body, "v"))
    p_def = (sig.formals, parse_formula_text("(= a b)", sc))
    good = Evaluator(None, None, {"P": p_def, "f1": lambda a, b: a})
    bad = Evaluator(None, None, {"P": p_def, "f1": lambda a, b: a + b})
    grid = [{"a": a, "b": b} for a in range(-4, 5) for b in range(-4, 5)]
    assert all(good(s.body, env) for env in grid)
    assert not all(bad(s.body, env) for env in grid)
