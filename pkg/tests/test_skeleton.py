import dataclasses

import pytest

from ulproof.benchmark import parse_benchmark
from ulproof.logic import alpha_eq, params_of, parse_formula_text, show
from ulproof.skeleton import (
    SkeletonError, build, check_syntactic, path_key, render, rule_sequence, walk,
)

FIG = """
(nonterm N IntExpr (2) (+ 2 N))
(pre true)
(program N)
(post (not (= e_t 3)))
"""


def skel(text):
    b = parse_benchmark(text)
    return build(b.grammar, b.pre, b.program, b.post, b.k)


def test_figure_rule_sequence():
    sk = skel(FIG)
    assert rule_sequence(sk.root) == ["Int", "Int", "ApplyHP", "Adapt", "Bin-Plus", "HP", "Weaken",
                                      "Adapt", "Weaken"]
    assert list(sk.params) == ["Q_N"]
    assert [n for n, _ in sk.params["Q_N"].formals] == ["e_t"]


def test_figure_formulas():
    sk = skel(FIG)
    by_rule = {}
    for _, n in walk(sk.root):
        by_rule.setdefault(n.rule, []).append(n)
    hp = by_rule["HP"][0]
    assert show(hp.post) == "(Q_N e_t)"
    first_int = [n for n in by_rule["Int"] if show(n.pre) == "(Q_N 2)"]
    assert first_int, "the base-case Int node has precondition Q_N(2)"
    adapt = by_rule["Adapt"][0]
    want = parse_formula_text("(forall ((v Int)) (=> (Q_N v) (not (= v 3))))",
                              _scope(sk))
    assert alpha_eq(adapt.pre, want)


def _scope(sk):
    from ulproof.logic import Scope
    return Scope(params=sk.params)


def test_render_lists_every_node_conclusion_last():
    out = render(skel(FIG).root).splitlines()
    assert len(out) == 9
    assert out[-1].startswith("Weaken") and "{true} N {(not (= e_t 3))}" in out[-1]


def test_generated_skeletons_are_well_formed():
    for text in (FIG, open_bench("vector-constants.ul"), open_bench("mod6.ul")):
        sk = skel(text)
        assert check_syntactic(sk.root, sk.grammar) == []


def open_bench(name):
    from conftest import BENCH
    return (BENCH / name).read_text()


def test_swapped_seq_premises_are_rejected():
    sk = skel("""
    (nonterm S Stmt (seq (:= x (+ x 1)) (:= x (+ x 2))))
    (pre (= x 0)) (program S) (post (= x 3))
    """)
    seqs = [(p, n) for p, n in walk(sk.root) if n.rule == "Seq"]
    assert seqs
    path, node = seqs[0]
    bad = dataclasses.replace(node, children=node.children[::-1])
    root = _replace_at(sk.root, path, bad)
    violations = check_syntactic(root, sk.grammar)
    assert violations and all(v.rule == "Seq" for v in violations)


def _replace_at(node, path, new):
    if not path:
        return new
    kids = list(node.children)
    kids[path[0]] = _replace_at(kids[path[0]], path[1:], new)
    return dataclasses.replace(node, children=tuple(kids))


def test_tampered_formula_is_rejected():
    sk = skel(FIG)
    path, node = [(p, n) for p, n in walk(sk.root) if n.rule == "Int"][0]
    root = _replace_at(sk.root, path, dataclasses.replace(node, pre=parse_formula_text("false")))
    assert check_syntactic(root, sk.grammar)


def test_skeleton_is_deterministic():
    a, b = skel(FIG), skel(FIG)
    assert render(a.root) == render(b.root)
    assert a.params == b.params


def test_vector_conditional_uses_vsif():
    sk = skel(open_bench("vector-constants.ul"))
    rules = rule_sequence(sk.root, "pre")
    assert "VSIf" in rules and "SimpleIf" not in rules
    formals = [n for n, _ in sk.params["Q_S"].formals]
    assert formals == ["x", "x_z", "y"]
    for _, n in walk(sk.root):
        if n.rule == "VSIf":
            assert n.meta["b_loop"].startswith("b_loop")
            assert set(n.meta["ymap"]) == {"x"}


def test_scalar_conditional_uses_simpleif():
    sk = skel("""
    (nonterm S Stmt (ite (< x 1) (:= x 1) (:= x 2)))
    (pre true) (program S) (post (< 0 x))
    """)
    assert "SimpleIf" in rule_sequence(sk.root)
    assert sk.params == {}
    assert check_syntactic(sk.root, sk.grammar) == []


def test_loops_get_invariant_parameters():
    sk = skel("""
    (nonterm S Stmt (while (< x 3) (:= x (+ x 1))))
    (pre (= x 0)) (program S) (post (= x 3))
    """)
    assert [s.kind for s in sk.params.values()] == ["invariant"]
    assert "SimpleWhile" in rule_sequence(sk.root)
    k = skel("""
    (set-vector-length 2)
    (nonterm S Stmt (while (< x 3) (:= x (+ x 1))))
    (pre (forall ((i Idx)) (= x[i] 0))) (program S) (post (forall ((i Idx)) (= x[i] 3)))
    """)
    assert "VSWhile" in rule_sequence(k.root)
    assert check_syntactic(k.root, k.grammar) == []


def test_one_summary_per_recursive_nonterminal():
    sk = skel(open_bench("mod6.ul"))
    assert sorted(sk.params) == ["Q_S2", "Q_S3"]
    for _, n in walk(sk.root):
        for name in params_of(n.pre):
            assert name in sk.params


def test_pvc_free_vars_do_not_leak_reserved_names():
    with pytest.raises(SkeletonError):
        skel("""
        (nonterm S Stmt (:= x 1))
        (pre true) (program S) (post (= e_t 1))
        """)


def test_assumed_summary_must_be_recursive():
    b = parse_benchmark("(nonterm S Stmt (:= x 1)) (pre true) (program S) (post (= x 1))")
    with pytest.raises(SkeletonError):
        build(b.grammar, b.pre, b.program, b.post, assume=("S",))


def test_path_key_orders_preorder():
    ids = ["weaken0.adapt0.weaken0#1", "weaken0", "weaken0.adapt0.weaken0#0", "weaken0.seq1"]
    assert sorted(ids, key=path_key) == ["weaken0", "weaken0.adapt0.weaken0#0",
                                         "weaken0.adapt0.weaken0#1", "weaken0.seq1"]
