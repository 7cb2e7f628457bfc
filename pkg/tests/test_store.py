import json

import pytest

from conftest import needs_z3
from ulproof.benchmark import parse_benchmark
from ulproof.gimp import parse_grammar
from ulproof.logic import ParamSig, Sort, parse_formula_text, show
from ulproof.prover import Options, prove, synth
from ulproof.solver import SolverConfig, SolverSession
from ulproof.store import StoreError, SummaryStore, fingerprint

EVEN = "(nonterm E IntExpr (0) (+ E 2))"
SIG = ParamSig("Q_E", "summary", "E", (("e_t", Sort.INT),))


def test_fingerprint_ignores_names_but_not_content():
    g = parse_grammar(EVEN)
    renamed = parse_grammar("(nonterm M IntExpr (0) (+ M 2))")
    assert fingerprint(g, "E") == fingerprint(renamed, "M")
    assert fingerprint(g, "E") != fingerprint(parse_grammar("(nonterm E IntExpr (0) (+ E 2) (1))"), "E")
    assert fingerprint(g, "E") != fingerprint(g, "E", 3)


def test_fingerprint_only_sees_reachable_part():
    a = parse_grammar("(nonterm S Stmt (:= x E)) " + EVEN)
    b = parse_grammar("(nonterm S Stmt (:= y E) (:= x 1)) " + EVEN)
    assert fingerprint(a, "E") == fingerprint(b, "E")


def test_save_and_lookup(tmp_path):
    st = SummaryStore(tmp_path / "s.jsonl")
    g = parse_grammar(EVEN)
    st.save(g, "E", None, SIG, parse_formula_text("(= (mod e_t 2) 0)"))
    again = SummaryStore(tmp_path / "s.jsonl")
    e = again.lookup(parse_grammar("(nonterm M IntExpr (0) (+ M 2))"), "M")
    assert e is not None and e.summary == "(= (mod e_t 2) 0)"
    other = ParamSig("Q_M", "summary", "M", (("v", Sort.INT),))
    assert show(e.body_for(other)) == "(= (mod v 2) 0)"
    assert again.lookup(parse_grammar("(nonterm E IntExpr (0) (+ E 2) (1))"), "E") is None


def test_unproven_entries_are_not_used(tmp_path):
    st = SummaryStore(tmp_path / "s.jsonl")
    g = parse_grammar(EVEN)
    st.save(g, "E", None, SIG, parse_formula_text("true"), status="failed")
    assert st.lookup(g, "E") is None


def test_corrupt_store_refuses_writes(tmp_path):
    p = tmp_path / "s.jsonl"
    good = SummaryStore(p)
    good.save(parse_grammar(EVEN), "E", None, SIG, parse_formula_text("(= (mod e_t 2) 0)"))
    with open(p, "a") as fh:
        fh.write("{not json\n")
    st = SummaryStore(p)
    assert st.corrupt == [2]
    assert st.lookup(parse_grammar(EVEN), "E") is not None
    with pytest.raises(StoreError):
        st.save(parse_grammar(EVEN), "E", None, SIG, parse_formula_text("true"))
    assert len(p.read_text().splitlines()) == 2


def test_records_are_json_lines(tmp_path):
    p = tmp_path / "s.jsonl"
    SummaryStore(p).save(parse_grammar(EVEN), "E", None, SIG, parse_formula_text("(< 0 (+ e_t 1))"), meta={"b": "x"})
    rec = json.loads(p.read_text())
    assert rec["nonterminal"] == "E" and rec["status"] == "proven" and rec["meta"] == {"b": "x"}
    assert rec["formals"] == [["e_t", "Int"]]


USE = EVEN + """
(nonterm S Stmt (:= x E) (:= x (+ E E)))
(program S)
(pre true)
(post (= (mod x 2) 0))
(summary-grammar E ((B Bool) (C Int)) ((B Bool ((= (mod e_t C) 0))) (C Int (3 2))))
"""


@needs_z3
def test_synth_saves_and_prove_reuses(tmp_path):
    path = tmp_path / "ctx.jsonl"
    b = parse_benchmark(USE)
    s = SolverSession(SolverConfig(pool=1))
    r = synth(b, s, save=SummaryStore(path))
    assert r.proven and path.exists()

    with_ctx = SolverSession(SolverConfig(pool=1))
    r1 = prove(b, with_ctx, Options(store=SummaryStore(path)))
    assert r1.proven and r1.store_hits == {"E": "Q_E"}

    b_given = parse_benchmark(USE + "(summary E (= (mod e_t 2) 0))")
    without = SolverSession(SolverConfig(pool=1))
    r2 = prove(b_given, without, Options(store=SummaryStore(path), use_ctx=False))
    assert r2.proven and not r2.store_hits
    assert with_ctx.calls < without.calls
