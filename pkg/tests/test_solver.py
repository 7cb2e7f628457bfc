import json
import os
import stat
import textwrap

import pytest

from conftest import needs_z3
from ulproof.logic import ParamSig, Scope, Sort, parse_formula_text
from ulproof.solver import (
    ERROR, INVALID, TIMEOUT, UNKNOWN, VALID, SolverConfig, SolverError, SolverQuery, SolverSession,
    SynthFun, emit_smt, emit_sygus, parse_model, parse_smt_answer, parse_sygus_answer,
    pick_logic, race, symbol,
)

INTS = Scope(scalars={"a": Sort.INT, "b": Sort.INT})


def F(text, scope=INTS):
    return parse_formula_text(text, scope)


def stub(tmp_path, name, body):
    path = tmp_path / name
    path.write_text("#!/usr/bin/env python3\n" + textwrap.dedent(body))
    path.chmod(path.stat().st_mode | stat.S_IXUSR)
    return str(path)


# -- emission -----------------------------------------------------------------

def test_emit_smt_text():
    q = emit_smt(F("(=> (< a b) (< a (+ b 1)))"))
    assert q.text.splitlines() == [
        "(set-logic QF_LIA)",
        "(set-option :produce-models true)",
        "(declare-const a Int)",
        "(declare-const b Int)",
        "(assert (not (=> (< a b) (< a (+ b 1)))))",
        "(check-sat)",
        "(get-model)",
    ]


def test_emit_is_deterministic():
    f = F("(forall ((c Int)) (or (< a c) (< c (* a b))))")
    assert emit_smt(f).text == emit_smt(f).text
    assert emit_smt(f).logic == "NIA"


def test_logic_selection():
    assert pick_logic([F("(< a 1)")]) == "QF_LIA"
    assert pick_logic([F("(exists ((c Int)) (< a c))")]) == "LIA"
    assert pick_logic([F("(= (mod a 2) 0)")]) == "QF_LIA"
    assert pick_logic([F("(= (* a b) 0)")]) == "QF_NIA"


def test_symbol_quoting():
    assert symbol("x@1") == "x@1"
    assert symbol("x'") == "|x'|"
    with pytest.raises(SolverError):
        symbol("a|b")


def test_negative_constants_in_smt():
    q = emit_smt(F("(< a -2)"))
    assert "(< a (- 2))" in q.text


def test_emit_sygus_problem():
    sig = ParamSig("Q", "summary", "N", (("e_t", Sort.INT),))
    c = parse_formula_text("(=> (Q a) (not (= a 3)))", Scope(scalars={"a": Sort.INT}, params={"Q": sig}))
    q = emit_sygus([c], [SynthFun("Q", (("e_t", Sort.INT),))])
    lines = q.text.splitlines()
    assert lines[0] == "(set-logic LIA)"
    assert "(synth-fun Q ((e_t Int)) Bool)" in lines
    assert "(declare-var a Int)" in lines
    assert "(constraint (=> (Q a) (not (= a 3))))" in lines
    assert lines[-1] == "(check-synth)"


# -- answers ------------------------------------------------------------------

def test_parse_answers():
    assert parse_smt_answer("unsat\n").outcome == VALID
    v = parse_smt_answer("sat\n(\n  (define-fun a () Int (- 3))\n  (define-fun p () Bool true)\n)\n")
    assert v.outcome == INVALID and v.model == {"a": -3, "p": True}
    assert str(v) == "invalid (a=-3, p=true)"
    assert parse_smt_answer("unknown").outcome == UNKNOWN
    assert parse_smt_answer("").outcome == ERROR
    assert parse_smt_answer("(error \"line 1\")").outcome == ERROR


def test_parse_model_ignores_functions():
    assert parse_model("((define-fun f ((x Int)) Int x) (define-fun c () Int 4))") == {"c": 4}


def test_parse_sygus_answers():
    q = SolverQuery("sygus", "", "LIA", synth={"Q": ((("e_t", Sort.INT),), Sort.BOOL)})
    ok = parse_sygus_answer("(\n(define-fun Q ((e_t Int)) Bool (= (mod e_t 2) 0))\n)", q)
    assert ok.outcome == VALID
    formals, body = ok.solution["Q"]
    assert formals == (("e_t", Sort.INT),)
    assert parse_sygus_answer("infeasible", q).outcome == UNKNOWN
    assert parse_sygus_answer("fail", q).outcome == UNKNOWN
    assert parse_sygus_answer("(define-fun R () Bool true)", q).outcome == ERROR


def test_config_load(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"timeout": 5, "smt_cmd": ["z3", "-in"]}))
    cfg = SolverConfig.load(p)
    assert cfg.timeout == 5 and cfg.smt_cmd == ["z3", "-in"] and cfg.pool == 4
    p.write_text(json.dumps({"timout": 5}))
    with pytest.raises(SolverError):
        SolverConfig.load(p)


def test_missing_solver_is_an_error():
    cfg = SolverConfig(smt_cmd=["definitely-not-a-solver-xyz", "{file}"])
    v = SolverSession(cfg).check(F("(< a (+ a 1))"))
    assert v.outcome == ERROR and "not found" in v.detail


# -- process racing ---------------------------------------------------------------

def _alive(pid):
    return os.path.exists(f"/proc/{pid}")


def test_race_first_answer_wins_and_loser_is_killed(tmp_path):
    pidfile = tmp_path / "slow.pid"
    fast = stub(tmp_path, "fast", 'print("unsat")\n')
    slow = stub(tmp_path, "slow", f"""
        import os, time
        open({str(pidfile)!r}, "w").write(str(os.getpid()))
        time.sleep(60)
        print("fail")
    """)
    cfg = SolverConfig(smt_cmd=[fast, "{file}"], sygus_cmd=[slow, "{file}"], timeout=20)
    smt = emit_smt(F("(< a (+ a 1))"))
    sy = SolverQuery("sygus", "(check-synth)\n", "LIA", synth={})
    v = race(smt, sy, cfg)
    assert v.outcome == VALID and v.winner == "smt"
    assert v.time < 10
    # the slow process may not have got as far as writing its pid
    if pidfile.exists():
        assert not _alive(int(pidfile.read_text()))


def test_race_sygus_can_win(tmp_path):
    pidfile = tmp_path / "smt.pid"
    slow = stub(tmp_path, "slow_smt", f"""
        import os, time
        open({str(pidfile)!r}, "w").write(str(os.getpid()))
        time.sleep(60)
    """)
    fast = stub(tmp_path, "fast_sygus", 'print("(define-fun f1 ((a0 Int)) Int (+ a0 1))")\n')
    cfg = SolverConfig(smt_cmd=[slow, "{file}"], sygus_cmd=[fast, "{file}"], timeout=20)
    sy = SolverQuery("sygus", "", "LIA", synth={"f1": ((("a0", Sort.INT),), Sort.INT)})
    v = race(emit_smt(F("(< a (+ a 1))")), sy, cfg)
    assert v.outcome == VALID and v.winner == "sygus"
    assert v.time < 10
    assert pidfile.exists() and not _alive(int(pidfile.read_text()))


def test_race_timeout(tmp_path):
    slow = stub(tmp_path, "sleepy", "import time\ntime.sleep(60)\n")
    cfg = SolverConfig(smt_cmd=[slow, "{file}"], timeout=0.5)
    v = SolverSession(cfg).check(F("(< a 1)"))
    assert v.outcome == TIMEOUT


def test_inconclusive_answers_do_not_win(tmp_path):
    smt = stub(tmp_path, "smt", "import time\ntime.sleep(0.5)\nprint('sat')\n")
    sy = stub(tmp_path, "sy", "print('infeasible')\n")
    cfg = SolverConfig(smt_cmd=[smt, "{file}"], sygus_cmd=[sy, "{file}"], timeout=20)
    v = race(emit_smt(F("(< a 1)")), SolverQuery("sygus", "", "LIA"), cfg)
    assert v.outcome == INVALID and v.winner == "smt"


def test_session_counts_calls(tmp_path):
    fast = stub(tmp_path, "fast", 'print("unsat")\n')
    s = SolverSession(SolverConfig(smt_cmd=[fast, "{file}"], pool=2))
    out = s.check_many([(F("(< a 1)"), None), (F("(< b 1)"), None), (F("(< a b)"), None)])
    assert [v.outcome for v in out] == [VALID] * 3
    assert s.calls == 3


@needs_z3
def test_z3_verdicts(session):
    assert session.check(F("(=> (< a b) (< a (+ b 1)))")).outcome == VALID
    v = session.check(F("(=> (< a b) (< (+ a 5) b))"))
    assert v.outcome == INVALID and v.model["b"] - v.model["a"] <= 5 and v.model["a"] < v.model["b"]
    assert session.check(F("(forall ((c Int)) (exists ((d Int)) (< c d)))")).outcome == VALID


@needs_z3
def test_mod_div_match_evaluator(session):
    """z3's mod/div agree with the built-in evaluator on a grid of values."""
    from ulproof.logic import App, evaluate, num
    for a in range(-5, 6):
        for b in (-3, -2, 2, 3):
            q = evaluate(App("div", (num(a), num(b))), {})
            r = evaluate(App("mod", (num(a), num(b))), {})
            f = parse_formula_text(f"(and (= (div {a} {b}) {q}) (= (mod {a} {b}) {r}))")
            assert session.check(f).outcome == VALID, (a, b)


@needs_z3
def test_plugged_base_case_script(session):
    """true -> Q_N(2) with Q_N(a) := a mod 2 = 0: the script asserts the negation and z3 says unsat."""
    from ulproof.vcgen import Pvc, SummaryAssignment, plug_pvc
    sig = ParamSig("Q_N", "summary", "N", (("e_t", Sort.INT),))
    body = parse_formula_text("(=> true (Q_N 2))", Scope(params={"Q_N": sig}))
    a = SummaryAssignment().add(sig, parse_formula_text("(= (mod e_t 2) 0)"))
    plugged = plug_pvc(Pvc("v", (), body, "v"), a)
    q = emit_smt(plugged.body)
    assert "(assert (not (=> true (= (mod 2 2) 0))))" in q.text
    assert session.check(plugged.body).outcome == VALID


def test_check_many_keeps_input_order(tmp_path):
    # the stub answers sat for queries mentioning "a" after a delay, unsat at once otherwise
    s = stub(tmp_path, "order", """
        import sys, time
        text = open(sys.argv[1]).read()
        if "declare-const a " in text:
            time.sleep(0.4)
            print("sat")
        else:
            print("unsat")
    """)
    sess = SolverSession(SolverConfig(smt_cmd=[s, "{file}"], pool=3))
    out = sess.check_many([(F("(< a 1)"), None), (F("(< b 1)"), None), (F("(< a b)"), None)])
    assert [v.outcome for v in out] == [INVALID, VALID, INVALID]
