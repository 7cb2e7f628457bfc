import io
import json
import subprocess
import sys

import pytest

from conftest import BENCH, needs_z3
from ulproof.cli import main


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def test_skeleton_needs_no_solver(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"smt_cmd": ["no-such-solver"]}))
    code, out = run("prove", str(BENCH / "fig-example.ul"), "--skeleton", "--solver-config", str(cfg))
    assert code == 0
    rules = [ln.split()[0] for ln in out.splitlines()]
    assert rules == ["Int", "Int", "ApplyHP", "Adapt", "Bin-Plus", "HP", "Weaken", "Adapt", "Weaken"]


def test_dump_vcs_sections():
    code, out = run("prove", str(BENCH / "fig-example.ul"), "--dump-vcs")
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "; raw" and lines[3] == "; optimized"
    assert sum(ln.startswith("(vc ") for ln in lines) == 5
    code, out = run("prove", str(BENCH / "fig-example.ul"), "--dump-vcs", "--no-optimize")
    assert "; optimized" not in out


@needs_z3
def test_prove_exit_codes():
    code, out = run("prove", str(BENCH / "fig-example.ul"))
    assert code == 0 and "proven: 3/3 VCs valid" in out
    code, out = run("prove", str(BENCH / "fig-example-true.ul"))
    assert code == 1 and "invalid (e_t_y=3)" in out


@needs_z3
def test_synth_prints_summary(tmp_path):
    store = tmp_path / "ctx.jsonl"
    code, out = run("synth", str(BENCH / "fig-example-synth.ul"), "--save-ctx", str(store))
    assert code == 0
    assert "Q_N(e_t) := (= (mod e_t 2) 0)" in out
    assert store.exists()
    code, out = run("prove", str(BENCH / "fig-example-synth.ul"), "--ctx", str(store))
    assert code == 0 and "assumed from store: N (Q_N)" in out


@needs_z3
def test_synth_none_found():
    code, out = run("synth", str(BENCH / "fig-example-four.ul"))
    assert code == 1 and "no summaries found" in out


def test_oracle_command():
    code, out = run("oracle", str(BENCH / "fig-example.ul"), "--depth", "5")
    assert code == 0 and out.startswith("Holds")
    code, out = run("oracle", str(BENCH / "fig-example-four.ul"), "--depth", "5")
    assert code == 1 and out.startswith("Counterexample((+ 2 2)")
    code, out = run("oracle", str(BENCH / "vector-constants.ul"), "--depth", "6", "--domain=-1..3")
    assert code == 0


def test_errors_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.ul"
    bad.write_text("(nonterm N IntExpr (true))\n(post true)\n")
    assert run("prove", str(bad))[0] == 2
    assert run("prove", str(tmp_path / "missing.ul"))[0] == 2
    assert "error:" in capsys.readouterr().err


def test_missing_summary_is_an_error(capsys):
    code, _ = run("prove", str(BENCH / "fig-example-synth.ul"))
    assert code == 2
    assert "run synth" in capsys.readouterr().err


def test_missing_solver_exits_two(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"smt_cmd": ["no-such-solver", "{file}"]}))
    code, out = run("prove", str(BENCH / "fig-example.ul"), "--solver-config", str(cfg))
    assert code == 2 and "not found" in out


def test_bad_domain():
    with pytest.raises(SystemExit):
        run("oracle", str(BENCH / "fig-example.ul"), "--domain=3..1")


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "ulproof", "oracle", str(BENCH / "fig-example.ul")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("Holds")


@needs_z3
def test_loop_invariant_given_and_synthesized(tmp_path):
    code, out = run("prove", str(BENCH / "count-up.ul"))
    assert code == 0 and "proven: 3/3" in out
    bare = tmp_path / "bare.ul"
    bare.write_text((BENCH / "count-up.ul").read_text().replace("(invariant I1 (<= x 3))", ""))
    code, out = run("synth", str(bare), "--unconstrained")
    assert code == 0 and "I1(x) := (<= x 3)" in out
    code, _ = run("synth", str(bare))
    assert code == 2  # no template and no --unconstrained
