"""SMT-LIB and SyGuS emission, external solver processes, and racing."""

from __future__ import annotations

import json
import logging
import os
import queue
import re
import shutil
import signal
import subprocess
import tempfile
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .logic import (
    App, Const, Expr, Fun, Lam, Param, Quant, Scope, Sel, Sort, Var, free_vars, funs_of,
    parse_formula, sort_of,
)
from .sexpr import ParseError, dumps, parse_all

log = logging.getLogger(__name__)

VALID, INVALID, UNKNOWN, TIMEOUT, ERROR = "valid", "invalid", "unknown", "timeout", "error"

# pids of every solver process started by this module (most recent last)
SPAWNED = deque(maxlen=256)


class SolverError(Exception):
    pass


@dataclass
class SolverConfig:
    smt_cmd: list = field(default_factory=lambda: ["z3", "-smt2", "{file}"])
    sygus_cmd: list = field(default_factory=lambda: ["cvc5", "--lang=sygus2", "{file}"])
    timeout: float = 30.0
    total_timeout: float = 300.0
    pool: int = 4

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            raw = json.load(fh)
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise SolverError(f"unknown solver config keys: {', '.join(sorted(unknown))}")
        return cls(**raw)

    def sygus_available(self):
        return bool(self.sygus_cmd) and shutil.which(self.sygus_cmd[0]) is not None

    def smt_available(self):
        return bool(self.smt_cmd) and shutil.which(self.smt_cmd[0]) is not None


@dataclass
class SolverQuery:
    kind: str  # "smt" or "sygus"
    text: str
    logic: str
    timeout: float = 30.0
    symbols: dict = field(default_factory=dict)  # declared name -> Sort
    synth: dict = field(default_factory=dict)  # synth-fun name -> (formals, Sort)


@dataclass
class Verdict:
    outcome: str
    detail: str = ""
    model: dict | None = None
    solution: dict | None = None  # synth-fun name -> (formals, body)
    time: float = 0.0
    winner: str | None = None

    @property
    def valid(self):
        return self.outcome == VALID

    def __str__(self):
        s = self.outcome
        if self.outcome == INVALID and self.model:
            s += " (" + ", ".join(f"{k}={_value_text(v)}" for k, v in sorted(self.model.items())) + ")"
        elif self.detail and self.outcome in (ERROR, UNKNOWN):
            s += f" ({self.detail})"
        return s


def _value_text(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


# ---------------------------------------------------------------------------
# emission

_SIMPLE = re.compile(r"^[A-Za-z_~!$%^&*+=<>.?/-][A-Za-z0-9_~!@$%^&*+=<>.?/-]*$")


def symbol(name: str) -> str:
    if _SIMPLE.match(name):
        return name
    if "|" in name or "\\" in name:
        raise SolverError(f"cannot serialize symbol {name!r}")
    return f"|{name}|"


def smt_sx(e: Expr):
    t = type(e)
    if t is Const:
        if e.sort is Sort.BOOL:
            return "true" if e.value else "false"
        return str(e.value) if e.value >= 0 else ["-", str(-e.value)]
    if t is Var:
        if e.sort.is_vector:
            raise SolverError(f"vector variable {e.name} cannot be serialized")
        return symbol(e.name)
    if t is App:
        return [e.op, *(smt_sx(a) for a in e.args)]
    if t is Quant:
        if e.vsort not in (Sort.INT, Sort.BOOL):
            raise SolverError(f"unexpanded {e.vsort.value} quantifier over {e.var}")
        return [e.kind, [[symbol(e.var), e.vsort.value]], smt_sx(e.body)]
    if t is Fun:
        if not e.args:
            return symbol(e.name)
        return [symbol(e.name), *(smt_sx(a) for a in e.args)]
    if t is Param:
        raise SolverError(f"unplugged parameter {e.name}")
    if t is Sel or t is Lam:
        raise SolverError("vector terms must be expanded before serialization")
    raise SolverError(f"cannot serialize {e!r}")


def _walk(e):
    yield e
    t = type(e)
    if t in (App, Param, Fun):
        for a in e.args:
            yield from _walk(a)
    elif t in (Quant, Lam):
        yield from _walk(e.body)
    elif t is Sel:
        yield from _walk(e.index)


def _nonlinear(e):
    for x in _walk(e):
        if type(x) is App:
            if x.op == "*" and sum(type(a) is not Const for a in x.args) > 1:
                return True
            if x.op in ("mod", "div") and type(x.args[1]) is not Const:
                return True
    return False


def pick_logic(exprs) -> str:
    exprs = list(exprs)
    quant = any(type(x) is Quant for e in exprs for x in _walk(e))
    uf = any(funs_of(e) for e in exprs)
    arith = "NIA" if any(_nonlinear(e) for e in exprs) else "LIA"
    return ("" if quant else "QF_") + ("UF" if uf else "") + arith


def emit_smt(vc: Expr, logic: str | None = None, timeout: float = 30.0) -> SolverQuery:
    """Validity query for a closed-over-free-variables VC: assert its negation."""
    if sort_of(vc) is not Sort.BOOL:
        raise SolverError("VC must be Boolean")
    logic = logic or pick_logic([vc])
    fv = free_vars(vc)
    lines = [f"(set-logic {logic})", "(set-option :produce-models true)"]
    for name, s in fv.items():
        if s not in (Sort.INT, Sort.BOOL):
            raise SolverError(f"free {s.value} variable {name} cannot be serialized")
        lines.append(f"(declare-const {symbol(name)} {s.value})")
    for name, (arity, s) in funs_of(vc).items():
        lines.append(f"(declare-fun {symbol(name)} ({' '.join(['Int'] * arity)}) {s.value})")
    lines.append(f"(assert (not {dumps(smt_sx(vc))}))")
    lines += ["(check-sat)", "(get-model)", ""]
    return SolverQuery("smt", "\n".join(lines), logic, timeout, symbols=fv)


@dataclass
class SynthFun:
    name: str
    formals: tuple  # ((name, Sort), ...)
    sort: Sort = Sort.BOOL
    grammar: str | None = None  # SyGuS grouped rule list, or None for the full logic


def emit_sygus(constraints, funs, universals=None, logic=None, timeout=30.0) -> SolverQuery:
    """SyGuS-IF v2 problem: one synth-fun per entry of ``funs``.

    ``constraints`` are formulas whose free variables become declare-vars and
    whose ``Param``/``Fun`` applications refer to the synthesized functions.
    """
    constraints = list(constraints)
    names = {f.name for f in funs}
    bodies = [_params_as_funs(c, names) for c in constraints]
    # declare-vars are implicitly universal, so SyGuS logics carry no QF_ prefix
    logic = logic or pick_logic(bodies).replace("UF", "").replace("QF_", "")
    decls = dict(universals or {})
    for b in bodies:
        for n, s in free_vars(b).items():
            decls.setdefault(n, s)
    lines = [f"(set-logic {logic})"]
    for f in funs:
        args = " ".join(f"({symbol(n)} {s.value})" for n, s in f.formals)
        head = f"(synth-fun {symbol(f.name)} ({args}) {f.sort.value}"
        lines.append(head + (f"\n  {f.grammar})" if f.grammar else ")"))
    for n, s in decls.items():
        lines.append(f"(declare-var {symbol(n)} {s.value})")
    for b in bodies:
        lines.append(f"(constraint {dumps(smt_sx(b))})")
    lines += ["(check-synth)", ""]
    synth = {f.name: (tuple(f.formals), f.sort) for f in funs}
    return SolverQuery("sygus", "\n".join(lines), logic, timeout, symbols=decls, synth=synth)


def _params_as_funs(e, names):
    t = type(e)
    if t is Param:
        if e.name not in names:
            raise SolverError(f"parameter {e.name} has no grammar")
        if any(type(a) is Lam for a in e.args):
            raise SolverError("vector parameters must be expanded before SyGuS emission")
        return Fun(e.name, tuple(_params_as_funs(a, names) for a in e.args), Sort.BOOL)
    if t is App:
        return App(e.op, tuple(_params_as_funs(a, names) for a in e.args))
    if t is Fun:
        return Fun(e.name, tuple(_params_as_funs(a, names) for a in e.args), e.sort)
    if t is Quant:
        return Quant(e.kind, e.var, e.vsort, _params_as_funs(e.body, names))
    return e


def skolem_query(p, timeout=30.0) -> SolverQuery | None:
    """SyGuS problem asking for the skolem functions of a skolemized, plugged PVC."""
    if not p.skolems or any(type(x) is Quant for x in _walk(p.body)):
        return None
    funs = [SynthFun(name, tuple((f"a{i}", s) for i, (_, s) in enumerate(inputs)), s)
            for name, inputs, s in p.skolems]
    return emit_sygus([p.body], funs, universals=dict(p.universals), timeout=timeout)


# ---------------------------------------------------------------------------
# answers

def _atom_value(sx):
    if isinstance(sx, list):
        if len(sx) == 2 and sx[0] == "-":
            v = _atom_value(sx[1])
            return -v if isinstance(v, int) else None
        return None
    if sx == "true":
        return True
    if sx == "false":
        return False
    if re.fullmatch(r"\d+", sx):
        return int(sx)
    return None


def _define_funs(forms):
    for f in forms:
        if isinstance(f, list) and f and f[0] == "define-fun":
            yield f
        elif isinstance(f, list):
            yield from _define_funs(f)


def parse_model(text: str) -> dict:
    try:
        forms = parse_all(text)
    except ParseError:
        return {}
    model = {}
    for d in _define_funs(forms):
        if len(d) == 5 and d[2] == []:
            v = _atom_value(d[4])
            if v is not None:
                model[str(d[1])] = v
    return model


def parse_smt_answer(out: str) -> Verdict:
    lines = [ln.strip() for ln in out.splitlines() if ln.strip()]
    if not lines:
        return Verdict(ERROR, "no output")
    head = lines[0]
    if head == "unsat":
        return Verdict(VALID)
    if head == "sat":
        return Verdict(INVALID, model=parse_model("\n".join(lines[1:])), detail="\n".join(lines[1:]))
    if head in ("unknown", "timeout"):
        return Verdict(UNKNOWN, head)
    return Verdict(ERROR, "\n".join(lines[:5]))


def parse_sygus_answer(out: str, q: SolverQuery) -> Verdict:
    text = out.strip()
    first = text.split(None, 1)[0] if text else ""
    if first in ("infeasible", "fail", "unknown"):
        return Verdict(UNKNOWN, first)
    if first == "unsat" and "define-fun" not in text:
        return Verdict(UNKNOWN, "unsat")
    try:
        forms = parse_all(text)
    except ParseError as exc:
        return Verdict(ERROR, f"unparseable SyGuS answer: {exc}")
    sol = {}
    for d in _define_funs(forms):
        name = str(d[1])
        if name not in q.synth:
            continue
        formals, s = q.synth[name]
        got = tuple((str(a[0]), Sort(str(a[1]))) for a in d[2])
        scope = Scope(scalars=dict(got), strict=True)
        try:
            body = parse_formula(d[4], scope, expect=s)
        except Exception as exc:  # solver printed something outside our fragment
            return Verdict(ERROR, f"cannot read solution for {name}: {exc}")
        sol[name] = (got, body)
    if set(sol) != set(q.synth):
        return Verdict(ERROR, "incomplete SyGuS solution: " + text[:200])
    return Verdict(VALID, solution=sol)


# ---------------------------------------------------------------------------
# processes

class _Run:
    def __init__(self, label, cmd, q: SolverQuery, tmpdir):
        path = os.path.join(tmpdir, f"{label}.{'sl' if q.kind == 'sygus' else 'smt2'}")
        with open(path, "w") as fh:
            fh.write(q.text)
        argv = [a.replace("{file}", path) for a in cmd]
        if not any("{file}" in a for a in cmd):
            argv.append(path)
        self.label, self.query = label, q
        try:
            self.proc = subprocess.Popen(
                argv, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
                start_new_session=True,
            )
        except OSError as exc:
            raise SolverError(f"cannot start {argv[0]}: {exc}") from exc
        SPAWNED.append(self.proc.pid)

    def wait(self, results):
        out, err = self.proc.communicate()
        results.put((self, out, err))

    def kill(self):
        if self.proc.poll() is None:
            try:
                os.killpg(self.proc.pid, signal.SIGKILL)
            except ProcessLookupError:
                pass
        self.proc.wait()

    def verdict(self, out, err):
        if self.query.kind == "sygus":
            v = parse_sygus_answer(out, self.query)
        else:
            v = parse_smt_answer(out)
        if v.outcome == ERROR and err.strip():
            v.detail += " " + err.strip()[:300]
        v.winner = self.label
        return v


def race(smt: SolverQuery, sygus: SolverQuery | None, cfg: SolverConfig) -> Verdict:
    """Run the SMT query (and optionally a SyGuS query) and return the first definitive answer."""
    jobs = [("smt", cfg.smt_cmd, smt)]
    if sygus is not None and cfg.sygus_available():
        jobs.append(("sygus", cfg.sygus_cmd, sygus))
    for label, cmd, _ in jobs:
        if not cmd or shutil.which(cmd[0]) is None:
            return Verdict(ERROR, f"{label} solver {cmd[0] if cmd else '?'} not found", winner=label)
    start = time.monotonic()
    timeout = smt.timeout
    results = queue.Queue()
    with tempfile.TemporaryDirectory(prefix="ulproof-") as tmp:
        runs = []
        try:
            for label, cmd, q in jobs:
                runs.append(_Run(label, cmd, q, tmp))
        except SolverError as exc:
            for r in runs:
                r.kill()
            return Verdict(ERROR, str(exc))
        threads = [threading.Thread(target=r.wait, args=(results,), daemon=True) for r in runs]
        for t in threads:
            t.start()
        best, pending = None, len(runs)
        while pending:
            left = timeout - (time.monotonic() - start)
            if left <= 0:
                break
            try:
                run, out, err = results.get(timeout=left)
            except queue.Empty:
                break
            pending -= 1
            v = run.verdict(out, err)
            if v.outcome in (VALID, INVALID):
                best = v
                break
            if best is None or best.outcome == ERROR:
                best = v
        for r in runs:
            r.kill()
        for t in threads:
            t.join()
    if best is None:
        best = Verdict(TIMEOUT, f"no answer within {timeout:g}s")
    best.time = time.monotonic() - start
    return best


class SolverSession:
    """Issues queries under one configuration and counts solver calls."""

    def __init__(self, cfg: SolverConfig | None = None):
        self.cfg = cfg or SolverConfig()
        self.calls = 0
        self._lock = threading.Lock()
        self._deadline = time.monotonic() + self.cfg.total_timeout

    def _count(self, n):
        with self._lock:
            self.calls += n

    def remaining(self):
        return self._deadline - time.monotonic()

    def check(self, vc: Expr, sygus: SolverQuery | None = None) -> Verdict:
        left = min(self.cfg.timeout, self.remaining())
        if left <= 0:
            return Verdict(TIMEOUT, "run time budget exhausted")
        q = emit_smt(vc, timeout=left)
        if sygus is not None:
            sygus.timeout = left
        self._count(1 + (sygus is not None and self.cfg.sygus_available()))
        v = race(q, sygus, self.cfg)
        log.debug("%s -> %s", q.text.splitlines()[-4][:120], v.outcome)
        return v

    def synth(self, q: SolverQuery) -> Verdict:
        if not self.cfg.sygus_available():
            return Verdict(ERROR, "no SyGuS solver available")
        q.timeout = min(q.timeout, self.cfg.timeout, max(self.remaining(), 0))
        self._count(1)
        start = time.monotonic()
        with tempfile.TemporaryDirectory(prefix="ulproof-") as tmp:
            run = _Run("sygus", self.cfg.sygus_cmd, q, tmp)
            try:
                out, err = run.proc.communicate(timeout=q.timeout)
            except subprocess.TimeoutExpired:
                run.kill()
                return Verdict(TIMEOUT, time=time.monotonic() - start, winner="sygus")
            v = run.verdict(out, err)
        v.time = time.monotonic() - start
        return v

    def check_many(self, items) -> list:
        """``items`` is a list of ``(vc, sygus_or_None)``; verdicts come back in input order."""
        items = list(items)
        if len(items) <= 1 or self.cfg.pool <= 1:
            return [self.check(vc, sq) for vc, sq in items]
        with ThreadPoolExecutor(max_workers=self.cfg.pool) as ex:
            return list(ex.map(lambda it: self.check(*it), items))
