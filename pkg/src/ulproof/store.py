"""Persistent store of proven nonterminal summaries, keyed by grammar fingerprint."""

from __future__ import annotations

import fcntl
import hashlib
import json
import logging
import os
from dataclasses import dataclass
from datetime import datetime, timezone

from .gimp import Rtg, Term, refs, show_term
from .benchmark import sig_scope
from .logic import ParamSig, Sort, Var, parse_formula_text, ref, show, subst

log = logging.getLogger(__name__)


class StoreError(Exception):
    pass


def _rename_term(t: Term, ren):
    if t.tag == "NonterminalRef":
        return Term(t.tag, (), ren[t.value])
    return Term(t.tag, tuple(_rename_term(c, ren) for c in t.children), t.value)


def fingerprint(g: Rtg, n: str, k=None) -> str:
    """Content hash of the sub-grammar reachable from ``n`` after canonical renaming."""
    order, ren = [n], {n: "N0"}
    i = 0
    while i < len(order):
        for p in g.productions[order[i]]:
            for m in refs(p):
                if m not in ren:
                    ren[m] = f"N{len(order)}"
                    order.append(m)
        i += 1
    lines = [f"k={k}"]
    for m in order:
        prods = " | ".join(show_term(_rename_term(p, ren)) for p in g.productions[m])
        lines.append(f"{ren[m]} {g.sorts[m].value} {prods}")
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


@dataclass
class StoreEntry:
    fingerprint: str
    nonterminal: str
    formals: tuple
    summary: str
    status: str
    time: str = ""
    meta: dict = None

    def body_for(self, sig: ParamSig):
        """The stored summary over ``sig``'s formals (matched by position)."""
        if len(sig.formals) != len(self.formals):
            raise StoreError(f"stored summary for {self.nonterminal} has {len(self.formals)} formals, "
                             f"{sig.name} has {len(sig.formals)}")
        stored = ParamSig(sig.name, sig.kind, sig.site, self.formals)
        body = parse_formula_text(self.summary, sig_scope(stored))
        ren = {a: (ref(b, s) if s.is_vector else Var(b, s))
               for (a, _), (b, s) in zip(self.formals, sig.formals) if a != b}
        return subst(body, ren) if ren else body


class SummaryStore:
    """One JSON record per line; later records override earlier ones."""

    def __init__(self, path):
        self.path = str(path)
        self.entries = {}
        self.corrupt = []
        self._load()

    def _load(self):
        self.entries.clear()
        self.corrupt = []
        if not os.path.exists(self.path):
            return
        with open(self.path) as fh:
            fcntl.flock(fh, fcntl.LOCK_SH)
            try:
                lines = fh.readlines()
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)
        for no, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                e = StoreEntry(
                    rec["fingerprint"], rec["nonterminal"],
                    tuple((n, Sort(s)) for n, s in rec["formals"]),
                    rec["summary"], rec["status"], rec.get("time", ""), rec.get("meta") or {},
                )
            except (ValueError, KeyError, TypeError):
                self.corrupt.append(no)
                continue
            self.entries[e.fingerprint] = e
        if self.corrupt:
            log.warning("summary store %s has corrupt lines %s", self.path, self.corrupt)

    def lookup(self, g: Rtg, n: str, k=None) -> StoreEntry | None:
        e = self.entries.get(fingerprint(g, n, k))
        if e is not None and e.status == "proven":
            return e
        return None

    def save(self, g: Rtg, n: str, k, sig: ParamSig, body, status="proven", meta=None) -> StoreEntry:
        if self.corrupt:
            raise StoreError(f"refusing to write to corrupt store {self.path} (bad lines {self.corrupt})")
        e = StoreEntry(fingerprint(g, n, k), n, tuple(sig.formals), show(body), status,
                       datetime.now(timezone.utc).isoformat(timespec="seconds"), meta or {})
        rec = {
            "fingerprint": e.fingerprint, "nonterminal": n,
            "formals": [[a, s.value] for a, s in e.formals], "summary": e.summary,
            "status": status, "time": e.time, "meta": e.meta,
        }
        d = os.path.dirname(os.path.abspath(self.path))
        os.makedirs(d, exist_ok=True)
        with open(self.path, "a") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            try:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
                fh.flush()
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)
        self.entries[e.fingerprint] = e
        return e
