"""Minimal s-expression reader and printer used by the benchmark format."""

from __future__ import annotations


class ParseError(Exception):
    def __init__(self, msg, line=None, col=None):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + msg)


class Sym(str):
    """An atom that remembers where it came from."""

    line: int | None = None
    col: int | None = None

    @staticmethod
    def at(text, line, col):
        s = Sym(text)
        s.line, s.col = line, col
        return s


class SList(list):
    line: int | None = None
    col: int | None = None


def _tokens(text):
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
        elif c.isspace():
            i, col = i + 1, col + 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield c, line, col
            i, col = i + 1, col + 1
        elif c == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise ParseError("unterminated quoted symbol", line, col)
            yield text[i + 1:j], line, col
            col += j + 1 - i
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            yield text[i:j], line, col
            col += j - i
            i = j


def parse_all(text: str) -> list:
    """Parse every top-level form in ``text``."""
    stack = [SList()]
    for tok, line, col in _tokens(text):
        if tok == "(":
            lst = SList()
            lst.line, lst.col = line, col
            stack.append(lst)
        elif tok == ")":
            if len(stack) == 1:
                raise ParseError("unexpected ')'", line, col)
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(Sym.at(tok, line, col))
    if len(stack) != 1:
        top = stack[-1]
        raise ParseError("unclosed '('", top.line, top.col)
    return list(stack[0])


def parse_one(text: str):
    forms = parse_all(text)
    if len(forms) != 1:
        raise ParseError(f"expected exactly one form, got {len(forms)}")
    return forms[0]


def dumps(sx) -> str:
    if isinstance(sx, (list, tuple)):
        return "(" + " ".join(dumps(x) for x in sx) + ")"
    if isinstance(sx, bool):
        return "true" if sx else "false"
    return str(sx)


def where(sx) -> str:
    line = getattr(sx, "line", None)
    return f" at {line}:{sx.col}" if line is not None else ""
