"""
Parser for the surface syntax of ``.rho`` files.

    0                         stopped process
    x?( y1, ..., yN ) => P    input (``⇒`` accepted); ``=n`` in binder position matches n
    x!( Q1, ..., QN )         output
    x ? get( ret ) => P       labelled input; x ! get( k ) labelled output
    P | Q,  P + Q             parallel, choice
    { P \\n Q }                 block: newline- (or ``;``) separated statements in parallel
    *x,  @P                   dereference, quote
    5, "s", undefined, a + b  ground data (``0`` is the stopped process, ``00`` the integer zero)
    def X( y... ) => P        recursive definition, called as X( Q... )
    new ( x... ) P            fresh names
    match { ... }             input-guarded choice
    import Cell, Map2 as M    prelude definitions

A bare identifier in process position means ``*x``.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .sugar import (
    SBlock, SCall, SChoice, SDef, SDrop, SGround, SIdent, SImport, SInput, SMatch, SNew,
    SOutput, SPattern, SQuote, SStop, desugar,
)
from .syntax import IntLit, Proc, StrLit, Undefined


class ParseError(Exception):
    def __init__(self, msg, line=0, col=0):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


KEYWORDS = {"def", "new", "match", "import", "as", "undefined"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>//[^\n]*|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<arrow>=>|⇒)
  | (?P<int>\d+)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<ident>\$\d+|[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>[(){},|+\-*@?!=;.:\[\]<>~&])
""", re.VERBOSE)


def tokenize(src: str, *, comments=True):
    toks = []
    line, col = 1, 1
    pos = 0
    depth = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "comment" and not comments:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        if kind == "nl":
            if depth == 0:
                toks.append(Token("nl", text, line, col))
            line += 1
            col = 1
        else:
            if kind == "ident" and text in KEYWORDS:
                kind = "kw"
            if kind == "punct":
                if text == "(":
                    depth += 1
                elif text == ")":
                    depth = max(0, depth - 1)
            if kind not in ("ws", "comment"):
                toks.append(Token(kind, text, line, col))
            col += len(text)
        pos = m.end()
    toks.append(Token("eof", "", line, col))
    return toks


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0

    # -- helpers
    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text, kind=None):
        t = self.tok
        return t.text == text and (kind is None or t.kind == kind) and t.kind not in ("str",)

    def advance(self):
        t = self.tok
        self.i += 1
        return t

    def expect(self, text):
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def error(self, msg):
        raise ParseError(msg, self.tok.line, self.tok.col)

    def skip_nl(self):
        while self.tok.kind == "nl":
            self.advance()

    def ident(self):
        if self.tok.kind != "ident":
            self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        return self.advance().text

    # -- statements
    def program(self):
        stmts = self.stmts("eof")
        return stmts[0] if len(stmts) == 1 else SBlock(tuple(stmts))

    def stmts(self, end):
        out = []
        while True:
            while self.tok.kind == "nl" or self.at(";"):
                self.advance()
            if (end == "eof" and self.tok.kind == "eof") or (end != "eof" and self.at(end)):
                return out
            out.append(self.proc())
            if not (self.tok.kind in ("nl", "eof") or self.at(";") or self.at(end)):
                self.error(f"unexpected {self.tok.text!r} after statement")

    def proc(self):
        parts = [self.sum()]
        while self.at("|"):
            self.advance()
            self.skip_nl()
            parts.append(self.sum())
        return parts[0] if len(parts) == 1 else SBlock(tuple(parts))

    def sum(self):
        left = self.prim()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            self.skip_nl()
            right = self.prim()
            if _groundish(left) and _groundish(right):
                left = SGround((op, _operand(left), _operand(right)))
            elif op == "+" and _io(left) and _io(right):
                branches = (left.branches if isinstance(left, SChoice) else (left,)) + (right,)
                left = SChoice(branches)
            else:
                self.error(f"operands of {op!r} must both be data or both be input/output")
        return left

    def prim(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return SStop() if t.text == "0" else SGround(IntLit(int(t.text)))
        if self.at("-") and self.peek().kind == "int":
            self.advance()
            return SGround(IntLit(-int(self.advance().text)))
        if t.kind == "str":
            self.advance()
            return SGround(StrLit(json.loads(t.text)))
        if t.kind == "kw":
            return self.keyword()
        if self.at("{"):
            self.advance()
            body = self.stmts("}")
            self.expect("}")
            return SBlock(tuple(body))
        if self.at("("):
            self.advance()
            self.skip_nl()
            inner = self.proc()
            self.skip_nl()
            self.expect(")")
            if isinstance(inner, SDef) and self.at("("):
                return SDef(inner.name, inner.params, inner.body, self.args())
            return inner
        if self.at("*"):
            self.advance()
            return SDrop(self.name())
        if self.at("@"):
            return self.channel_op(self.name())
        if t.kind == "ident":
            if self.peek().text == "(" and self.peek().kind == "punct":
                name = self.advance().text
                return SCall(name, self.args())
            if self.peek().text in ("?", "!") and self.peek().kind == "punct":
                return self.channel_op(self.name())
            self.advance()
            return SDrop(SIdent(t.text))
        self.error(f"unexpected {t.text or 'end of input'!r}")

    def keyword(self):
        t = self.advance()
        if t.text == "undefined":
            return SGround(Undefined())
        if t.text == "def":
            name = self.ident()
            params = self.idents()
            self.expect_arrow()
            return SDef(name, params, self.prim())
        if t.text == "new":
            binders = self.idents()
            self.skip_nl()
            return SNew(binders, self.prim())
        if t.text == "match":
            self.skip_nl()
            self.expect("{")
            branches = self.stmts("}")
            self.expect("}")
            for b in branches:
                if not isinstance(b, SInput):
                    raise ParseError("match branches must be inputs", t.line, t.col)
            return SMatch(tuple(branches))
        if t.text == "import":
            items = []
            while True:
                src = self.ident()
                alias = src
                if self.at("as", "kw"):
                    self.advance()
                    alias = self.ident()
                items.append((src, alias))
                if not self.at(","):
                    break
                self.advance()
            return SImport(tuple(items))
        raise ParseError(f"unexpected keyword {t.text!r}", t.line, t.col)

    def expect_arrow(self):
        if self.tok.kind != "arrow":
            self.error(f"expected '=>', found {self.tok.text or 'end of input'!r}")
        self.advance()
        self.skip_nl()

    def idents(self):
        self.expect("(")
        out = []
        while not self.at(")"):
            out.append(self.ident())
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        return tuple(out)

    def args(self):
        self.expect("(")
        out = []
        while not self.at(")"):
            out.append(self.proc())
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        return tuple(out)

    def binders(self):
        self.expect("(")
        out = []
        while not self.at(")"):
            if self.at("="):
                self.advance()
                out.append(SPattern(self.name()))
            else:
                out.append(self.ident())
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        return tuple(out)

    def name(self):
        if self.at("@"):
            self.advance()
            return SQuote(self.quoted())
        return SIdent(self.ident())

    def quoted(self):
        t = self.tok
        if t.kind in ("int", "str") or self.at("{") or self.at("(") or self.at("*") or self.at("undefined", "kw"):
            return self.prim()
        if t.kind == "ident":
            self.advance()
            return SDrop(SIdent(t.text))
        self.error("expected a process after '@'")

    def channel_op(self, chan):
        if self.at("?"):
            self.advance()
            label = None
            if self.tok.kind == "ident":
                label = self.advance().text
            binders = self.binders()
            self.expect_arrow()
            return SInput(chan, binders, self.prim(), label)
        if self.at("!"):
            self.advance()
            label = None
            if self.tok.kind == "ident":
                label = self.advance().text
            return SOutput(chan, self.args(), label)
        self.error("expected '?' or '!' after a channel name")


def _groundish(s):
    return isinstance(s, (SGround, SDrop, SStop))


def _operand(s):
    if isinstance(s, SGround):
        return s.value
    if isinstance(s, SStop):
        return IntLit(0)
    return s


def _io(s):
    return isinstance(s, (SInput, SOutput, SChoice))


def parse_surface(source: str):
    """Parse ``.rho`` text into a surface program (no desugaring)."""
    return Parser(source).program()


def parse_proc(source: str, prelude=None) -> Proc:
    """Parse and desugar ``.rho`` text into a core process."""
    return desugar(parse_surface(source), prelude)
