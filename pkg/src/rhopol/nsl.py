"""
Parser for ``.nsl`` formula files.

    true   0   ~f   f & g   f | g   f or g   f => g
    drop(b)                     dereference of a name in b
    <a>(f1, ..., fn)            output on a name in a
    <a ? b> f                   input on a name in a, then f
    rec X. f                    greatest fixpoint
    forall n : a . f            (``forall n . f`` ranges over every name)
    f |> {x1, ..., xn} g        rely-guarantee with hidden names

Namespaces ``a``: ``@{ proc }``, ``@[ formula ]``, a bound name variable, or a
plain identifier standing for the free name of that spelling.  From loosest to
tightest: ``|>``, ``=>``, ``or``, ``|``, ``&``, prefix forms.
"""
from __future__ import annotations

from .nslogic import (
    NULL, TRUE, And, Disclosure, Dissemination, FormulaError, Forall, Gfp, Not, NameVar, PropVar,
    QuoteFormula, QuoteProc, Reception, RelyGuarantee, Sep, implies, name_formula, or_,
)
from .parser import ParseError, Parser
from .sugar import SBlock, SQuote, desugar
from .syntax import Drop, Quote, Var, canonical_name


class FormulaParser(Parser):
    def __init__(self, src):
        super().__init__(src)
        self.props = []
        self.name_vars = []

    def at_f(self, text):
        self.skip_nl()
        return self.at(text)

    def formula_file(self):
        f = self.formula()
        self.skip_nl()
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r} after formula")
        return f

    def formula(self):
        left = self.implication()
        if self.at_f("|") and self.peek().text == ">":
            self.advance()
            self.advance()
            hidden = self.hidden()
            return RelyGuarantee(left, hidden, self.formula())
        return left

    def hidden(self):
        self.expect("{")
        out = []
        while not self.at_f("}"):
            out.append(canonical_name(self.plain_name()))
            if not self.at_f("}"):
                self.expect(",")
        self.expect("}")
        return tuple(out)

    def plain_name(self):
        if self.at("@"):
            return self.name_from_surface(self.name())
        return Var(self.ident())

    def implication(self):
        left = self.disjunction()
        self.skip_nl()
        if self.tok.kind == "arrow":
            self.advance()
            return implies(left, self.implication())
        return left

    def disjunction(self):
        left = self.separation()
        while self.at_f("or"):
            self.advance()
            left = or_(left, self.separation())
        return left

    def separation(self):
        left = self.conjunction()
        while self.at_f("|") and self.peek().text != ">":
            self.advance()
            left = Sep(left, self.conjunction())
        return left

    def conjunction(self):
        left = self.unary()
        while self.at_f("&"):
            self.advance()
            left = And(left, self.unary())
        return left

    def unary(self):
        self.skip_nl()
        t = self.tok
        if self.at("~"):
            self.advance()
            return Not(self.unary())
        if t.kind == "ident" and t.text == "rec":
            self.advance()
            var = self.ident()
            self.expect(".")
            self.props.append(var)
            try:
                body = self.formula()
            finally:
                self.props.pop()
            try:
                return Gfp(var, body)
            except FormulaError as e:
                raise ParseError(str(e), t.line, t.col) from None
        if t.kind == "ident" and t.text == "forall":
            self.advance()
            var = self.ident()
            domain = QuoteFormula(TRUE)
            if self.at_f(":"):
                self.advance()
                domain = self.namespace()
            self.expect(".")
            self.name_vars.append(var)
            try:
                return Forall(var, domain, self.formula())
            finally:
                self.name_vars.pop()
        if self.at("<"):
            self.advance()
            ns = self.namespace()
            if self.at_f("?"):
                self.advance()
                b = self.ident()
                self.expect(">")
                self.name_vars.append(b)
                try:
                    return Reception(ns, b, self.unary())
                finally:
                    self.name_vars.pop()
            self.expect(">")
            self.expect("(")
            args = []
            while not self.at_f(")"):
                args.append(self.formula())
                if not self.at_f(")"):
                    self.expect(",")
            self.expect(")")
            return Dissemination(ns, tuple(args))
        return self.atom()

    def atom(self):
        t = self.tok
        if t.kind == "int" and t.text == "0":
            self.advance()
            return NULL
        if t.kind == "ident" and t.text == "true":
            self.advance()
            return TRUE
        if t.kind == "ident" and t.text == "drop":
            self.advance()
            self.expect("(")
            ns = self.namespace()
            self.expect(")")
            return Disclosure(ns)
        if self.at("("):
            self.advance()
            f = self.formula()
            self.skip_nl()
            self.expect(")")
            return f
        if t.kind == "ident":
            if t.text in self.props:
                self.advance()
                return PropVar(t.text)
            self.error(f"unbound propositional variable {t.text}")
        self.error(f"unexpected {t.text or 'end of input'!r} in formula")

    def namespace(self):
        self.skip_nl()
        if self.at("@"):
            if self.peek().text == "[":
                self.advance()
                self.advance()
                f = self.formula()
                self.skip_nl()
                self.expect("]")
                return QuoteFormula(f)
            return QuoteProc(Drop(self.name_from_surface(self.name())))
        ident = self.ident()
        if ident in self.name_vars:
            return NameVar(ident)
        return name_formula(Var(ident))

    def name_from_surface(self, s):
        proc = desugar(SBlock((s.proc,))) if isinstance(s, SQuote) else None
        return canonical_name(Quote(proc)) if proc is not None else Var(s.ident)


def parse_formula(text: str):
    """Parse ``.nsl`` text; non-monotone fixpoints and unbound variables are errors."""
    return FormulaParser(text).formula_file()
