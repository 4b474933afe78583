"""
Translation of a small JavaScript subset into rho-calculus surface text.

Supported statements::

    var x;                      var x = e;
    x += e;                     var x = def({ key: e, ... });

with expressions built from integer literals, identifiers and ``+``.  Every
statement is translated in continuation-passing style: it signals completion
on a continuation channel, and the program as a whole signals ``k``.

Variables live in cells.  The translator uses ``AckCell`` from the prelude, a
cell whose ``set`` message carries a channel signalled once the value is
stored; ``x += e`` continues only after that signal, so a later read cannot
overtake the pending write.
Identifiers that are not declared by the program are treated as parameters:
their value is the process ``*name`` of a free name of the same spelling, and
they must be listed explicitly.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .parser import parse_proc, parse_surface
from .prelude import MAX_MAP_KEYS


class JsError(Exception):
    def __init__(self, msg, line=0, col=0):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


class UnsupportedConstruct(JsError):
    pass


# ---------------------------------------------------------------- AST

@dataclass(frozen=True)
class NumLit:
    value: int


@dataclass(frozen=True)
class Ident:
    name: str
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class Add:
    left: "JsExpr"
    right: "JsExpr"


@dataclass(frozen=True)
class ArrowStub:
    """An arrow function; only its presence is recorded."""
    params: tuple
    line: int = 0
    col: int = 0


JsExpr = Union[NumLit, Ident, Add, ArrowStub]


@dataclass(frozen=True)
class VarDecl:
    name: str
    init: Optional[object] = None


@dataclass(frozen=True)
class PlusAssign:
    target: str
    amount: JsExpr


@dataclass(frozen=True)
class DefObject:
    entries: tuple      # (key, JsExpr)


@dataclass(frozen=True)
class Seq:
    first: object
    rest: object


JsAst = Union[VarDecl, PlusAssign, DefObject, Seq]


# ---------------------------------------------------------------- parsing

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<op>\+=|=>|[-+=;:,.(){}\[\]*/<>!?&|])
""", re.VERBOSE | re.DOTALL)

_UNSUPPORTED_CALLS = {"WeakMap", "Q", "Nat"}
_UNSUPPORTED_WORDS = {"return", "function", "if", "while", "for", "let", "const", "new", "this", "class"}


def _tokens(src):
    out = []
    pos = 0
    line, col = 1, 1
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise JsError(f"unexpected character {src[pos]!r}", line, col)
        text = m.group()
        if m.lastgroup not in ("ws", "comment"):
            out.append((m.lastgroup, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rindex("\n")
        else:
            col += len(text)
        pos = m.end()
    out.append(("eof", "", line, col))
    return out


class _JsParser:
    def __init__(self, src):
        self.toks = _tokens(src)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def at(self, text):
        return self.tok[1] == text and self.tok[0] != "num"

    def advance(self):
        t = self.tok
        self.i += 1
        return t

    def expect(self, text):
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok[1] or 'end of input'!r}")
        return self.advance()

    def error(self, msg, cls=JsError):
        raise cls(msg, self.tok[2], self.tok[3])

    def ident(self):
        if self.tok[0] != "ident":
            self.error(f"expected identifier, found {self.tok[1] or 'end of input'!r}")
        return self.advance()[1]

    def program(self):
        stmts = []
        while self.tok[0] != "eof":
            if self.at(";"):
                self.advance()
                continue
            stmts.append(self.statement())
        if not stmts:
            self.error("empty program")
        ast = stmts[-1]
        for s in reversed(stmts[:-1]):
            ast = Seq(s, ast)
        return ast

    def statement(self):
        t = self.tok
        if t[0] == "ident" and t[1] == "var":
            self.advance()
            name = self.ident()
            init = None
            if self.at("="):
                self.advance()
                init = self.initializer()
            self.end_statement()
            return VarDecl(name, init)
        if t[0] == "ident" and t[1] in _UNSUPPORTED_WORDS:
            self.error(f"unsupported construct: {t[1]}", UnsupportedConstruct)
        if t[0] == "ident" and t[1] == "def":
            obj = self.initializer()
            self.end_statement()
            return obj
        if t[0] == "ident":
            name = self.ident()
            if self.at("+="):
                self.advance()
                amount = self.expr()
                self.end_statement()
                return PlusAssign(name, amount)
            if self.at("="):
                where = self.tok
                self.advance()
                self.expr()
                raise UnsupportedConstruct("unsupported construct: plain assignment", where[2], where[3])
            if self.at("(") or self.at("."):
                self.error(f"unsupported construct: call of {name}", UnsupportedConstruct)
        self.error(f"unexpected {t[1] or 'end of input'!r}")

    def end_statement(self):
        if self.at(";"):
            self.advance()
        elif self.tok[0] != "eof" and not self.at("}"):
            self.error(f"expected ';', found {self.tok[1]!r}")

    def initializer(self):
        if self.tok[0] == "ident" and self.tok[1] == "def":
            self.advance()
            self.expect("(")
            self.expect("{")
            entries = []
            while not self.at("}"):
                key = self.ident()
                self.expect(":")
                entries.append((key, self.expr(allow_arrow=True)))
                if not self.at("}"):
                    self.expect(",")
            self.expect("}")
            self.expect(")")
            return DefObject(tuple(entries))
        return self.expr()

    def expr(self, allow_arrow=False):
        left = self.atom(allow_arrow)
        while self.at("+"):
            self.advance()
            left = Add(left, self.atom(False))
        if isinstance(left, Add) and any(isinstance(x, ArrowStub) for x in (left.left, left.right)):
            self.error("unsupported construct: arithmetic on a function", UnsupportedConstruct)
        return left

    def atom(self, allow_arrow):
        t = self.tok
        if t[0] == "num":
            self.advance()
            return NumLit(int(t[1]))
        if self.at("("):
            start = self.i
            params = self._arrow_params()
            if params is not None:
                return self._arrow(params, t, allow_arrow)
            self.i = start
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t[0] == "ident":
            if t[1] in _UNSUPPORTED_CALLS:
                self.error(f"unsupported construct: {t[1]}", UnsupportedConstruct)
            if t[1] in _UNSUPPORTED_WORDS or t[1] == "def":
                self.error(f"unsupported construct: {t[1]}", UnsupportedConstruct)
            self.advance()
            if self.at("=>"):
                return self._arrow((t[1],), t, allow_arrow)
            if self.at("(") or self.at("."):
                self.error(f"unsupported construct: call of {t[1]}", UnsupportedConstruct)
            return Ident(t[1], t[2], t[3])
        self.error(f"unexpected {t[1] or 'end of input'!r}")

    def _arrow_params(self):
        """Parameter list of an arrow function at ``(``, or None if this is not one."""
        self.advance()
        params = []
        while self.tok[0] == "ident":
            params.append(self.advance()[1])
            if self.at(","):
                self.advance()
        if self.at(")") and self.toks[self.i + 1][1] == "=>":
            self.advance()
            return tuple(params)
        return None

    def _arrow(self, params, t, allow_arrow):
        if not allow_arrow:
            raise UnsupportedConstruct("unsupported construct: arrow function outside def", t[2], t[3])
        self.expect("=>")
        # skip the body: a braced block or a single expression up to , or }
        depth = 0
        while self.tok[0] != "eof":
            if depth == 0 and (self.at(",") or self.at("}")):
                break
            if self.at("{") or self.at("("):
                depth += 1
            elif self.at("}") or self.at(")"):
                depth -= 1
            self.advance()
        return ArrowStub(params, t[2], t[3])


def parse_js(source: str) -> JsAst:
    """Parse the supported subset; anything else raises with a location."""
    return _JsParser(source).program()


# ---------------------------------------------------------------- translation

@dataclass
class Env:
    """Source identifiers in scope: declared variables (cells) and parameters."""
    cells: dict = field(default_factory=dict)
    params: frozenset = frozenset()
    counter: list = field(default_factory=lambda: [0])

    def fresh(self, base):
        self.counter[0] += 1
        return f"{base}_{self.counter[0]}"

    def declare(self, name):
        cells = dict(self.cells)
        cells[name] = name
        return Env(cells, self.params, self.counter)


@dataclass
class SurfaceProgram:
    text: str

    def surface(self):
        return parse_surface(self.text)

    def proc(self):
        return parse_proc(self.text)


def _expr(e, env, use):
    """Evaluate ``e`` (reading cells as needed) and continue with ``use(value_text)``."""
    if isinstance(e, NumLit):
        return use(str(e.value) if e.value else "00")
    if isinstance(e, Ident):
        if e.name in env.cells:
            r, t = env.fresh("r"), env.fresh("t")
            return f"new ({r}) {{ {env.cells[e.name]}!get({r}) | {r}?({t}) => {{ {use('*' + t)} }} }}"
        if e.name in env.params:
            return use("*" + e.name)
        raise JsError(f"unbound identifier {e.name}", e.line, e.col)
    if isinstance(e, Add):
        return _expr(e.left, env, lambda a: _expr(e.right, env, lambda b: use(f"({a} + {b})")))
    if isinstance(e, ArrowStub):
        return use('"<function>"')
    raise TypeError(e)


def _stmt(ast, env, k):
    first, rest = (ast.first, ast.rest) if isinstance(ast, Seq) else (ast, None)

    def cont(env2, k2):
        return _stmt(rest, env2, k2) if rest is not None else f"{k2}!()"

    if isinstance(first, Seq):
        # [[P; Q]](k) = new(k1){ [[P]](k1) | k1?() => [[Q]](k) }
        k1 = env.fresh("k")
        inner = env
        for name in _declared(first):
            inner = inner.declare(name)
        return f"new ({k1}) {{ {_stmt(first, env, k1)} | {k1}?() => {{ {cont(inner, k)} }} }}"

    if isinstance(first, VarDecl):
        inner = env.declare(first.name)
        x = inner.cells[first.name]
        if first.init is None:
            return f"Cell({x}, undefined) | {cont(inner, k)}"
        if _is_value(first.init, env):
            # nothing to evaluate: the completion handshake is an administrative step
            v = _expr(first.init, env, lambda v: v)
            return f"Cell({x}, {v}) | {cont(inner, k)}"
        k1 = env.fresh("k")
        if isinstance(first.init, DefObject):
            return f"new ({k1}) {{ {_map(x, first.init, env, k1)} | {k1}?() => {{ {cont(inner, k)} }} }}"
        # the initialiser is evaluated in the outer scope
        body = _expr(first.init, env, lambda v: f"Cell({x}, {v}) | {k1}!()")
        return f"new ({k1}) {{ {body} | {k1}?() => {{ {cont(inner, k)} }} }}"
    if isinstance(first, PlusAssign):
        if first.target not in env.cells:
            raise JsError(f"unbound identifier {first.target}")
        i = env.cells[first.target]
        r, v, k1 = env.fresh("r"), env.fresh("v"), env.fresh("k")
        # the cell acknowledges the store on k1, so later reads see the new value
        update = _expr(first.amount, env, lambda a: f"{i}!set((*{v} + {a}), {k1})")
        return (f"new ({r}, {k1}) {{ {i}!get({r}) | {r}?({v}) => {{ {update} }} "
                f"| {k1}?() => {{ {cont(env, k)} }} }}")
    if isinstance(first, DefObject):
        x = env.fresh("obj")
        k1 = env.fresh("k")
        return f"new ({x}, {k1}) {{ {_map(x, first, env, k1)} | {k1}?() => {{ {cont(env, k)} }} }}"
    raise TypeError(first)


def _declared(ast):
    if isinstance(ast, Seq):
        return _declared(ast.first) + _declared(ast.rest)
    return [ast.name] if isinstance(ast, VarDecl) else []


def _is_value(e, env):
    """Literals and parameters, and sums of them, need no cell reads."""
    if isinstance(e, NumLit):
        return True
    if isinstance(e, Ident):
        return e.name not in env.cells and e.name in env.params
    if isinstance(e, Add):
        return _is_value(e.left, env) and _is_value(e.right, env)
    return False


def _map(x, obj, env, k):
    n = len(obj.entries)
    if not 1 <= n <= MAX_MAP_KEYS:
        raise UnsupportedConstruct(f"unsupported construct: object with {n} keys (1 to {MAX_MAP_KEYS})")
    keys = [key for key, _ in obj.entries]

    def build(i, vals):
        if i == n:
            args = ", ".join(f'"{key}", {val}' for key, val in zip(keys, vals))
            return f"Map{n}({x}, {args}) | {k}!()"
        return _expr(obj.entries[i][1], env, lambda v: build(i + 1, vals + [v]))

    return build(0, [])


def _imports(ast):
    maps = set()

    def visit(a):
        if isinstance(a, Seq):
            visit(a.first)
            visit(a.rest)
        elif isinstance(a, DefObject):
            maps.add(len(a.entries))
        elif isinstance(a, VarDecl) and isinstance(a.init, DefObject):
            maps.add(len(a.init.entries))

    visit(ast)
    return ["AckCell as Cell"] + [f"Map{n}" for n in sorted(maps)]


def translate(ast: JsAst, env: Optional[Env] = None, k: str = "k") -> SurfaceProgram:
    """Continuation-passing translation; the program signals ``k!()`` when done."""
    env = env or Env()
    body = _stmt(ast, env, k)
    header = "// translated from JavaScript\nimport " + ", ".join(_imports(ast))
    return SurfaceProgram(f"{header}\n{body}\n")


def translate_source(source: str, params=(), k: str = "k") -> SurfaceProgram:
    return translate(parse_js(source), Env(params=frozenset(params)), k)
