"""
Surface language and its translation into the core calculus.

The surface adds recursive ``def``, ``new``, ``match``, labelled messages
(``x ! get( k )`` and ``x ? get( ret ) => P``), brace blocks and ``import``
of prelude definitions.  ``desugar`` removes all of it:

* ``def X(y...) => P`` applied to ``Q...`` becomes a lazily replicated server
  ``!_r( n?(y...) => P' )`` in parallel with ``n!(Q...)``, where ``n`` and
  ``r`` are generated names and ``P'`` sends on ``n`` wherever ``P`` calls ``X``.
* ``new(x...) P`` replaces each binder with a generated name.  Inside the
  scope of input binders the generated name also quotes those binders, so
  every run-time instance of the scope gets its own channel.
* a message label becomes a string in argument position 0; on the input side
  it becomes a pattern position that only accepts that string.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .syntax import (
    STOP, Add, Bind, Choice, Drop, Ground, Input, IntLit, Match, Output, Par, Proc,
    Quote, StrLit, Sub, Undefined, Var, canonical_name, canonicalize, free_vars, name_equiv, names,
    par, pretty, string_name, substitute,
)


class DesugarError(Exception):
    pass


# ---------------------------------------------------------------- surface AST

@dataclass(frozen=True)
class SIdent:
    ident: str


@dataclass(frozen=True)
class SQuote:
    proc: object


@dataclass(frozen=True)
class SPattern:
    name: object


@dataclass(frozen=True)
class SStop:
    pass


@dataclass(frozen=True)
class SGround:
    value: object            # IntLit | StrLit | Undefined | ('+'|'-', left, right)


@dataclass(frozen=True)
class SDrop:
    name: object


@dataclass(frozen=True)
class SOutput:
    chan: object
    args: tuple
    label: Optional[str] = None


@dataclass(frozen=True)
class SInput:
    chan: object
    binders: tuple           # str | SPattern
    body: object
    label: Optional[str] = None


@dataclass(frozen=True)
class SChoice:
    branches: tuple


@dataclass(frozen=True)
class SBlock:
    stmts: tuple


@dataclass(frozen=True)
class SDef:
    name: str
    params: tuple
    body: object
    applied: Optional[tuple] = None


@dataclass(frozen=True)
class SCall:
    name: str
    args: tuple


@dataclass(frozen=True)
class SNew:
    binders: tuple
    body: object


@dataclass(frozen=True)
class SMatch:
    branches: tuple


@dataclass(frozen=True)
class SImport:
    items: tuple             # (prelude name, local alias)


@dataclass(frozen=True)
class SCore:
    """An already-desugared core process embedded in a surface program."""
    proc: Proc


# ---------------------------------------------------------------- generated names

FRESH = "rho:fresh"
SCOPE = "rho:scope"
PROBE = "rho:probe"


def _marked(marker: str, args) -> Quote:
    return Quote(Output(string_name(marker), tuple(args)))


def fresh_name(tag: str, avoid: Proc) -> Quote:
    """First ``@(rho:fresh!(tag, k))`` not name-equivalent to a name of ``avoid``."""
    taken = names(avoid)
    k = 0
    while True:
        cand = _marked(FRESH, (Ground(StrLit(tag)), Ground(IntLit(k))))
        if not any(name_equiv(cand, t) for t in taken):
            return cand
        k += 1


def probe_name(k: int) -> Quote:
    """Observer channels used to pad a checking universe; never generated by desugaring."""
    return _marked(PROBE, (Ground(IntLit(k)),))


def _marker_of(n) -> Optional[str]:
    if isinstance(n, Quote) and isinstance(n.proc, Output):
        ch = n.proc.chan
        if isinstance(ch, Quote) and isinstance(ch.proc, Ground) and isinstance(ch.proc.value, StrLit):
            return ch.proc.value.value
    return None


def is_generated(n) -> bool:
    """True for names produced by ``new``/``def`` desugaring (and their marker channels)."""
    n = canonical_name(n)
    return _marker_of(n) in (FRESH, SCOPE) or n in (string_name(FRESH), string_name(SCOPE))


def is_probe(n) -> bool:
    return _marker_of(n) == PROBE


def digest(p: Proc) -> str:
    return hashlib.sha1(pretty(canonicalize(p)).encode()).hexdigest()[:10]


# ---------------------------------------------------------------- replication

def _fresh_ident(base: str, avoid: set) -> str:
    ident = base
    while ident in avoid:
        ident += "'"
    return ident


def duplicator(x) -> Proc:
    """``x?(y) => (x!(*y) | *y)``"""
    y = _fresh_ident("y", set(free_vars(x)))
    return Input(x, (Bind(y),), Par((Output(x, (Drop(Var(y)),)), Drop(Var(y)))))


def replicate_eager(p: Proc, x) -> Proc:
    """``x!(D(x) | P) | D(x)``: unfolds a copy of ``P`` on every round, unguarded."""
    d = duplicator(x)
    return Par((Output(x, (par(d, p),)), d))


def replicate_lazy(guarded: Proc, x) -> Proc:
    """``x!(u?(v) => (D(x) | P)) | D(x)``: one fresh copy per message consumed on ``u``."""
    if not isinstance(guarded, Input):
        raise DesugarError("lazy replication needs an input-guarded process")
    d = duplicator(x)
    bound = {b.ident for b in guarded.binders if isinstance(b, Bind)}
    if bound & free_vars(x):
        raise DesugarError("replication channel is captured by the guard's binders")
    body = par(d, guarded.body)
    return Par((Output(x, (Input(guarded.chan, guarded.binders, body),)), d))


def replicate_lazy_primed(guarded: Proc, x) -> Proc:
    """``replicate_lazy`` after its first, administrative unfolding: the guard is already live."""
    enc = replicate_lazy(guarded, x)
    copy = enc.components[0].args[0]
    return Par((Output(x, (copy,)), copy))


# ---------------------------------------------------------------- desugaring

@dataclass
class _Def:
    name: str
    params: tuple
    body: object
    scope: "_Scope"
    call: Optional[Quote] = None
    server: Optional[Proc] = None
    busy: bool = False


@dataclass
class _Scope:
    defs: dict = field(default_factory=dict)
    bound: tuple = ()             # lexically bound identifiers, outermost first
    parent: Optional["_Scope"] = None

    def lookup(self, name):
        s = self
        while s is not None:
            if name in s.defs:
                return s.defs[name]
            s = s.parent
        return None

    def child(self, bound=()):
        return _Scope({}, self.bound + tuple(bound), self)


_PLACEHOLDER = "§"


class Desugarer:
    def __init__(self, prelude=None):
        self._prelude = prelude

    def prelude(self):
        if self._prelude is None:
            from .prelude import prelude_defs
            self._prelude = prelude_defs()
        return self._prelude

    # -- names
    def name(self, n, scope):
        if isinstance(n, SIdent):
            return Var(n.ident)
        if isinstance(n, SQuote):
            return Quote(self.proc(n.proc, scope))
        raise DesugarError(f"bad name {n!r}")

    def operand(self, g, scope):
        if isinstance(g, tuple):
            op, left, right = g
            cls = Add if op == "+" else Sub
            return cls(self.operand(left, scope), self.operand(right, scope))
        if isinstance(g, SDrop):
            return Drop(self.name(g.name, scope))
        if isinstance(g, SGround):
            return self.operand(g.value, scope)
        if isinstance(g, SStop):
            return IntLit(0)
        return g

    # -- processes
    def proc(self, s, scope) -> Proc:
        if isinstance(s, SCore):
            return s.proc
        if isinstance(s, SStop):
            return STOP
        if isinstance(s, SGround):
            return Ground(self.operand(s.value, scope))
        if isinstance(s, SDrop):
            return Drop(self.name(s.name, scope))
        if isinstance(s, SOutput):
            args = tuple(self.proc(a, scope) for a in s.args)
            if s.label is not None:
                args = (Ground(StrLit(s.label)),) + args
            return Output(self.name(s.chan, scope), args)
        if isinstance(s, SInput):
            return self.input(s, scope)
        if isinstance(s, SChoice):
            return Choice(tuple(self.proc(b, scope) for b in s.branches))
        if isinstance(s, SMatch):
            branches = tuple(self.proc(b, scope) for b in s.branches)
            for b in branches:
                if not isinstance(b, Input):
                    raise DesugarError("match branches must be input-guarded")
            if len(branches) == 1:
                return branches[0]
            return Choice(branches)
        if isinstance(s, SBlock):
            return self.block(s.stmts, scope)
        if isinstance(s, SDef):
            return self.block((s,), scope)
        if isinstance(s, SCall):
            return self.call(s, scope)
        if isinstance(s, SNew):
            return self.new(s, scope)
        if isinstance(s, SImport):
            return self.block((s,), scope)
        raise DesugarError(f"cannot desugar {s!r}")

    def input(self, s, scope):
        chan = self.name(s.chan, scope)
        binders = []
        if s.label is not None:
            binders.append(Match(string_name(s.label)))
        bound = []
        for b in s.binders:
            if isinstance(b, SPattern):
                binders.append(Match(self.name(b.name, scope)))
            elif s.label is not None and b in scope.bound:
                # inside a labelled pattern an identifier already in scope is matched, not bound
                binders.append(Match(Var(b)))
            else:
                binders.append(Bind(b))
                bound.append(b)
        if len(set(bound)) != len(bound):
            raise DesugarError(f"duplicate binder in {bound}")
        body = self.proc(s.body, scope.child(bound))
        return Input(chan, tuple(binders), body)

    def block(self, stmts, scope):
        inner = _Scope({}, scope.bound, scope)
        for st in stmts:
            if isinstance(st, SDef):
                inner.defs[st.name] = _Def(st.name, st.params, st.body, inner)
            elif isinstance(st, SImport):
                lib = self.prelude()
                for src, alias in st.items:
                    if src not in lib:
                        raise DesugarError(f"unknown prelude definition {src}")
                    d = lib[src]
                    home = _Scope()
                    home.defs[alias] = _Def(alias, d.params, _rename_calls(d.body, d.name, alias), home)
                    inner.defs[alias] = home.defs[alias]
        out = []
        for st in stmts:
            if isinstance(st, SImport):
                continue
            if isinstance(st, SDef):
                if st.applied is not None:
                    out.append(self.call(SCall(st.name, st.applied), inner))
                continue
            out.append(self.proc(st, inner))
        return par(*out)

    def call(self, s, scope):
        d = scope.lookup(s.name)
        if d is None:
            raise DesugarError(f"unbound identifier {s.name}")
        if len(s.args) != len(d.params):
            raise DesugarError(
                f"{s.name} expects {len(d.params)} argument(s), got {len(s.args)}")
        args = tuple(self.proc(a, scope) for a in s.args)
        if d.busy:
            return Output(Var(_PLACEHOLDER + d.name), args)
        self._build(d)
        return par(d.server, Output(d.call, args))

    def _build(self, d):
        if d.server is not None:
            return
        d.busy = True
        try:
            scope = d.scope.child(d.params)
            body = self.proc(d.body, scope)
        finally:
            d.busy = False
        tag = f"{d.name}:{digest(body)}"
        d.call = fresh_name("def:" + tag, body)
        rep = fresh_name("rep:" + tag, body)
        body = substitute(body, {Var(_PLACEHOLDER + d.name): d.call})
        guard = Input(d.call, tuple(Bind(p) for p in d.params), body)
        d.server = replicate_lazy_primed(guard, rep)

    def new(self, s, scope):
        if len(set(s.binders)) != len(s.binders):
            raise DesugarError(f"duplicate binder in new{s.binders}")
        body = self.proc(s.body, _Scope({}, tuple(b for b in scope.bound if b not in s.binders), scope))
        tag = digest(body)
        env = [b for b in scope.bound if b not in s.binders]
        mapping = {}
        for ident in s.binders:
            base = fresh_name(f"new:{ident}:{tag}", body)
            if env:
                base = Quote(Output(string_name(SCOPE),
                                    (Drop(base),) + tuple(Drop(Var(e)) for e in env)))
            mapping[Var(ident)] = base
        return substitute(body, mapping)


def _rename_calls(s, old, new):
    if old == new:
        return s
    if isinstance(s, SCall):
        return SCall(new if s.name == old else s.name, tuple(_rename_calls(a, old, new) for a in s.args))
    if isinstance(s, (SBlock,)):
        return SBlock(tuple(_rename_calls(x, old, new) for x in s.stmts))
    if isinstance(s, SNew):
        return SNew(s.binders, _rename_calls(s.body, old, new))
    if isinstance(s, SMatch):
        return SMatch(tuple(_rename_calls(x, old, new) for x in s.branches))
    if isinstance(s, SChoice):
        return SChoice(tuple(_rename_calls(x, old, new) for x in s.branches))
    if isinstance(s, SInput):
        return SInput(s.chan, s.binders, _rename_calls(s.body, old, new), s.label)
    if isinstance(s, SOutput):
        return SOutput(s.chan, tuple(_rename_calls(a, old, new) for a in s.args), s.label)
    if isinstance(s, SDef):
        return SDef(s.name, s.params, _rename_calls(s.body, old, new),
                    None if s.applied is None else tuple(_rename_calls(a, old, new) for a in s.applied))
    return s


def desugar(s, prelude=None) -> Proc:
    """Translate a surface program into a core process (not canonicalised)."""
    return Desugarer(prelude).proc(s, _Scope())


def new_block(binders: Sequence[str], body: Proc) -> Proc:
    """Desugar ``new(binders){ body }`` for an already-core body with free variables ``binders``."""
    return desugar(SNew(tuple(binders), SCore(body)))


__all__ = [
    "DesugarError", "desugar", "fresh_name", "replicate_eager", "replicate_lazy",
    "replicate_lazy_primed",
    "duplicator", "is_generated", "is_probe", "probe_name", "new_block",
    "SIdent", "SQuote", "SPattern", "SStop", "SGround", "SDrop", "SOutput", "SInput",
    "SChoice", "SBlock", "SDef", "SCall", "SNew", "SMatch", "SImport", "SCore",
]
