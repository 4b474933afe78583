"""
Process and name terms for the rho-calculus.

    canonicalize(p) -> Proc        nameless, sorted normal form deciding P == Q
    struct_congruent(p, q)         canonicalize(p) == canonicalize(q)
    name_equiv(x, y)               equivalence of names through their quoted processes
    free_names(p)                  names occurring free, modulo name equivalence
    substitute(p, mapping)         capture-avoiding substitution, semantic on *x
    pretty(p)                      surface syntax accepted by rhopol.parser

Names are either quotes of processes (``@P``) or variables.  Variables stand
for binder occurrences and for free, global identifiers such as ``slot``.
Canonical forms rename every bound variable to ``$k`` where ``k`` is its
binding depth, so alpha-equivalent terms are syntactically identical.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from functools import lru_cache
from typing import Iterable, Mapping, Union


def _cached_hash(self):
    try:
        return self.__dict__["_h"]
    except KeyError:
        h = hash((type(self).__name__,) + tuple(getattr(self, f.name) for f in fields(self)))
        object.__setattr__(self, "_h", h)
        return h


def term(cls):
    """Immutable term node with a memoised structural hash."""
    cls = dataclass(frozen=True)(cls)
    cls.__hash__ = _cached_hash
    return cls


# ---------------------------------------------------------------- ground data

@term
class IntLit:
    value: int


@term
class StrLit:
    value: str


@term
class Undefined:
    pass


@term
class Add:
    left: object
    right: object


@term
class Sub:
    left: object
    right: object


GroundTerm = Union[IntLit, StrLit, Undefined, Add, Sub]


# ---------------------------------------------------------------- names

@term
class Var:
    ident: str


@term
class Quote:
    proc: "Proc"


Name = Union[Var, Quote]


@term
class Bind:
    """Binding position of an input."""
    ident: str


@term
class Match:
    """Pattern position of an input: only a name-equivalent argument is accepted."""
    name: Name


Binder = Union[Bind, Match]


# ---------------------------------------------------------------- processes

class Proc:
    __slots__ = ()

    def __str__(self):
        return pretty(self)


@term
class Stop(Proc):
    pass


@term
class Ground(Proc):
    value: GroundTerm


@term
class Drop(Proc):
    name: Name


@term
class Output(Proc):
    chan: Name
    args: tuple


@term
class Input(Proc):
    chan: Name
    binders: tuple
    body: Proc

    @property
    def arity(self):
        return len(self.binders)


@term
class Choice(Proc):
    branches: tuple


@term
class Par(Proc):
    components: tuple


STOP = Stop()


def par(*procs: Proc) -> Proc:
    """Parallel composition, flattened and with 0 removed (not sorted)."""
    out = []
    for p in procs:
        if isinstance(p, Par):
            out.extend(p.components)
        elif not isinstance(p, Stop):
            out.append(p)
    if not out:
        return STOP
    if len(out) == 1:
        return out[0]
    return Par(tuple(out))


def components(p: Proc) -> tuple:
    """Top-level parallel components of ``p`` (empty for 0)."""
    if isinstance(p, Par):
        return p.components
    if isinstance(p, Stop):
        return ()
    return (p,)


def quote(p: Proc) -> Name:
    return Quote(p)


def string_name(s: str) -> Name:
    return Quote(Ground(StrLit(s)))


def is_io(p: Proc) -> bool:
    return isinstance(p, (Input, Output))


# ---------------------------------------------------------------- canonical forms

def _canon_name(n, env, depth):
    if isinstance(n, Var):
        return Var(env.get(n.ident, n.ident))
    q = _canon(n.proc, env, depth)
    if isinstance(q, Drop):
        # @*x is the name x
        return q.name
    return Quote(q)


def _canon_ground(g, env, depth):
    if isinstance(g, (Add, Sub)):
        return type(g)(_canon_operand(g.left, env, depth), _canon_operand(g.right, env, depth))
    return g


def _canon_operand(o, env, depth):
    if isinstance(o, Drop):
        return Drop(_canon_name(o.name, env, depth))
    return _canon_ground(o, env, depth)


def _canon(p, env, depth):
    if isinstance(p, Stop):
        return STOP
    if isinstance(p, Ground):
        return Ground(_canon_ground(p.value, env, depth))
    if isinstance(p, Drop):
        return Drop(_canon_name(p.name, env, depth))
    if isinstance(p, Output):
        return Output(_canon_name(p.chan, env, depth),
                      tuple(_canon(a, env, depth) for a in p.args))
    if isinstance(p, Input):
        chan = _canon_name(p.chan, env, depth)
        inner = dict(env)
        binders = []
        d = depth
        for b in p.binders:
            if isinstance(b, Bind):
                ident = f"${d}"
                inner[b.ident] = ident
                binders.append(Bind(ident))
                d += 1
            else:
                binders.append(Match(_canon_name(b.name, env, depth)))
        return Input(chan, tuple(binders), _canon(p.body, inner, d))
    if isinstance(p, Choice):
        branches = sorted((_canon(b, env, depth) for b in p.branches), key=sort_key)
        if len(branches) == 1:
            return branches[0]
        return Choice(tuple(branches))
    if isinstance(p, Par):
        parts = []
        for c in p.components:
            parts.extend(components(_canon(c, env, depth)))
        if not parts:
            return STOP
        if len(parts) == 1:
            return parts[0]
        return Par(tuple(sorted(parts, key=sort_key)))
    raise TypeError(f"not a process: {p!r}")


@lru_cache(maxsize=1 << 16)
def canonicalize(p: Proc) -> Proc:
    """Normal form modulo alpha-renaming and the commutative monoid laws of ``|``."""
    return _canon(p, {}, 0)


def canonical_name(n: Name) -> Name:
    return _canon_name(n, {}, 0)


def struct_congruent(p: Proc, q: Proc) -> bool:
    return canonicalize(p) == canonicalize(q)


def name_equiv(x: Name, y: Name) -> bool:
    return canonical_name(x) == canonical_name(y)


# Total order on canonical forms: constructor tag first, then children.

def _name_key(n):
    if isinstance(n, Var):
        return (0, n.ident)
    return (1, sort_key(n.proc))


def _ground_key(g):
    if isinstance(g, IntLit):
        return (0, g.value)
    if isinstance(g, StrLit):
        return (1, g.value)
    if isinstance(g, Undefined):
        return (2,)
    if isinstance(g, Drop):
        return (9, _name_key(g.name))
    tag = 3 if isinstance(g, Add) else 4
    return (tag, _ground_key(g.left), _ground_key(g.right))


def _binder_key(b):
    if isinstance(b, Bind):
        return (0, b.ident)
    return (1, _name_key(b.name))


@lru_cache(maxsize=1 << 17)
def sort_key(p: Proc) -> tuple:
    if isinstance(p, Stop):
        return (0,)
    if isinstance(p, Ground):
        return (1, _ground_key(p.value))
    if isinstance(p, Drop):
        return (2, _name_key(p.name))
    if isinstance(p, Output):
        return (3, _name_key(p.chan), len(p.args), tuple(sort_key(a) for a in p.args))
    if isinstance(p, Input):
        return (4, _name_key(p.chan), tuple(_binder_key(b) for b in p.binders), sort_key(p.body))
    if isinstance(p, Choice):
        return (5, tuple(sort_key(b) for b in p.branches))
    return (6, tuple(sort_key(c) for c in p.components))


# ---------------------------------------------------------------- variables and names

def free_vars(p) -> frozenset:
    """Identifiers of variables occurring free in ``p`` (a process, name or ground term)."""
    if isinstance(p, Var):
        return frozenset((p.ident,))
    if isinstance(p, Quote):
        return free_vars(p.proc)
    if isinstance(p, (Stop, IntLit, StrLit, Undefined)):
        return frozenset()
    if isinstance(p, Ground):
        return free_vars(p.value)
    if isinstance(p, (Add, Sub)):
        return free_vars(p.left) | free_vars(p.right)
    if isinstance(p, Drop):
        return free_vars(p.name)
    if isinstance(p, Output):
        out = set(free_vars(p.chan))
        for a in p.args:
            out |= free_vars(a)
        return frozenset(out)
    if isinstance(p, Input):
        out = set(free_vars(p.chan))
        bound = set()
        for b in p.binders:
            if isinstance(b, Bind):
                bound.add(b.ident)
            else:
                out |= free_vars(b.name)
        return frozenset(out | (free_vars(p.body) - bound))
    if isinstance(p, (Choice, Par)):
        out = set()
        for c in (p.branches if isinstance(p, Choice) else p.components):
            out |= free_vars(c)
        return frozenset(out)
    raise TypeError(p)


def _fn(p):
    if isinstance(p, (Stop, Ground)):
        out = set()
        if isinstance(p, Ground):
            for o in _operands(p.value):
                out.add(canonical_name(o.name))
        return out
    if isinstance(p, Drop):
        return {canonical_name(p.name)}
    if isinstance(p, Output):
        out = {canonical_name(p.chan)}
        for a in p.args:
            out |= _fn(a)
        return out
    if isinstance(p, Input):
        out = {canonical_name(p.chan)}
        bound = set()
        for b in p.binders:
            if isinstance(b, Bind):
                bound.add(b.ident)
            else:
                out.add(canonical_name(b.name))
        # a name mentioning a binder is not free, whichever way it is quoted
        out |= {n for n in _fn(p.body) if not (free_vars(n) & bound)}
        return out
    if isinstance(p, (Choice, Par)):
        out = set()
        for c in (p.branches if isinstance(p, Choice) else p.components):
            out |= _fn(c)
        return out
    raise TypeError(p)


def _operands(g):
    if isinstance(g, Drop):
        yield g
    elif isinstance(g, (Add, Sub)):
        yield from _operands(g.left)
        yield from _operands(g.right)


def free_names(p: Proc) -> frozenset:
    """Free names of ``p`` as canonical names, so set equality is modulo name equivalence."""
    return frozenset(_fn(p))


def names(p) -> frozenset:
    """Every name occurring in ``p``, bound or free, including inside quotes (canonical)."""
    out = set()

    def visit_name(n):
        out.add(canonical_name(n))
        if isinstance(n, Quote):
            visit(n.proc)

    def visit(q):
        if isinstance(q, Drop):
            visit_name(q.name)
        elif isinstance(q, Ground):
            for o in _operands(q.value):
                visit_name(o.name)
        elif isinstance(q, Output):
            visit_name(q.chan)
            for a in q.args:
                visit(a)
        elif isinstance(q, Input):
            visit_name(q.chan)
            for b in q.binders:
                visit_name(Var(b.ident) if isinstance(b, Bind) else b.name)
            visit(q.body)
        elif isinstance(q, (Choice, Par)):
            for c in (q.branches if isinstance(q, Choice) else q.components):
                visit(c)

    if isinstance(p, (Var, Quote)):
        visit_name(p)
    else:
        visit(p)
    return frozenset(out)


# ---------------------------------------------------------------- substitution

class _Subst:
    def __init__(self, mapping):
        self.pairs = [(canonical_name(k), v) for k, v in mapping.items()]
        self.vars_only = all(isinstance(k, Var) for k, _ in self.pairs)
        fv = set()
        for _, v in self.pairs:
            fv |= free_vars(v)
        self.value_vars = fv
        self.counter = 0

    def without(self, idents):
        clone = object.__new__(_Subst)
        clone.pairs = [(k, v) for k, v in self.pairs
                       if not (isinstance(k, Var) and k.ident in idents)]
        clone.vars_only = self.vars_only
        clone.value_vars = self.value_vars
        clone.counter = self.counter
        return clone

    def lookup(self, n):
        if not self.pairs:
            return None
        if self.vars_only:
            if isinstance(n, Quote) and isinstance(n.proc, (Drop, Par)):
                n = canonical_name(n)   # @*x is x
            if isinstance(n, Var):
                for k, v in self.pairs:
                    if k.ident == n.ident:
                        return v
            return None
        c = canonical_name(n)
        for k, v in self.pairs:
            if k == c:
                return v
        return None

    def name(self, n):
        v = self.lookup(n)
        if v is not None:
            return v
        if isinstance(n, Quote) and self.pairs:
            return Quote(self.proc(n.proc))
        return n

    def operand(self, o):
        if isinstance(o, Drop):
            r = self.drop(o)
            return r.value if isinstance(r, Ground) else (r if isinstance(r, Drop) else Drop(Quote(r)))
        if isinstance(o, (Add, Sub)):
            return type(o)(self.operand(o.left), self.operand(o.right))
        return o

    def drop(self, p):
        v = self.lookup(p.name)
        if v is None:
            return Drop(self.name(p.name))
        if isinstance(v, Quote):
            return v.proc
        return Drop(v)

    def proc(self, p):
        if not self.pairs or isinstance(p, Stop):
            return p
        if isinstance(p, Ground):
            return Ground(self.operand(p.value))
        if isinstance(p, Drop):
            return self.drop(p)
        if isinstance(p, Output):
            return Output(self.name(p.chan), tuple(self.proc(a) for a in p.args))
        if isinstance(p, Input):
            chan = self.name(p.chan)
            bound = {b.ident for b in p.binders if isinstance(b, Bind)}
            inner = self.without(bound)
            body = p.body
            binders = []
            for b in p.binders:
                if isinstance(b, Bind):
                    if b.ident in inner.value_vars:
                        fresh = self._fresh(b.ident, body)
                        body = substitute(body, {Var(b.ident): Var(fresh)})
                        b = Bind(fresh)
                    binders.append(b)
                else:
                    binders.append(Match(self.name(b.name)))
            return Input(chan, tuple(binders), inner.proc(body))
        if isinstance(p, Choice):
            return Choice(tuple(self.proc(b) for b in p.branches))
        if isinstance(p, Par):
            return Par(tuple(self.proc(c) for c in p.components))
        raise TypeError(p)

    def _fresh(self, ident, body):
        taken = self.value_vars | free_vars(body)
        while True:
            self.counter += 1
            cand = f"{ident}'{self.counter}"
            if cand not in taken:
                return cand


def substitute(p: Proc, mapping: Mapping[Name, Name]) -> Proc:
    """Apply ``{value/key}`` for each pair; ``*x`` with ``x`` a key becomes the quoted process."""
    return _Subst(mapping).proc(p)


# ---------------------------------------------------------------- ground arithmetic

def eval_ground(g):
    if isinstance(g, (Add, Sub)):
        left, right = eval_ground(g.left), eval_ground(g.right)
        if isinstance(left, IntLit) and isinstance(right, IntLit):
            if isinstance(g, Add):
                return IntLit(left.value + right.value)
            return IntLit(left.value - right.value)
        return type(g)(left, right)
    return g


def evaluate(p: Proc) -> Proc:
    """Fold integer arithmetic at the top of a payload."""
    if isinstance(p, Ground):
        return Ground(eval_ground(p.value))
    return p


# ---------------------------------------------------------------- pretty printing

def pretty_name(n: Name) -> str:
    if isinstance(n, Var):
        return n.ident
    p = n.proc
    if isinstance(p, (Stop, Ground)):
        return "@" + pretty(p)
    return "@{ " + pretty(p) + " }"


def _pretty_ground(g):
    if isinstance(g, IntLit):
        # a bare 0 is the stopped process
        return "00" if g.value == 0 else str(g.value)
    if isinstance(g, StrLit):
        return json.dumps(g.value)
    if isinstance(g, Undefined):
        return "undefined"
    if isinstance(g, Drop):
        return "*" + pretty_name(g.name)
    op = "+" if isinstance(g, Add) else "-"
    return f"({_pretty_ground(g.left)} {op} {_pretty_ground(g.right)})"


def _pretty_binder(b):
    if isinstance(b, Bind):
        return b.ident
    return "=" + pretty_name(b.name)


def _pretty_body(p):
    if isinstance(p, (Par, Choice)):
        return "{ " + pretty(p) + " }"
    return pretty(p)


def pretty(p: Proc) -> str:
    if isinstance(p, Stop):
        return "0"
    if isinstance(p, Ground):
        return _pretty_ground(p.value)
    if isinstance(p, Drop):
        return "*" + pretty_name(p.name)
    if isinstance(p, Output):
        return f"{pretty_name(p.chan)}!({', '.join(pretty(a) for a in p.args)})"
    if isinstance(p, Input):
        bs = ", ".join(_pretty_binder(b) for b in p.binders)
        return f"{pretty_name(p.chan)}?({bs}) => {_pretty_body(p.body)}"
    if isinstance(p, Choice):
        return " + ".join(pretty(b) for b in p.branches)
    if isinstance(p, Par):
        return " | ".join(pretty(c) for c in p.components)
    raise TypeError(p)


def size(p) -> int:
    """Number of constructors in ``p`` (names and quoted processes included)."""
    if isinstance(p, Var):
        return 1
    if isinstance(p, Quote):
        return 1 + size(p.proc)
    if isinstance(p, (Stop, Ground)):
        return 1
    if isinstance(p, Drop):
        return 1 + size(p.name)
    if isinstance(p, Output):
        return 1 + size(p.chan) + sum(size(a) for a in p.args)
    if isinstance(p, Input):
        return 1 + size(p.chan) + len(p.binders) + size(p.body)
    if isinstance(p, Choice):
        return 1 + sum(size(b) for b in p.branches)
    return 1 + sum(size(c) for c in p.components)


def subterms(p: Proc) -> Iterable[Proc]:
    yield p
    if isinstance(p, Input):
        yield from subterms(p.body)
    elif isinstance(p, Output):
        for a in p.args:
            yield from subterms(a)
    elif isinstance(p, (Choice, Par)):
        for c in (p.branches if isinstance(p, Choice) else p.components):
            yield from subterms(c)
