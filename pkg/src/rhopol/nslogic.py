"""
Namespace logic: formulas over processes and names, a bounded three-valued
checker, and the access-policy formulas built from them.

Verdicts are Kleene truth values.  ``Unknown`` is returned only when an
exploration bound cut a computation short; ``Holds`` and ``Fails`` are
sound whatever the bounds.

Reading of the modalities used here:

* ``<a ? b> f`` is a weak action modality.  It holds of ``P`` when ``P`` can
  reach, by internal steps, a state ``Q | R`` where ``Q`` is an input (or a
  choice branch) on a channel of ``a`` and, for every name ``c`` of the
  universe there is an instantiation ``z`` of the binders with
  ``R | Q'{z/y}`` satisfying ``f{c/b}``.
* ``<a>(f1, ..., fn)`` and ``drop(b)`` are strict: the process itself must be
  the output or the dereference.
* namespace denotations range over the finite universe of the context.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from .reduction import explore
from .sugar import fresh_name, is_generated, probe_name
from .syntax import (
    STOP, Bind, Choice, Drop, Ground, Input, Output, Par, Proc, Quote, Var, free_vars, canonical_name, canonicalize,
    components, free_names, name_equiv, par, pretty, pretty_name, substitute,
)

FAILS, UNKNOWN, HOLDS = 0, 1, 2
VERDICT_NAMES = {FAILS: "Fails", UNKNOWN: "Unknown", HOLDS: "Holds"}


class FormulaError(Exception):
    pass


# ---------------------------------------------------------------- formulas

@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class Null(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Sep(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Disclosure(Formula):
    name: "NameFormula"


@dataclass(frozen=True)
class Dissemination(Formula):
    chan: "NameFormula"
    args: tuple


@dataclass(frozen=True)
class Reception(Formula):
    chan: "NameFormula"
    binder: str
    body: Formula


@dataclass(frozen=True)
class Gfp(Formula):
    var: str
    body: Formula

    def __post_init__(self):
        if not _positive(self.body, self.var, True):
            raise FormulaError(f"rec {self.var}: variable occurs under an odd number of negations")


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    domain: "NameFormula"
    body: Formula


@dataclass(frozen=True)
class RelyGuarantee(Formula):
    hypothesis: Formula
    hidden: tuple
    conclusion: Formula


@dataclass(frozen=True)
class PropVar(Formula):
    var: str


@dataclass(frozen=True)
class QuoteFormula:
    formula: Formula


@dataclass(frozen=True)
class QuoteProc:
    proc: Proc


@dataclass(frozen=True)
class NameVar:
    var: str


NameFormula = (QuoteFormula, QuoteProc, NameVar)
TRUE = TrueF()
NULL = Null()


def name_formula(x) -> QuoteProc:
    """The singleton namespace of name ``x``."""
    return QuoteProc(Drop(x))


def implies(f, g):
    return Not(And(f, Not(g)))


def or_(f, g):
    return Not(And(Not(f), Not(g)))


def _positive(f, var, pos):
    """Every free occurrence of ``var`` in ``f`` has polarity ``pos``."""
    if isinstance(f, PropVar):
        return f.var != var or pos
    if isinstance(f, Not):
        return _positive(f.body, var, not pos)
    if isinstance(f, (And, Sep)):
        return _positive(f.left, var, pos) and _positive(f.right, var, pos)
    if isinstance(f, Disclosure):
        return _positive_name(f.name, var, pos)
    if isinstance(f, Dissemination):
        return _positive_name(f.chan, var, pos) and all(_positive(a, var, pos) for a in f.args)
    if isinstance(f, Reception):
        return _positive_name(f.chan, var, pos) and _positive(f.body, var, pos)
    if isinstance(f, Gfp):
        return f.var == var or _positive(f.body, var, pos)
    if isinstance(f, Forall):
        # the domain is used as a guard, an implicit negation
        return _positive_name(f.domain, var, not pos) and _positive(f.body, var, pos)
    if isinstance(f, RelyGuarantee):
        return _positive(f.hypothesis, var, not pos) and _positive(f.conclusion, var, pos)
    return True


def _positive_name(a, var, pos):
    if isinstance(a, QuoteFormula):
        return _positive(a.formula, var, pos)
    return True


def pretty_formula(f) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, Null):
        return "0"
    if isinstance(f, Not):
        return "~" + _atomic(f.body)
    if isinstance(f, And):
        return f"{_atomic(f.left)} & {_atomic(f.right)}"
    if isinstance(f, Sep):
        return f"{_atomic(f.left)} | {_atomic(f.right)}"
    if isinstance(f, Disclosure):
        return f"drop({pretty_nameform(f.name)})"
    if isinstance(f, Dissemination):
        return f"<{pretty_nameform(f.chan)}>({', '.join(pretty_formula(a) for a in f.args)})"
    if isinstance(f, Reception):
        return f"<{pretty_nameform(f.chan)} ? {f.binder}> {_atomic(f.body)}"
    if isinstance(f, Gfp):
        return f"rec {f.var}. {pretty_formula(f.body)}"
    if isinstance(f, Forall):
        return f"forall {f.var} : {pretty_nameform(f.domain)} . {pretty_formula(f.body)}"
    if isinstance(f, RelyGuarantee):
        hidden = ", ".join(pretty_name(x) for x in f.hidden)
        return f"{_atomic(f.hypothesis)} |> {{{hidden}}} {_atomic(f.conclusion)}"
    if isinstance(f, PropVar):
        return f.var
    raise TypeError(f)


def _atomic(f):
    s = pretty_formula(f)
    if isinstance(f, (TrueF, Null, Not, Disclosure, Dissemination, PropVar)):
        return s
    return f"({s})"


def pretty_nameform(a) -> str:
    if isinstance(a, QuoteFormula):
        return f"@[{pretty_formula(a.formula)}]"
    if isinstance(a, NameVar):
        return a.var
    p = canonicalize(a.proc)
    if isinstance(p, Drop):
        return pretty_name(p.name)
    return "@{ " + pretty(p) + " }"


def is_separation_free(f) -> bool:
    if isinstance(f, (Sep, RelyGuarantee)):
        return False
    kids = []
    if isinstance(f, Not):
        kids = [f.body]
    elif isinstance(f, And):
        kids = [f.left, f.right]
    elif isinstance(f, Dissemination):
        kids = list(f.args)
    elif isinstance(f, (Reception, Gfp, Forall)):
        kids = [f.body]
    return all(is_separation_free(k) for k in kids)


# ---------------------------------------------------------------- policy presets

def sole_access(slot) -> Formula:
    """Inputs only ever on ``slot``, and always available on it again after one."""
    return firewall(name_formula(slot))


def no_access(slot) -> Formula:
    """Never an input on ``slot``, after any internal step or any received message."""
    return Gfp("X", And(Not(Reception(name_formula(slot), "b", TRUE)),
                        Not(Reception(QuoteFormula(TRUE), "b", Not(PropVar("X"))))))


def complement(a):
    if isinstance(a, QuoteFormula):
        return QuoteFormula(Not(a.formula))
    # exact for variables and for quotes of dereferences
    return QuoteFormula(Not(Disclosure(a)))


def firewall(ns) -> Formula:
    """``rec X. <ns ? b> X & ~<~ns ? b> true``"""
    return Gfp("X", And(Reception(ns, "b", PropVar("X")),
                        Not(Reception(complement(ns), "b", TRUE))))


def firewall_once(ns) -> Formula:
    """``<ns ? b> true & ~<~ns ? b> true``"""
    return And(Reception(ns, "b", TRUE), Not(Reception(complement(ns), "b", TRUE)))


# ---------------------------------------------------------------- context

@dataclass
class CheckContext:
    universe: tuple = ()
    depth: int = 32
    max_states: int = 5000
    env_suite: tuple = ()
    valuation: dict = field(default_factory=dict)

    def __post_init__(self):
        seen = []
        for x in self.universe:
            c = canonical_name(x)
            if c not in seen:
                seen.append(c)
        self.universe = tuple(seen)


def default_universe(*procs, extra: int = 2) -> tuple:
    """Free names of the subjects (generated private names excluded) plus ``extra`` probes."""
    found = set()
    for p in procs:
        found |= {n for n in free_names(p) if not is_generated(n)}
    ordered = sorted(found, key=lambda n: pretty_name(n))
    return tuple(ordered) + tuple(probe_name(k) for k in range(extra))


def default_env_suite(universe) -> tuple:
    """Small environments: 0 and single prefixes on universe names."""
    out = [STOP]
    for u in universe:
        out.append(Output(u, (STOP,)))
        out.append(Input(u, (Bind("y"),), STOP))
        out.append(Input(u, (Bind("y"),), Output(Var("y"), (STOP,))))
    return tuple(out)


@dataclass
class CheckResult:
    verdict: str
    reason: str = ""
    witness: Optional[Proc] = None
    truncated: bool = False   # some exploration hit a bound

    @property
    def code(self):
        return {"Holds": 0, "Fails": 1, "Unknown": 2}[self.verdict]

    def as_record(self):
        return {"verdict": self.verdict, "reason": self.reason, "truncated": self.truncated,
                "witness": None if self.witness is None else pretty(self.witness)}


# ---------------------------------------------------------------- checking

def _reception_fragment(f) -> bool:
    """Formulas that observe a process only through its inputs."""
    if isinstance(f, (TrueF, PropVar)):
        return True
    if isinstance(f, Not):
        return _reception_fragment(f.body)
    if isinstance(f, And):
        return _reception_fragment(f.left) and _reception_fragment(f.right)
    if isinstance(f, (Reception, Gfp, Forall)):
        return _reception_fragment(f.body)
    return False


def _input_shapes(p, out):
    """(channel, arity) of every input anywhere in ``p``, quotes and payloads included."""
    if isinstance(p, Input):
        out.add((p.chan, len(p.binders)))
        _name_shapes(p.chan, out)
        for b in p.binders:
            if not isinstance(b, Bind):
                _name_shapes(b.name, out)
        _input_shapes(p.body, out)
    elif isinstance(p, Output):
        _name_shapes(p.chan, out)
        for a in p.args:
            _input_shapes(a, out)
    elif isinstance(p, Drop):
        _name_shapes(p.name, out)
    elif isinstance(p, (Choice, Par)):
        for c in (p.branches if isinstance(p, Choice) else p.components):
            _input_shapes(c, out)


def _name_shapes(n, out):
    if isinstance(n, Quote):
        _input_shapes(n.proc, out)


def _open(n) -> bool:
    """Whether a channel mentions a bound variable and so may become any name."""
    return isinstance(n, Var) and n.ident.startswith("$") or (
        isinstance(n, Quote) and any(v.startswith("$") for v in free_vars(n)))


def _may_become(pat, x) -> bool:
    """Whether instantiating the bound variables (``$k``) of name ``pat`` can yield ``x``."""
    if isinstance(pat, Var):
        return pat.ident.startswith("$") or pat == x
    return isinstance(x, Quote) and _proc_may_become(pat.proc, x.proc)


def _proc_may_become(p, q) -> bool:
    if isinstance(p, Drop) and isinstance(p.name, Var) and p.name.ident.startswith("$"):
        return True
    if isinstance(p, (Par, Choice, Input)) or isinstance(q, (Par, Choice)):
        return True
    if type(p) is not type(q):
        return False
    if isinstance(p, Drop):
        return _may_become(p.name, q.name)
    if isinstance(p, Output):
        return (len(p.args) == len(q.args) and _may_become(p.chan, q.chan)
                and all(_proc_may_become(a, b) for a, b in zip(p.args, q.args)))
    if isinstance(p, Ground):
        return p == q or bool(free_vars(p))
    return p == q


def collect_garbage(p: Proc, universe=()) -> Proc:
    """Drop top-level outputs that no input can ever consume.

    An input whose channel mentions a bound variable may be instantiated to
    any name and so keeps every output of its arity alive.
    """
    comps = components(p)
    if not any(isinstance(c, Output) for c in comps):
        return p
    shapes = set()
    _input_shapes(p, shapes)
    for u in universe:
        _input_shapes(quoted_process(u), shapes)
    wild = [(c, k) for c, k in shapes if _open(c)]
    live = {(c, k) for c, k in shapes}

    def alive(o):
        k = len(o.args)
        return (o.chan, k) in live or any(k == j and _may_become(c, o.chan) for c, j in wild)

    kept = [c for c in comps if not isinstance(c, Output) or alive(c)]
    if len(kept) == len(comps):
        return p
    return canonicalize(par(*kept))


def quoted_process(x) -> Proc:
    """The process a name quotes; a variable ``x`` is ``@*x``."""
    x = canonical_name(x)
    return x.proc if isinstance(x, Quote) else Drop(x)


class Checker:
    def __init__(self, ctx: CheckContext):
        self.ctx = ctx
        self.notes = []
        self._memo = {}
        # set while discovering fixpoint states: existentials try every witness
        self.exhaustive = 0

    def note(self, msg):
        if msg not in self.notes:
            self.notes.append(msg)

    # -- name formulas
    def member(self, x, a, env) -> int:
        x = canonical_name(x)
        if isinstance(a, NameVar):
            if a.var not in env:
                raise FormulaError(f"unbound name variable {a.var}")
            return HOLDS if env[a.var] == x else FAILS
        if x not in self.ctx.universe:
            return FAILS
        if isinstance(a, QuoteProc):
            return HOLDS if name_equiv(x, Quote(a.proc)) else FAILS
        return self.ev(canonicalize(quoted_process(x)), a.formula, env)

    def denotation(self, a, env) -> list:
        return [x for x in self.ctx.universe if self.member(x, a, env) == HOLDS]

    # -- closure under internal steps
    def closure(self, p):
        key = ("closure", p)
        if key not in self._memo:
            space = explore(p, self.ctx.depth, self.ctx.max_states)
            if space.truncated:
                self.note(f"internal-step closure truncated ({len(space)} states, depth {self.ctx.depth})")
            self._memo[key] = (space.states, space.truncated)
        return self._memo[key]

    # -- processes
    def ev(self, p: Proc, f: Formula, env: dict) -> int:
        cacheable = not _has_free_propvar(f, frozenset()) and not isinstance(f, (TrueF, Null))
        if cacheable:
            key = (p, f, tuple(sorted((k, v) for k, v in env.items() if not callable(v))))
            hit = self._memo.get(key)
            if hit is not None:
                return hit
        v = self._ev(p, f, env)
        if cacheable:
            self._memo[key] = v
        return v

    def _ev(self, p, f, env):
        if isinstance(f, TrueF):
            return HOLDS
        if isinstance(f, Null):
            return HOLDS if p == STOP else FAILS
        if isinstance(f, Not):
            return 2 - self.ev(p, f.body, env)
        if isinstance(f, And):
            left = self.ev(p, f.left, env)
            if left == FAILS:
                return FAILS
            return min(left, self.ev(p, f.right, env))
        if isinstance(f, Sep):
            return self.sep(p, f, env)
        if isinstance(f, Disclosure):
            if not isinstance(p, Drop):
                return FAILS
            return self.member(p.name, f.name, env)
        if isinstance(f, Dissemination):
            if not isinstance(p, Output) or len(p.args) != len(f.args):
                return FAILS
            v = self.member(p.chan, f.chan, env)
            for q, g in zip(p.args, f.args):
                if v == FAILS:
                    break
                v = min(v, self.ev(canonicalize(q), g, env))
            return v
        if isinstance(f, Reception):
            return self.reception(p, f, env)
        if isinstance(f, Gfp):
            return self.gfp(p, f, env)
        if isinstance(f, Forall):
            v = HOLDS
            for x in self.ctx.universe:
                m = self.member(x, f.domain, env)
                if m == FAILS:
                    continue
                inner = self.ev(p, f.body, {**env, f.var: x})
                v = min(v, max(2 - m, inner))
                if v == FAILS:
                    break
            return v
        if isinstance(f, RelyGuarantee):
            return self.rely_guarantee(p, f, env)
        if isinstance(f, PropVar):
            if f.var in env:
                return env[f.var](p)
            if f.var in self.ctx.valuation:
                return HOLDS if p in {canonicalize(q) for q in self.ctx.valuation[f.var]} else FAILS
            raise FormulaError(f"unbound propositional variable {f.var}")
        raise TypeError(f)

    def sep(self, p, f, env):
        comps = components(p)
        best = FAILS
        seen = set()
        for mask in range(1 << len(comps)):
            left = tuple(c for i, c in enumerate(comps) if mask >> i & 1)
            right = tuple(c for i, c in enumerate(comps) if not mask >> i & 1)
            key = (left, right)
            if key in seen:
                continue
            seen.add(key)
            lv = self.ev(canonicalize(par(*left)), f.left, env)
            if lv == FAILS:
                continue
            v = min(lv, self.ev(canonicalize(par(*right)), f.right, env))
            best = max(best, v)
            if best == HOLDS and not self.exhaustive:
                break
        return best

    def reception(self, p, f, env):
        states, truncated = self.closure(p)
        best = FAILS
        for s in states:
            comps = components(s)
            for i, c in enumerate(comps):
                guards = [c] if isinstance(c, Input) else (
                    [b for b in c.branches if isinstance(b, Input)] if isinstance(c, Choice) else [])
                rest = comps[:i] + comps[i + 1:]
                for g in guards:
                    m = self.member(g.chan, f.chan, env)
                    if m == FAILS:
                        continue
                    v = min(m, self._receive(g, rest, f, env))
                    best = max(best, v)
                    if best == HOLDS and not self.exhaustive:
                        return HOLDS
        if truncated and best == FAILS:
            return UNKNOWN
        return best

    def _receive(self, g, rest, f, env):
        slots = [b.ident for b in g.binders if isinstance(b, Bind)]
        forall = HOLDS
        for c in self.ctx.universe:
            exists = FAILS
            for zs in itertools.product(self.ctx.universe, repeat=len(slots)):
                body = substitute(g.body, {Var(y): z for y, z in zip(slots, zs)})
                cont = canonicalize(par(*rest, body))
                exists = max(exists, self.ev(cont, f.body, {**env, f.binder: c}))
                if exists == HOLDS and not self.exhaustive:
                    break
            forall = min(forall, exists)
            if forall == FAILS:
                break
        return forall

    def gfp(self, p, f, env):
        if _reception_fragment(f.body):
            def norm(s):
                return collect_garbage(s, self.ctx.universe)
        else:
            def norm(s):
                return s
        p = norm(p)
        states = [p]
        known = {p: 0}
        requested = []

        def discover(s):
            s = norm(s)
            if s not in known:
                requested.append(s)
            return HOLDS

        fresh = [p]
        rounds = 0
        overflow = False
        while fresh:
            self.exhaustive += 1
            try:
                for s in fresh:
                    self.ev(s, f.body, {**env, f.var: discover})
            finally:
                self.exhaustive -= 1
            fresh = []
            rounds += 1
            for s in requested:
                if s in known:
                    continue
                if rounds > self.ctx.depth or len(states) >= self.ctx.max_states:
                    overflow = True
                    continue
                known[s] = len(states)
                states.append(s)
                fresh.append(s)
            requested.clear()
        if overflow:
            self.note(f"fixpoint state set truncated at {len(states)} states")

        value = {s: HOLDS for s in states}

        def lookup(s):
            return value.get(norm(s), UNKNOWN)

        changed = True
        while changed:
            changed = False
            for s in states:
                if value[s] == FAILS:
                    continue
                v = min(value[s], self._ev(s, f.body, {**env, f.var: lookup}))
                if v != value[s]:
                    value[s] = v
                    changed = True
        return value[p]

    def rely_guarantee(self, p, f, env):
        suite = self.ctx.env_suite or default_env_suite(self.ctx.universe)
        v = HOLDS
        for q in suite:
            h = self.ev(canonicalize(q), f.hypothesis, env)
            if h == FAILS:
                continue
            system = par(p, q)
            mapping = {}
            for k, x in enumerate(f.hidden):
                mapping[x] = fresh_name(f"hide:{k}", system)
            hidden = canonicalize(substitute(system, mapping))
            c = self.ev(hidden, f.conclusion, env)
            v = min(v, max(2 - h, c))
            if v == FAILS:
                break
        return v


def _has_free_propvar(f, bound):
    if isinstance(f, PropVar):
        return f.var not in bound
    if isinstance(f, Gfp):
        return _has_free_propvar(f.body, bound | {f.var})
    if isinstance(f, Not):
        return _has_free_propvar(f.body, bound)
    if isinstance(f, (And, Sep)):
        return _has_free_propvar(f.left, bound) or _has_free_propvar(f.right, bound)
    if isinstance(f, Dissemination):
        return (_has_free_propvar_name(f.chan, bound)
                or any(_has_free_propvar(a, bound) for a in f.args))
    if isinstance(f, (Reception, Forall)):
        nf = f.chan if isinstance(f, Reception) else f.domain
        return _has_free_propvar_name(nf, bound) or _has_free_propvar(f.body, bound)
    if isinstance(f, Disclosure):
        return _has_free_propvar_name(f.name, bound)
    if isinstance(f, RelyGuarantee):
        return _has_free_propvar(f.hypothesis, bound) or _has_free_propvar(f.conclusion, bound)
    return False


def _has_free_propvar_name(a, bound):
    return isinstance(a, QuoteFormula) and _has_free_propvar(a.formula, bound)


def check(p: Proc, f: Formula, ctx: Optional[CheckContext] = None) -> CheckResult:
    """Decide ``p |= f`` within the bounds of ``ctx`` (default universe when none given)."""
    p = canonicalize(p)
    if ctx is None:
        ctx = CheckContext(universe=default_universe(p))
    elif not ctx.universe:
        ctx = CheckContext(default_universe(p), ctx.depth, ctx.max_states, ctx.env_suite, ctx.valuation)
    checker = Checker(ctx)
    v = checker.ev(p, f, {})
    verdict = VERDICT_NAMES[v]
    if v == UNKNOWN:
        reason = "; ".join(checker.notes) or "bounded evaluation inconclusive"
    elif v == HOLDS:
        reason = "formula holds" + (" (bounds hit, verdict unaffected)" if checker.notes else "")
    else:
        reason = "formula fails" + (" (bounds hit, verdict unaffected)" if checker.notes else "")
    return CheckResult(verdict, reason, p if v == FAILS else None, bool(checker.notes))


def name_denotation(a, ctx: CheckContext) -> list:
    """Universe names in the namespace ``a`` (closed)."""
    return Checker(ctx).denotation(a, {})
