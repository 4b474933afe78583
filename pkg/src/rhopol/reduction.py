"""
Reduction: redexes of the top-level parallel composition, single Comm steps,
seeded runs and bounded breadth-first exploration.

Every state is kept in canonical form, which makes the Equiv rule free and
lets the Par rule act on the flattened component multiset.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from .syntax import (
    Bind, Choice, Input, Match, Output, Proc, Quote, STOP, Var, canonical_name,
    canonicalize, components, evaluate, par, pretty, pretty_name, sort_key, substitute,
)


class StaleRedex(Exception):
    pass


@dataclass(frozen=True)
class Redex:
    inp: int
    inp_branch: Optional[int]
    out: int
    out_branch: Optional[int]
    channel: object


def _guards(comp, kind):
    if isinstance(comp, kind):
        yield None, comp
    elif isinstance(comp, Choice):
        for j, b in enumerate(comp.branches):
            if isinstance(b, kind):
                yield j, b


def _matches(inp: Input, out: Output) -> bool:
    if len(inp.binders) != len(out.args):
        return False
    for b, a in zip(inp.binders, out.args):
        if isinstance(b, Match) and canonical_name(Quote(evaluate(a))) != b.name:
            return False
    return True


@lru_cache(maxsize=1 << 15)
def _redexes(p: Proc) -> tuple:
    comps = components(p)
    outs = [(i, j, o) for i, c in enumerate(comps) for j, o in _guards(c, Output)]
    found = []
    for i, c in enumerate(comps):
        for j, g in _guards(c, Input):
            for k, l, o in outs:
                if k != i and g.chan == o.chan and _matches(g, o):
                    found.append(Redex(i, j, k, l, g.chan))
    return tuple(found)


def enumerate_redexes(p: Proc) -> list:
    """Every (input, output) pair at top level that can fire by the Comm rule."""
    return list(_redexes(canonicalize(p)))


def _pick(comps, idx, branch):
    c = comps[idx]
    return c if branch is None else c.branches[branch]


def step(p: Proc, r: Redex) -> Proc:
    """Fire ``r``; a Choice is consumed whole.  The result is canonical."""
    p = canonicalize(p)
    comps = components(p)
    try:
        inp = _pick(comps, r.inp, r.inp_branch)
        out = _pick(comps, r.out, r.out_branch)
    except (IndexError, AttributeError):
        raise StaleRedex(f"redex {r} does not address {pretty(p)}") from None
    if not (isinstance(inp, Input) and isinstance(out, Output) and r.inp != r.out
            and inp.chan == out.chan == r.channel and _matches(inp, out)):
        raise StaleRedex(f"redex {r} does not match {pretty(p)}")
    mapping = {}
    for b, a in zip(inp.binders, out.args):
        if isinstance(b, Bind):
            mapping[Var(b.ident)] = Quote(evaluate(a))
    rest = [c for k, c in enumerate(comps) if k not in (r.inp, r.out)]
    return canonicalize(par(*rest, substitute(inp.body, mapping)))


@lru_cache(maxsize=1 << 15)
def successors(p: Proc) -> tuple:
    """Distinct canonical one-step successors of canonical ``p``, in canonical order."""
    seen = {step(p, r) for r in _redexes(p)}
    return tuple(sorted(seen, key=sort_key))


# ---------------------------------------------------------------- runs

@dataclass
class Trace:
    initial: Proc
    steps: list = field(default_factory=list)     # (Redex, Proc)
    terminated: bool = False
    truncated: bool = False
    seed: int = 0

    @property
    def final(self) -> Proc:
        return self.steps[-1][1] if self.steps else canonicalize(self.initial)

    def states(self):
        yield canonicalize(self.initial)
        for _, s in self.steps:
            yield s

    def records(self):
        for i, (r, s) in enumerate(self.steps, 1):
            yield {"step": i, "channel": pretty_name(r.channel), "state": pretty(s)}

    def to_jsonl(self) -> str:
        header = {"schema": "rhopol.trace/1", "seed": self.seed,
                  "initial": pretty(canonicalize(self.initial)),
                  "steps": len(self.steps), "terminated": self.terminated,
                  "truncated": self.truncated}
        lines = [json.dumps(header, sort_keys=True)]
        lines += [json.dumps(rec, sort_keys=True) for rec in self.records()]
        return "\n".join(lines) + "\n"


def run(p: Proc, seed: int = 0, max_steps: int = 100) -> Trace:
    """Fire uniformly chosen redexes until none remain or ``max_steps`` is reached."""
    if max_steps < 0:
        raise ValueError("max_steps must be non-negative")
    rng = random.Random(seed)
    trace = Trace(initial=p, seed=seed)
    state = canonicalize(p)
    while True:
        rs = _redexes(state)
        if not rs:
            trace.terminated = True
            return trace
        if len(trace.steps) >= max_steps:
            trace.truncated = True
            return trace
        r = rs[rng.randrange(len(rs))]
        state = step(state, r)
        trace.steps.append((r, state))


# ---------------------------------------------------------------- exploration

@dataclass
class StateSpace:
    """Bounded reachability graph.  ``frontier`` holds states whose successors are not all known."""
    root: Proc
    states: list
    index: dict
    succ: dict
    depth: dict
    frontier: set
    truncated: bool

    def __len__(self):
        return len(self.states)

    def level_sizes(self):
        sizes = {}
        for d in self.depth.values():
            sizes[d] = sizes.get(d, 0) + 1
        return [sizes[d] for d in sorted(sizes)]


def explore(p: Proc, max_depth: int = 32, max_states: int = 10_000, succ_fn=None) -> StateSpace:
    """Breadth-first closure of ``succ_fn`` (default: Comm successors), depth-major then canonical order."""
    if max_depth < 0 or max_states < 1:
        raise ValueError("bounds must be positive")
    succ_fn = succ_fn or successors
    root = canonicalize(p)
    states = [root]
    index = {root: 0}
    depth = {0: 0}
    succ = {}
    frontier = set()
    truncated = False
    level = [0]
    d = 0
    while level:
        nxt = []
        for i in level:
            kids = succ_fn(states[i])
            if d >= max_depth:
                if kids:
                    frontier.add(i)
                    truncated = True
                else:
                    succ[i] = []
                continue
            out = []
            complete = True
            for k in kids:
                j = index.get(k)
                if j is None:
                    if len(states) >= max_states:
                        complete = False
                        continue
                    j = len(states)
                    states.append(k)
                    index[k] = j
                    depth[j] = d + 1
                    nxt.append(j)
                out.append(j)
            succ[i] = out
            if not complete:
                frontier.add(i)
                truncated = True
        nxt.sort(key=lambda j: sort_key(states[j]))
        level = nxt
        d += 1
    return StateSpace(root, states, index, succ, depth, frontier, truncated)


def reachable(p: Proc, max_depth: int = 32, max_states: int = 10_000):
    """``(set of canonical states, truncated)``"""
    space = explore(p, max_depth, max_states)
    return frozenset(space.states), space.truncated
