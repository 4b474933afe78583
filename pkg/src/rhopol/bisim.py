"""
Bounded weak barbed bisimulation.

Both processes are explored to a depth bound.  The relation starts full on
the product of explored states and is refined to the greatest fixpoint of

* every step of one side is matched by zero or more steps of the other, and
* every barb (on an observable name) of one side is a weak barb of the other.

States whose exploration was cut off are treated optimistically, so a pair
is only ever removed on complete evidence.  Hence ``Distinguished`` is sound
under any bounds, while ``Equivalent`` additionally needs an untruncated
exploration; everything else is ``Unknown``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .reduction import explore
from .sugar import is_generated
from .syntax import Choice, Output, Proc, canonical_name, canonicalize, components, free_names, pretty, pretty_name


def observable(*names) -> frozenset:
    """An observation set, names taken modulo name equivalence."""
    return frozenset(canonical_name(n) for n in names)


def default_observable(*procs) -> frozenset:
    out = set()
    for p in procs:
        out |= {n for n in free_names(p) if not is_generated(n)}
    return frozenset(out)


def barbs(p: Proc, N=None) -> frozenset:
    """Channels of top-level outputs (choice branches included), restricted to ``N`` when given."""
    out = set()
    for c in components(canonicalize(p)):
        for g in (c.branches if isinstance(c, Choice) else (c,)):
            if isinstance(g, Output):
                out.add(g.chan)
    if N is not None:
        out &= set(observable(*N))
    return frozenset(out)


def weak_barbs(p: Proc, N=None, depth: int = 12, max_states: int = 10_000):
    """``(barbs reachable by internal steps, truncated)``"""
    space = explore(p, depth, max_states)
    out = set()
    for s in space.states:
        out |= barbs(s, N)
    return frozenset(out), space.truncated


@dataclass
class BisimResult:
    verdict: str
    reason: str = ""
    witness: Optional[dict] = None
    states: tuple = (0, 0)
    observable: tuple = ()
    depth_checked: int = 0

    @property
    def distinguishing(self):
        """The distinguishing path and barb, when the verdict is ``Distinguished``."""
        return self.witness

    @property
    def code(self):
        return {"Equivalent": 0, "Distinguished": 1, "Unknown": 2}[self.verdict]

    def as_record(self):
        return {"verdict": self.verdict, "reason": self.reason, "witness": self.witness,
                "states": list(self.states), "observable": list(self.observable),
                "depth_checked": self.depth_checked}


class _Side:
    def __init__(self, p, depth, max_states, names):
        self.space = sp = explore(p, depth, max_states)
        n = len(sp.states)
        self.n = n
        self.adj = np.zeros((n, n), dtype=bool)
        for i, js in sp.succ.items():
            for j in js:
                self.adj[i, j] = True
        self.barbs = np.zeros((n, len(names)), dtype=bool)
        pos = {x: k for k, x in enumerate(names)}
        for i, s in enumerate(sp.states):
            for x in barbs(s):
                if x in pos:
                    self.barbs[i, pos[x]] = True
        # reflexive-transitive closure and whether it reaches unexplored territory
        self.weak = np.zeros((n, n), dtype=bool)
        self.open = np.zeros(n, dtype=bool)
        for i in range(n):
            seen = {i}
            todo = [i]
            while todo:
                k = todo.pop()
                for j in sp.succ.get(k, ()):
                    if j not in seen:
                        seen.add(j)
                        todo.append(j)
            idx = list(seen)
            self.weak[i, idx] = True
            self.open[i] = any(k in sp.frontier for k in seen)
        self.weak_barbs = (self.weak.astype(np.int32) @ self.barbs.astype(np.int32)) > 0


def _refine(P, Q, R, reasons):
    """Remove pairs violating the transfer or barb clauses; true when something changed."""
    Ri = R.astype(np.int32)
    # M[i', j]: some j' weakly reachable from j relates to i'
    M = (Ri @ Q.weak.T.astype(np.int32)) > 0
    bad_move = ((P.adj.astype(np.int32) @ (~M).astype(np.int32)) > 0) & ~Q.open[None, :]
    M2 = (P.weak.astype(np.int32) @ Ri) > 0
    bad_move_q = ((~M2).astype(np.int32) @ Q.adj.T.astype(np.int32) > 0) & ~P.open[:, None]
    bad_barb = ((P.barbs.astype(np.int32) @ (~Q.weak_barbs).T.astype(np.int32)) > 0) & ~Q.open[None, :]
    bad_barb_q = (((~P.weak_barbs).astype(np.int32) @ Q.barbs.T.astype(np.int32)) > 0) & ~P.open[:, None]
    drop = R & (bad_move | bad_move_q | bad_barb | bad_barb_q)
    if not drop.any():
        return False
    for i, j in zip(*np.nonzero(drop)):
        if bad_barb[i, j]:
            reasons[(i, j)] = ("barb", "left")
        elif bad_barb_q[i, j]:
            reasons[(i, j)] = ("barb", "right")
        elif bad_move[i, j]:
            reasons[(i, j)] = ("move", "left")
        else:
            reasons[(i, j)] = ("move", "right")
    R &= ~drop
    return True


def _witness(P, Q, R, reasons, names, limit=32):
    """Follow removal reasons from the root pair to a distinguishing barb."""
    i, j = 0, 0
    path = []
    for _ in range(limit):
        kind, side = reasons[(i, j)]
        path.append({"left": pretty(P.space.states[i]), "right": pretty(Q.space.states[j])})
        if kind == "barb":
            if side == "left":
                ks = np.nonzero(P.barbs[i] & ~Q.weak_barbs[j])[0]
            else:
                ks = np.nonzero(Q.barbs[j] & ~P.weak_barbs[i])[0]
            return {"kind": "barb", "side": side, "barb": pretty_name(names[ks[0]]), "path": path}
        # every pair (successor, weakly reachable partner) was removed earlier
        if side == "left":
            a = next(a for a in np.nonzero(P.adj[i])[0]
                     if not R[a, np.nonzero(Q.weak[j])[0]].any())
            i, j = a, j
        else:
            b = next(b for b in np.nonzero(Q.adj[j])[0]
                     if not R[np.nonzero(P.weak[i])[0], b].any())
            i, j = i, b
    return {"kind": "move", "side": "left", "path": path}


def bisim(p: Proc, q: Proc, N=None, depth: int = 12, max_states: int = 4000) -> BisimResult:
    """Decide weak ``N``-barbed bisimilarity of ``p`` and ``q`` up to ``depth`` steps."""
    names = sorted(observable(*N) if N is not None else default_observable(p, q), key=pretty_name)
    obs = tuple(pretty_name(x) for x in names)
    if canonicalize(p) == canonicalize(q):
        return BisimResult("Equivalent", "structurally congruent (identity relation)", None,
                           (0, 0), obs, depth)
    P = _Side(p, depth, max_states, names)
    Q = _Side(q, depth, max_states, names)
    R = np.ones((P.n, Q.n), dtype=bool)
    reasons = {}
    while _refine(P, Q, R, reasons):
        pass
    sizes = (P.n, Q.n)
    truncated = P.space.truncated or Q.space.truncated
    if not R[0, 0]:
        return BisimResult("Distinguished", "root pair removed from the relation",
                           _witness(P, Q, R, reasons, names), sizes, obs, depth)
    if not truncated:
        return BisimResult("Equivalent", "greatest fixpoint relates the roots", None, sizes, obs, depth)
    return BisimResult("Unknown", f"exploration truncated at depth {depth} or {max_states} states",
                       None, sizes, obs, depth)
