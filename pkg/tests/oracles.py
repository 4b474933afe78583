"""Deliberately naive reference implementations used to cross-check the library."""
import itertools

from rhopol.syntax import (
    STOP, Add, Bind, Choice, Drop, Ground, Input, Match, Output, Par, Quote, Stop, Sub, Var,
)


# ---------------------------------------------------------------- congruence by search

def _flat(p):
    """Top-level components with 0 removed, nested Par flattened, 1-branch choices opened."""
    if isinstance(p, Stop):
        return []
    if isinstance(p, Par):
        return [c for q in p.components for c in _flat(q)]
    if isinstance(p, Choice) and len(p.branches) == 1:
        return _flat(p.branches[0])
    return [p]


def _name_core(n):
    """Strip the quote-drop law: @P with P congruent to *x is x."""
    while isinstance(n, Quote):
        parts = _flat(n.proc)
        if len(parts) == 1 and isinstance(parts[0], Drop):
            n = parts[0].name
        else:
            break
    return n


def _names_eq(a, b, env):
    a, b = _name_core(a), _name_core(b)
    if isinstance(a, Var) and isinstance(b, Var):
        left = env.get(("l", a.ident))
        right = env.get(("r", b.ident))
        if left is None and right is None:
            return a.ident == b.ident
        return left == b.ident and right == a.ident
    if isinstance(a, Quote) and isinstance(b, Quote):
        return _eq(a.proc, b.proc, env)
    return False


def _ground_eq(g, h, env):
    if isinstance(g, Drop) and isinstance(h, Drop):
        return _names_eq(g.name, h.name, env)
    if type(g) is not type(h):
        return False
    if isinstance(g, (Add, Sub)):
        return _ground_eq(g.left, h.left, env) and _ground_eq(g.right, h.right, env)
    return g == h


def _bijection(xs, ys, env):
    if len(xs) != len(ys):
        return False
    if not xs:
        return True
    head, rest = xs[0], xs[1:]
    for k, y in enumerate(ys):
        if _eq(head, y, env) and _bijection(rest, ys[:k] + ys[k + 1:], env):
            return True
    return False


def _eq(p, q, env):
    ps, qs = _flat(p), _flat(q)
    if len(ps) != 1 or len(qs) != 1:
        return _bijection(ps, qs, env)
    p, q = ps[0], qs[0]
    if type(p) is not type(q):
        return False
    if isinstance(p, Ground):
        return _ground_eq(p.value, q.value, env)
    if isinstance(p, Drop):
        return _names_eq(p.name, q.name, env)
    if isinstance(p, Output):
        return (len(p.args) == len(q.args) and _names_eq(p.chan, q.chan, env)
                and all(_eq(a, b, env) for a, b in zip(p.args, q.args)))
    if isinstance(p, Input):
        if len(p.binders) != len(q.binders) or not _names_eq(p.chan, q.chan, env):
            return False
        inner = dict(env)
        for b, c in zip(p.binders, q.binders):
            if isinstance(b, Bind) != isinstance(c, Bind):
                return False
            if isinstance(b, Bind):
                inner[("l", b.ident)] = c.ident
                inner[("r", c.ident)] = b.ident
            elif not _names_eq(b.name, c.name, env):
                return False
        return _eq(p.body, q.body, inner)
    if isinstance(p, Choice):
        return _bijection(list(p.branches), list(q.branches), env)
    raise TypeError(p)


def naive_congruent(p, q) -> bool:
    """Structural congruence by backtracking search for matching components."""
    return _eq(p, q, {})


def naive_name_equiv(a, b) -> bool:
    return _names_eq(a, b, {})


# ---------------------------------------------------------------- substitution by renaming apart

class _Fresh:
    def __init__(self):
        self.n = 0

    def __call__(self):
        self.n += 1
        return f"_o{self.n}"


def _rename(p, ren, fresh):
    """Give every binder a globally unique identifier."""
    def name(n):
        if isinstance(n, Var):
            return Var(ren.get(n.ident, n.ident))
        return Quote(_rename(n.proc, ren, fresh))

    def ground(g):
        if isinstance(g, Drop):
            return Drop(name(g.name))
        if isinstance(g, (Add, Sub)):
            return type(g)(ground(g.left), ground(g.right))
        return g

    if isinstance(p, Stop):
        return p
    if isinstance(p, Ground):
        return Ground(ground(p.value))
    if isinstance(p, Drop):
        return Drop(name(p.name))
    if isinstance(p, Output):
        return Output(name(p.chan), tuple(_rename(a, ren, fresh) for a in p.args))
    if isinstance(p, Input):
        inner = dict(ren)
        bs = []
        for b in p.binders:
            if isinstance(b, Bind):
                inner[b.ident] = fresh()
                bs.append(Bind(inner[b.ident]))
            else:
                bs.append(Match(name(b.name)))
        return Input(name(p.chan), tuple(bs), _rename(p.body, inner, fresh))
    if isinstance(p, Choice):
        return Choice(tuple(_rename(b, ren, fresh) for b in p.branches))
    return Par(tuple(_rename(c, ren, fresh) for c in p.components))


def _apply(p, pairs):
    def look(n):
        for k, v in pairs:
            if naive_name_equiv(n, k):
                return v
        return None

    def name(n):
        v = look(n)
        if v is not None:
            return v
        return Quote(_apply(n.proc, pairs)) if isinstance(n, Quote) else n

    if isinstance(p, (Stop, Ground)):
        return p
    if isinstance(p, Drop):
        v = look(p.name)
        if v is None:
            return Drop(name(p.name))
        return v.proc if isinstance(v, Quote) else Drop(v)
    if isinstance(p, Output):
        return Output(name(p.chan), tuple(_apply(a, pairs) for a in p.args))
    if isinstance(p, Input):
        bs = tuple(b if isinstance(b, Bind) else Match(name(b.name)) for b in p.binders)
        return Input(name(p.chan), bs, _apply(p.body, pairs))
    if isinstance(p, Choice):
        return Choice(tuple(_apply(b, pairs) for b in p.branches))
    return Par(tuple(_apply(c, pairs) for c in p.components))


def naive_substitute(p, mapping):
    """Rename all binders apart, then replace names found by congruence search."""
    return _apply(_rename(p, {}, _Fresh()), list(mapping.items()))


# ---------------------------------------------------------------- congruence-preserving scrambles

def scramble(rng, p, depth=0):
    """A random term congruent to ``p``: shuffles, regroups, pads with 0, renames binders."""
    def name(n):
        if isinstance(n, Quote):
            return Quote(scramble(rng, n.proc, depth))
        if rng.random() < 0.2:
            return Quote(Drop(n))
        return n

    if isinstance(p, Input):
        ren = {b.ident: f"{b.ident}_{depth}_{rng.randint(0, 99)}" for b in p.binders
               if isinstance(b, Bind)}
        bs = tuple(Bind(ren[b.ident]) if isinstance(b, Bind) else b for b in p.binders)
        from rhopol.syntax import substitute
        body = substitute(p.body, {Var(k): Var(v) for k, v in ren.items()})
        return Input(name(p.chan), bs, scramble(rng, body, depth + 1))
    if isinstance(p, Output):
        return Output(name(p.chan), tuple(scramble(rng, a, depth) for a in p.args))
    if isinstance(p, Drop):
        return Drop(name(p.name))
    if isinstance(p, Choice):
        bs = [scramble(rng, b, depth) for b in p.branches]
        rng.shuffle(bs)
        return Choice(tuple(bs))
    if isinstance(p, Par):
        cs = [scramble(rng, c, depth) for c in p.components]
        rng.shuffle(cs)
        if rng.random() < 0.3:
            cs.append(STOP)
        if len(cs) > 2 and rng.random() < 0.5:
            cs = [Par(tuple(cs[:2]))] + cs[2:]
        return Par(tuple(cs))
    if rng.random() < 0.15:
        return Par((p, STOP))
    return p


def all_bracketings(ps):
    """Every binary bracketing of a list of processes (for associativity checks)."""
    if len(ps) == 1:
        yield ps[0]
        return
    for k in range(1, len(ps)):
        for left, right in itertools.product(all_bracketings(ps[:k]), all_bracketings(ps[k:])):
            yield Par((left, right))


# ---------------------------------------------------------------- one-step reduction by enumeration

def _guards(c):
    return list(c.branches) if isinstance(c, Choice) else [c]


def naive_successors(p):
    """Comm successors of a raw term, one entry per firing (duplicates kept)."""
    comps = _flat(p)
    out = []
    for i, ci in enumerate(comps):
        for g in _guards(ci):
            if not isinstance(g, Input):
                continue
            for k, ck in enumerate(comps):
                if k == i:
                    continue
                for o in _guards(ck):
                    if (isinstance(o, Output) and len(o.args) == len(g.binders)
                            and naive_name_equiv(g.chan, o.chan)):
                        g2 = _rename(g, {}, _Fresh())
                        mapping = {Var(b.ident): Quote(a) for b, a in zip(g2.binders, o.args)}
                        rest = [c for j, c in enumerate(comps) if j not in (i, k)]
                        out.append(Par(tuple(rest) + (_apply(g2.body, list(mapping.items())),)))
    return out


def naive_reachable(p, depth):
    """Breadth-first search with duplicates found by congruence search."""
    seen = [p]
    level = [p]
    for _ in range(depth):
        nxt = []
        for s in level:
            for t in naive_successors(s):
                if not any(naive_congruent(t, u) for u in seen):
                    seen.append(t)
                    nxt.append(t)
        level = nxt
    return seen


# ---------------------------------------------------------------- weak barbed bisimilarity by brute force

def naive_bisimilar(p, q, N, depth=10):
    """Greatest weak N-barbed bisimulation over fully enumerated finite state spaces.

    Returns None when either side does not close within ``depth`` steps.
    """
    def space(r):
        states = naive_reachable(r, depth)
        if any(not any(naive_congruent(t, s) for s in states)
               for u in states for t in naive_successors(u)):
            return None
        idx = lambda t: next(k for k, s in enumerate(states) if naive_congruent(t, s))
        succ = [{idx(t) for t in naive_successors(u)} for u in states]
        return states, succ

    def closure(succ):
        out = []
        for i in range(len(succ)):
            seen, todo = {i}, [i]
            while todo:
                for j in succ[todo.pop()]:
                    if j not in seen:
                        seen.add(j)
                        todo.append(j)
            out.append(seen)
        return out

    def barbs_of(s):
        found = set()
        for c in _flat(s):
            for g in _guards(c):
                if isinstance(g, Output):
                    for n in N:
                        if naive_name_equiv(g.chan, n):
                            found.add(N.index(n))
        return found

    sp, sq = space(p), space(q)
    if sp is None or sq is None:
        return None
    (ps, psucc), (qs, qsucc) = sp, sq
    pw, qw = closure(psucc), closure(qsucc)
    pb, qb = [barbs_of(s) for s in ps], [barbs_of(s) for s in qs]
    pwb = [set().union(*(pb[j] for j in pw[i])) for i in range(len(ps))]
    qwb = [set().union(*(qb[j] for j in qw[i])) for i in range(len(qs))]
    R = {(i, j) for i in range(len(ps)) for j in range(len(qs))}
    changed = True
    while changed:
        changed = False
        for (i, j) in list(R):
            ok = (pb[i] <= qwb[j] and qb[j] <= pwb[i]
                  and all(any((a, b) in R for b in qw[j]) for a in psucc[i])
                  and all(any((a, b) in R for a in pw[i]) for b in qsucc[j]))
            if not ok:
                R.discard((i, j))
                changed = True
    return (0, 0) in R
