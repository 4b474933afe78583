"""Random processes for property tests, driven by a ``random.Random``."""
import random

from hypothesis import strategies as st

from rhopol.syntax import (
    STOP, Bind, Choice, Drop, Ground, Input, IntLit, Output, Par, Quote, Var, size,
)

FREE = ("x", "y", "z")


def random_name(rng, budget, bound):
    r = rng.random()
    if bound and r < 0.35:
        return Var(rng.choice(bound))
    if budget > 2 and r > 0.85:
        return Quote(random_proc(rng, rng.randint(1, min(budget - 1, 3)), bound))
    return Var(rng.choice(FREE))


def _io(rng, budget, bound):
    chan = random_name(rng, 2, bound)
    if rng.random() < 0.5:
        n = rng.randint(0, min(2, max(budget - 2, 0)))
        return Output(chan, tuple(random_proc(rng, max((budget - 2) // max(n, 1), 1), bound)
                                  for _ in range(n)))
    k = rng.randint(1, 2)
    fresh = [f"b{len(bound) + i}" for i in range(k)]
    body = random_proc(rng, max(budget - 2 - k, 1), bound + tuple(fresh))
    return Input(chan, tuple(Bind(b) for b in fresh), body)


def random_proc(rng: random.Random, budget: int = 8, bound=()):
    """A process of roughly ``budget`` constructors; binders are named b0, b1, ..."""
    if budget <= 1:
        r = rng.random()
        if r < 0.4:
            return STOP
        if r < 0.6:
            return Ground(IntLit(rng.randint(0, 2)))
        return Drop(random_name(rng, 1, bound))
    r = rng.random()
    if r < 0.45:
        return _io(rng, budget, bound)
    if r < 0.75:
        left = rng.randint(1, budget - 1)
        parts = [random_proc(rng, left, bound), random_proc(rng, budget - left, bound)]
        if rng.random() < 0.2:
            parts.append(STOP)
        return Par(tuple(parts))
    if r < 0.85 and budget >= 5:
        half = budget // 2
        return Choice((_io(rng, half, bound), _io(rng, budget - half, bound)))
    if r < 0.93:
        return Drop(random_name(rng, budget - 1, bound))
    return random_proc(rng, budget - 1, bound)


def bounded_proc(rng, max_size):
    """Draw until the process has at most ``max_size`` constructors."""
    while True:
        p = random_proc(rng, rng.randint(1, max_size))
        if size(p) <= max_size:
            return p


def procs(max_size=10):
    return st.randoms(use_true_random=False).map(lambda r: bounded_proc(r, max_size))


def names(max_size=4):
    return st.randoms(use_true_random=False).map(lambda r: random_name(r, max_size, ()))
