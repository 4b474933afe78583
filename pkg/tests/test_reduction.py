import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import naive_congruent, naive_reachable, naive_successors, scramble
from procgen import procs
from rhopol.parser import parse_proc
from rhopol.reduction import (
    StaleRedex, enumerate_redexes, explore, reachable, run, step, successors,
)
from rhopol.sugar import replicate_eager
from rhopol.syntax import (
    STOP, Bind, Choice, Drop, Input, Output, Par, Quote, Var, canonicalize, components,
    pretty, struct_congruent,
)

x, y, z, w, u, v = (Var(c) for c in "xyzwuv")
P = Output(u, (STOP,))
COMM = Par((Input(x, (Bind("z"),), Output(w, (Output(y, (Drop(z),)),))), Output(x, (P,))))


def test_comm_example_has_one_redex():
    assert len(enumerate_redexes(COMM)) == 1


def test_comm_example_reduces_to_expected():
    (r,) = enumerate_redexes(COMM)
    assert step(COMM, r) == canonicalize(Output(w, (Output(y, (P,)),)))


def test_stop_has_no_redex():
    assert enumerate_redexes(STOP) == []


def test_arity_mismatch_is_not_a_redex():
    p = Par((Input(x, (Bind("y"), Bind("z")), STOP), Output(x, (P,))))
    assert enumerate_redexes(p) == []


def test_body_without_occurrences():
    p = Par((Input(x, (Bind("y"),), STOP), Output(x, (P,))))
    (r,) = enumerate_redexes(p)
    assert step(p, r) == STOP


def test_choice_is_consumed_whole():
    ch = Choice((Input(x, (Bind("y"),), Drop(y)), Input(u, (Bind("v"),), STOP)))
    p = Par((ch, Output(x, (P,))))
    assert any(isinstance(c, Choice) for c in components(canonicalize(p)))
    (r,) = enumerate_redexes(p)
    assert step(p, r) == canonicalize(P)


def test_stale_redex_rejected():
    (r,) = enumerate_redexes(COMM)
    with pytest.raises(StaleRedex):
        step(STOP, r)


def test_run_stop_and_comm():
    t = run(STOP, seed=3, max_steps=5)
    assert t.steps == [] and t.terminated
    for seed in range(5):
        t = run(COMM, seed=seed, max_steps=10)
        assert len(t.steps) == 1 and t.terminated


def test_run_cell_get_delivers_initial_value():
    p = parse_proc("import RepairedCell as Cell\nCell( slot, 7 ) | slot!get( ret )")
    for seed in range(4):
        t = run(p, seed=seed, max_steps=20)
        assert any("ret!(7)" in pretty(s) for s in t.states())


def test_trace_records_are_line_delimited():
    lines = run(COMM, seed=1, max_steps=10).to_jsonl().splitlines()
    head = json.loads(lines[0])
    assert head["schema"] == "rhopol.trace/1" and head["steps"] == 1
    assert json.loads(lines[1])["channel"] == "x"


def test_reachable_examples():
    assert reachable(STOP) == (frozenset({STOP}), False)
    states, trunc = reachable(Par((Output(x, (P,)), Input(x, (Bind("y"),), STOP))))
    assert len(states) == 2 and not trunc


def test_eager_replication_runs_away():
    _, trunc = reachable(replicate_eager(Output(y, (STOP,)), x), max_depth=50, max_states=30)
    assert trunc


def test_explore_bounds_validated():
    with pytest.raises(ValueError):
        explore(STOP, -1)
    with pytest.raises(ValueError):
        run(STOP, max_steps=-1)


def test_level_sizes_sum_to_states():
    sp = explore(COMM)
    assert sum(sp.level_sizes()) == len(sp) == 2


# ---------------------------------------------------------------- properties

@settings(max_examples=150)
@given(procs(10))
def test_successors_match_oracle(p):
    mine = successors(canonicalize(p))
    theirs = naive_successors(p)
    for s in mine:
        assert any(naive_congruent(s, t) for t in theirs)
    for t in theirs:
        assert any(naive_congruent(s, t) for s in mine)


@settings(max_examples=60)
@given(procs(8))
def test_reachable_matches_oracle_bfs(p):
    states, trunc = reachable(p, max_depth=3, max_states=500)
    oracle = naive_reachable(p, 3)
    assert len(states) == len(oracle)


@given(procs(10), st.randoms(use_true_random=False))
def test_equiv_rule_coherence(p, rng):
    assert successors(canonicalize(p)) == successors(canonicalize(scramble(rng, p)))


@given(procs(10), st.integers(0, 1000))
def test_run_is_deterministic(p, seed):
    a, b = run(p, seed, 8), run(p, seed, 8)
    assert a.to_jsonl() == b.to_jsonl()


@given(procs(10))
def test_no_spurious_reductions(p):
    comps = components(canonicalize(p))
    def has(kind):
        return any(isinstance(c, kind) or (isinstance(c, Choice) and
                   any(isinstance(b, kind) for b in c.branches)) for c in comps)
    if not (has(Input) and has(Output)):
        assert enumerate_redexes(p) == []


@given(procs(10))
def test_arity_guard(p):
    c = canonicalize(p)
    comps = components(c)
    for r in enumerate_redexes(c):
        i = comps[r.inp] if r.inp_branch is None else comps[r.inp].branches[r.inp_branch]
        o = comps[r.out] if r.out_branch is None else comps[r.out].branches[r.out_branch]
        assert len(i.binders) == len(o.args)


def test_bulk_coherence():
    rng = random.Random(5)
    from procgen import bounded_proc
    for _ in range(100):
        p = bounded_proc(rng, 12)
        assert struct_congruent(p, scramble(rng, p))
        assert successors(canonicalize(p)) == successors(canonicalize(scramble(rng, p)))
