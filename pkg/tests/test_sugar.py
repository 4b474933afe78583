import pytest
from hypothesis import given, settings, strategies as st

from procgen import procs
from rhopol.parser import parse_proc, parse_surface
from rhopol.prelude import CELL, REPAIRED_CELL, map_source, prelude_sources
from rhopol.reduction import explore, reachable, run, successors
from rhopol.sugar import (
    DesugarError, SBlock, desugar, fresh_name, is_generated, replicate_eager, replicate_lazy,
    replicate_lazy_primed,
)
from rhopol.syntax import (
    STOP, Bind, Choice, Input, Output, Par, Quote, Var, canonicalize, components, free_names,
    free_vars, name_equiv, names, pretty, struct_congruent,
)

x, y, u, v = Var("x"), Var("y"), Var("u"), Var("v")


def copies(state, p):
    return sum(struct_congruent(c, p) for c in components(state))


# ---------------------------------------------------------------- replication

def test_eager_unfolds_copies():
    p = Output(y, (STOP,))
    sp = explore(replicate_eager(p, x), max_depth=6, max_states=200)
    assert max(copies(s, p) for s in sp.states) >= 3


def test_eager_two_steps_contain_body():
    p = Output(y, (STOP,))
    sp = explore(replicate_eager(p, x), max_depth=4)
    assert any(copies(s, p) >= 1 and sp.depth[i] <= 2 for i, s in enumerate(sp.states))


def test_eager_of_stop():
    enc = replicate_eager(STOP, x)
    for s in explore(enc, max_depth=5).states:
        assert struct_congruent(s, enc)


def test_lazy_is_finite_without_messages():
    g = Input(u, (Bind("v"),), STOP)
    states, trunc = reachable(replicate_lazy(g, x), max_depth=40)
    assert not trunc and len(states) == 2


def test_lazy_leaves_a_fresh_guard():
    g = Input(u, (Bind("v"),), Output(y, (STOP,)))
    sp = explore(Par((replicate_lazy(g, x), Output(u, (STOP,)))), max_depth=6)
    assert not sp.truncated
    final = [s for s in sp.states if not successors(s)]
    assert final
    for s in final:
        assert any(isinstance(c, Input) and c.chan == u and c.arity == 1 for c in components(s))
        assert any(c == Output(y, (STOP,)) for c in components(s))


def test_lazy_rejects_unguarded():
    with pytest.raises(DesugarError):
        replicate_lazy(Output(u, ()), x)


def test_primed_lazy_is_one_unfolding_ahead():
    g = Input(u, (Bind("v"),), STOP)
    primed = canonicalize(replicate_lazy_primed(g, x))
    assert primed in successors(canonicalize(replicate_lazy(g, x)))


# ---------------------------------------------------------------- fresh names

def test_fresh_name_examples():
    n = fresh_name("X", STOP)
    assert not name_equiv(n, Quote(STOP))
    assert name_equiv(n, fresh_name("X", STOP))
    clash = Output(n, ())
    m = fresh_name("X", clash)
    assert not name_equiv(m, n)
    assert is_generated(n) and is_generated(m)


@given(procs(10), st.sampled_from(["X", "Cell", "k"]))
def test_freshness(p, tag):
    n = fresh_name(tag, p)
    assert not any(name_equiv(n, t) for t in names(p))


# ---------------------------------------------------------------- desugaring

def test_cell_listing_has_choice_on_slot():
    p = canonicalize(parse_proc(CELL + "Cell( slot, 0 )"))
    sp = explore(p, max_depth=4)
    choices = [c for s in sp.states for c in components(s) if isinstance(c, Choice)]
    assert any(len(c.branches) == 2 and all(b.chan == Var("slot") for b in c.branches)
               for c in choices)


def test_new_of_stop():
    assert struct_congruent(parse_proc("new ( x ) { 0 }"), STOP)


def test_new_binders_are_fresh_and_distinct():
    p = canonicalize(parse_proc("new ( a, b ) { a!( 0 ) | b!( 0 ) }"))
    chans = [c.chan for c in components(p)]
    assert len(chans) == 2 and not name_equiv(*chans)
    assert all(is_generated(c) for c in chans)
    assert free_vars(p) == frozenset()


def test_divergent_def():
    p = parse_proc("def X() => { X() }\nX()")
    assert len(run(p, 0, 25).steps) == 25
    # the loop revisits a congruent state, so its state space is a finite cycle
    states, trunc = reachable(p, max_depth=30, max_states=50)
    assert not trunc and all(successors(s) for s in states)
    growing = parse_proc("def X() => { y!( 0 ) | X() }\nX()")
    assert reachable(growing, max_depth=30, max_states=50)[1]


def test_unbound_identifier_and_arity():
    with pytest.raises(DesugarError):
        parse_proc("Nope( x )")
    with pytest.raises(DesugarError):
        parse_proc(CELL + "Cell( slot )")


def test_labels_become_first_argument():
    p = canonicalize(parse_proc("x!get( r )"))
    assert isinstance(p, Output) and len(p.args) == 2


def test_desugaring_is_compositional():
    a, b = "x!( 0 )", "y?( z ) => *z"
    both = desugar(parse_surface("{ " + a + "\n" + b + " }"))
    assert struct_congruent(both, Par((parse_proc(a), parse_proc(b))))


def test_prelude_is_closed():
    for name, src in prelude_sources().items():
        p = parse_proc(src + "\n0")
        assert free_names(p) == frozenset(), name


# ---------------------------------------------------------------- gadget protocols

def _finals(src, depth=24):
    sp = explore(parse_proc(src), max_depth=depth, max_states=5000)
    assert not sp.truncated
    return [pretty(s) for s in sp.states if not successors(s)]


def test_cell_get_delivers_initial_value():
    for s in _finals("import RepairedCell as Cell\nCell( slot, 3 ) | slot!get( ret )"):
        assert "ret!(3)" in s


def test_cell_set_then_get():
    src = ("import RepairedCell as Cell\nCell( slot, 3 )\nslot!set( 9 )\n"
           "ack?() => slot!get( ret )\nack!()")
    finals = _finals(src)
    assert any("ret!(9)" in s for s in finals)
    assert all("ret!(9)" in s or "ret!(3)" in s for s in finals)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 20), st.integers(0, 20))
def test_cell_set_before_get_delivers_set_value(s0, s1):
    # sequence the get after the set has been consumed
    src = f"""import RepairedCell as Cell
Cell( slot, {s0} )
new ( done ) {{
  slot!set( {s1} ) | done!()
}}
"""
    p = parse_proc(src)
    sp = explore(p, max_depth=24, max_states=3000)
    settled = [s for s in sp.states if not successors(s)]
    probe = parse_proc("slot!get( ret )")
    for s in settled:
        out = explore(Par((s, probe)), max_depth=24, max_states=3000)
        ends = [pretty(t) for t in out.states if not successors(t)]
        assert ends and all(f"ret!({s1})" in e for e in ends)


def test_map_serves_get_and_ignores_set():
    src = map_source(2) + '\nMap( m, "a", 1, "b", 2 )\nm!get( "b", r )\nm!set( "a", 5 )'
    finals = _finals(src)
    assert all("r!(2)" in s for s in finals)
    assert all('m!("set", "a", 5)' in s for s in finals)


def test_verbatim_cell_is_preserved():
    assert "Cell( slot, s )" in CELL and "Cell( slot, s )" in REPAIRED_CELL.replace("Repaired", "")
