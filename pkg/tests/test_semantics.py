"""Concrete states, satisfaction, and the executable command semantics."""

import itertools

import pytest

from islarr.parser import parse_assertion, parse_command
from islarr.semantics import (
    BOT, ConcreteState, Universe, block_base, block_end, check_state,
    denote, enumerate_states, in_universe, interp_term, is_exact, models,
    satisfies, state_from_json, state_key, state_to_json, wpo_semantic,
)
from islarr.syntax import Add, BlockBase, BlockEnd, Lit, Null, Var


def S(store=None, heap=None, blocks=()):
    return ConcreteState(store or {}, heap or {}, blocks)


U1 = Universe(("x",), 2, 1)
U2 = Universe(("x", "y"), 3, 2)


# ---------------------------------------------------------------------------
# Universe and state well-formedness


def test_universe_validation():
    with pytest.raises(TypeError):
        Universe("x", 2, 1)
    with pytest.raises(ValueError):
        Universe(("x",), 0, 0)
    with pytest.raises(ValueError):
        Universe(("x",), 2, 3)
    with pytest.raises(ValueError):
        Universe(("x",), 2, 1, loop_bound=-1)
    assert U1.witness_max == 3
    assert list(U1.locations) == [1, 2]


@pytest.mark.parametrize("bad", [
    S({"x": -1}),
    S(heap={0: 1}),
    S(heap={1: 1}),                       # live cell outside every block
    S(heap={1: BOT}, blocks=[(1, 2)]),    # dead cell inside a block
    S(blocks=[(2, 1)]),
    S(blocks=[(1, 3), (2, 4)]),
])
def test_check_state_rejects(bad):
    with pytest.raises(ValueError):
        check_state(bad)


def test_check_state_accepts_partial_cover():
    # blocks may cover cells the heap does not mention (inexact state)
    check_state(S({"x": 1}, {1: 5}, [(1, 3)]))


def test_exactness_and_block_lookup():
    st = S({}, {1: 5, 2: 0}, [(1, 3)])
    assert is_exact(st)
    assert not is_exact(S({}, {1: 5}, [(1, 3)]))
    assert block_base(st, 2) == 1
    assert block_end(st, 2) == 3
    assert block_base(st, 3) == 0


def test_state_identity():
    a = S({"x": 1}, {1: 2}, [(1, 2)])
    b = S({"x": 1}, {1: 2}, [(1, 2)])
    assert a == b and hash(a) == hash(b)
    assert a != S({"x": 1}, {1: BOT})


# ---------------------------------------------------------------------------
# Term interpretation


def test_interp_term():
    st = S({"x": 2}, {1: 0, 2: 0}, [(1, 3)])
    assert interp_term(Null(), st) == 0
    assert interp_term(Add(Var("x"), Lit(3)), st) == 5
    assert interp_term(BlockBase(Var("x")), st) == 1
    assert interp_term(BlockEnd(Var("x")), st) == 3
    assert interp_term(BlockBase(Lit(9)), st) == 0  # outside every block


# ---------------------------------------------------------------------------
# Enumeration against a from-scratch builder


def _naive_states(u):
    """Blunt reference enumerator: try every store, heap labeling, and
    block set over the universe and keep the well-formed ones."""
    locs = list(u.locations)
    out = set()
    heap_values = [BOT] + list(u.values)
    intervals = [(lo, hi) for lo in locs for hi in range(lo + 1, u.vmax + 2)]
    block_sets = []
    for k in range(len(intervals) + 1):
        for combo in itertools.combinations(intervals, k):
            cells = []
            for lo, hi in combo:
                cells.extend(range(lo, hi))
            if len(cells) == len(set(cells)):
                block_sets.append(combo)
    for stores in itertools.product(u.values, repeat=len(u.vars)):
        store = dict(zip(u.vars, stores))
        for k in range(u.heap_cap + 1):
            for dom in itertools.combinations(locs, k):
                for vals in itertools.product(heap_values, repeat=k):
                    heap = dict(zip(dom, vals))
                    for blocks in block_sets:
                        st = ConcreteState(store, heap, blocks)
                        try:
                            check_state(st)
                        except ValueError:
                            continue
                        if in_universe(st, u):
                            out.add(st)
    return out


def test_enumerate_states_matches_naive_builder():
    got = set(enumerate_states(U1))
    assert got == _naive_states(U1)


def test_enumerate_states_exact_only():
    exact = set(enumerate_states(U1, exact_only=True))
    assert exact == {st for st in enumerate_states(U1) if is_exact(st)}
    assert all(in_universe(st, U1) for st in exact)


def test_in_universe_bounds():
    assert not in_universe(S({"x": 3}), U1)
    assert not in_universe(S({"x": 0}, {1: 0, 2: 0}, [(1, 3)]), U1)  # cap 1
    assert not in_universe(S({}), U1)  # store must cover u.vars
    assert in_universe(S({"x": 0}), U1)


# ---------------------------------------------------------------------------
# Satisfaction: directed vs oracle, no-clip corners


_PROBES = [
    "emp",
    "x == 1 * emp",
    "x |-> 2",
    "x !|->",
    "arr(1, 3)",
    "narr(1, 2) * x == 1",
    "arr(x, x + 1) * narr(x + 1, x + 2)",
    "exists v. x |-> v * v <= 1",
    "x |-> 1 \\/ x |-> 2",
    "b(x) == x * x |-> 0",
    "e(x) == x + 1 * x |-> 0",
]


@pytest.mark.parametrize("text", _PROBES)
def test_directed_matches_naive(text):
    a = parse_assertion(text)
    for st in enumerate_states(U1):
        fast = satisfies(st, a, wmax=U1.witness_max)
        slow = satisfies(st, a, wmax=U1.witness_max, naive=True)
        assert fast == slow, (text, st)


def test_no_clip_below_one():
    # a run that would reach location 0 is unsatisfiable, not shrunk
    for text in ("narr(0, 1)", "arr(0, 2)", "narr(x, x + 1) * x == 0"):
        assert list(models(parse_assertion(text), U2)) == []


def test_empty_interval_unsat():
    assert list(models(parse_assertion("arr(1, 1)"), U2)) == []


def test_duplicate_points_to_unsat():
    a = parse_assertion("x |-> 1 * x |-> 1")
    assert list(models(a, U1)) == []


def test_satisfies_three_valued():
    from islarr.syntax import Assertion
    st = S({"x": 0})
    truncated = Assertion((), truncated=True)
    assert satisfies(st, truncated) is None
    assert satisfies(st, Assertion.false()) is False
    assert satisfies(st, parse_assertion("emp")) is True


def test_models_is_directed_not_exhaustive():
    # limit cuts off generation; exact_only restricts the shape
    a = parse_assertion("x |-> 0")
    only = list(models(a, U2, limit=1))
    assert len(only) == 1
    for st in models(a, U2, exact_only=True):
        assert is_exact(st)


def test_models_agree_with_naive_filter():
    for text in _PROBES:
        a = parse_assertion(text)
        fast = set(models(a, U1))
        slow = set(models(a, U1, naive=True))
        assert fast == slow, text


# ---------------------------------------------------------------------------
# Command denotation


def test_denote_validates_exit():
    with pytest.raises(ValueError):
        denote(parse_command("skip"), "abort", S({"x": 0}), U1)


def test_denote_basic():
    st = S({"x": 0})
    assert denote(parse_command("skip"), "ok", st, U1) == {st}
    assert denote(parse_command("skip"), "er", st, U1) == set()
    assert denote(parse_command("error()"), "er", st, U1) == {st}
    assert denote(parse_command("error()"), "ok", st, U1) == set()
    assert denote(parse_command("x := x + 2"), "ok", st, U1) == \
        {S({"x": 2})}
    assert denote(parse_command("x := *"), "ok", st, U1) == \
        {S({"x": v}) for v in (0, 1, 2)}


def test_denote_assume_filters():
    st = S({"x": 1})
    taken = denote(parse_command("assume(x == 1)"), "ok", st, U1)
    assert taken == {st}
    assert denote(parse_command("assume(x == 0)"), "ok", st, U1) == set()


def test_denote_seq_and_choice():
    st = S({"x": 0})
    c = parse_command("x := 1; error()")
    assert denote(c, "er", st, U1) == {S({"x": 1})}
    c = parse_command("(x := 1) + (x := 2)")
    assert denote(c, "ok", st, U1) == {S({"x": 1}), S({"x": 2})}


def test_denote_star_unrolls_to_loop_bound():
    st = S({"x": 0})
    u = Universe(("x",), 5, 1, loop_bound=3)
    c = parse_command("(x := x + 1)*")
    assert denote(c, "ok", st, u) == {S({"x": v}) for v in range(4)}


def test_denote_local_restores_or_drops():
    st = S({"x": 1, "y": 0})
    c = parse_command("local x in { y := x }")
    out = denote(c, "ok", st, U2)
    assert out == {S({"x": 1, "y": v}) for v in range(4)}
    st2 = S({"y": 0})
    out2 = denote(parse_command("local z in { y := z }"), "ok", st2, U2)
    assert all("z" not in r.store for r in out2)


def test_denote_alloc_places_fresh_blocks():
    st = S({"x": 0})
    u = Universe(("x",), 3, 2)
    out = denote(parse_command("x := alloc(2)"), "ok", st, u)
    bases = {r.store["x"] for r in out}
    assert bases == {1, 2}
    for r in out:
        base = r.store["x"]
        assert (base, base + 2) in r.blocks
        assert r.heap.keys() == {base, base + 1}
    # never faults
    assert denote(parse_command("x := alloc(2)"), "er", st, u) == set()


def test_denote_alloc_avoids_busy_cells():
    st = S({"x": 1}, {1: 0}, [(1, 2)])
    u = Universe(("x",), 3, 2)
    out = denote(parse_command("x := alloc(1)"), "ok", st, u)
    assert {r.store["x"] for r in out} == {2, 3}


def test_denote_free():
    st = S({"x": 1}, {1: 5, 2: 6}, [(1, 3)])
    (ok,) = denote(parse_command("free(x)"), "ok", st, U2)
    assert ok.heap == {1: BOT, 2: BOT}
    assert not ok.blocks
    # er iff the address is not the base of a live block
    assert denote(parse_command("free(x + 1)"), "er", st, U2) == {st}
    assert denote(parse_command("free(x)"), "er", st, U2) == set()


def test_denote_load_and_store():
    st = S({"x": 1, "y": 0}, {1: 7}, [(1, 2)])
    (ok,) = denote(parse_command("y := [x]"), "ok", st, U2)
    assert ok.store["y"] == 7
    (ok,) = denote(parse_command("[x] := 3"), "ok", st, U2)
    assert ok.heap == {1: 3}
    dangling = S({"x": 3, "y": 0}, {1: 7}, [(1, 2)])
    assert denote(parse_command("y := [x]"), "er", dangling, U2) == {dangling}
    assert denote(parse_command("[x] := 0"), "er", dangling, U2) == {dangling}


# ---------------------------------------------------------------------------
# Semantic weakest postcondition


def test_wpo_semantic_filters_to_universe():
    # x := x + 1 pushes x past vmax from the boundary store
    p = parse_assertion("emp")
    out = wpo_semantic(p, parse_command("x := x + 1"), "ok", U1)
    assert out == {S({"x": v}) for v in (1, 2)}


def test_wpo_semantic_loop_depth():
    u = Universe(("x",), 5, 1, loop_bound=2)
    p = parse_assertion("x == 0 * emp")
    out = wpo_semantic(p, parse_command("(x := x + 1)*"), "ok", u)
    assert out == {S({"x": v}) for v in (0, 1, 2)}


def test_wpo_semantic_starts_from_exact_models_only():
    # an inexact model of arr would under-report frees; only exact states
    # seed the image
    p = parse_assertion("arr(1, 2) * x == 1")
    out = wpo_semantic(p, parse_command("free(x)"), "ok", U2)
    assert out
    for st in out:
        assert st.heap[1] is BOT
        assert not st.blocks


# ---------------------------------------------------------------------------
# Serialization


def test_state_json_round_trip():
    st = S({"x": 1}, {1: 4, 2: BOT}, [(1, 2)])
    data = state_to_json(st)
    assert data["heap"] == {"1": 4, "2": "bot"}
    assert state_from_json(data) == st


def test_state_key_prefers_small_states():
    small = S({"x": 0})
    big = S({"x": 2}, {1: 2}, [(1, 2)])
    assert state_key(small) < state_key(big)
    ranked = sorted([big, small], key=state_key)
    assert ranked[0] == small
