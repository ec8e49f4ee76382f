"""Concrete syntax round-trips and error reporting."""

import pytest
from hypothesis import given, settings, strategies as st

from islarr.parser import (
    ParseError, format_assertion, format_command, format_heap, format_term,
    parse_assertion, parse_command, parse_heap, parse_term,
)
from islarr.syntax import (
    Add, Alloc, Arr, Assertion, Assign, Assume, BlockBase, BlockEnd,
    Choice, Disjunct, Emp, Eq, Error, Free, Havoc, Le, Lit, Load, Local,
    LocalInit, Lt, NegArr, Neq, Null, PointsTo, Seq, Skip, Star, Store,
    SymbolicHeap, Var, alpha_eq,
)


# ---------------------------------------------------------------------------
# Terms


@pytest.mark.parametrize("text,term", [
    ("null", Null()),
    ("0", Lit(0)),
    ("37", Lit(37)),
    ("x", Var("x")),
    ("x + 1", Add(Var("x"), Lit(1))),
    ("x + y + 2", Add(Add(Var("x"), Var("y")), Lit(2))),
    ("b(x)", BlockBase(Var("x"))),
    ("e(x + 1)", BlockEnd(Add(Var("x"), Lit(1)))),
    ("(x + 1) + y", Add(Add(Var("x"), Lit(1)), Var("y"))),
])
def test_parse_term(text, term):
    assert parse_term(text) == term


def test_fresh_binder_names_parse():
    assert parse_term("$0") == Var("$0")


# ---------------------------------------------------------------------------
# Heaps and assertions


@pytest.mark.parametrize("text,atoms", [
    ("emp", []),
    ("x |-> 3", [PointsTo(Var("x"), Lit(3))]),
    ("x !|->", [NegArr(Var("x"), Add(Var("x"), Lit(1)))]),
    ("arr(1, 4)", [Arr(Lit(1), Lit(4))]),
    ("narr(x, x + 2)", [NegArr(Var("x"), Add(Var("x"), Lit(2)))]),
    ("x == null", [Eq(Var("x"), Null())]),
    ("x != y", [Neq(Var("x"), Var("y"))]),
    ("x < y", [Lt(Var("x"), Var("y"))]),
    ("x <= 2", [Le(Var("x"), Lit(2))]),
    ("x == 1 * y |-> x", [Eq(Var("x"), Lit(1)), PointsTo(Var("y"), Var("x"))]),
])
def test_parse_heap(text, atoms):
    assert parse_heap(text) == SymbolicHeap(atoms)


def test_parse_assertion_shapes():
    assert parse_assertion("false").is_false()
    a = parse_assertion("exists v w. v == w * emp")
    (d,) = a.disjuncts
    assert d.bound == ("v", "w")
    b = parse_assertion("emp \\/ x |-> 1")
    assert len(b.disjuncts) == 2


def test_exists_scopes_over_one_disjunct():
    a = parse_assertion("exists v. v == 1 * emp \\/ v == 2 * emp")
    first, second = a.disjuncts
    assert first.bound == ("v",)
    assert second.bound == ()


# ---------------------------------------------------------------------------
# Commands


@pytest.mark.parametrize("text,cmd", [
    ("skip", Skip()),
    ("error()", Error()),
    ("x := 1", Assign("x", Lit(1))),
    ("x := *", Havoc("x")),
    ("assume(x == 1)", Assume(SymbolicHeap([Eq(Var("x"), Lit(1))]))),
    ("x := y; y := x", Seq(Assign("x", Var("y")), Assign("y", Var("x")))),
    ("skip; skip; skip", Seq(Skip(), Seq(Skip(), Skip()))),
    ("(x := 1) + (x := 2)", Choice(Assign("x", Lit(1)), Assign("x", Lit(2)))),
    ("skip + error()", Choice(Skip(), Error())),
    ("(x := x + 1)*", Star(Assign("x", Add(Var("x"), Lit(1))))),
    ("skip*", Star(Skip())),
    ("local x in { skip }", Local("x", Skip())),
    ("local x := 2 in { skip }", LocalInit("x", Lit(2), Skip())),
    ("x := alloc(2)", Alloc("x", Lit(2))),
    ("free(x + 1)", Free(Add(Var("x"), Lit(1)))),
    ("x := [y]", Load("x", Var("y"))),
    ("[x] := y + 1", Store(Var("x"), Add(Var("y"), Lit(1)))),
])
def test_parse_command(text, cmd):
    assert parse_command(text) == cmd


def test_choice_binds_tighter_than_seq():
    c = parse_command("skip; skip + error()")
    assert isinstance(c, Seq)
    assert isinstance(c.second, Choice)


def test_star_binds_tightest():
    c = parse_command("skip; skip*")
    assert isinstance(c, Seq)
    assert isinstance(c.second, Star)


# ---------------------------------------------------------------------------
# Errors carry positions


@pytest.mark.parametrize("bad,production", [
    ("x +", parse_term),
    ("x | y", parse_heap),
    ("arr(1)", parse_heap),
    ("exists. emp", parse_assertion),
    ("x :=", parse_command),
    ("free()", parse_command),
    ("x := 1 extra", parse_command),
    ("", parse_command),
])
def test_parse_errors(bad, production):
    with pytest.raises(ParseError):
        production(bad)


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse_assertion("x == 1 *\n? |-> 2")
    assert info.value.line == 2
    assert info.value.col == 1


# ---------------------------------------------------------------------------
# Generated round-trips: format then reparse is the identity


_names = st.sampled_from(["x", "y", "z", "v'", "_t"])

# program positions demand b/e-free terms; assertion positions allow b(t)
# and e(t) as long as t itself is flat
_flat_terms = st.recursive(
    st.one_of(
        st.builds(Lit, st.integers(0, 9)),
        st.just(Null()),
        st.builds(Var, _names),
    ),
    lambda sub: st.builds(Add, sub, sub),
    max_leaves=5,
)


def _terms(depth=2):
    block = st.one_of(
        st.builds(BlockBase, _flat_terms),
        st.builds(BlockEnd, _flat_terms),
    )
    return st.recursive(
        st.one_of(_flat_terms, block),
        lambda sub: st.builds(Add, sub, sub),
        max_leaves=5,
    )


_atoms = st.one_of(
    st.just(Emp()),
    st.builds(PointsTo, _terms(), _terms()),
    st.builds(Arr, _terms(), _terms()),
    st.builds(NegArr, _terms(), _terms()),
    st.builds(Eq, _terms(), _terms()),
    st.builds(Neq, _terms(), _terms()),
    st.builds(Lt, _terms(), _terms()),
    st.builds(Le, _terms(), _terms()),
)

_heaps = st.lists(_atoms, max_size=4).map(SymbolicHeap)

_pure_atoms = st.one_of(
    st.builds(Eq, _terms(), _terms()),
    st.builds(Neq, _terms(), _terms()),
    st.builds(Lt, _terms(), _terms()),
    st.builds(Le, _terms(), _terms()),
)

_pure_heaps = st.lists(_pure_atoms, max_size=3).map(SymbolicHeap)


@st.composite
def _disjuncts(draw):
    heap = draw(_heaps)
    bound = draw(st.lists(st.sampled_from(["u", "w"]), max_size=2,
                          unique=True))
    return Disjunct(tuple(bound), heap)


_assertions = st.builds(
    Assertion,
    st.lists(_disjuncts(), max_size=3).map(tuple),
)


def _commands(depth=2):
    leaf = st.one_of(
        st.just(Skip()),
        st.just(Error()),
        st.builds(Assign, _names, _flat_terms),
        st.builds(Havoc, _names),
        st.builds(Assume, _pure_heaps),
        st.builds(Alloc, _names, _flat_terms),
        st.builds(Free, _flat_terms),
        st.builds(Load, _names, _flat_terms),
        st.builds(Store, _flat_terms, _flat_terms),
    )
    return st.recursive(
        leaf,
        lambda sub: st.one_of(
            st.builds(Seq, sub, sub),
            st.builds(Choice, sub, sub),
            st.builds(Star, sub),
            st.builds(Local, _names, sub),
            st.builds(LocalInit, _names, _flat_terms, sub),
        ),
        max_leaves=6,
    )


@settings(max_examples=150, deadline=None)
@given(_terms())
def test_term_round_trip(t):
    assert parse_term(format_term(t)) == t


@settings(max_examples=150, deadline=None)
@given(_heaps)
def test_heap_round_trip(psi):
    assert parse_heap(format_heap(psi)) == psi


@settings(max_examples=150, deadline=None)
@given(_assertions)
def test_assertion_round_trip(a):
    back = parse_assertion(format_assertion(a))
    if not a.disjuncts:
        assert back.is_false()
    else:
        assert alpha_eq(back, a)


@settings(max_examples=200, deadline=None)
@given(_commands())
def test_command_round_trip(c):
    assert parse_command(format_command(c)) == c
