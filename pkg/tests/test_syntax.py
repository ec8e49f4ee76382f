"""Structural invariants of terms, assertions, and commands."""

import pytest

from islarr.syntax import (
    Add, Alloc, Arr, Assertion, Assign, Assume, BlockBase, BlockEnd,
    Choice, Disjunct, Emp, Eq, Free, Havoc, Le, Lit, Load, Local,
    LocalInit, Lt, NegArr, Neq, Null, PointsTo, Seq, Skip, Star, Store,
    SymbolicHeap, Var, alpha_eq, assertion_vars, command_term_set,
    command_vars, desugar_local_init, exits, FreshNames, heap_term_set,
    heap_term_set_be_free, heap_vars, modified_vars, rename_bound,
    replace_term_set, subst_assertion, subst_term, term_key, term_set,
    term_vars,
)

x, y, z = Var("x"), Var("y"), Var("z")


# ---------------------------------------------------------------------------
# Terms


def test_terms_are_values():
    assert Add(x, Lit(1)) == Add(Var("x"), Lit(1))
    assert len({Null(), Lit(0), x, Add(x, Lit(1))}) == 4


def test_term_set_collects_subterms():
    t = Add(BlockBase(Add(x, Lit(1))), y)
    assert Add(x, Lit(1)) in term_set(t)
    assert x in term_set(t)
    assert t in term_set(t)


def test_term_vars():
    assert term_vars(Add(BlockEnd(x), y)) == {"x", "y"}
    assert term_vars(Lit(3)) == frozenset()


def test_subst_term_replaces_free_occurrences():
    t = Add(x, BlockBase(x))
    assert subst_term(t, {"x": Lit(2)}) == Add(Lit(2), BlockBase(Lit(2)))


def test_term_key_is_a_total_order():
    terms = [Null(), Lit(0), Lit(5), x, y, Add(x, Lit(1)), BlockBase(x)]
    keys = [term_key(t) for t in terms]
    assert len(set(keys)) == len(terms)
    assert sorted(terms, key=term_key) == sorted(terms[::-1], key=term_key)


# ---------------------------------------------------------------------------
# Heaps


def test_heap_is_a_sorted_multiset():
    a = SymbolicHeap([PointsTo(x, Lit(1)), Eq(x, Lit(2))])
    b = SymbolicHeap([Eq(x, Lit(2)), PointsTo(x, Lit(1))])
    assert a == b and hash(a) == hash(b)


def test_heap_keeps_duplicates():
    two = SymbolicHeap([PointsTo(x, Lit(1)), PointsTo(x, Lit(1))])
    assert len(two.atoms) == 2


def test_emp_is_dropped_at_construction():
    assert SymbolicHeap([Emp(), Eq(x, y)]) == SymbolicHeap([Eq(x, y)])
    assert SymbolicHeap([Emp()]).atoms == ()


def test_star_and_without():
    a = SymbolicHeap([PointsTo(x, Lit(1))])
    b = a.star(SymbolicHeap([Eq(x, y)]))
    assert len(b.atoms) == 2
    assert b.without([Eq(x, y)]) == a


def test_heap_term_set_includes_block_bounds():
    psi = SymbolicHeap([Eq(BlockBase(x), x), PointsTo(x, y)])
    assert BlockBase(x) in heap_term_set(psi)
    assert BlockBase(x) not in heap_term_set_be_free(psi)
    assert x in heap_term_set_be_free(psi)


def test_replace_term_set_rejects_nested_targets():
    psi = SymbolicHeap([Eq(Add(x, Lit(1)), y)])
    with pytest.raises(ValueError):
        replace_term_set(psi, [x, Add(x, Lit(1))], Null())


def test_replace_term_set_is_simultaneous():
    psi = SymbolicHeap([Eq(BlockBase(x), BlockEnd(x))])
    out = replace_term_set(psi, [BlockBase(x), BlockEnd(x)], Null())
    assert out == SymbolicHeap([Eq(Null(), Null())])


# ---------------------------------------------------------------------------
# Assertions


def test_disjunct_rejects_duplicate_binders():
    with pytest.raises(ValueError):
        Disjunct(("v", "v"), SymbolicHeap())


def test_false_is_the_empty_disjunction():
    assert Assertion.false().is_false()
    assert not Assertion((), truncated=True).is_false()


def test_union_carries_truncation():
    a = Assertion.of_heap(SymbolicHeap())
    b = Assertion((), truncated=True)
    assert a.union(b).truncated


def test_free_vars_sees_through_binders():
    d = Disjunct(("v",), SymbolicHeap([Eq(Var("v"), x)]))
    assert Assertion((d,)).free_vars() == {"x"}
    assert assertion_vars(Assertion((d,))) == {"v", "x"}


def test_rename_bound_requires_fresh_targets():
    d = Disjunct(("v",), SymbolicHeap([Eq(Var("v"), x)]))
    with pytest.raises(ValueError):
        rename_bound(d, {"v": "x"})
    renamed = rename_bound(d, {"v": "w"})
    assert renamed.bound == ("w",)


def test_subst_assertion_avoids_capture():
    # substituting v for x must not let the binder v grab it
    d = Disjunct(("v",), SymbolicHeap([Eq(Var("v"), x)]))
    out = subst_assertion(Assertion((d,)), {"x": Var("v")})
    (nd,) = out.disjuncts
    assert nd.bound != ("v",)
    assert Var("v") in heap_term_set(nd.heap)


def test_origin_does_not_affect_equality():
    d1 = Disjunct((), SymbolicHeap(), origin="free(x)")
    d2 = Disjunct((), SymbolicHeap())
    assert d1 == d2


# ---------------------------------------------------------------------------
# Alpha equivalence


def _one(bound, atoms):
    return Assertion((Disjunct(bound, SymbolicHeap(atoms)),))


def test_alpha_eq_renames_binders():
    a = _one(("v",), [PointsTo(Var("v"), Lit(1))])
    b = _one(("w",), [PointsTo(Var("w"), Lit(1))])
    assert alpha_eq(a, b)


def test_alpha_eq_reorders_binders_and_disjuncts():
    a = _one(("v", "w"), [Eq(Var("v"), Var("w"))])
    b = _one(("w", "v"), [Eq(Var("v"), Var("w"))])
    assert alpha_eq(a, b)
    c = _one((), [Eq(x, Lit(1))]).union(_one((), [Eq(x, Lit(2))]))
    d = _one((), [Eq(x, Lit(2))]).union(_one((), [Eq(x, Lit(1))]))
    assert alpha_eq(c, d)


def test_alpha_eq_distinguishes_free_variables():
    assert not alpha_eq(_one((), [Eq(x, Lit(1))]),
                        _one((), [Eq(y, Lit(1))]))


def test_alpha_eq_minds_truncation():
    a = Assertion((), truncated=True)
    assert not alpha_eq(a, Assertion.false())
    assert alpha_eq(a, Assertion((), truncated=True))


# ---------------------------------------------------------------------------
# Commands


def test_exits():
    assert exits() == ("ok", "er")


def test_modified_vars():
    c = Seq(Assign("x", Lit(1)),
            Choice(Havoc("y"), Load("z", x)))
    assert modified_vars(c) == {"x", "y", "z"}
    assert modified_vars(Store(x, y)) == frozenset()
    assert modified_vars(Free(x)) == frozenset()


def test_local_shadows_its_variable():
    c = Local("x", Assign("x", Lit(1)))
    assert modified_vars(c) == frozenset()
    assert command_vars(c) == {"x"}


def test_command_term_set_store_addresses():
    # the write needs both endpoints of the written cell and its block
    c = Store(x, Lit(7))
    ts = command_term_set(c)
    assert Add(x, Lit(1)) in ts
    assert BlockBase(x) in ts
    assert Lit(7) in ts


def test_command_term_set_free_names_block_bounds():
    ts = command_term_set(Free(x))
    assert BlockBase(x) in ts and BlockEnd(x) in ts


def test_desugar_local_init():
    c = LocalInit("x", Lit(2), Skip())
    d = desugar_local_init(c)
    assert isinstance(d, Local)
    assert d.body == Seq(Assign("x", Lit(2)), Skip())


def test_star_and_structure_equality():
    c1 = Star(Seq(Skip(), Assign("x", Lit(1))))
    c2 = Star(Seq(Skip(), Assign("x", Lit(1))))
    assert c1 == c2
    assert Alloc("x", Lit(2)) != Alloc("x", Lit(3))


def test_fresh_names_avoid_taken():
    fresh = FreshNames({"x", "y"})
    names = {fresh.new() for _ in range(5)}
    assert len(names) == 5
    assert not names & {"x", "y"}


def test_assume_holds_a_pure_heap():
    a = Assume(SymbolicHeap([Le(x, Lit(2))]))
    assert command_vars(a) == {"x"}
