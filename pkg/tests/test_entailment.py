"""Pure entailment engines and assertion-level entailment."""

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from islarr.entailment import (
    AssertionEntailment, PureResult, decide, default_bound, entails_assertion,
    entails_pure, entails_pure_any, negate_atom, pure_closure, sat_pure,
)
from islarr.parser import parse_assertion, parse_heap
from islarr.semantics import Universe, models, satisfies, state_key
from islarr.syntax import (
    Add, Arr, BlockBase, BlockEnd, Eq, Le, Lit, Lt, NegArr, Neq, Null,
    PointsTo, SymbolicHeap, Var,
)

x, y, z = Var("x"), Var("y"), Var("z")


# ---------------------------------------------------------------------------
# An evaluator of our own for witness checking


def _eval(t, venv, fenv):
    if isinstance(t, Null):
        return 0
    if isinstance(t, Lit):
        return t.value
    if isinstance(t, Var):
        return venv[t.name]
    if isinstance(t, Add):
        return _eval(t.left, venv, fenv) + _eval(t.right, venv, fenv)
    if isinstance(t, BlockBase):
        return fenv[("b", _eval(t.arg, venv, fenv))]
    if isinstance(t, BlockEnd):
        return fenv[("e", _eval(t.arg, venv, fenv))]
    raise TypeError(t)


def _holds(a, venv, fenv):
    l, r = _eval(a.left, venv, fenv), _eval(a.right, venv, fenv)
    if isinstance(a, Eq):
        return l == r
    if isinstance(a, Neq):
        return l != r
    if isinstance(a, Le):
        return l <= r
    return l < r


def _split_witness(witness):
    venv, fenv = {}, {}
    for k, v in witness.items():
        if "(" in k:
            tag, arg = k[:-1].split("(")
            fenv[(tag, int(arg))] = v
        else:
            venv[k] = v
    return venv, fenv


def _check_witness(atoms, witness):
    venv, fenv = _split_witness(witness)
    return all(_holds(a, venv, fenv) for a in atoms)


# ---------------------------------------------------------------------------
# Closure


def test_pure_closure_orders_runs():
    psi = parse_heap("arr(x, y) * x == 1")
    got = set(pure_closure(psi))
    assert Lt(x, y) in got
    assert Le(Lit(1), x) in got
    assert Eq(x, Lit(1)) in got


def test_pure_closure_pins_points_to():
    psi = parse_heap("y |-> 3")
    assert Le(Lit(1), y) in pure_closure(psi)


def test_pure_closure_on_negative_runs():
    psi = parse_heap("narr(z, z + 2)")
    got = set(pure_closure(psi))
    assert Lt(z, Add(z, Lit(2))) in got
    assert Le(Lit(1), z) in got


# ---------------------------------------------------------------------------
# entails_pure, both engines


_YES = [
    ([Lt(x, y)], Le(x, y)),
    ([Le(x, Lit(2)), Le(Lit(2), x)], Eq(x, Lit(2))),
    ([Eq(x, y), Eq(y, z)], Eq(x, z)),
    ([Lt(x, y), Lt(y, z)], Lt(x, z)),
    ([Eq(x, Add(y, Lit(1)))], Neq(x, y)),
    ([Le(Lit(3), x)], Neq(x, Lit(0))),
    ([Eq(BlockBase(x), y), Lt(y, Lit(2))], Le(BlockBase(x), Lit(1))),
]

_NO = [
    ([Le(x, y)], Lt(x, y)),
    ([], Eq(x, Lit(0))),
    ([Le(x, Lit(3))], Le(x, Lit(2))),
    ([Neq(x, y)], Lt(x, y)),
    ([Eq(BlockBase(x), Lit(1))], Eq(BlockEnd(x), Lit(2))),
]


@pytest.mark.parametrize("hyp,concl", _YES)
def test_entails_yes_both_engines(hyp, concl):
    assert entails_pure(hyp, concl, method="fm").status == "yes"
    assert entails_pure(hyp, concl, method="enum").status == "yes"


@pytest.mark.parametrize("hyp,concl", _NO)
def test_entails_no_both_engines(hyp, concl):
    for method in ("fm", "enum"):
        res = entails_pure(hyp, concl, method=method)
        assert res.status == "no", method
        assert res.witness is not None
        assert _check_witness(hyp, res.witness)
        venv, fenv = _split_witness(res.witness)
        assert not _holds(concl, venv, fenv)


def test_enum_results_are_marked_bounded():
    res = entails_pure([Lt(x, y)], Le(x, y), method="enum")
    assert res.bounded
    assert not entails_pure([Lt(x, y)], Le(x, y), method="fm").bounded


def test_heap_hypothesis_contributes_closure():
    assert entails_pure(parse_heap("arr(x, y)"), Lt(x, y)).status == "yes"
    assert entails_pure(parse_heap("x |-> 0"), Neq(x, Null())).status == "yes"


def test_method_validation():
    with pytest.raises(ValueError):
        entails_pure([], Eq(x, x), method="magic")


def test_decide_wrapper():
    assert decide([Lt(x, y)], Le(x, y)) is True
    assert decide([Le(x, y)], Lt(x, y)) is False


# ---------------------------------------------------------------------------
# Random agreement between the engines


_rand_terms = st.one_of(
    st.builds(Lit, st.integers(0, 3)),
    st.sampled_from([x, y]),
    st.builds(Add, st.sampled_from([x, y]), st.builds(Lit, st.integers(0, 2))),
)

_rand_atoms = st.one_of(
    st.builds(Eq, _rand_terms, _rand_terms),
    st.builds(Neq, _rand_terms, _rand_terms),
    st.builds(Le, _rand_terms, _rand_terms),
    st.builds(Lt, _rand_terms, _rand_terms),
)


@settings(max_examples=120, deadline=None)
@given(st.lists(_rand_atoms, max_size=3), _rand_atoms)
def test_engines_never_contradict(hyp, concl):
    fm = entails_pure(hyp, concl, method="fm")
    enum = entails_pure(hyp, concl, method="enum")
    definite = {"yes", "no"}
    if fm.status in definite and enum.status in definite:
        assert fm.status == enum.status


@settings(max_examples=120, deadline=None)
@given(st.lists(_rand_atoms, max_size=3))
def test_sat_matches_brute_force(atoms):
    res = sat_pure(atoms)
    bound = default_bound(tuple(atoms))
    names = sorted({n for a in atoms
                    for t in (a.left, a.right)
                    for n in _term_vars(t)})
    found = None
    for vals in itertools.product(range(bound + 1), repeat=len(names)):
        venv = dict(zip(names, vals))
        if all(_holds(a, venv, {}) for a in atoms):
            found = venv
            break
    if res.status == "unsat":
        assert found is None
    elif res.status == "sat":
        assert found is not None
        assert _check_witness(atoms, res.witness)


def _term_vars(t):
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Add):
        return _term_vars(t.left) | _term_vars(t.right)
    return set()


# ---------------------------------------------------------------------------
# sat_pure corners


def test_sat_reports_witness():
    res = sat_pure([Lt(x, y), Le(y, Lit(3))])
    assert res.status == "sat"
    assert _check_witness([Lt(x, y), Le(y, Lit(3))], res.witness)


def test_unsat_cycle():
    assert sat_pure([Lt(x, y), Lt(y, x)]).status == "unsat"


def test_block_axioms_only_shrink():
    # b(1) = 2 would put location 1 in a block that starts above it
    atoms = [Eq(BlockBase(x), Lit(2)), Eq(x, Lit(1))]
    assert sat_pure(atoms).status == "sat"
    assert sat_pure(atoms, block_axioms=True).status == "unsat"


def test_block_axioms_allow_the_empty_story():
    # everything outside any block: b and e are both zero
    atoms = [Eq(BlockBase(x), Lit(0)), Eq(BlockEnd(x), Lit(0))]
    assert sat_pure(atoms, block_axioms=True).status == "sat"


def test_uncertified_mode_never_says_sat():
    res = sat_pure([Eq(x, Lit(1))], certify=False)
    assert res.status in ("unsat", "unknown")
    assert sat_pure([Lt(x, x)], certify=False).status == "unsat"


def test_negate_atom_is_an_involution_on_eqs():
    assert negate_atom(negate_atom(Eq(x, y))) == Eq(x, y)
    assert negate_atom(Le(x, y)) == Lt(y, x)
    assert negate_atom(Lt(x, y)) == Le(y, x)


def test_entails_pure_any():
    res = entails_pure_any([Le(x, Lit(1))], [Eq(x, Lit(0)), Eq(x, Lit(1))])
    assert res.status == "yes"
    res = entails_pure_any([Le(x, Lit(2))], [Eq(x, Lit(0)), Eq(x, Lit(1))])
    assert res.status == "no"
    assert res.witness["x"] == 2


# ---------------------------------------------------------------------------
# Assertion-level entailment


U = Universe(("x", "y"), 3, 2)


def test_entails_assertion_yes():
    p = parse_assertion("x == 1 * emp")
    q = parse_assertion("x <= 2 * emp")
    assert entails_assertion(p, q, U).status == "yes"


def test_entails_assertion_no_returns_least_counter():
    p = parse_assertion("x <= 2 * emp")
    q = parse_assertion("x <= 1 * emp")
    res = entails_assertion(p, q, U)
    assert res.status == "no"
    assert res.counter.store["x"] == 2
    # least by the reporting order among all failing models
    failing = [s for s in models(p, U)
               if not satisfies(s, q, wmax=U.witness_max)]
    assert res.counter == min(failing, key=state_key)


def test_entails_assertion_spatial():
    p = parse_assertion("x |-> 1")
    q = parse_assertion("exists v. x |-> v")
    assert entails_assertion(p, q, U).status == "yes"
    assert entails_assertion(q, p, U).status == "no"


def test_entails_assertion_bounded_on_truncation():
    from islarr.syntax import Assertion
    p = parse_assertion("x == 1 * emp")
    q = Assertion((), truncated=True)
    assert entails_assertion(p, q, U).status == "bounded"
    pt = Assertion(p.disjuncts, truncated=True)
    full = parse_assertion("x == 1 * emp \\/ x == 2 * emp")
    assert entails_assertion(pt, full, U).status == "bounded"


def test_entails_assertion_exact_only():
    # arr has inexact models (block wider than the run) that exact-state
    # reasoning never sees
    p = parse_assertion("arr(1, 2) * x == 1")
    q = parse_assertion("b(x) == 1 * e(x) == 2 * arr(1, 2)")
    assert entails_assertion(p, q, U, exact_only=True).status == "yes"
    assert entails_assertion(p, q, U).status == "no"


def test_false_entails_everything():
    from islarr.syntax import Assertion
    assert entails_assertion(Assertion.false(),
                             parse_assertion("x == 0 * emp"), U)
