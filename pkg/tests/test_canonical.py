"""Order-case splitting and canonical forms."""

import math

import pytest

from islarr.canonical import (
    CaseLimitError, DEFAULT_CASE_CAP, cano, compare_terms, entailed_case,
    is_canonical, is_canonical_disjunct, iter_cases, order_cases,
    order_terms,
)
from islarr.parser import parse_assertion, parse_command, parse_heap
from islarr.semantics import (
    ConcreteState, Universe, enumerate_states, eval_pure_atom, models,
)
from islarr.syntax import (
    Assertion, BlockBase, Eq, Lit, Lt, Var, command_term_set,
)

x, y, z = Var("x"), Var("y"), Var("z")


# ---------------------------------------------------------------------------
# Case counts against the ordered-set-partition recurrence


def _osp(n):
    # ordered set partitions: a(n) = sum_k C(n,k) a(n-k)
    if n == 0:
        return 1
    return sum(math.comb(n, k) * _osp(n - k) for k in range(1, n + 1))


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_case_count_matches_recurrence(n):
    # null heads the chain, so terms merged into its group stop splitting
    expected = sum(math.comb(n, k) * _osp(n - k) for k in range(n + 1))
    terms = [x, y, z][:n]
    assert len(order_cases(terms)) == expected


def test_case_cap_enforced():
    with pytest.raises(CaseLimitError):
        order_cases([x, y, z], cap=2)


def test_cases_are_distinct():
    cases = order_cases([x, y])
    assert len(set(cases)) == len(cases)


# ---------------------------------------------------------------------------
# Soundness and coverage: every store picks exactly one case


def _pure_state(store, heap=None, blocks=()):
    return ConcreteState(store, heap or {}, blocks)


def test_exactly_one_case_per_store():
    cases = order_cases([x, y])
    for vx in range(4):
        for vy in range(4):
            st = _pure_state({"x": vx, "y": vy})
            hits = [cs for cs in cases
                    if all(eval_pure_atom(a, st) for a in cs)]
            assert len(hits) == 1, (vx, vy)


def test_exactly_one_case_with_block_terms():
    cases = order_cases([x, BlockBase(x)])
    u = Universe(("x",), 3, 2)
    for st in enumerate_states(u):
        hits = [cs for cs in cases
                if all(eval_pure_atom(a, st) for a in cs)]
        assert len(hits) == 1, st


def test_pruned_cases_lose_no_states():
    # pruning drops provably-unsat cases only, so real states still land
    # in exactly one survivor
    kept = list(iter_cases([x, BlockBase(x)], prune=True))
    u = Universe(("x",), 3, 2)
    for st in enumerate_states(u):
        hits = [cs for cs in kept
                if all(eval_pure_atom(a, st) for a in cs)]
        assert len(hits) == 1, st
    assert len(kept) < len(order_cases([x, BlockBase(x)]))


# ---------------------------------------------------------------------------
# Reading a chain back from a context


def test_compare_terms():
    assert compare_terms([Eq(x, y)], x, y) == "="
    assert compare_terms([Lt(x, y)], x, y) == "<"
    assert compare_terms([Lt(y, x)], x, y) == ">"
    assert compare_terms([], x, y) is None


def test_entailed_case_builds_groups():
    hyp = [Eq(x, Lit(1)), Eq(y, Lit(2))]
    groups = entailed_case(hyp, [x, y])
    assert groups is not None
    assert [g[0] for g in groups][1:] == [x, y]


def test_entailed_case_undecided():
    assert entailed_case([], [x]) is None


def test_entailed_case_merges_null_zero():
    groups = entailed_case([Eq(x, Lit(0))], [x])
    assert groups is not None
    assert len(groups) == 1
    assert x in groups[0]


# ---------------------------------------------------------------------------
# cano


def test_cano_case_counts():
    emp = parse_assertion("emp")
    assert len(cano(emp, parse_command("free(x)")).disjuncts) == 4
    assert len(cano(emp, parse_command("x := [y]")).disjuncts) == 16
    full = cano(emp, parse_command("free(x)"), drop_inconsistent=False)
    assert len(full.disjuncts) == 26


def test_cano_collapses_provable_equalities():
    p = parse_assertion("x == y * emp")
    assert len(cano(p, parse_command("free(x)")).disjuncts) == 4


def test_cano_output_is_canonical():
    for pre, cmd in [
        ("emp", "free(x)"),
        ("x |-> 1", "y := [x]"),
        ("arr(y, y + 2)", "[y + 1] := 0"),
    ]:
        p, c = parse_assertion(pre), parse_command(cmd)
        assert is_canonical(cano(p, c), c)


def test_plain_assertion_is_not_canonical_for_a_command():
    p = parse_assertion("emp")
    c = parse_command("free(x)")
    assert not is_canonical(p, c)
    assert is_canonical(p, ())


def test_cano_preserves_models():
    u = Universe(("x", "y"), 3, 2)
    for pre, cmd in [
        ("emp", "free(x)"),
        ("x |-> 1", "y := [x]"),
        ("x <= 2 * emp", "free(y)"),
        ("exists v. x |-> v", "free(x)"),
    ]:
        p, c = parse_assertion(pre), parse_command(cmd)
        q = cano(p, c)
        assert set(models(p, u)) == set(models(q, u)), (pre, cmd)


def test_cano_renames_binders_away_from_command():
    p = parse_assertion("exists v. v == 1 * emp")
    c = parse_command("v := 0")
    q = cano(p, c)
    for d in q.disjuncts:
        assert "v" not in d.bound
    u = Universe(("v",), 2, 1)
    assert set(models(p, u)) == set(models(q, u))


def test_cano_propagates_truncation():
    p = Assertion(parse_assertion("emp").disjuncts, truncated=True)
    assert cano(p, parse_command("skip")).truncated


def test_cano_raises_past_the_cap():
    p = parse_assertion("x |-> 0 * y |-> 0 * z |-> 0")
    with pytest.raises(CaseLimitError):
        cano(p, parse_command("free(x)"), case_cap=4)


def test_order_terms_include_command_footprint():
    psi = parse_heap("x |-> 1")
    cmd = parse_command("free(y)")
    terms = order_terms(psi, command_term_set(cmd))
    assert x in terms and y in terms
    assert BlockBase(y) in terms


def test_default_cap_is_modest():
    assert DEFAULT_CASE_CAP == 7
