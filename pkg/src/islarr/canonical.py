"""Canonical forms: every disjunct decides the order of its terms.

A case over a finite set T of terms is a chain

    null (= t ...) < t (= t ...) < ... < t (= t ...)

fixing, for every pair drawn from T and null, whether the two sides are
equal or strictly ordered.  T may contain block-boundary terms b(t) and
e(t); deciding their position against null is exactly what lets the
error rows of the postcondition transformer recognize a dangling
address.  Cases are represented as pure-atom tuples: equalities link the
members of a group in term order, and one strict comparison links
consecutive group representatives.  Exactly one case holds in any
valuation, so conjoining each case in turn to a symbolic heap yields an
equivalent disjunction whose disjuncts each know their order -- which is
what the postcondition transformer needs to name array boundaries.

The number of cases grows like the ordered Bell numbers, so generation is
capped (seven terms is already ~645k chains before pruning) and a
backtracking generator discards order prefixes that contradict the heap's
pure part as it goes.
"""

from __future__ import annotations

import itertools

from .syntax import (
    Add, Assertion, Command, Disjunct, Eq, FreshNames, Lit, Lt, Null,
    SymbolicHeap, Term, assertion_vars, command_term_set, command_vars,
    rename_bound, heap_term_set, term_key, term_vars,
)
from .entailment import decide, pure_closure, sat_pure

DEFAULT_CASE_CAP = 7

NULL = Null()


class CaseLimitError(ValueError):
    """Raised instead of materializing a hopeless number of order cases."""

    def __init__(self, count, cap):
        super().__init__("%d order terms exceed the case cap %d"
                         % (count, cap))
        self.count = count
        self.cap = cap


def _sorted_terms(terms):
    return tuple(sorted(set(terms), key=term_key))


def _group_atoms(group, prev_rep):
    """Chain atoms contributed by one group: internal equalities plus the
    strict link from the previous representative."""
    atoms = []
    if prev_rep is not None:
        atoms.append(Lt(prev_rep, group[0]))
    for a, b in zip(group, group[1:]):
        atoms.append(Eq(a, b))
    return atoms


def _submasks(mask):
    """Nonempty submasks of a bitmask, ascending."""
    sub = mask & -mask if mask else 0
    while sub:
        yield sub
        if sub == mask:
            return
        sub = (sub - mask) & mask


def _mask_terms(terms, mask):
    return tuple(t for i, t in enumerate(terms) if mask >> i & 1)


def _const(t):
    if isinstance(t, Null):
        return 0
    if isinstance(t, Lit):
        return t.value
    if isinstance(t, Add):
        a, b = _const(t.left), _const(t.right)
        if a is not None and b is not None:
            return a + b
    return None


def _const_false(atoms):
    """Does some atom compare two constants and get it wrong?  Cheap
    pre-filter: most dead order prefixes die on literal ordering."""
    for a in atoms:
        if isinstance(a, (Eq, Lt)):
            x, y = _const(a.left), _const(a.right)
            if x is None or y is None:
                continue
            if isinstance(a, Eq):
                if x != y:
                    return True
            elif not x < y:
                return True
    return False


def order_cases(terms, cap=DEFAULT_CASE_CAP):
    """All order cases of terms plus null, as atom tuples."""
    return list(iter_cases(terms, cap=cap))


def iter_cases(terms, cap=DEFAULT_CASE_CAP, context=None, prune=False,
               block_axioms=True):
    """Generate order cases; with prune=True, skip every case whose atoms
    together with the context's pure consequences are provably
    unsatisfiable, discarding entire prefixes early.  Pruning drops only
    proven-unsatisfiable cases, so the surviving disjunction still covers
    every state."""
    terms = _sorted_terms(terms)
    if len(terms) > cap:
        raise CaseLimitError(len(terms), cap)
    base = tuple(context) if context else ()
    full = (1 << len(terms)) - 1

    def alive(prefix):
        if not prune:
            return True
        if _const_false(prefix):
            return False
        res = sat_pure(base + tuple(prefix), block_axioms=block_axioms,
                       certify=False)
        return res.status != "unsat"

    def rest(mask, prefix, last_rep):
        if mask == 0:
            yield tuple(prefix)
            return
        for sub in _submasks(mask):
            group = _mask_terms(terms, sub)
            atoms = _group_atoms(group, last_rep)
            prefix.extend(atoms)
            if alive(prefix):
                yield from rest(mask & ~sub, prefix, group[0])
            del prefix[len(prefix) - len(atoms):]

    for null_sub in itertools.chain([0], _submasks(full)):
        g0 = (NULL,) + _mask_terms(terms, null_sub)
        atoms = _group_atoms(g0, None)
        if not alive(atoms):
            continue
        yield from rest(full & ~null_sub, list(atoms), NULL)


# ---------------------------------------------------------------------------
# Reading an order back off a pure context


def compare_terms(hyp, a: Term, b: Term):
    """'<', '=', '>' when the context decides the pair, else None."""
    if decide(hyp, Eq(a, b)):
        return "="
    if decide(hyp, Lt(a, b)):
        return "<"
    if decide(hyp, Lt(b, a)):
        return ">"
    return None


def entailed_case(hyp, terms):
    """The chain the context entails over terms plus null, as a list of
    groups (group 0 holds null); None when some pair is undecided.

    hyp may be a SymbolicHeap or pure atoms; decisions are pairwise
    entailment queries, never case enumeration."""
    groups = [[NULL]]
    for t in _sorted_terms(terms):
        placed = False
        for i, g in enumerate(groups):
            rel = compare_terms(hyp, t, g[0])
            if rel is None:
                return None
            if rel == "=":
                g.append(t)
                placed = True
                break
            if rel == "<":
                if i == 0:
                    return None  # below null cannot happen in a sat context
                groups.insert(i, [t])
                placed = True
                break
        if not placed:
            groups.append([t])
    return [sorted(g, key=term_key) for g in groups]


def case_atoms(groups):
    atoms = []
    prev = None
    for g in groups:
        atoms.extend(_group_atoms(tuple(g), prev))
        prev = g[0]
    return tuple(atoms)


# ---------------------------------------------------------------------------
# Canonicalization


def _command_terms(c):
    if isinstance(c, Command):
        return set(command_term_set(c))
    return set(c)


def _avoid_names(c):
    if isinstance(c, Command):
        return set(command_vars(c))
    names = set()
    for t in c:
        names |= term_vars(t)
    return names


def order_terms(psi: SymbolicHeap, cmd_terms) -> tuple:
    """Terms whose order a canonical disjunct must decide: every term of
    the heap's atoms and of the command, block boundaries included."""
    return _sorted_terms(set(heap_term_set(psi)) | set(cmd_terms))


def _collapse(context, terms):
    """One representative per provable-equality class.  A term the context
    already pins to an earlier one contributes no new ordering choice; its
    position follows from the equality, so splitting on it again would
    only duplicate cases."""
    reps = []
    for t in terms:
        if not any(decide(context, Eq(t, r)) for r in reps):
            reps.append(t)
    return tuple(reps)


def cano(p: Assertion, c, case_cap=DEFAULT_CASE_CAP,
         drop_inconsistent=True) -> Assertion:
    """Split every disjunct over all order cases of its terms and the
    command's, renaming bound variables away from the command first.

    c may be a command or a bare iterable of terms.  With
    drop_inconsistent (the default) provably unsatisfiable cases are
    discarded during generation; switching it off materializes every
    syntactic case."""
    cmd_terms = _command_terms(c)
    avoid = _avoid_names(c)
    used = assertion_vars(p) | avoid
    fresh = FreshNames(used)
    out = []
    for d in p.disjuncts:
        clash = [x for x in d.bound if x in avoid]
        if clash:
            d = rename_bound(d, {x: fresh.new() for x in clash})
        terms = order_terms(d.heap, cmd_terms)
        context = pure_closure(d.heap) if drop_inconsistent else None
        if context is not None:
            terms = _collapse(context, terms)
        for atoms in iter_cases(terms, cap=case_cap, context=context,
                                prune=drop_inconsistent):
            out.append(Disjunct(d.bound, d.heap.star(SymbolicHeap(atoms)),
                                d.origin))
    return Assertion(tuple(out), p.truncated)


def is_canonical_disjunct(d: Disjunct, cmd_terms=()) -> bool:
    """Does the disjunct decide the order of all its terms (and the given
    command terms)?"""
    terms = order_terms(d.heap, _command_terms(cmd_terms))
    return entailed_case(pure_closure(d.heap), terms) is not None


def is_canonical(p: Assertion, c=()) -> bool:
    cmd_terms = _command_terms(c)
    return all(is_canonical_disjunct(d, cmd_terms) for d in p.disjuncts)
