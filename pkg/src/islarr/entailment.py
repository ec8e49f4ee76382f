"""Pure entailment over natural-number terms with b/e as uninterpreted
functions.

The theory is deliberately relaxed: variables and block-boundary terms
range over the naturals, b(t) and e(t) are opaque function values keyed by
their argument, and nothing forces them to describe a real block layout.
Queries are decided two independent ways:

  fm    Fourier-Motzkin elimination over the rationals, fraction-free,
        with integer tightening of every row (divide by the coefficient
        gcd and floor the constant).  Unsatisfiable means unsatisfiable
        over the integers, so "yes" answers are sound.  A rationally
        satisfiable system is only a "maybe"; a bounded search for an
        integer witness either produces a concrete "no" or gives up.
  enum  brute-force enumeration of all valuations up to a bound,
        interpreting b/e as functions of the evaluated argument.  Complete
        within the bound; answers are bounded.

b(t1) and b(t2) denote the same value whenever t1 and t2 are provably
equal, so fm merges function slots to a fixpoint before deciding.

Disequalities split into two strict branches.  Block axioms (boundaries
are zero or bracket the argument; distinct blocks are disjoint) are *not*
part of entailment; satisfiability checks can opt in, which only ever
rules out more states and is used to discard inconsistent disjuncts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import gcd

from .syntax import (
    Add, Arr, BlockBase, BlockEnd, Emp, Eq, Le, Lit, Lt, NegArr, Neq, Null,
    PointsTo, PureAtom, SymbolicHeap, Term, Var, atom_key,
)

_ROW_CAP = 4000


@dataclass(frozen=True)
class PureResult:
    status: str  # "yes" | "no" | "unknown" (or "sat"/"unsat" from sat_pure)
    witness: dict | None = None
    bounded: bool = False

    def __bool__(self):
        return self.status in ("yes", "sat")


class _Blowup(Exception):
    pass


# ---------------------------------------------------------------------------
# Linear forms.  A form is (const, {slot: coeff}); a slot is ("v", name) or
# ("b"|"e", argform) with argform a hashable frozen linear form.


def _freeze(form):
    const, coeffs = form
    return (const, tuple(sorted(coeffs.items())))


def _thaw(frozen):
    const, items = frozen
    return (const, dict(items))


def linear_form(t: Term):
    if isinstance(t, Null):
        return (0, {})
    if isinstance(t, Lit):
        return (t.value, {})
    if isinstance(t, Var):
        return (0, {("v", t.name): 1})
    if isinstance(t, Add):
        c1, m1 = linear_form(t.left)
        c2, m2 = linear_form(t.right)
        out = dict(m1)
        for k, v in m2.items():
            out[k] = out.get(k, 0) + v
            if out[k] == 0:
                del out[k]
        return (c1 + c2, out)
    if isinstance(t, (BlockBase, BlockEnd)):
        tag = "b" if isinstance(t, BlockBase) else "e"
        return (0, {(tag, _freeze(linear_form(t.arg))): 1})
    raise TypeError(t)


def _max_literal(t: Term) -> int:
    if isinstance(t, Lit):
        return t.value
    if isinstance(t, Add):
        return max(_max_literal(t.left), _max_literal(t.right))
    if isinstance(t, (BlockBase, BlockEnd)):
        return _max_literal(t.arg)
    return 0


def pure_closure(psi: SymbolicHeap):
    """Pure atoms of a symbolic heap plus the pure facts its spatial atoms
    force: arr and narr bounds are ordered and start at a location, a
    points-to address is a location.  (A range reaching below address 1
    has no heap to mean, so satisfiable atoms pin their low end.)"""
    out = list(psi.pure_atoms)
    for a in psi.spatial_atoms:
        if isinstance(a, (Arr, NegArr)):
            out.append(Lt(a.lo, a.hi))
            out.append(Le(Lit(1), a.lo))
        elif isinstance(a, PointsTo):
            out.append(Le(Lit(1), a.addr))
    return tuple(out)


def _as_atoms(hyp):
    if isinstance(hyp, SymbolicHeap):
        return pure_closure(hyp)
    return tuple(hyp)


# ---------------------------------------------------------------------------
# Rows: c + sum coeff*slot >= 0, all integer.


def _row_from_diff(lo_form, hi_form, slack):
    """Row asserting hi - lo - slack >= 0."""
    c = hi_form[0] - lo_form[0] - slack
    coeffs = dict(hi_form[1])
    for k, v in lo_form[1].items():
        coeffs[k] = coeffs.get(k, 0) - v
        if coeffs[k] == 0:
            del coeffs[k]
    return (c, coeffs)


def _atom_rows(a: PureAtom, negate=False):
    """Rows for one comparison (or branch lists when it splits)."""
    l = linear_form(a.left)
    r = linear_form(a.right)
    if isinstance(a, Eq) and not negate or isinstance(a, Neq) and negate:
        return [[_row_from_diff(l, r, 0), _row_from_diff(r, l, 0)]]
    if isinstance(a, Le) and not negate:
        return [[_row_from_diff(l, r, 0)]]
    if isinstance(a, Lt) and not negate:
        return [[_row_from_diff(l, r, 1)]]
    if isinstance(a, Le) and negate:  # not l <= r  ==  r < l
        return [[_row_from_diff(r, l, 1)]]
    if isinstance(a, Lt) and negate:  # not l < r  ==  r <= l
        return [[_row_from_diff(r, l, 0)]]
    # Eq negated or Neq positive: two strict branches
    return [[_row_from_diff(l, r, 1)], [_row_from_diff(r, l, 1)]]


def _tighten(row):
    const, coeffs = row
    if not coeffs:
        return row
    g = 0
    for v in coeffs.values():
        g = gcd(g, abs(v))
    if g <= 1:
        return row
    return (const // g, {k: v // g for k, v in coeffs.items()})


def _canon_rows(rows):
    seen = set()
    out = []
    for row in rows:
        row = _tighten(row)
        key = (row[0], tuple(sorted(row[1].items())))
        if key not in seen:
            seen.add(key)
            out.append(row)
    return out


def _fm_unsat(rows):
    """True when the rows are unsatisfiable over the rationals (hence over
    the integers); False means rationally satisfiable.  Raises _Blowup when
    elimination explodes."""
    rows = _canon_rows(rows)
    while True:
        for const, coeffs in rows:
            if not coeffs and const < 0:
                return True
        vars_left = {k for _, cs in rows for k in cs}
        if not vars_left:
            return False
        # cheapest variable first: fewest lower*upper combinations
        def cost(x):
            pos = sum(1 for _, cs in rows if cs.get(x, 0) > 0)
            neg = sum(1 for _, cs in rows if cs.get(x, 0) < 0)
            return pos * neg
        x = min(vars_left, key=lambda k: (cost(k), k))
        lowers, uppers, rest = [], [], []
        for row in rows:
            a = row[1].get(x, 0)
            if a > 0:
                lowers.append(row)
            elif a < 0:
                uppers.append(row)
            else:
                rest.append(row)
        new = rest
        for cl, ml in lowers:
            al = ml[x]
            for cu, mu in uppers:
                au = -mu[x]
                c = au * cl + al * cu
                coeffs = {}
                for k, v in ml.items():
                    if k != x:
                        coeffs[k] = coeffs.get(k, 0) + au * v
                for k, v in mu.items():
                    if k != x:
                        coeffs[k] = coeffs.get(k, 0) + al * v
                coeffs = {k: v for k, v in coeffs.items() if v != 0}
                new.append((c, coeffs))
        rows = _canon_rows(new)
        if len(rows) > _ROW_CAP:
            raise _Blowup()


def _nonneg_rows(slots):
    return [(0, {s: 1}) for s in slots]


def _collect_slots(rowlists):
    slots = set()
    for rows in rowlists:
        for _, coeffs in rows:
            slots.update(coeffs)
    return slots


# ---------------------------------------------------------------------------
# Congruence closure of b/e slots


def _slot_merge_map(hyp_rows_branches, slots):
    """Map each b/e slot to a representative, merging slots of the same
    function whose arguments are provably equal under every branch of the
    hypothesis.  Iterated to a fixpoint because a merge can strengthen the
    system."""
    merge = {s: s for s in slots}

    def resolve(row):
        const, coeffs = row
        out = {}
        for k, v in coeffs.items():
            k = merge.get(k, k)
            out[k] = out.get(k, 0) + v
            if out[k] == 0:
                del out[k]
        return (const, out)

    def equal_under_all(f1, f2):
        # arg forms are b/e-free, so no recursion through merging
        diff_a = _row_from_diff(_thaw(f1), _thaw(f2), 1)
        diff_b = _row_from_diff(_thaw(f2), _thaw(f1), 1)
        for branch in hyp_rows_branches:
            base = [resolve(r) for r in branch]
            base += _nonneg_rows(_collect_slots([base, [diff_a, diff_b]]))
            for extra in (diff_a, diff_b):
                if not _fm_unsat(base + [extra]):
                    return False
        return True

    changed = True
    while changed:
        changed = False
        be = sorted({merge[s] for s in slots if s[0] in ("b", "e")})
        for s1, s2 in itertools.combinations(be, 2):
            if s1[0] != s2[0] or s1 == s2:
                continue
            if equal_under_all(s1[1], s2[1]):
                for k in merge:
                    if merge[k] == s2:
                        merge[k] = s1
                changed = True
    return merge


def _apply_merge(rows, merge):
    out = []
    for const, coeffs in rows:
        acc = {}
        for k, v in coeffs.items():
            k = merge.get(k, k)
            acc[k] = acc.get(k, 0) + v
            if acc[k] == 0:
                del acc[k]
        out.append((const, acc))
    return out


# ---------------------------------------------------------------------------
# Witness search


class _Fenv(dict):
    def __missing__(self, key):
        self[key] = 0
        return 0


def _form_value(frozen, venv):
    const, items = frozen
    total = const
    for (tag, key), coeff in items:
        total += coeff * venv[key]  # b/e args are b/e-free
    return total


def _complete_point(point, atoms):
    """Turn a slot valuation into (venv, fenv) under the function
    semantics, or None when two slots of the same function disagree on a
    shared argument value.  Variables absent from the rows default to 0."""
    venv = {s[1]: v for s, v in point.items() if s[0] == "v"}
    for a in atoms:
        for side in (a.left, a.right):
            for slot in linear_form(side)[1]:
                if slot[0] == "v":
                    venv.setdefault(slot[1], 0)
                else:
                    for _, name in _iter_arg_vars(slot[1]):
                        venv.setdefault(name, 0)
    fenv = _Fenv()
    for s, v in point.items():
        if s[0] == "v":
            continue
        site = (s[0], _form_value(s[1], venv))
        if site in fenv and fenv[site] != v:
            return None
        fenv[site] = v
    return venv, fenv


def _named_witness(venv, fenv):
    out = dict(venv)
    for (tag, argval), v in fenv.items():
        out["%s(%d)" % (tag, argval)] = v
    return out


def _validate_counter(hyp_atoms, bad_atom, point):
    """A genuine countermodel satisfies the hypotheses and falsifies the
    conclusion atom; returns its printable form, else None."""
    done = _complete_point(point, tuple(hyp_atoms) + (bad_atom,))
    if done is None:
        return None
    venv, fenv = done
    if not all(_atom_value(a, venv, fenv) for a in hyp_atoms):
        return None
    if _atom_value(bad_atom, venv, fenv):
        return None
    return _named_witness(venv, fenv)


def _validate_model(atoms, point):
    done = _complete_point(point, tuple(atoms))
    if done is None:
        return None
    venv, fenv = done
    if not all(_atom_value(a, venv, fenv) for a in atoms):
        return None
    return _named_witness(venv, fenv)


def _eval_row(row, val):
    const, coeffs = row
    return const + sum(v * val[k] for k, v in coeffs.items())


def _integer_witness(rows, slots, bound):
    """DFS over slot valuations in 0..bound, checking each row as soon as
    its slots are all assigned."""
    order = sorted(slots)
    stages = []
    assigned = set()
    remaining = list(rows)
    for s in order:
        assigned.add(s)
        here = [r for r in remaining if set(r[1]) <= assigned]
        remaining = [r for r in remaining if not set(r[1]) <= assigned]
        stages.append(here)

    val = {}

    def go(i):
        if i == len(order):
            return dict(val)
        s = order[i]
        for v in range(bound + 1):
            val[s] = v
            if all(_eval_row(r, val) >= 0 for r in stages[i]):
                got = go(i + 1)
                if got is not None:
                    return got
        val.pop(s, None)
        return None

    for r in rows:
        if not r[1] and r[0] < 0:
            return None
    return go(0)


def default_bound(atoms) -> int:
    """Search bound for integer witnesses and for the enum engine: largest
    literal in sight plus one slot's worth of slack each."""
    lit = 0
    slots = set()
    for a in atoms:
        lit = max(lit, _max_literal(a.left), _max_literal(a.right))
        for side in (a.left, a.right):
            slots.update(linear_form(side)[1])
    return lit + len(slots) + 2


# ---------------------------------------------------------------------------
# The fm engine


def _branches(atom_lists):
    """Cartesian product of per-atom branch alternatives, as row lists."""
    if not atom_lists:
        yield []
        return
    head, tail = atom_lists[0], atom_lists[1:]
    for rest in _branches(tail):
        for alt in head:
            yield alt + rest


def _hyp_branches(hyp_atoms):
    return list(_branches([_atom_rows(a) for a in hyp_atoms]))


def _entails_fm(hyp_atoms, concl_atoms, bound):
    hyp_branches = _hyp_branches(hyp_atoms)
    all_slots = set()
    for br in hyp_branches:
        all_slots |= _collect_slots([br])
    for a in concl_atoms:
        for alt in _atom_rows(a, negate=True):
            all_slots |= _collect_slots([alt])
    merge = _slot_merge_map(hyp_branches, all_slots)

    unknown = False
    for br in hyp_branches:
        base = _apply_merge(br, merge)
        try:
            if _fm_unsat(base + _nonneg_rows(_collect_slots([base]))):
                continue  # vacuous hypothesis branch
        except _Blowup:
            unknown = True
            continue
        for a in concl_atoms:
            for alt in _atom_rows(a, negate=True):
                rows = base + _apply_merge(alt, merge)
                slots = _collect_slots([rows])
                rows = rows + _nonneg_rows(slots)
                try:
                    if _fm_unsat(rows):
                        continue
                except _Blowup:
                    unknown = True
                    continue
                w = _integer_witness(rows, slots, bound)
                if w is not None:
                    named = _validate_counter(hyp_atoms, a, w)
                    if named is not None:
                        return PureResult("no", named)
                unknown = True
    if unknown:
        return PureResult("unknown")
    return PureResult("yes")


# ---------------------------------------------------------------------------
# The enum engine


def _term_value(t, venv, fenv):
    if isinstance(t, Null):
        return 0
    if isinstance(t, Lit):
        return t.value
    if isinstance(t, Var):
        return venv[t.name]
    if isinstance(t, Add):
        return _term_value(t.left, venv, fenv) + _term_value(t.right, venv,
                                                             fenv)
    if isinstance(t, (BlockBase, BlockEnd)):
        tag = "b" if isinstance(t, BlockBase) else "e"
        return fenv[(tag, _term_value(t.arg, venv, fenv))]
    raise TypeError(t)


def _atom_value(a, venv, fenv):
    l = _term_value(a.left, venv, fenv)
    r = _term_value(a.right, venv, fenv)
    if isinstance(a, Eq):
        return l == r
    if isinstance(a, Neq):
        return l != r
    if isinstance(a, Le):
        return l <= r
    return l < r


def _fn_sites(t, venv, acc):
    if isinstance(t, Add):
        _fn_sites(t.left, venv, acc)
        _fn_sites(t.right, venv, acc)
    elif isinstance(t, (BlockBase, BlockEnd)):
        tag = "b" if isinstance(t, BlockBase) else "e"
        acc.add((tag, _term_value(t.arg, venv, {})))


def _entails_enum(hyp_atoms, concl_atoms, bound):
    """Reference decision by exhausting valuations: variables in 0..bound,
    then one value per distinct (function, argument-value) site.  b/e
    arguments contain no b/e, so sites are computable from the variables
    alone."""
    names = set()
    for a in tuple(hyp_atoms) + tuple(concl_atoms):
        for side in (a.left, a.right):
            for slot in linear_form(side)[1]:
                if slot[0] == "v":
                    names.add(slot[1])
                else:
                    for (tag2, key) in _iter_arg_vars(slot[1]):
                        names.add(key)
    names = sorted(names)
    for vals in itertools.product(range(bound + 1), repeat=len(names)):
        venv = dict(zip(names, vals))
        sites = set()
        for a in tuple(hyp_atoms) + tuple(concl_atoms):
            _fn_sites(a.left, venv, sites)
            _fn_sites(a.right, venv, sites)
        sites = sorted(sites)
        for fvals in itertools.product(range(bound + 1), repeat=len(sites)):
            fenv = dict(zip(sites, fvals))
            if not all(_atom_value(a, venv, fenv) for a in hyp_atoms):
                continue
            if all(_atom_value(a, venv, fenv) for a in concl_atoms):
                continue
            witness = dict(venv)
            for (tag, argv), v in fenv.items():
                witness["%s(%d)" % (tag, argv)] = v
            return PureResult("no", witness, bounded=True)
    return PureResult("yes", bounded=True)


def _iter_arg_vars(frozen):
    _, items = frozen
    for (tag, key), _ in items:
        if tag == "v":
            yield (tag, key)
        else:
            yield from _iter_arg_vars(key)


# ---------------------------------------------------------------------------
# Public interface

_memo = {}


def clear_caches():
    _memo.clear()


def entails_pure(hyp, concl, method="auto", bound=None) -> PureResult:
    """Does the conjunction of hyp force every atom of concl?

    hyp may be a SymbolicHeap (its spatial atoms contribute their pure
    consequences) or an iterable of pure atoms; concl a pure atom or an
    iterable.  method: "fm", "enum", or "auto" (fm first, enumeration when
    fm cannot decide)."""
    hyp_atoms = _as_atoms(hyp)
    if isinstance(concl, PureAtom):
        concl_atoms = (concl,)
    else:
        concl_atoms = tuple(concl)
    if bound is None:
        bound = default_bound(hyp_atoms + concl_atoms)
    key = (tuple(sorted(hyp_atoms, key=atom_key)),
           tuple(sorted(concl_atoms, key=atom_key)), method, bound)
    hit = _memo.get(key)
    if hit is not None:
        return hit
    if method == "enum":
        res = _entails_enum(hyp_atoms, concl_atoms, bound)
    elif method == "fm":
        res = _entails_fm(hyp_atoms, concl_atoms, bound)
    elif method == "auto":
        res = _entails_fm(hyp_atoms, concl_atoms, bound)
        if res.status == "unknown":
            res = _entails_enum(hyp_atoms, concl_atoms, bound)
    else:
        raise ValueError("method must be fm, enum, or auto")
    _memo[key] = res
    return res


def _block_axiom_branches(slots):
    """Branch lists encoding that each b/e pair brackets its argument or is
    zero, and that distinct blocks coincide or are disjoint.  Only for
    satisfiability pruning."""
    args = sorted({s[1] for s in slots if s[0] in ("b", "e")})
    atom_lists = []
    for arg in args:
        b = (0, {("b", arg): 1})
        e = (0, {("e", arg): 1})
        t = _thaw(arg)
        inside = [
            _row_from_diff((0, {}), b, 1),            # 1 <= b
            _row_from_diff(b, t, 0),                  # b <= t
            _row_from_diff(t, e, 1),                  # t < e
        ]
        outside = [
            _row_from_diff(b, (0, {}), 0),            # b <= 0
            _row_from_diff((0, {}), b, 0),
            _row_from_diff(e, (0, {}), 0),            # e <= 0
            _row_from_diff((0, {}), e, 0),
        ]
        atom_lists.append([inside, outside])
    for a1, a2 in itertools.combinations(args, 2):
        b1, e1 = (0, {("b", a1): 1}), (0, {("e", a1): 1})
        b2, e2 = (0, {("b", a2): 1}), (0, {("e", a2): 1})
        same = [_row_from_diff(b1, b2, 0), _row_from_diff(b2, b1, 0),
                _row_from_diff(e1, e2, 0), _row_from_diff(e2, e1, 0)]
        left = [_row_from_diff(e1, b2, 0), _row_from_diff((0, {}), b2, 1)]
        right = [_row_from_diff(e2, b1, 0), _row_from_diff((0, {}), b1, 1)]
        zero1 = [_row_from_diff(b1, (0, {}), 0), _row_from_diff(e1, (0, {}), 0)]
        zero2 = [_row_from_diff(b2, (0, {}), 0), _row_from_diff(e2, (0, {}), 0)]
        atom_lists.append([same, left, right, zero1, zero2])
    return atom_lists


def sat_pure(atoms, block_axioms=False, bound=None, certify=True
             ) -> PureResult:
    """Satisfiability of a pure conjunction in the relaxed theory;
    block_axioms=True additionally requires b/e values consistent with some
    block layout, which can only shrink the model set.  "unsat" is sound;
    "sat" comes with a witness; otherwise "unknown".

    certify=False skips the witness search: every not-provably-unsat
    branch reports "unknown", which is all a pruning caller needs and
    much cheaper."""
    atoms = _as_atoms(atoms)
    if bound is None:
        bound = default_bound(atoms)
    key = ("sat", tuple(sorted(atoms, key=atom_key)), block_axioms, bound,
           certify)
    hit = _memo.get(key)
    if hit is not None:
        return hit
    branches = _hyp_branches(atoms)
    slots = set()
    for br in branches:
        slots |= _collect_slots([br])
    merge = _slot_merge_map(branches, slots)
    axiom_lists = (_block_axiom_branches({merge.get(s, s) for s in slots})
                   if block_axioms else [])
    unknown = False
    for br in branches:
        base = _apply_merge(br, merge)
        for axioms in _branches(axiom_lists):
            rows = base + axioms
            row_slots = _collect_slots([rows])
            rows = rows + _nonneg_rows(row_slots)
            try:
                if _fm_unsat(rows):
                    continue
            except _Blowup:
                unknown = True
                continue
            if not certify:
                unknown = True
                continue
            w = _integer_witness(rows, row_slots, bound)
            if w is not None:
                named = _validate_model(atoms, w)
                if named is not None:
                    res = PureResult("sat", named)
                    _memo[key] = res
                    return res
            unknown = True
    res = PureResult("unknown") if unknown else PureResult("unsat")
    _memo[key] = res
    return res


def negate_atom(a: PureAtom) -> PureAtom:
    if isinstance(a, Eq):
        return Neq(a.left, a.right)
    if isinstance(a, Neq):
        return Eq(a.left, a.right)
    if isinstance(a, Le):
        return Lt(a.right, a.left)
    if isinstance(a, Lt):
        return Le(a.right, a.left)
    raise TypeError(a)


def entails_pure_any(hyp, options, bound=None) -> PureResult:
    """hyp ⊨ a1 or ... or an, decided as unsatisfiability of hyp with
    every option negated."""
    atoms = _as_atoms(hyp) + tuple(negate_atom(o) for o in options)
    res = sat_pure(atoms, block_axioms=True, bound=bound)
    if res.status == "unsat":
        return PureResult("yes")
    if res.status == "sat":
        return PureResult("no", res.witness)
    return PureResult("unknown")


def decide(hyp, concl, method="auto") -> bool | None:
    """Three-valued convenience wrapper: True, False, or None."""
    res = entails_pure(hyp, concl, method=method)
    if res.status == "yes":
        return True
    if res.status == "no":
        return False
    return None


# ---------------------------------------------------------------------------
# Assertion-level entailment by model enumeration


@dataclass(frozen=True)
class AssertionEntailment:
    status: str  # "yes" | "no" | "bounded"
    counter: object = None  # ConcreteState on "no"

    def __bool__(self):
        return self.status == "yes"


def entails_assertion(p, q, u, exact_only=False) -> AssertionEntailment:
    """Does every model of p within the universe satisfy q?  Enumerates
    exact and non-exact states alike unless exact_only restricts to the
    states program transitions see.  "bounded" when a truncated
    disjunction on either side leaves the question open; on "no" the
    counter-state is the least failing model."""
    from .semantics import models, satisfies, state_key

    bad = []
    unknown = False
    for st in models(p, u, exact_only=exact_only):
        r = satisfies(st, q, wmax=u.witness_max)
        if r is False:
            bad.append(st)
        elif r is None:
            unknown = True
    if bad:
        return AssertionEntailment("no", min(bad, key=state_key))
    if unknown or p.truncated:
        return AssertionEntailment("bounded")
    return AssertionEntailment("yes")
