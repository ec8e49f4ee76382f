"""Weakest postconditions: the exact post-image of an assertion under a
command, per exit condition.

wpo(P, C, exit) produces an assertion whose exact-state models are
precisely the states reachable by running C from some model of P and
finishing with the given exit.  Commands that do not touch the heap are
handled by structural rows; the heap commands (alloc, free, load, store)
first split the input into canonical order cases so that every guard the
rows consult -- is this address inside that array, does this pointer sit
at its block's base -- is decided by entailment rather than guessed.

Loops make the post-image an infinite disjunction; WpoBudget.loop_bound
cuts the unrolling and the result is flagged truncated, at which point
downstream consumers answer three-valued instead of pretending the
missing iterates are false.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .syntax import (
    Add, Alloc, Arr, Assertion, Assign, Assume, Atom, BlockBase, BlockEnd,
    Choice, Command, Disjunct, Eq, Error, FALSE, Free, FreshNames, Havoc,
    Le, Lit, Load, Local, LocalInit, Lt, NegArr, Neq, Null, PointsTo, Seq,
    Skip, SpatialAtom, Star, Store, SymbolicHeap, Term, Var, assertion_vars,
    command_vars, desugar_local_init, exits, heap_term_set,
    heap_term_set_be_free, heap_vars, rename_bound, replace_term_set,
    subst_assertion, subst_heap, subst_term, term_key,
)
from .entailment import decide, pure_closure, sat_pure
from .canonical import DEFAULT_CASE_CAP, cano, entailed_case
from .parser import format_command

log = logging.getLogger("islarr.wpo")

NULL = Null()


@dataclass(frozen=True)
class WpoBudget:
    """Resource limits for a wpo computation.

    loop_bound cuts the iterate stream of C*; disjunct_cap truncates
    assertions that outgrow it (the result is marked truncated, never
    silently wrong); case_cap bounds the number of order terms a single
    disjunct may be split over; drop_inconsistent discards disjuncts whose
    pure part is provably unsatisfiable as they are produced."""

    loop_bound: int = 3
    case_cap: int = DEFAULT_CASE_CAP
    disjunct_cap: int = 4096
    drop_inconsistent: bool = True

    def __post_init__(self):
        if self.loop_bound < 0 or self.case_cap < 0 or self.disjunct_cap < 0:
            raise ValueError("budget fields must be nonnegative")


@dataclass(frozen=True)
class ArrAtomView:
    """One cell-range view of a spatial atom: t |-> u reads as the
    one-cell range [t, t+1) with payload u, arr(t, t') as [t, t') with no
    payload (None)."""

    lo: Term
    hi: Term
    payload: Term | None
    atom: SpatialAtom = field(compare=False)

    @staticmethod
    def of_atom(a: Atom):
        if isinstance(a, PointsTo):
            return ArrAtomView(a.addr, Add(a.addr, Lit(1)), a.value, a)
        if isinstance(a, Arr):
            return ArrAtomView(a.lo, a.hi, None, a)
        return None

    @property
    def is_cell(self):
        return self.payload is not None


# ---------------------------------------------------------------------------
# Assembly helpers


def _mk_disjunct(bound, heap, origin=None):
    """Build a disjunct, dropping binders the heap never mentions (an
    unused existential only slows model enumeration down)."""
    used = heap_vars(heap)
    return Disjunct(tuple(x for x in bound if x in used), heap, origin)


def _assemble(disjuncts, truncated, budget):
    """Dedup, apply the disjunct cap (truncating, not failing), build."""
    seen = set()
    out = []
    for d in disjuncts:
        key = (d.bound, d.heap)
        if key in seen:
            continue
        seen.add(key)
        out.append(d)
    if len(out) > budget.disjunct_cap:
        out = out[: budget.disjunct_cap]
        truncated = True
    return Assertion(tuple(out), truncated)


def _fresh_for(psi: SymbolicHeap, c: Command) -> FreshNames:
    return FreshNames(heap_vars(psi) | command_vars(c))


def _sat(heap: SymbolicHeap) -> bool:
    res = sat_pure(pure_closure(heap), block_axioms=True, certify=False)
    return res.status != "unsat"


def _keep(d: Disjunct, budget: WpoBudget) -> bool:
    return not budget.drop_inconsistent or _sat(d.heap)


def _tagged(c: Command, reason: str) -> str:
    return "%s: %s" % (format_command(c), reason)


# ---------------------------------------------------------------------------
# Rows for commands that do not manipulate the heap


def wpo_sh_basic(psi: SymbolicHeap, c: Command, exit: str,
                 budget: WpoBudget | None = None) -> Assertion:
    """Post-image rows for skip, error, assign, havoc, assume, local and
    the compound commands.  Compounds re-enter wpo on the singleton
    assertion of psi; heap commands are rejected."""
    if budget is None:
        budget = WpoBudget()
    if exit not in exits():
        raise ValueError("unknown exit %r" % (exit,))
    if isinstance(c, Skip):
        return Assertion.of_heap(psi) if exit == "ok" else FALSE
    if isinstance(c, Error):
        if exit == "ok":
            return FALSE
        return Assertion.of_heap(psi, origin=_tagged(c, "reachable"))
    if isinstance(c, Assign):
        if exit == "er":
            return FALSE
        fresh = _fresh_for(psi, c)
        x1 = fresh.new()
        theta = {c.var: Var(x1)}
        heap = subst_heap(psi, theta).star(
            [Eq(Var(c.var), subst_term(c.term, theta))])
        return Assertion((_mk_disjunct((x1,), heap),))
    if isinstance(c, Havoc):
        if exit == "er":
            return FALSE
        fresh = _fresh_for(psi, c)
        x1 = fresh.new()
        heap = subst_heap(psi, {c.var: Var(x1)})
        return Assertion((_mk_disjunct((x1,), heap),))
    if isinstance(c, Assume):
        if exit == "er":
            return FALSE
        return Assertion.of_heap(psi.star(c.cond))
    if isinstance(c, Local):
        fresh = _fresh_for(psi, c)
        x1 = fresh.new()
        r = wpo(Assertion.of_heap(subst_heap(psi, {c.var: Var(x1)})),
                c.body, exit, budget)
        x2 = FreshNames(assertion_vars(r) | {c.var, x1}
                        | command_vars(c)).new()
        s = subst_assertion(r, {c.var: Var(x2), x1: Var(c.var)})
        return Assertion(
            tuple(_mk_disjunct((x2,) + d.bound, d.heap, d.origin)
                  for d in s.disjuncts), s.truncated)
    if isinstance(c, LocalInit):
        return wpo_sh_basic(psi, desugar_local_init(c), exit, budget)
    if isinstance(c, (Seq, Choice, Star)):
        return wpo(Assertion.of_heap(psi), c, exit, budget)
    raise TypeError("not a basic command: %r" % (c,))


# ---------------------------------------------------------------------------
# Heap rows.  All take one canonical symbolic heap: the order of every
# term in sight is decided by its pure part, so guards resolve by
# entailment.


def _be_null_er(psi, closure, c, t, what):
    hit = decide(closure, Eq(BlockBase(t), NULL))
    if hit is None:
        log.warning("undecided dereference guard on a canonical input: %s",
                    _tagged(c, what))
        return FALSE
    if not hit:
        return FALSE
    return Assertion.of_heap(psi, origin=_tagged(c, what))


def _piece(closure, lo, hi, lo_out, hi_out):
    """The sub-array [lo_out, hi_out) left over by a cell split, as
    alternative atom tuples: provably empty contributes nothing, provably
    nonempty contributes the arr atom, and an undecided width yields both
    variants, each pinned by an explicit constraint."""
    empty = decide(closure, Eq(lo, hi))
    if empty:
        return [()]
    if empty is False:
        return [(Arr(lo_out, hi_out),)]
    return [(Eq(lo_out, hi_out),), (Arr(lo_out, hi_out),)]


def heap_target(psi: SymbolicHeap, closure, t: Term):
    """First spatial atom the address t provably falls in: a points-to
    whose address equals t, or an array covering t.  None when the pure
    part places t inside no atom."""
    for a in psi.spatial_atoms:
        if isinstance(a, PointsTo) and decide(closure, Eq(a.addr, t)):
            return a
        if (isinstance(a, Arr) and decide(closure, Le(a.lo, t))
                and decide(closure, Lt(t, a.hi))):
            return a
    return None


def wpo_sh_load(psi: SymbolicHeap, x: str, t: Term, exit: str) -> Assertion:
    """x := [t].  A points-to at the address passes its payload to x; a
    covering array is split around the read cell, with a fresh variable
    naming the cell's content so x can be equated to it.  The error exit
    keeps states whose address provably lies outside every block."""
    if exit not in exits():
        raise ValueError("unknown exit %r" % (exit,))
    c = Load(x, t)
    closure = pure_closure(psi)
    if exit == "er":
        return _be_null_er(psi, closure, c, t,
                           "address outside every allocated block")
    fresh = _fresh_for(psi, c)
    x1 = fresh.new()
    theta = {x: Var(x1)}
    a = heap_target(psi, closure, t)
    if a is None:
        return FALSE
    if isinstance(a, PointsTo):
        heap = subst_heap(psi, theta).star(
            [Eq(Var(x), subst_term(a.value, theta))])
        return Assertion((_mk_disjunct((x1,), heap),))
    u = fresh.new()
    rest = subst_heap(psi.without([a]), theta)
    t_s = subst_term(t, theta)
    t1 = Add(t, Lit(1))
    lefts = _piece(closure, a.lo, t,
                   subst_term(a.lo, theta), t_s)
    rights = _piece(closure, t1, a.hi,
                    subst_term(t1, theta), subst_term(a.hi, theta))
    out = []
    for left in lefts:
        for right in rights:
            heap = rest.star(
                left + (PointsTo(t_s, Var(u)),
                        Eq(Var(x), Var(u))) + right)
            out.append(_mk_disjunct((x1, u), heap))
    return Assertion(tuple(out))


def wpo_sh_store(psi: SymbolicHeap, t: Term, tv: Term, exit: str
                 ) -> Assertion:
    """[t] := tv.  A points-to at the address is overwritten; a covering
    array is split around the written cell, keeping only the nonempty
    remainder pieces.  Error exit as for load."""
    if exit not in exits():
        raise ValueError("unknown exit %r" % (exit,))
    c = Store(t, tv)
    closure = pure_closure(psi)
    if exit == "er":
        return _be_null_er(psi, closure, c, t,
                           "address outside every allocated block")
    a = heap_target(psi, closure, t)
    if a is None:
        return FALSE
    if isinstance(a, PointsTo):
        heap = psi.without([a]).star([PointsTo(t, tv)])
        return Assertion((Disjunct((), heap),))
    rest = psi.without([a])
    t1 = Add(t, Lit(1))
    lefts = _piece(closure, a.lo, t, a.lo, t)
    rights = _piece(closure, t1, a.hi, t1, a.hi)
    out = []
    for left in lefts:
        for right in rights:
            heap = rest.star(left + (PointsTo(t, tv),) + right)
            out.append(Disjunct((), heap))
    return Assertion(tuple(out))


def _free_chain(psi, closure, bt, et):
    """Find the run of cell atoms tiling the freed block [b(t), e(t)):
    consecutive atoms provably adjacent, each end either exactly on the
    block boundary or a true array straddling it.  Returns (views,
    left_straddle, right_straddle) or None."""
    views = [v for v in map(ArrAtomView.of_atom, psi.spatial_atoms)
             if v is not None]

    def ends(v):
        if decide(closure, Eq(v.hi, et)):
            return False
        if (not v.is_cell and decide(closure, Lt(v.lo, et))
                and decide(closure, Lt(et, v.hi))):
            return True
        return None

    def walk(i0):
        chain = [i0]
        while len(chain) <= len(views):
            right = ends(views[chain[-1]])
            if right is not None:
                return chain, right
            cur_hi = views[chain[-1]].hi
            nxt = next((i for i, v in enumerate(views)
                        if i not in chain
                        and decide(closure, Eq(v.lo, cur_hi))), None)
            if nxt is None:
                return None
            chain.append(nxt)
        return None

    for i, v in enumerate(views):
        if decide(closure, Eq(v.lo, bt)):
            left = False
        elif (not v.is_cell and decide(closure, Lt(v.lo, bt))
                and decide(closure, Lt(bt, v.hi))):
            left = True
        else:
            continue
        hit = walk(i)
        if hit is not None:
            chain, right = hit
            return [views[i] for i in chain], left, right
    return None


def wpo_sh_free(psi: SymbolicHeap, t: Term, exit: str) -> Assertion:
    """free(t).  The ok exit requires t to sit at its block's base and the
    block's cells to be tiled by a run of array and points-to atoms; the
    run is replaced by a deallocated range narr(t, y), where the fresh y
    remembers the block's old end, and every boundary term of the dead
    block is rewritten to the values it had before the free.  The error
    exit keeps states where t is provably null or provably not a base."""
    if exit not in exits():
        raise ValueError("unknown exit %r" % (exit,))
    c = Free(t)
    closure = pure_closure(psi)
    bt, et = BlockBase(t), BlockEnd(t)
    if exit == "er":
        nb = decide(closure, Neq(bt, t))
        nn = decide(closure, Eq(bt, NULL))
        if nb or nn:
            return Assertion.of_heap(
                psi, origin=_tagged(c, "target is null or not the base of "
                                       "a live block"))
        if nb is None and nn is None:
            log.warning("undecided free guard on a canonical input: %s",
                        _tagged(c, "er"))
        return FALSE
    if not decide(closure, Eq(bt, t)):
        return FALSE
    hit = _free_chain(psi, closure, bt, et)
    if hit is None:
        return FALSE
    chain, left_straddle, right_straddle = hit
    fresh = _fresh_for(psi, c)
    y = fresh.new()
    parts = []
    if left_straddle:
        parts.append(Arr(chain[0].lo, t))
    parts.append(NegArr(t, Var(y)))
    if right_straddle:
        parts.append(Arr(Var(y), chain[-1].hi))
    heap = psi.without([v.atom for v in chain]).star(parts)
    tb = {s for s in heap_term_set(psi)
          if isinstance(s, BlockBase) and decide(closure, Eq(s, bt))}
    te = {s for s in heap_term_set(psi)
          if isinstance(s, BlockEnd) and decide(closure, Eq(s, et))}
    if tb:
        heap = replace_term_set(heap, tb, t)
    if te:
        heap = replace_term_set(heap, te, Var(y))
    return Assertion((_mk_disjunct((y,), heap),))


class _AllocLayout:
    """Shared context of one allocation split: the renaming, the entailed
    chain of the input's plain terms (positioning the new block), and the
    deallocated ranges in entailed order (which the block may cover)."""

    def __init__(self, psi: SymbolicHeap, x: str, t: Term):
        c = Alloc(x, t)
        closure = pure_closure(psi)
        fresh = _fresh_for(psi, c)
        self.x1 = fresh.new()
        self.theta = {x: Var(self.x1)}
        self.xv = Var(x)
        self.xt = Add(self.xv, subst_term(t, self.theta))
        groups = entailed_case(closure, heap_term_set_be_free(psi))
        if groups is None:
            raise ValueError(
                "allocation needs the input's term order decided; "
                "the disjunct is not canonical")
        seq = [u for g in groups for u in g if not isinstance(u, Null)]
        self.us = [NULL] + [subst_term(u, self.theta) for u in seq]
        self.n = len(seq)
        pos = {}
        for i, g in enumerate(groups):
            for u in g:
                pos[u] = i
        narrs = [a for a in psi.spatial_atoms if isinstance(a, NegArr)]
        narrs.sort(key=lambda a: (pos.get(a.lo, len(groups)),
                                  term_key(a.lo)))
        self.nth = [NegArr(subst_term(a.lo, self.theta),
                           subst_term(a.hi, self.theta)) for a in narrs]
        self.m = len(narrs)
        self.psi_theta = subst_heap(psi, self.theta)
        self.prime_theta = subst_heap(psi.without(narrs), self.theta)

    def band(self, alpha, beta):
        """Pure atoms pinning the block between chain positions alpha and
        beta, plus its boundary equations.  Constraints that would index
        past either end of the chain are dropped."""
        xv, xt, us = self.xv, self.xt, self.us
        atoms = [Lt(us[alpha], xv)]
        if alpha < self.n:
            atoms.append(Le(xv, us[alpha + 1]))
        atoms.append(Lt(us[beta], xt))
        if beta < self.n:
            atoms.append(Le(xt, us[beta + 1]))
        atoms += [Eq(BlockBase(xv), xv), Eq(BlockEnd(xv), xt)]
        return atoms

    def swallowed(self, alpha, beta):
        """Boundary terms of chain members the new block covers; they sat
        in no block before, so their old b/e values were null."""
        targets = set()
        for i in range(alpha + 1, beta + 1):
            targets.add(BlockBase(self.us[i]))
            targets.add(BlockEnd(self.us[i]))
        return targets

    def case(self, alpha, beta, carve=None) -> Disjunct:
        """One disjunct of the split: carve=None keeps every deallocated
        range beside the new block; carve=(j, k, left_exact, right_exact)
        lets the block cover ranges j..k, either cutting into a range
        (exact=False leaves its outer piece) or starting flush against
        the gap beside it (exact=True)."""
        xv, xt, nth = self.xv, self.xt, self.nth
        if carve is None:
            heap = self.psi_theta.star([Arr(xv, xt)]
                                       + self.band(alpha, beta))
        else:
            j, k, lx, rx = carve
            if not 1 <= j <= k <= self.m:
                raise ValueError("carve indices out of range")
            atoms = list(nth[: j - 1])
            if lx:
                if j >= 2:
                    atoms.append(Le(nth[j - 2].hi, xv))
                atoms.append(Le(xv, nth[j - 1].lo))
            else:
                atoms += [NegArr(nth[j - 1].lo, xv),
                          Lt(nth[j - 1].lo, xv),
                          Lt(xv, nth[j - 1].hi)]
            atoms.append(Arr(xv, xt))
            if rx:
                atoms.append(Le(nth[k - 1].hi, xt))
                if k < self.m:
                    atoms.append(Le(xt, nth[k].lo))
            else:
                atoms += [NegArr(xt, nth[k - 1].hi),
                          Lt(nth[k - 1].lo, xt),
                          Lt(xt, nth[k - 1].hi)]
            atoms += nth[k:]
            heap = self.prime_theta.star(atoms + self.band(alpha, beta))
        targets = self.swallowed(alpha, beta)
        if targets:
            heap = replace_term_set(heap, targets, NULL)
        return _mk_disjunct((self.x1,), heap)


def wpo_sh_alloc(psi: SymbolicHeap, x: str, t: Term, exit: str,
                 budget: WpoBudget | None = None) -> Assertion:
    """x := alloc(t).  The fresh block [x, x+t) may land anywhere the old
    blocks are not: the result enumerates its position relative to every
    term the input mentions (the band going through the pure chain) and
    its overlap with every run of deallocated ranges (which it may
    resurrect wholly or in part), rewriting boundary terms of swallowed
    addresses to null, since they belonged to no block before.  Never
    errs."""
    if budget is None:
        budget = WpoBudget()
    if exit not in exits():
        raise ValueError("unknown exit %r" % (exit,))
    if exit == "er":
        return FALSE
    lay = _AllocLayout(psi, x, t)
    out = []
    for alpha in range(lay.n + 1):
        for beta in range(alpha, lay.n + 1):
            cases = [None]
            for j in range(1, lay.m + 1):
                for k in range(j, lay.m + 1):
                    for lx in (False, True):
                        for rx in (False, True):
                            cases.append((j, k, lx, rx))
            for carve in cases:
                d = lay.case(alpha, beta, carve)
                if _keep(d, budget):
                    out.append(d)
    return _assemble(out, False, budget)


# ---------------------------------------------------------------------------
# Top level


def _rename_apart(p: Assertion, c: Command) -> Assertion:
    """Alpha-rename any disjunct binder that collides with a variable of
    the command, so stripping the existential prefix is safe."""
    avoid = command_vars(c)
    if not any(x in avoid for d in p.disjuncts for x in d.bound):
        return p
    fresh = FreshNames(assertion_vars(p) | avoid)
    out = []
    for d in p.disjuncts:
        ren = {x: fresh.new() for x in d.bound if x in avoid}
        out.append(rename_bound(d, ren) if ren else d)
    return Assertion(tuple(out), p.truncated)


def _per_disjunct(q, handler, budget):
    out = []
    truncated = q.truncated
    for d in q.disjuncts:
        sub = handler(d.heap)
        truncated = truncated or sub.truncated
        for r in sub.disjuncts:
            out.append(_mk_disjunct(d.bound + r.bound, r.heap,
                                    r.origin if r.origin else d.origin))
    return _assemble(out, truncated, budget)


def _star(p: Assertion, body: Command, exit: str, budget: WpoBudget
          ) -> Assertion:
    iterates = [p]
    truncated = p.truncated
    cur = p
    exact = False
    for _ in range(budget.loop_bound):
        cur = wpo(cur, body, "ok", budget)
        truncated = truncated or cur.truncated
        if not cur.disjuncts:
            exact = True
            break
        iterates.append(cur)
    if exit == "ok":
        ds = [d for u in iterates for d in u.disjuncts]
    else:
        ds = []
        for u in iterates:
            e = wpo(u, body, "er", budget)
            truncated = truncated or e.truncated
            ds.extend(e.disjuncts)
    return _assemble(ds, truncated or not exact, budget)


def wpo(p: Assertion, c: Command, exit: str = "ok",
        budget: WpoBudget | None = None) -> Assertion:
    """The post-image of p under c at the given exit, as an assertion.

    Raises CaseLimitError when a heap command would need more order cases
    than budget.case_cap allows; an oversized disjunction is truncated
    and flagged instead."""
    if budget is None:
        budget = WpoBudget()
    if exit not in exits():
        raise ValueError("unknown exit %r" % (exit,))
    if not isinstance(p, Assertion):
        raise TypeError("not an assertion: %r" % (p,))

    if exit == "er" and isinstance(c, (Skip, Assign, Havoc, Assume, Alloc)):
        return FALSE
    if exit == "ok" and isinstance(c, Error):
        return FALSE
    if isinstance(c, LocalInit):
        return wpo(p, desugar_local_init(c), exit, budget)
    if isinstance(c, Seq):
        if exit == "ok":
            return wpo(wpo(p, c.first, "ok", budget), c.second, "ok", budget)
        er1 = wpo(p, c.first, "er", budget)
        er2 = wpo(wpo(p, c.first, "ok", budget), c.second, "er", budget)
        return _assemble(er1.disjuncts + er2.disjuncts,
                         er1.truncated or er2.truncated, budget)
    if isinstance(c, Choice):
        a = wpo(p, c.left, exit, budget)
        b = wpo(p, c.right, exit, budget)
        return _assemble(a.disjuncts + b.disjuncts,
                         a.truncated or b.truncated, budget)
    if isinstance(c, Star):
        return _star(p, c.body, exit, budget)

    if isinstance(c, (Alloc, Free, Load, Store)):
        q = cano(p, c, case_cap=budget.case_cap,
                 drop_inconsistent=budget.drop_inconsistent)
        if isinstance(c, Alloc):
            handler = lambda h: wpo_sh_alloc(h, c.var, c.size, exit, budget)
        elif isinstance(c, Free):
            handler = lambda h: wpo_sh_free(h, c.addr, exit)
        elif isinstance(c, Load):
            handler = lambda h: wpo_sh_load(h, c.var, c.addr, exit)
        else:
            handler = lambda h: wpo_sh_store(h, c.addr, c.value, exit)
        return _per_disjunct(q, handler, budget)

    q = _rename_apart(p, c)
    return _per_disjunct(
        q, lambda h: wpo_sh_basic(h, c, exit, budget), budget)
