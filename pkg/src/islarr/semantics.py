"""Concrete states and the ground-truth semantics.

A state is (store, heap, blocks): a total store over the universe's
variables, a finite partial heap mapping locations to values or to the
deallocated marker (None here, "bot" in JSON), and a set of disjoint
allocated blocks [lo, hi).  Locations are positive; 0 is null.  Two
well-formedness conditions tie the pieces together: live cells lie inside
blocks, deallocated cells lie outside all blocks.  A state is exact when
the live cells are exactly the union of the blocks; program transitions
are defined on exact states.

Everything here is deliberately brute force within a finite Universe: it
is the oracle the symbolic machinery is judged against.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from .syntax import (
    Add, Alloc, Arr, Assertion, Assign, Assume, BlockBase, BlockEnd,
    Choice, Command, Disjunct, Emp, Eq, Error, Free, Havoc, Le, Lit, Load,
    Local, LocalInit, Lt, NegArr, Neq, Null, PointsTo, PureAtom, Seq, Skip,
    SpatialAtom, Star, Store, SymbolicHeap, Term, Var, atom_terms,
    atom_vars, contains_be, desugar_local_init,
)

BOT = None  # deallocated-cell marker inside heap mappings


@dataclass(frozen=True)
class Universe:
    """Finite slice of the state space: variables of interest, values
    0..vmax (locations 1..vmax), at most heap_cap heap cells, and loop
    bodies unrolled at most loop_bound times."""

    vars: tuple
    vmax: int
    heap_cap: int
    loop_bound: int = 3

    def __post_init__(self):
        if isinstance(self.vars, str):
            raise TypeError("vars must be a sequence of names")
        object.__setattr__(self, "vars", tuple(self.vars))
        if self.vmax < 1:
            raise ValueError("vmax must be at least 1")
        if not 0 <= self.heap_cap <= self.vmax:
            raise ValueError("heap_cap must lie in 0..vmax")
        if self.loop_bound < 0:
            raise ValueError("loop_bound must be nonnegative")

    @property
    def values(self):
        return range(self.vmax + 1)

    @property
    def locations(self):
        return range(1, self.vmax + 1)

    @property
    def witness_max(self):
        # block ends reach vmax+1, and existential witnesses must be able
        # to name them
        return self.vmax + 1


class ConcreteState:
    """Immutable-by-convention state, hashable for set membership."""

    __slots__ = ("store", "heap", "blocks", "_key", "_hash")

    def __init__(self, store, heap, blocks):
        self.store = dict(store)
        self.heap = dict(heap)
        self.blocks = frozenset(tuple(b) for b in blocks)
        self._key = (tuple(sorted(self.store.items())),
                     tuple(sorted(self.heap.items(),
                                  key=lambda kv: kv[0])),
                     tuple(sorted(self.blocks)))
        self._hash = hash(self._key)

    def __eq__(self, other):
        return isinstance(other, ConcreteState) and self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "ConcreteState(%r, %r, %r)" % (self.store, self.heap,
                                              sorted(self.blocks))

    def dom_plus(self):
        return {l for l, v in self.heap.items() if v is not BOT}

    def dom_minus(self):
        return {l for l, v in self.heap.items() if v is BOT}

    def block_cells(self):
        cells = set()
        for lo, hi in self.blocks:
            cells.update(range(lo, hi))
        return cells

    def with_store(self, name, value):
        store = dict(self.store)
        store[name] = value
        return ConcreteState(store, self.heap, self.blocks)


def check_state(state: ConcreteState):
    """Raise ValueError unless the state meets the well-formedness
    conditions (disjoint positive blocks; live cells in blocks; dead cells
    outside)."""
    for name, v in state.store.items():
        if not isinstance(v, int) or v < 0:
            raise ValueError("store value %s=%r not a natural" % (name, v))
    for l, v in state.heap.items():
        if l < 1:
            raise ValueError("heap location %r not positive" % (l,))
        if v is not BOT and (not isinstance(v, int) or v < 0):
            raise ValueError("heap value at %d not a natural or bot" % l)
    seen = set()
    for lo, hi in state.blocks:
        if not 1 <= lo < hi:
            raise ValueError("malformed block [%r, %r)" % (lo, hi))
        cells = set(range(lo, hi))
        if cells & seen:
            raise ValueError("overlapping blocks")
        seen |= cells
    if not state.dom_plus() <= seen:
        raise ValueError("live heap cell outside every block")
    if state.dom_minus() & seen:
        raise ValueError("deallocated heap cell inside a block")


def is_exact(state: ConcreteState) -> bool:
    return state.dom_plus() == state.block_cells()


def block_base(state: ConcreteState, v: int) -> int:
    for lo, hi in state.blocks:
        if lo <= v < hi:
            return lo
    return 0


def block_end(state: ConcreteState, v: int) -> int:
    for lo, hi in state.blocks:
        if lo <= v < hi:
            return hi
    return 0


def interp_term(t: Term, state: ConcreteState) -> int:
    if isinstance(t, Null):
        return 0
    if isinstance(t, Lit):
        return t.value
    if isinstance(t, Var):
        try:
            return state.store[t.name]
        except KeyError:
            raise KeyError("variable %s not in store" % t.name)
    if isinstance(t, Add):
        return interp_term(t.left, state) + interp_term(t.right, state)
    if isinstance(t, BlockBase):
        return block_base(state, interp_term(t.arg, state))
    if isinstance(t, BlockEnd):
        return block_end(state, interp_term(t.arg, state))
    raise TypeError(t)


def eval_pure_atom(a: PureAtom, state: ConcreteState) -> bool:
    l = interp_term(a.left, state)
    r = interp_term(a.right, state)
    if isinstance(a, Eq):
        return l == r
    if isinstance(a, Neq):
        return l != r
    if isinstance(a, Le):
        return l <= r
    if isinstance(a, Lt):
        return l < r
    raise TypeError(a)


def _spatial_cells(a: SpatialAtom, state: ConcreteState):
    """Required heap domain of one spatial atom under a store, together
    with a per-cell check; returns None when the atom is unsatisfiable
    under this store.  The whole footprint must consist of locations, so
    an interval reaching below 1 kills the atom rather than shrinking
    it."""
    if isinstance(a, PointsTo):
        addr = interp_term(a.addr, state)
        if addr < 1:
            return None
        val = interp_term(a.value, state)
        return [(addr, val)]
    if isinstance(a, (Arr, NegArr)):
        lo = interp_term(a.lo, state)
        hi = interp_term(a.hi, state)
        if not 1 <= lo < hi:
            return None
        want = BOT if isinstance(a, NegArr) else "+"
        return [(l, want) for l in range(lo, hi)]
    raise TypeError(a)


def satisfies_heap(state: ConcreteState, psi: SymbolicHeap) -> bool:
    """Directed satisfaction: every spatial atom's footprint is determined
    by the store, so the separating conjunction holds iff the footprints
    are disjoint, tile the heap domain exactly, and each cell has the
    required shape.  Pure atoms consume no cells."""
    for a in psi.pure_atoms:
        if not eval_pure_atom(a, state):
            return False
    required = {}
    for a in psi.spatial_atoms:
        cells = _spatial_cells(a, state)
        if cells is None:
            return False
        for l, want in cells:
            if l in required:
                return False  # overlapping footprints cannot be separated
            required[l] = want
    if set(required) != set(state.heap):
        return False
    for l, want in required.items():
        have = state.heap[l]
        if want == "+":
            if have is BOT:
                return False
        elif want is BOT:
            if have is not BOT:
                return False
        elif have != want:
            return False
    return True


def satisfies_heap_naive(state: ConcreteState, psi: SymbolicHeap) -> bool:
    """Oracle satisfier: split the heap by brute-force subset enumeration
    per spatial atom instead of reading footprints off the store."""
    def sat_alone(a, heap):
        sub = ConcreteState(state.store, heap, state.blocks)
        if isinstance(a, PureAtom):
            return not heap and eval_pure_atom(a, sub)
        cells = _spatial_cells(a, sub)
        if cells is None:
            return False
        if set(heap) != {l for l, _ in cells}:
            return False
        for l, want in cells:
            have = heap[l]
            if want == "+":
                if have is BOT:
                    return False
            elif want is BOT:
                if have is not BOT:
                    return False
            elif have != want:
                return False
        return True

    def go(atoms, heap):
        if not atoms:
            return not heap
        first, rest = atoms[0], atoms[1:]
        if isinstance(first, PureAtom):
            return sat_alone(first, {}) and go(rest, heap)
        locs = sorted(heap)
        for k in range(len(locs) + 1):
            for picked in itertools.combinations(locs, k):
                sub = {l: heap[l] for l in picked}
                if sat_alone(first, sub):
                    remaining = {l: v for l, v in heap.items()
                                 if l not in picked}
                    if go(rest, remaining):
                        return True
        return False

    return go(list(psi.atoms), dict(state.heap))


def _default_witness_max(state: ConcreteState, a: Assertion) -> int:
    seen = [0]
    seen.extend(v for v in state.store.values())
    seen.extend(v for v in state.heap.values() if v is not BOT)
    seen.extend(hi for _, hi in state.blocks)

    def lits(t):
        if isinstance(t, Lit):
            return t.value
        if isinstance(t, Add):
            return lits(t.left) + lits(t.right)
        if isinstance(t, (BlockBase, BlockEnd)):
            return lits(t.arg)
        return 0

    nbound = 0
    for d in a.disjuncts:
        nbound = max(nbound, len(d.bound))
        for atom in d.heap:
            if not isinstance(atom, Emp):
                for t in atom_terms(atom):
                    seen.append(lits(t))
    return max(seen) + nbound + 2


def satisfies_disjunct(state: ConcreteState, d: Disjunct, wmax: int,
                       naive=False) -> bool:
    heap_sat = satisfies_heap_naive if naive else satisfies_heap
    if not d.bound:
        return heap_sat(state, d.heap)
    for values in itertools.product(range(wmax + 1), repeat=len(d.bound)):
        store = dict(state.store)
        store.update(zip(d.bound, values))
        if heap_sat(ConcreteState(store, state.heap, state.blocks), d.heap):
            return True
    return False


def satisfies(state: ConcreteState, a: Assertion, wmax: int | None = None,
              naive=False):
    """Three-valued: True, False, or None when every materialized disjunct
    fails but the assertion was truncated.  Existential witnesses range
    over 0..wmax; the default bound is a heuristic over the constants in
    sight, so callers comparing model sets should pass the universe's
    witness_max explicitly."""
    if wmax is None:
        wmax = _default_witness_max(state, a)
    for d in a.disjuncts:
        if satisfies_disjunct(state, d, wmax, naive=naive):
            return True
    return None if a.truncated else False


# ---------------------------------------------------------------------------
# State enumeration


def _block_covers(run):
    """All ways to cut one maximal run of consecutive cells into blocks."""
    lo, hi = run
    if lo == hi:
        return [[]]
    out = []
    for cut in range(lo + 1, hi):
        for rest in _block_covers((cut, hi)):
            out.append([(lo, cut)] + rest)
    out.append([(lo, hi)])
    return out


def _runs(cells):
    runs = []
    for l in sorted(cells):
        if runs and runs[-1][1] == l:
            runs[-1][1] = l + 1
        else:
            runs.append([l, l + 1])
    return [tuple(r) for r in runs]


def exact_block_choices(dom_plus):
    """Block sets whose union is exactly dom_plus."""
    choice_lists = [_block_covers(r) for r in _runs(dom_plus)]
    for parts in itertools.product(*choice_lists):
        yield frozenset(b for part in parts for b in part)


def block_choices(dom_plus, dom_minus, vmax):
    """All block sets within 1..vmax covering dom_plus and avoiding
    dom_minus (the non-exact case)."""
    cells = [l for l in range(1, vmax + 1) if l not in dom_minus]
    out = []

    def go_start(i, acc):
        # choose block starts left to right so blocks stay disjoint
        if i == len(cells):
            covered = {c for b in acc for c in range(b[0], b[1])}
            if dom_plus <= covered:
                out.append(frozenset(acc))
            return
        go_start(i + 1, acc)
        j = i
        while j < len(cells) and cells[j] == cells[i] + (j - i):
            acc.append((cells[i], cells[j] + 1))
            go_start(j + 1, acc)
            acc.pop()
            j += 1

    go_start(0, [])
    return out


def enumerate_states(u: Universe, exact_only=False):
    """Every well-formed state of the universe (exact ones only on
    request).  Purely for small oracles and tests; model enumeration for
    assertions goes through models() instead."""
    locs = list(u.locations)
    for store_vals in itertools.product(u.values, repeat=len(u.vars)):
        store = dict(zip(u.vars, store_vals))
        for k in range(u.heap_cap + 1):
            for dom in itertools.combinations(locs, k):
                dom = set(dom)
                for plus_size in range(len(dom) + 1):
                    for dom_plus in itertools.combinations(sorted(dom),
                                                           plus_size):
                        dom_plus = set(dom_plus)
                        dom_minus = dom - dom_plus
                        if exact_only:
                            blocks_iter = exact_block_choices(dom_plus)
                        else:
                            blocks_iter = block_choices(dom_plus, dom_minus,
                                                        u.vmax)
                        block_sets = list(blocks_iter)
                        for vals in itertools.product(
                                u.values, repeat=plus_size):
                            heap = dict(zip(sorted(dom_plus), vals))
                            heap.update({l: BOT for l in dom_minus})
                            for blocks in block_sets:
                                yield ConcreteState(store, heap, blocks)


def in_universe(state: ConcreteState, u: Universe) -> bool:
    if set(state.store) != set(u.vars):
        return False
    if any(v > u.vmax for v in state.store.values()):
        return False
    if len(state.heap) > u.heap_cap:
        return False
    for l, v in state.heap.items():
        if not 1 <= l <= u.vmax:
            return False
        if v is not BOT and v > u.vmax:
            return False
    for lo, hi in state.blocks:
        if lo < 1 or hi > u.vmax + 1:
            return False
    return True


def models(a: Assertion, u: Universe, exact_only=False, naive=False,
           limit=None):
    """States of the universe satisfying the assertion, enumerated
    constructively: stores and witnesses by nested loops with early pure
    pruning, heaps read off the spatial footprints, block sets completed
    last.  With limit=n stops after n states (witness search)."""
    extra = a.free_vars() - set(u.vars)
    if extra:
        raise ValueError("assertion mentions variables outside the "
                         "universe: %s" % ", ".join(sorted(extra)))
    found = set()
    for d in a.disjuncts:
        for st in _disjunct_models(d, u, exact_only, naive):
            if st not in found:
                found.add(st)
                yield st
                if limit is not None and len(found) >= limit:
                    return


def _disjunct_models(d: Disjunct, u: Universe, exact_only, naive):
    from .syntax import FreshNames, heap_vars, rename_bound

    shadowed = set(d.bound) & set(u.vars)
    if shadowed:
        # a bound variable hiding a universe variable leaves that store
        # slot unconstrained; rename so the slot ranges independently
        fresh = FreshNames(set(u.vars) | heap_vars(d.heap) | set(d.bound))
        d = rename_bound(d, {x: fresh.new() for x in shadowed})
    names = list(u.vars) + list(d.bound)
    ranges = [range(u.vmax + 1) if x in u.vars
              else range(u.witness_max + 1) for x in names]
    pure = d.heap.pure_atoms
    early = [a for a in pure
             if not (contains_be(a.left) or contains_be(a.right))]
    late = [a for a in pure if a not in early]
    spatial = d.heap.spatial_atoms

    # check each b/e-free pure atom as soon as its variables are assigned
    stages = {i: [] for i in range(len(names) + 1)}
    for a in early:
        need = atom_vars(a)
        last = 0
        for i, x in enumerate(names):
            if x in need:
                last = i + 1
        stages[last].append(a)

    def assignments(i, store):
        if stages[i]:
            probe = ConcreteState(store, {}, ())
            for a in stages[i]:
                if not eval_pure_atom(a, probe):
                    return
        if i == len(names):
            yield dict(store)
            return
        x = names[i]
        for v in ranges[i]:
            store[x] = v
            yield from assignments(i + 1, store)
        del store[x]

    for store in assignments(0, {}):
        probe = ConcreteState(store, {}, ())
        footprint = {}
        dead = False
        arr_cells = []
        for atom in spatial:
            cells = _spatial_cells(atom, probe)
            if cells is None:
                dead = True
                break
            for l, want in cells:
                if l in footprint:
                    dead = True
                    break
                footprint[l] = want
                if want == "+" and not isinstance(atom, PointsTo):
                    arr_cells.append(l)
            if dead:
                break
        if dead or len(footprint) > u.heap_cap:
            continue
        if any(l > u.vmax for l in footprint):
            continue
        fixed = {l: w for l, w in footprint.items()
                 if w != "+" or l not in arr_cells}
        if any(w is not BOT and w != "+" and w > u.vmax
               for w in footprint.values()):
            continue
        dom_plus = {l for l, w in footprint.items() if w is not BOT}
        dom_minus = {l for l, w in footprint.items() if w is BOT}
        if exact_only:
            block_sets = list(exact_block_choices(dom_plus))
        else:
            block_sets = block_choices(dom_plus, dom_minus, u.vmax)
        for vals in itertools.product(u.values, repeat=len(arr_cells)):
            heap = dict(fixed)
            heap.update(zip(arr_cells, vals))
            for blocks in block_sets:
                st = ConcreteState(store, heap, blocks)
                if late and not all(eval_pure_atom(a, st) for a in late):
                    continue
                proj = ConcreteState({x: store[x] for x in u.vars}, heap,
                                    blocks)
                if naive:
                    full = ConcreteState(store, heap, blocks)
                    if not satisfies_heap_naive(full, d.heap):
                        continue
                yield proj


# ---------------------------------------------------------------------------
# Denotational semantics


def denote(c: Command, exit: str, state: ConcreteState, u: Universe):
    """Successor states of one exact state under the command, with all
    nondeterminism (havoc values, allocation sites and fill values, choice,
    loop unrollings up to u.loop_bound) enumerated inside the universe.
    Deterministic results may leave the universe (values can grow past
    vmax); callers comparing against formula models filter with
    in_universe."""
    if exit not in ("ok", "er"):
        raise ValueError("exit must be ok or er")
    return _denote(c, exit, state, u)


def _denote(c, exit, state, u):
    ok = exit == "ok"
    if isinstance(c, Skip):
        return {state} if ok else set()
    if isinstance(c, Error):
        return set() if ok else {state}
    if isinstance(c, Assign):
        if not ok:
            return set()
        return {state.with_store(c.var, interp_term(c.term, state))}
    if isinstance(c, Havoc):
        if not ok:
            return set()
        return {state.with_store(c.var, v) for v in u.values}
    if isinstance(c, Assume):
        if not ok:
            return set()
        probe = ConcreteState(state.store, {}, state.blocks)
        if all(eval_pure_atom(a, probe) for a in c.cond.pure_atoms):
            return {state}
        return set()
    if isinstance(c, Seq):
        out = set()
        if not ok:
            out |= _denote(c.first, "er", state, u)
        for mid in _denote(c.first, "ok", state, u):
            out |= _denote(c.second, exit, mid, u)
        return out
    if isinstance(c, Choice):
        return (_denote(c.left, exit, state, u)
                | _denote(c.right, exit, state, u))
    if isinstance(c, Star):
        out = set()
        frontier = {state}
        for _ in range(u.loop_bound + 1):
            if ok:
                out |= frontier
            else:
                for s in frontier:
                    out |= _denote(c.body, "er", s, u)
            nxt = set()
            for s in frontier:
                nxt |= _denote(c.body, "ok", s, u)
            frontier = nxt
        return out
    if isinstance(c, LocalInit):
        return _denote(desugar_local_init(c), exit, state, u)
    if isinstance(c, Local):
        outer = state.store.get(c.var)
        out = set()
        for v in u.values:
            inner = state.with_store(c.var, v)
            for res in _denote(c.body, exit, inner, u):
                if outer is None:
                    store = dict(res.store)
                    store.pop(c.var, None)
                    out.add(ConcreteState(store, res.heap, res.blocks))
                else:
                    out.add(res.with_store(c.var, outer))
        return out
    if isinstance(c, Alloc):
        size = interp_term(c.size, state)
        if not ok or size < 1:
            return set()
        busy = state.block_cells()
        out = set()
        for l in range(1, u.vmax - size + 2):
            cells = set(range(l, l + size))
            if cells & busy:
                continue
            if l + size - 1 > u.vmax:
                continue
            blocks = set(state.blocks) | {(l, l + size)}
            for vals in itertools.product(u.values, repeat=size):
                heap = dict(state.heap)
                heap.update(zip(range(l, l + size), vals))
                out.add(ConcreteState(state.with_store(c.var, l).store,
                                      heap, blocks))
        return out
    if isinstance(c, Free):
        addr = interp_term(c.addr, state)
        base = block_base(state, addr)
        if ok:
            if base < 1 or addr != base:
                return set()
            end = block_end(state, addr)
            heap = dict(state.heap)
            for l in range(base, end):
                heap[l] = BOT
            blocks = set(state.blocks) - {(base, end)}
            return {ConcreteState(state.store, heap, blocks)}
        if addr != base or base == 0:
            return {state}
        return set()
    if isinstance(c, Load):
        addr = interp_term(c.addr, state)
        base = block_base(state, addr)
        if ok:
            if base < 1:
                return set()
            val = state.heap.get(addr)
            if val is BOT or val is None:
                # exact states keep block cells live, so this only fires on
                # ill-formed inputs
                return set()
            return {state.with_store(c.var, val)}
        return {state} if base == 0 else set()
    if isinstance(c, Store):
        addr = interp_term(c.addr, state)
        base = block_base(state, addr)
        if ok:
            if base < 1:
                return set()
            heap = dict(state.heap)
            heap[addr] = interp_term(c.value, state)
            return {ConcreteState(state.store, heap, state.blocks)}
        return {state} if base == 0 else set()
    raise TypeError(c)


def wpo_semantic(p: Assertion, c: Command, exit: str, u: Universe
                 ) -> frozenset:
    """The semantic weakest postcondition within the universe: every state
    reachable under the given exit from some exact model of p, restricted
    back to the universe."""
    out = set()
    for pre in models(p, u, exact_only=True):
        for post in denote(c, exit, pre, u):
            if in_universe(post, u):
                out.add(post)
    return frozenset(out)


# ---------------------------------------------------------------------------
# JSON


def state_to_json(state: ConcreteState) -> dict:
    return {
        "store": {k: v for k, v in sorted(state.store.items())},
        "heap": {str(l): ("bot" if v is BOT else v)
                 for l, v in sorted(state.heap.items())},
        "blocks": [list(b) for b in sorted(state.blocks)],
    }


def state_key(state: ConcreteState):
    """Deterministic ordering for reporting: fewest heap cells first, then
    least total value, then fewest blocks, then the serialized form as a
    final tiebreak."""
    live = sum(v for v in state.heap.values() if v is not BOT)
    blob = json.dumps(state_to_json(state), sort_keys=True)
    return (len(state.heap), sum(state.store.values()) + live,
            len(state.blocks), blob)


def state_from_json(data: dict) -> ConcreteState:
    heap = {}
    for k, v in data.get("heap", {}).items():
        heap[int(k)] = BOT if v == "bot" else int(v)
    blocks = [tuple(b) for b in data.get("blocks", [])]
    return ConcreteState(dict(data.get("store", {})), heap, blocks)
