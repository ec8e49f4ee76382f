"""Abstract syntax for terms, symbolic heaps, assertions, and heap programs.

Terms are naturals, variables, sums, null, and the block-shape observers
b(t) / e(t) (base and end of the allocated block containing t); the argument
of b/e must itself be b/e-free.  A symbolic heap is a multiset of spatial
atoms (emp, points-to, arr, narr) and pure atoms (==, !=, <=, <) joined by
the separating conjunction; an assertion is a finite disjunction of
existentially quantified symbolic heaps, with the empty disjunction playing
the role of false.

This module also implements the syntactic measures the proof rules depend
on: the subterm closure term(t), the per-formula closure termS / its b/e-free
restriction, the per-command closure termC, and the modified-variable set.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field


# ---------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Null(Term):
    __slots__ = ()


@dataclass(frozen=True)
class Lit(Term):
    value: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("literals are naturals, got %d" % self.value)


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class BlockBase(Term):
    arg: Term

    def __post_init__(self):
        if contains_be(self.arg):
            raise ValueError("argument of b(-) must be b/e-free")


@dataclass(frozen=True)
class BlockEnd(Term):
    arg: Term

    def __post_init__(self):
        if contains_be(self.arg):
            raise ValueError("argument of e(-) must be b/e-free")


NULL = Null()


def contains_be(t: Term) -> bool:
    if isinstance(t, (BlockBase, BlockEnd)):
        return True
    if isinstance(t, Add):
        return contains_be(t.left) or contains_be(t.right)
    return False


def term_set(t: Term) -> frozenset:
    """Subterm closure of t.  null contributes nothing; every other node
    contributes itself plus its children's closures."""
    if isinstance(t, Null):
        return frozenset()
    if isinstance(t, (Lit, Var)):
        return frozenset([t])
    if isinstance(t, Add):
        return frozenset([t]) | term_set(t.left) | term_set(t.right)
    if isinstance(t, (BlockBase, BlockEnd)):
        return frozenset([t]) | term_set(t.arg)
    raise TypeError(t)


def term_vars(t: Term) -> frozenset:
    if isinstance(t, Var):
        return frozenset([t.name])
    if isinstance(t, Add):
        return term_vars(t.left) | term_vars(t.right)
    if isinstance(t, (BlockBase, BlockEnd)):
        return term_vars(t.arg)
    return frozenset()


def subst_term(t: Term, mapping: dict) -> Term:
    """Substitute variables by terms.  mapping: name -> Term."""
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, Add):
        return Add(subst_term(t.left, mapping), subst_term(t.right, mapping))
    if isinstance(t, BlockBase):
        return BlockBase(subst_term(t.arg, mapping))
    if isinstance(t, BlockEnd):
        return BlockEnd(subst_term(t.arg, mapping))
    return t


def replace_in_term(t: Term, targets: frozenset, replacement: Term) -> Term:
    """Simultaneously replace every occurrence of any term in targets.

    Top-down: a replaced occurrence is not scanned again, so the operation
    is a single parallel pass.  Callers must ensure no two targets stand in
    the subterm relation (checked by replace_term_set)."""
    if t in targets:
        return replacement
    if isinstance(t, Add):
        return Add(replace_in_term(t.left, targets, replacement),
                   replace_in_term(t.right, targets, replacement))
    if isinstance(t, BlockBase):
        return BlockBase(replace_in_term(t.arg, targets, replacement))
    if isinstance(t, BlockEnd):
        return BlockEnd(replace_in_term(t.arg, targets, replacement))
    return t


def term_key(t: Term):
    """Total syntactic order on terms, used to normalize atom multisets."""
    if isinstance(t, Null):
        return (0,)
    if isinstance(t, Lit):
        return (1, t.value)
    if isinstance(t, Var):
        return (2, t.name)
    if isinstance(t, Add):
        return (3, term_key(t.left), term_key(t.right))
    if isinstance(t, BlockBase):
        return (4, term_key(t.arg))
    if isinstance(t, BlockEnd):
        return (5, term_key(t.arg))
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Atoms


class Atom:
    __slots__ = ()


class SpatialAtom(Atom):
    __slots__ = ()


class PureAtom(Atom):
    __slots__ = ()


@dataclass(frozen=True)
class Emp(SpatialAtom):
    __slots__ = ()


@dataclass(frozen=True)
class PointsTo(SpatialAtom):
    addr: Term
    value: Term


@dataclass(frozen=True)
class Arr(SpatialAtom):
    lo: Term
    hi: Term


@dataclass(frozen=True)
class NegArr(SpatialAtom):
    lo: Term
    hi: Term


@dataclass(frozen=True)
class Eq(PureAtom):
    left: Term
    right: Term


@dataclass(frozen=True)
class Neq(PureAtom):
    left: Term
    right: Term


@dataclass(frozen=True)
class Le(PureAtom):
    left: Term
    right: Term


@dataclass(frozen=True)
class Lt(PureAtom):
    left: Term
    right: Term


EMP = Emp()


def not_pointsto(t: Term) -> NegArr:
    """The one-cell deallocated segment, written `t !|->` in the surface
    syntax: sugar for narr(t, t+1)."""
    return NegArr(t, Add(t, Lit(1)))


def atom_terms(a: Atom):
    if isinstance(a, Emp):
        return ()
    if isinstance(a, PointsTo):
        return (a.addr, a.value)
    if isinstance(a, (Arr, NegArr)):
        return (a.lo, a.hi)
    if isinstance(a, (Eq, Neq, Le, Lt)):
        return (a.left, a.right)
    raise TypeError(a)


def atom_term_set(a: Atom) -> frozenset:
    """Per-atom contribution to termS.  A points-to cell occupies [t, t+1),
    so both endpoints count alongside the stored value."""
    if isinstance(a, Emp):
        return frozenset()
    if isinstance(a, PointsTo):
        return (term_set(a.addr) | term_set(Add(a.addr, Lit(1)))
                | term_set(a.value))
    terms = atom_terms(a)
    return term_set(terms[0]) | term_set(terms[1])


def subst_atom(a: Atom, mapping: dict) -> Atom:
    if isinstance(a, Emp):
        return a
    return type(a)(*[subst_term(t, mapping) for t in atom_terms(a)])


def replace_in_atom(a: Atom, targets: frozenset, replacement: Term) -> Atom:
    if isinstance(a, Emp):
        return a
    return type(a)(*[replace_in_term(t, targets, replacement)
                     for t in atom_terms(a)])


def atom_key(a: Atom):
    ranks = {Emp: 0, PointsTo: 1, Arr: 2, NegArr: 3, Eq: 4, Neq: 5, Le: 6,
             Lt: 7}
    return (ranks[type(a)],) + tuple(term_key(t) for t in atom_terms(a))


def atom_vars(a: Atom) -> frozenset:
    out = frozenset()
    for t in atom_terms(a):
        out |= term_vars(t)
    return out


# ---------------------------------------------------------------------------
# Symbolic heaps


class SymbolicHeap:
    """A separating conjunction of atoms, normalized to a sorted multiset.

    Equality and hashing see the multiset, not the order atoms were written
    in; duplicates are kept (x|->1 * x|->1 is a legitimate, unsatisfiable
    formula and must not collapse).  emp is the unit of * and is dropped at
    construction; the empty multiset itself denotes the empty heap."""

    __slots__ = ("atoms",)

    def __init__(self, atoms=()):
        atoms = tuple(atoms)
        for a in atoms:
            if not isinstance(a, Atom):
                raise TypeError("not an atom: %r" % (a,))
        atoms = tuple(a for a in atoms if not isinstance(a, Emp))
        object.__setattr__(self, "atoms",
                           tuple(sorted(atoms, key=atom_key)))

    def __eq__(self, other):
        return isinstance(other, SymbolicHeap) and self.atoms == other.atoms

    def __hash__(self):
        return hash(("SymbolicHeap", self.atoms))

    def __repr__(self):
        return "SymbolicHeap(%r)" % (list(self.atoms),)

    def __iter__(self):
        return iter(self.atoms)

    @property
    def pure_atoms(self):
        return tuple(a for a in self.atoms if isinstance(a, PureAtom))

    @property
    def spatial_atoms(self):
        return tuple(a for a in self.atoms if isinstance(a, SpatialAtom))

    def star(self, other) -> "SymbolicHeap":
        if isinstance(other, SymbolicHeap):
            return SymbolicHeap(self.atoms + other.atoms)
        return SymbolicHeap(self.atoms + tuple(other))

    def without(self, atoms) -> "SymbolicHeap":
        """Remove one occurrence of each given atom (multiset difference)."""
        left = list(self.atoms)
        for a in atoms:
            left.remove(a)
        return SymbolicHeap(left)


def heap_term_set(psi: SymbolicHeap) -> frozenset:
    out = frozenset()
    for a in psi:
        out |= atom_term_set(a)
    return out


def heap_term_set_be_free(psi: SymbolicHeap) -> frozenset:
    return frozenset(t for t in heap_term_set(psi) if not contains_be(t)
                     and not isinstance(t, (BlockBase, BlockEnd)))


def heap_vars(psi: SymbolicHeap) -> frozenset:
    out = frozenset()
    for a in psi:
        out |= atom_vars(a)
    return out


def subst_heap(psi: SymbolicHeap, mapping: dict) -> SymbolicHeap:
    return SymbolicHeap(subst_atom(a, mapping) for a in psi)


def replace_term_set(psi: SymbolicHeap, targets, replacement: Term
                     ) -> SymbolicHeap:
    """psi[targets := replacement], the simultaneous occurrence replacement.

    Rejects target sets where one member is a proper subterm of another,
    since the replacement would then depend on traversal order."""
    targets = frozenset(targets)
    for t in targets:
        for u in targets:
            if t != u and t in term_set(u):
                raise ValueError(
                    "replacement targets overlap: %r is a subterm of %r"
                    % (t, u))
    return SymbolicHeap(replace_in_atom(a, targets, replacement)
                        for a in psi)


# ---------------------------------------------------------------------------
# Assertions


@dataclass(frozen=True)
class Disjunct:
    """One existentially quantified symbolic heap.  origin is diagnostic
    provenance (which atomic command produced an error disjunct) and does
    not participate in equality."""

    bound: tuple
    heap: SymbolicHeap
    origin: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(set(self.bound)) != len(self.bound):
            raise ValueError("duplicate bound variable in %r" % (self.bound,))

    def free_vars(self) -> frozenset:
        return heap_vars(self.heap) - frozenset(self.bound)


@dataclass(frozen=True)
class Assertion:
    """A finite disjunction of Disjuncts.  The empty disjunction is false.

    truncated marks assertions whose disjunct stream was cut by a budget
    (loop unrolling depth or disjunct cap); consumers answer three-valued
    beyond the materialized prefix."""

    disjuncts: tuple
    truncated: bool = False

    def __post_init__(self):
        for d in self.disjuncts:
            if not isinstance(d, Disjunct):
                raise TypeError("not a disjunct: %r" % (d,))

    @staticmethod
    def false() -> "Assertion":
        return Assertion(())

    @staticmethod
    def of_heap(heap: SymbolicHeap, bound=(), origin=None) -> "Assertion":
        return Assertion((Disjunct(tuple(bound), heap, origin),))

    def is_false(self) -> bool:
        return not self.disjuncts and not self.truncated

    def free_vars(self) -> frozenset:
        out = frozenset()
        for d in self.disjuncts:
            out |= d.free_vars()
        return out

    def union(self, other: "Assertion") -> "Assertion":
        return Assertion(self.disjuncts + other.disjuncts,
                         self.truncated or other.truncated)


FALSE = Assertion.false()


def assertion_vars(a: Assertion) -> frozenset:
    """All variable names occurring in a, bound or free."""
    out = frozenset()
    for d in a.disjuncts:
        out |= heap_vars(d.heap) | frozenset(d.bound)
    return out


def rename_bound(d: Disjunct, mapping: dict) -> Disjunct:
    """Alpha-rename bound variables of a disjunct.  mapping: old -> new name;
    new names must be fresh for the disjunct."""
    taken = heap_vars(d.heap) | frozenset(d.bound)
    for old, new in mapping.items():
        if new in taken:
            raise ValueError("rename target %s not fresh" % new)
    sub = {old: Var(new) for old, new in mapping.items()}
    return Disjunct(tuple(mapping.get(x, x) for x in d.bound),
                    subst_heap(d.heap, sub), d.origin)


def subst_assertion(a: Assertion, mapping: dict, fresh=None) -> Assertion:
    """Capture-avoiding substitution of free variables in an assertion.

    Bound variables that clash with the mapping's domain or with variables
    of the replacement terms are renamed first (fresh defaults to a namer
    over all names in sight)."""
    clash = frozenset(mapping)
    for t in mapping.values():
        clash |= term_vars(t)
    if fresh is None:
        used = assertion_vars(a) | clash
        fresh = FreshNames(used)
    out = []
    for d in a.disjuncts:
        ren = {x: fresh.new() for x in d.bound if x in clash}
        if ren:
            d = rename_bound(d, ren)
        sub = {k: v for k, v in mapping.items() if k not in d.bound}
        out.append(Disjunct(d.bound, subst_heap(d.heap, sub), d.origin))
    return Assertion(tuple(out), a.truncated)


def alpha_key(d: Disjunct):
    """Canonical key of a disjunct up to renaming and reordering of its
    binders: replace them by numbered placeholders and take the least
    resulting atom sequence over binder orders."""
    if not d.bound:
        return (0, tuple(atom_key(a) for a in d.heap.atoms))
    best = None
    for order in itertools.permutations(d.bound):
        sub = {x: Var("\x00%d" % i) for i, x in enumerate(order)}
        key = tuple(atom_key(a) for a in subst_heap(d.heap, sub).atoms)
        if best is None or key < best:
            best = key
    return (len(d.bound), best)


def alpha_eq(a: Assertion, b: Assertion) -> bool:
    """Equality up to binder renaming and reordering of binders and
    disjuncts.  Truncation flags must agree: a cut-off disjunction is a
    different statement from a complete one."""
    if a.truncated != b.truncated:
        return False
    ka = sorted(alpha_key(d) for d in a.disjuncts)
    kb = sorted(alpha_key(d) for d in b.disjuncts)
    return ka == kb


# ---------------------------------------------------------------------------
# Commands


class Command:
    __slots__ = ()


def _check_be_free(t: Term, what: str):
    if contains_be(t) or isinstance(t, (BlockBase, BlockEnd)):
        raise ValueError("%s must be b/e-free, got %r" % (what, t))


@dataclass(frozen=True)
class Skip(Command):
    __slots__ = ()


@dataclass(frozen=True)
class Error(Command):
    __slots__ = ()


@dataclass(frozen=True)
class Assign(Command):
    var: str
    term: Term


@dataclass(frozen=True)
class Havoc(Command):
    var: str


@dataclass(frozen=True)
class Assume(Command):
    cond: SymbolicHeap

    def __post_init__(self):
        if any(isinstance(a, SpatialAtom) for a in self.cond):
            raise ValueError("assume takes a pure formula")


@dataclass(frozen=True)
class Local(Command):
    var: str
    body: Command


@dataclass(frozen=True)
class LocalInit(Command):
    var: str
    init: Term
    body: Command


@dataclass(frozen=True)
class Seq(Command):
    first: Command
    second: Command


@dataclass(frozen=True)
class Choice(Command):
    left: Command
    right: Command


@dataclass(frozen=True)
class Star(Command):
    body: Command


@dataclass(frozen=True)
class Alloc(Command):
    var: str
    size: Term

    def __post_init__(self):
        _check_be_free(self.size, "alloc size")


@dataclass(frozen=True)
class Free(Command):
    addr: Term

    def __post_init__(self):
        _check_be_free(self.addr, "free address")


@dataclass(frozen=True)
class Load(Command):
    var: str
    addr: Term

    def __post_init__(self):
        _check_be_free(self.addr, "load address")


@dataclass(frozen=True)
class Store(Command):
    addr: Term
    value: Term

    def __post_init__(self):
        _check_be_free(self.addr, "store address")


def desugar_local_init(c: LocalInit):
    """local x := t in C  ==>  local x in (x := t; C).

    If t mentions x it reads the uninitialized inner variable, whose value
    is arbitrary; the construct is degenerate but well defined."""
    return Local(c.var, Seq(Assign(c.var, c.init), c.body))


def command_term_set(c: Command) -> frozenset:
    """termC: the terms a command's footprint can mention, feeding the
    canonical-form requirement of the postcondition rules."""
    if isinstance(c, (Skip, Error)):
        return frozenset()
    if isinstance(c, Assign):
        return frozenset([Var(c.var)]) | term_set(c.term)
    if isinstance(c, Havoc):
        return frozenset([Var(c.var)])
    if isinstance(c, Assume):
        return heap_term_set(c.cond)
    if isinstance(c, Local):
        return (command_term_set(c.body) - frozenset([Var(c.var)]))
    if isinstance(c, LocalInit):
        return ((command_term_set(c.body) - frozenset([Var(c.var)]))
                | term_set(c.init))
    if isinstance(c, Seq):
        return command_term_set(c.first) | command_term_set(c.second)
    if isinstance(c, Choice):
        return command_term_set(c.left) | command_term_set(c.right)
    if isinstance(c, Star):
        return command_term_set(c.body)
    if isinstance(c, Alloc):
        return frozenset([Var(c.var)]) | term_set(c.size)
    if isinstance(c, Free):
        return (term_set(c.addr) | term_set(BlockBase(c.addr))
                | term_set(BlockEnd(c.addr)))
    if isinstance(c, Load):
        return frozenset([Var(c.var)]) | term_set(BlockBase(c.addr))
    if isinstance(c, Store):
        return (term_set(Add(c.addr, Lit(1)))
                | term_set(BlockBase(c.addr)) | term_set(c.value))
    raise TypeError(c)


def modified_vars(c: Command) -> frozenset:
    if isinstance(c, (Skip, Error, Assume, Free, Store)):
        return frozenset()
    if isinstance(c, (Assign, Havoc, Alloc, Load)):
        return frozenset([c.var])
    if isinstance(c, (Local, LocalInit)):
        return modified_vars(c.body) - frozenset([c.var])
    if isinstance(c, Seq):
        return modified_vars(c.first) | modified_vars(c.second)
    if isinstance(c, Choice):
        return modified_vars(c.left) | modified_vars(c.right)
    if isinstance(c, Star):
        return modified_vars(c.body)
    raise TypeError(c)


def command_vars(c: Command) -> frozenset:
    """Every variable name occurring anywhere in c, binders included."""
    if isinstance(c, (Skip, Error)):
        return frozenset()
    if isinstance(c, Assign):
        return frozenset([c.var]) | term_vars(c.term)
    if isinstance(c, Havoc):
        return frozenset([c.var])
    if isinstance(c, Assume):
        return heap_vars(c.cond)
    if isinstance(c, Local):
        return frozenset([c.var]) | command_vars(c.body)
    if isinstance(c, LocalInit):
        return (frozenset([c.var]) | term_vars(c.init)
                | command_vars(c.body))
    if isinstance(c, Seq):
        return command_vars(c.first) | command_vars(c.second)
    if isinstance(c, Choice):
        return command_vars(c.left) | command_vars(c.right)
    if isinstance(c, Star):
        return command_vars(c.body)
    if isinstance(c, Alloc):
        return frozenset([c.var]) | term_vars(c.size)
    if isinstance(c, Free):
        return term_vars(c.addr)
    if isinstance(c, Load):
        return frozenset([c.var]) | term_vars(c.addr)
    if isinstance(c, Store):
        return term_vars(c.addr) | term_vars(c.value)
    raise TypeError(c)


# ---------------------------------------------------------------------------
# Fresh names

_FRESH_RE = re.compile(r"^\$(\d+)$")


class FreshNames:
    """Names from the reserved namespace $0, $1, ..., starting above any
    reserved name in `used` so freshness survives round trips."""

    def __init__(self, used=()):
        n = 0
        for name in used:
            m = _FRESH_RE.match(name)
            if m:
                n = max(n, int(m.group(1)) + 1)
        self._next = n

    def new(self) -> str:
        name = "$%d" % self._next
        self._next += 1
        return name


def exits():
    return ("ok", "er")
