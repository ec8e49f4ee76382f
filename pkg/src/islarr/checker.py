"""Triple checking, bug reporting, and the symbolic-vs-semantic diff.

A triple [P] C [exit: Q] holds when every exact model of Q is reachable
under the given exit from some model of P.  Within a finite universe this
is decidable two ways: semantically, by enumerating models and successor
states, and logically, by computing the symbolic post-image of P and
asking whether Q entails it.  Both live here, deliberately separate; they
must agree wherever neither route hits a bound.

Verdicts are relative to the universe.  "valid" and "invalid" are
definitive within it; "bounded" means some cut-off (loop depth, a
truncated disjunction) kept the checker from committing either way, and
the notes say which one.
"""

from __future__ import annotations

from dataclasses import dataclass

from .entailment import entails_assertion, pure_closure, sat_pure
from .parser import format_assertion, format_command
from .semantics import (ConcreteState, Universe, models, satisfies,
                        state_key, state_to_json, wpo_semantic)
from .syntax import (Assertion, Choice, Command, Disjunct, Local, LocalInit,
                     Seq, Star, exits)
from .wpo import WpoBudget, wpo

VALID = "valid"
INVALID = "invalid"
BOUNDED = "bounded"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class Triple:
    """[pre] prog [exit: post]."""

    pre: Assertion
    prog: Command
    exit: str
    post: Assertion

    def __post_init__(self):
        if self.exit not in exits():
            raise ValueError("unknown exit %r" % (self.exit,))
        if not isinstance(self.prog, Command):
            raise TypeError("prog must be a command")

    def to_json(self) -> dict:
        return {
            "pre": format_assertion(self.pre),
            "prog": format_command(self.prog),
            "exit": self.exit,
            "post": format_assertion(self.post),
        }


@dataclass(frozen=True)
class Verdict:
    status: str
    witness: ConcreteState | None = None
    notes: tuple = ()

    def __post_init__(self):
        if self.status not in (VALID, INVALID, BOUNDED, UNKNOWN):
            raise ValueError("unknown status %r" % (self.status,))

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "witness": (None if self.witness is None
                        else state_to_json(self.witness)),
            "notes": list(self.notes),
        }


def has_loop(c: Command) -> bool:
    if isinstance(c, Star):
        return True
    if isinstance(c, Seq):
        return has_loop(c.first) or has_loop(c.second)
    if isinstance(c, Choice):
        return has_loop(c.left) or has_loop(c.right)
    if isinstance(c, (Local, LocalInit)):
        return has_loop(c.body)
    return False


def pick_witness(states):
    """Deterministic representative of a nonempty set of states: fewest
    heap cells, then least total value, then lexicographic on the
    serialized form."""
    return min(states, key=state_key)


def check_triple_semantic(triple: Triple, u: Universe) -> Verdict:
    """Decide the triple by brute force: enumerate the exact models of the
    postcondition and test membership in the reachable set.

    The reachable set is an under-approximation whenever the program
    loops (unrollings stop at u.loop_bound) or the precondition is a
    truncated disjunction, which is harmless for validity but blocks a
    definitive "invalid"."""
    reach = wpo_semantic(triple.pre, triple.prog, triple.exit, u)
    bad = [s for s in models(triple.post, u, exact_only=True)
           if s not in reach]
    if bad:
        wit = pick_witness(bad)
        if triple.pre.truncated:
            return Verdict(BOUNDED, wit, (
                "a postcondition model was not reached, but the "
                "precondition is a truncated disjunction; the missing "
                "disjuncts might reach it",))
        if has_loop(triple.prog):
            return Verdict(BOUNDED, wit, (
                "a postcondition model was not reached within %d loop "
                "unrollings; deeper ones might reach it"
                % u.loop_bound,))
        return Verdict(INVALID, wit, (
            "this model of the postcondition is unreachable",))
    if triple.post.truncated:
        return Verdict(BOUNDED, None, (
            "every materialized postcondition model is reachable, but "
            "the postcondition is a truncated disjunction",))
    return Verdict(VALID)


def check_triple_logical(triple: Triple, u: Universe,
                         budget: WpoBudget | None = None) -> Verdict:
    """Decide the triple through the symbolic post-image: compute
    wpo(pre, prog, exit) and check that the postcondition entails it over
    the universe.

    A truncated post-image stays sound for validity (dropping disjuncts
    can only shrink it), so "valid" needs no downgrade when every
    postcondition model satisfies what was computed."""
    w = wpo(triple.pre, triple.prog, triple.exit, budget)
    bad = []
    unresolved = []
    for st in models(triple.post, u, exact_only=True):
        r = satisfies(st, w, wmax=u.witness_max)
        if r is False:
            bad.append(st)
        elif r is None:
            unresolved.append(st)
    if bad:
        wit = pick_witness(bad)
        if triple.pre.truncated:
            return Verdict(BOUNDED, wit, (
                "a postcondition model falls outside the post-image, but "
                "the precondition is a truncated disjunction",))
        return Verdict(INVALID, wit, (
            "this model of the postcondition falls outside the "
            "symbolic post-image",))
    if unresolved:
        return Verdict(BOUNDED, pick_witness(unresolved), (
            "a postcondition model fails every computed disjunct of a "
            "truncated post-image; the dropped disjuncts might cover it",))
    if triple.post.truncated:
        return Verdict(BOUNDED, None, (
            "every materialized postcondition model lies in the "
            "post-image, but the postcondition is a truncated "
            "disjunction",))
    return Verdict(VALID)


# ---------------------------------------------------------------------------
# Bug reports


@dataclass(frozen=True)
class BugReport:
    """Satisfiable disjuncts of the er post-image, one witness state and
    one source-command tag each (parallel tuples)."""

    er_disjuncts: tuple = ()
    witness_states: tuple = ()
    source_commands: tuple = ()
    truncated: bool = False

    @property
    def empty(self) -> bool:
        return not self.er_disjuncts

    def to_json(self) -> dict:
        entries = []
        for d, wit, src in zip(self.er_disjuncts, self.witness_states,
                               self.source_commands):
            entries.append({
                "assertion": format_assertion(Assertion((d,))),
                "witness": None if wit is None else state_to_json(wit),
                "source_command": src,
            })
        return {"er_disjuncts": entries, "truncated": self.truncated}


def find_bugs(p: Assertion, c: Command, u: Universe | None = None,
              budget: WpoBudget | None = None) -> BugReport:
    """Report the ways C can fault when started from P: each satisfiable
    disjunct of the er post-image, with a concrete witness state when a
    universe is given.  Unsatisfiable disjuncts are silently dropped;
    they describe no state."""
    w = wpo(p, c, "er", budget)
    ds, wits, srcs = [], [], []
    for d in w.disjuncts:
        wit = None
        if u is not None:
            found = list(models(Assertion((d,)), u, exact_only=True,
                                limit=1))
            if not found:
                continue
            wit = found[0]
        else:
            # no universe: prune only what the pure fragment refutes
            clo = pure_closure(d.heap)
            if sat_pure(clo, block_axioms=True,
                        certify=False).status == "unsat":
                continue
        ds.append(d)
        wits.append(wit)
        srcs.append(d.origin)
    return BugReport(tuple(ds), tuple(wits), tuple(srcs), w.truncated)


# ---------------------------------------------------------------------------
# Expressiveness diff


@dataclass(frozen=True)
class DiffReport:
    """Symmetric difference between the models of the symbolic post-image
    and the semantically reachable states.  extra: satisfy the formula
    but were not reached; missing: reached but satisfy no disjunct."""

    extra: tuple = ()
    missing: tuple = ()
    truncated: bool = False

    @property
    def empty(self) -> bool:
        return not self.extra and not self.missing

    def to_json(self) -> dict:
        return {
            "extra": [state_to_json(s) for s in self.extra],
            "missing": [state_to_json(s) for s in self.missing],
            "truncated": self.truncated,
        }


def expressiveness_diff(p: Assertion, c: Command, exit: str, u: Universe,
                        budget: WpoBudget | None = None) -> DiffReport:
    """Compare models(wpo(P, C, exit)) against the enumerated reachable
    set over the universe's exact states.  An empty diff on an
    untruncated run certifies the post-image exact for this input; with
    truncation it only certifies the computed prefix."""
    w = wpo(p, c, exit, budget)
    sym = set(models(w, u, exact_only=True))
    sem = wpo_semantic(p, c, exit, u)
    extra = tuple(sorted(sym - sem, key=state_key))
    missing = tuple(sorted(sem - sym, key=state_key))
    return DiffReport(extra, missing, w.truncated or p.truncated)
