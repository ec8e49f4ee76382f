"""Fixed test programs and a seeded generator for the oracle batteries.

Three collections live here.  The hand-written expressiveness cases each
pin one branch of the post-image computation: a particular allocation
placement or carve-out, a particular overlap between a freed block and
the arrays tiling it, one load or store row, one error row.  The random
generator produces small Star-free programs whose enumeration oracles
stay affordable; it is a pure function of its seed.  The rule instances
feed the soundness battery: at least one accepted application of every
proof rule, plus applications that must be rejected.

Universes are chosen per case.  They only need to be large enough to
give the interesting disjuncts models; every extra location or variable
multiplies the enumeration cost.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .canonical import CaseLimitError, cano
from .checker import Triple
from .parser import parse_assertion, parse_command, parse_heap
from .rules import check_rule_instance
from .semantics import Universe, models
from .syntax import Assertion, Free, Load, Store
from .wpo import (WpoBudget, wpo, wpo_sh_alloc, wpo_sh_free, wpo_sh_load,
                  wpo_sh_store)


@dataclass(frozen=True)
class ExprCase:
    """One (precondition, program, exit) oracle case with its universe."""

    name: str
    pre: str
    prog: str
    exit: str = "ok"
    vars: tuple = ("x", "y")
    vmax: int = 4
    heap_cap: int = 2
    loop_bound: int = 3

    def universe(self) -> Universe:
        return Universe(self.vars, self.vmax, self.heap_cap,
                        self.loop_bound)

    def parsed(self):
        return parse_assertion(self.pre), parse_command(self.prog)

    def budget(self) -> WpoBudget:
        return WpoBudget(loop_bound=self.loop_bound)


def handwritten_cases() -> tuple:
    """The fixed expressiveness corpus.

    Grouped by the branch being pinned; the free cases carry explicit
    block-boundary pins because freeing is only defined at a block base,
    and the allocation cases grade the negative-array layout from a
    single swallowed atom up to a split on both sides."""
    E = ExprCase
    return (
        # variable and control commands
        E("skip-pure", "x == 1 * emp", "skip"),
        E("error-er", "x == 1 * emp", "error()", "er"),
        E("error-ok-empty", "x == 1 * emp", "error()"),
        E("assign-lit", "emp", "x := 3"),
        E("assign-shift", "x == 1 * emp", "x := x + 1"),
        E("assign-read", "x == 1 * emp", "y := x + 1"),
        E("havoc", "x == 3 * emp", "x := *"),
        E("assume-cut", "emp", "assume(x <= 2)"),
        E("assume-empty", "x == 0 * emp", "assume(x != x)"),
        E("seq-assigns", "emp", "x := 1; y := x"),
        E("choice-branches", "emp", "(x := 1) + (x := 2)"),
        E("local-scope", "y == 1 * emp",
          "local x in { x := y; y := x + 1 }"),
        E("local-init", "emp", "local x := 2 in { y := x }"),
        E("loop-counter", "x == 0 * emp", "(x := x + 1)*"),
        # load rows
        E("load-ptr", "x |-> 3", "y := [x]"),
        E("load-arr-head", "arr(1, 3)", "x := [1]"),
        E("load-arr-mid", "arr(1, 3)", "x := [2]"),
        E("load-arr-sym", "arr(y, y + 2)", "x := [y]"),
        E("load-er-freed", "b(y) == 0 * emp", "x := [y]", "er"),
        E("load-er-gap", "narr(1, 2)", "x := [1]", "er"),
        # store rows
        E("store-ptr", "x |-> 3", "[x] := 0"),
        E("store-arr-whole", "arr(1, 2)", "[1] := 0"),
        E("store-arr-head", "arr(1, 3)", "[1] := 0"),
        E("store-arr-mid", "arr(1, 4)", "[2] := 0", heap_cap=3),
        E("store-arr-tail", "arr(y, y + 2)", "[y + 1] := 0"),
        E("store-er", "b(x) == 0 * emp", "[x] := 1", "er"),
        # free overlap shapes
        E("free-cell", "x |-> 1 * b(x) == x * e(x) == x + 1", "free(x)"),
        E("free-whole-array", "arr(1, 3) * b(1) == 1 * e(1) == 3",
          "free(1)"),
        E("free-straddle-both", "arr(1, 4) * b(2) == 2 * e(2) == 3",
          "free(2)", heap_cap=3),
        E("free-left-exact", "arr(1, 3) * b(1) == 1 * e(1) == 2",
          "free(1)"),
        E("free-right-exact", "arr(1, 3) * b(2) == 2 * e(2) == 3",
          "free(2)"),
        E("free-atom-run",
          "x |-> 0 * arr(x + 1, x + 2) * b(x) == x * e(x) == x + 2",
          "free(x)", vars=("x",)),
        E("free-er-null", "x == 0 * emp", "free(x)", "er", vars=("x",)),
        E("free-er-inside", "arr(x, x + 2) * b(x) == x * e(x) == x + 2",
          "free(x + 1)", "er", vars=("x",)),
        # allocation placements and carve-outs
        E("alloc-fresh", "emp", "x := alloc(2)", vmax=5, heap_cap=3),
        E("alloc-swallow", "narr(1, 3)", "x := alloc(3)", vars=("x",),
          vmax=6, heap_cap=4),
        E("alloc-carve-right", "narr(1, 3)", "x := alloc(2)", vars=("x",),
          vmax=5, heap_cap=4),
        E("alloc-split-left", "narr(1, 4)", "x := alloc(2)", vars=("x",),
          vmax=5, heap_cap=4),
        E("alloc-split-both", "narr(1, 5)", "x := alloc(2)", vars=("x",),
          vmax=5, heap_cap=4),
        E("alloc-gap-cover", "narr(1, 2) * narr(3, 4)", "x := alloc(3)",
          vars=("x",), vmax=6, heap_cap=4),
        E("alloc-var-size", "x == 2 * emp", "y := alloc(x)"),
        E("alloc-er", "emp", "x := alloc(2)", "er", vars=("x",), vmax=3),
        # compositions
        E("use-after-free", "x |-> 1 * b(x) == x * e(x) == x + 1",
          "free(x); y := [x]", "er"),
        E("alloc-then-store", "emp", "x := alloc(1); [x] := 2"),
        E("alloc-then-free", "emp", "x := alloc(1); free(x)"),
        E("double-free", "x |-> 1 * b(x) == x * e(x) == x + 1",
          "free(x); free(x)", "er"),
        E("alloc-store-load", "emp", "x := alloc(1); [x] := 2; x := [x]",
          vars=("x",)),
        E("choice-heap", "x |-> 1 * b(x) == x * e(x) == x + 1",
          "free(x) + [x] := 0"),
    )


def by_name(name: str) -> ExprCase:
    for case in handwritten_cases():
        if case.name == name:
            return case
    raise KeyError(name)


# ---------------------------------------------------------------------------
# Random cases


_RAND_VARS = ("x", "y", "z")

# vmax choices per variable count: more variables shrink the location
# range so the state space stays enumerable
_RAND_VMAX = {1: (2, 2, 3, 3, 4, 5, 6), 2: (2, 3, 3, 4), 3: (2, 3)}


def _rand_term(rng, vars, lit_hi=3):
    kind = rng.random()
    if kind < 0.45:
        return rng.choice(vars)
    if kind < 0.8:
        return str(rng.randrange(lit_hi + 1))
    return "%s + %d" % (rng.choice(vars), rng.randrange(1, 3))


def _rand_addr(rng, vars):
    kind = rng.random()
    if kind < 0.5:
        return rng.choice(vars)
    if kind < 0.8:
        return str(rng.randrange(1, 4))
    return "%s + 1" % rng.choice(vars)


def _rand_pure(rng, vars):
    op = rng.choice(("==", "!=", "<=", "<"))
    return "%s %s %s" % (_rand_term(rng, vars), op, _rand_term(rng, vars))


def _rand_spatial(rng, vars):
    kind = rng.random()
    if kind < 0.4:
        return "%s |-> %s" % (_rand_addr(rng, vars),
                              _rand_term(rng, vars))
    lo = rng.choice(vars) if rng.random() < 0.5 else str(rng.randrange(1, 3))
    length = rng.randrange(1, 4)
    shape = "arr" if kind < 0.7 else "narr"
    return "%s(%s, %s + %d)" % (shape, lo, lo, length)


def _rand_pre(rng, vars):
    atoms = [_rand_pure(rng, vars) for _ in range(rng.choice((0, 1, 1, 2)))]
    atoms += [_rand_spatial(rng, vars)
              for _ in range(rng.choice((0, 1, 1, 2)))]
    if not atoms:
        return "emp"
    return " * ".join(atoms)


def _rand_atomic(rng, vars):
    roll = rng.choices(
        ("assign", "havoc", "assume", "load", "store", "free", "alloc",
         "skip", "error"),
        weights=(3, 1, 1, 2, 2, 2, 2, 1, 1))[0]
    v = rng.choice(vars)
    if roll == "assign":
        return "%s := %s" % (v, _rand_term(rng, vars))
    if roll == "havoc":
        return "%s := *" % v
    if roll == "assume":
        return "assume(%s)" % _rand_pure(rng, vars)
    if roll == "load":
        return "%s := [%s]" % (v, _rand_addr(rng, vars))
    if roll == "store":
        return "[%s] := %s" % (_rand_addr(rng, vars),
                               _rand_term(rng, vars, lit_hi=2))
    if roll == "free":
        return "free(%s)" % _rand_addr(rng, vars)
    if roll == "alloc":
        size = rng.choice(vars) if rng.random() < 0.1 else \
            str(rng.randrange(1, 3))
        return "%s := alloc(%s)" % (v, size)
    if roll == "skip":
        return "skip"
    return "error()"


def _rand_case(rng, name):
    nvars = rng.choice((1, 1, 1, 2, 2, 3))
    vars = _RAND_VARS[:nvars]
    vmax = rng.choice(_RAND_VMAX[nvars])
    heap_cap = rng.choice((1, 2, 2, 2))
    exit = "er" if rng.random() < 0.25 else "ok"
    pre = _rand_pre(rng, vars)
    prog = _rand_atomic(rng, vars)
    if rng.random() < 0.35:
        prog = "%s; %s" % (prog, _rand_atomic(rng, vars))
    case = ExprCase(name, pre, prog, exit, vars, vmax, heap_cap)
    # a case only joins the corpus if its post-image computes inside the
    # default budget without truncating; rejection is deterministic, so
    # the stream is still a pure function of the seed
    try:
        w = wpo(*case.parsed(), exit=exit)
    except CaseLimitError:
        return None
    if w.truncated or len(w.disjuncts) > 600:
        return None
    return case


def random_cases(count: int, seed: int = 0) -> tuple:
    """Deterministic stream of small Star-free oracle cases."""
    rng = random.Random(seed)
    cases = []
    while len(cases) < count:
        case = _rand_case(rng, "rand-%03d" % len(cases))
        if case is not None:
            cases.append(case)
    return tuple(cases)


# ---------------------------------------------------------------------------
# Rule instances


@dataclass(frozen=True)
class RuleCase:
    """One claimed application of a proof rule.

    accept says whether the checker must accept it; accepted conclusions
    are what the soundness battery feeds to the semantic checker.  Cases
    whose rule carries an entailment side condition set needs_universe."""

    name: str
    rule: str
    conclusion: Triple
    premises: tuple = ()
    side: dict | None = None
    accept: bool = True
    needs_universe: bool = False
    vars: tuple = ("x",)
    heap_cap: int = 2

    def universe(self, vmax: int) -> Universe:
        return Universe(self.vars, vmax, self.heap_cap)


def _triple(pre, prog, exit, post):
    if isinstance(pre, str):
        pre = parse_assertion(pre)
    if isinstance(post, str):
        post = parse_assertion(post)
    return Triple(pre, parse_command(prog), exit, post)


def _cano1(pre_text, prog_text, pick=0):
    """One canonical disjunct of the precondition, as the heap rules
    want it, plus the parsed command."""
    p = parse_assertion(pre_text)
    c = parse_command(prog_text)
    q = cano(p, c)
    d = q.disjuncts[pick]
    return Assertion((d,)), c, d.heap


def _heap_case(name, rule, pre_text, prog_text, exit="ok", pick=0,
               accept=True, vars=("x",), heap_cap=2):
    """Build a load, store, or free instance: the conclusion post is the
    post-image of the chosen canonical disjunct (the heap of the
    faulting state itself on the error exit)."""
    pre, c, psi = _cano1(pre_text, prog_text, pick)
    if exit == "er":
        post = Assertion.of_heap(psi)
    elif isinstance(c, Load):
        post = wpo_sh_load(psi, c.var, c.addr, exit)
    elif isinstance(c, Store):
        post = wpo_sh_store(psi, c.addr, c.value, exit)
    elif isinstance(c, Free):
        post = wpo_sh_free(psi, c.addr, exit)
    else:
        raise TypeError(c)
    return RuleCase(name, rule, Triple(pre, c, exit, post), accept=accept,
                    vars=vars, heap_cap=heap_cap)


def _alloc_case(name, rule, pre_text, prog_text, vars=("x",), heap_cap=3):
    """Build an allocation instance by searching the computed post-image
    for a disjunct the rule accepts; the shapes were chosen so exactly
    the intended carve-out can appear.

    Order cases that push a variable past the smallest test universe are
    skipped: a pre without models makes the instance vacuous, and its
    post can still have models because bound witnesses range one past
    the location cap, which would read as an unreachable state rather
    than as the vacuity it is."""
    p = parse_assertion(pre_text)
    c = parse_command(prog_text)
    q = cano(p, c)
    u = Universe(vars, 5, heap_cap)
    for d in q.disjuncts:
        pre = Assertion((d,))
        if next(models(pre, u, exact_only=True), None) is None:
            continue
        out = wpo_sh_alloc(d.heap, c.var, c.size, "ok")
        for od in out.disjuncts:
            tr = Triple(pre, c, "ok", Assertion((od,)))
            if not check_rule_instance(rule, (), None, tr):
                continue
            if next(models(tr.post, u, exact_only=True), None) is None:
                continue
            return RuleCase(name, rule, tr, vars=vars,
                            heap_cap=heap_cap)
    raise AssertionError("no %s-shaped disjunct arises from %s"
                         % (rule, pre_text))


def _structural_cases():
    T = _triple
    skip_t = T("x == 1 * emp", "skip", "ok", "x == 1 * emp")
    cases = [
        RuleCase("skip-ok", "skip", skip_t),
        RuleCase("skip-er", "skip",
                 T("x == 1 * emp", "skip", "er", "false")),
        RuleCase("error-er", "error",
                 T("x == 1 * emp", "error()", "er", "x == 1 * emp")),
        RuleCase("error-ok", "error",
                 T("x == 1 * emp", "error()", "ok", "false")),
        RuleCase("assign", "assign",
                 T("x == 1 * emp", "y := x + 1", "ok",
                   "x == 1 * y == x + 1 * emp"), vars=("x", "y")),
        RuleCase("assign-self", "assign",
                 T("x == 1 * emp", "x := x + 1", "ok",
                   "exists v. v == 1 * x == v + 1 * emp")),
        RuleCase("havoc", "havoc",
                 T("x == 3 * emp", "x := *", "ok",
                   "exists v. v == 3 * emp")),
        RuleCase("assume-ok", "assume",
                 T("x == 1 * emp", "assume(x <= 2)", "ok",
                   "x == 1 * x <= 2 * emp")),
        RuleCase("assume-er", "assume",
                 T("x == 1 * emp", "assume(x <= 2)", "er", "false")),
        RuleCase("seq1", "seq1",
                 T("x == 0 * emp", "error(); x := 1", "er",
                   "x == 0 * emp"),
                 premises=(T("x == 0 * emp", "error()", "er",
                             "x == 0 * emp"),)),
        RuleCase("seq2", "seq2",
                 T("emp", "x := 1; y := x", "ok",
                   "x == 1 * y == x * emp"),
                 premises=(T("emp", "x := 1", "ok", "x == 1 * emp"),
                           T("x == 1 * emp", "y := x", "ok",
                             "x == 1 * y == x * emp")),
                 vars=("x", "y")),
        RuleCase("loop-zero", "loop-zero",
                 T("x == 0 * emp", "(x := x + 1)*", "ok",
                   "x == 0 * emp")),
        RuleCase("loop-nonzero", "loop-nonzero",
                 T("x == 0 * emp", "(x := x + 1)*", "ok",
                   "x == 2 * emp"),
                 premises=(T("x == 0 * emp",
                             "(x := x + 1)*; x := x + 1", "ok",
                             "x == 2 * emp"),)),
        RuleCase("cons", "cons",
                 T("x <= 1 * emp", "skip", "ok", "x == 1 * emp"),
                 premises=(T("x == 1 * emp", "skip", "ok",
                             "x == 1 * emp"),),
                 needs_universe=True),
        RuleCase("disj", "disj",
                 T("x == 1 * emp \\/ x == 2 * emp", "skip", "ok",
                   "x == 1 * emp \\/ x == 2 * emp"),
                 premises=(skip_t,
                           T("x == 2 * emp", "skip", "ok",
                             "x == 2 * emp"))),
        RuleCase("choice", "choice",
                 T("x == 1 * emp", "skip + x := x", "ok",
                   "x == 1 * emp"),
                 premises=(skip_t,
                           T("x == 1 * emp", "x := x", "ok",
                             "x == 1 * emp"))),
        RuleCase("exist", "exist",
                 T("exists x. x == 2 * y == 0 * emp", "y := 1", "ok",
                   "exists x v. x == 2 * v == 0 * y == 1 * emp"),
                 premises=(T("x == 2 * y == 0 * emp", "y := 1", "ok",
                             "exists v. x == 2 * v == 0 * y == 1 * emp"),),
                 side={"var": "x"}, vars=("x", "y")),
        RuleCase("local", "local",
                 T("y == 0 * emp", "local x in { x := 2; y := x }", "ok",
                   "exists x v. v == 0 * x == 2 * y == x * emp"),
                 premises=(T("y == 0 * emp", "x := 2; y := x", "ok",
                             "exists v. v == 0 * x == 2 * y == x * emp"),),
                 vars=("x", "y")),
        RuleCase("frame-ok", "frame-ok",
                 T("x |-> 3", "y := 2", "ok", "y == 2 * x |-> 3"),
                 premises=(T("emp", "y := 2", "ok", "y == 2 * emp"),),
                 side={"frame": parse_heap("x |-> 3")},
                 vars=("x", "y")),
    ]
    return cases


def _heap_cases():
    H = _heap_case
    cases = [
        H("load-ptr", "load-ptr", "x |-> 3", "y := [x]",
          vars=("x", "y")),
        H("load-arr", "load-arr", "arr(1, 3)", "x := [2]"),
        H("load-er", "load-er", "b(x) == 0 * emp", "y := [x]", "er",
          vars=("x", "y")),
        H("store-ptr", "store-ptr", "x |-> 3", "[x] := 0"),
        H("store-arr1", "store-arr1", "arr(1, 3)", "[1] := 0"),
        H("store-arr2", "store-arr2", "arr(1, 4)", "[2] := 0",
          heap_cap=3),
        H("store-arr3", "store-arr3", "arr(1, 3)", "[2] := 0"),
        H("store-er", "store-er", "b(x) == 0 * emp", "[x] := 1", "er"),
        H("free-arr1", "free-arr1",
          "arr(1, 4) * b(2) == 2 * e(2) == 3", "free(2)", heap_cap=3),
        H("free-arr2", "free-arr2",
          "arr(1, 3) * b(1) == 1 * e(1) == 2", "free(1)"),
        H("free-arr3", "free-arr3",
          "x |-> 2 * b(x) == x * e(x) == x + 1", "free(x)"),
        H("free-arr4", "free-arr4",
          "arr(1, 3) * b(2) == 2 * e(2) == 3", "free(2)"),
        H("free-er", "free-er",
          "arr(x, x + 2) * b(x) == x * e(x) == x + 2", "free(x + 1)",
          "er"),
        _alloc_case("alloc1", "alloc1", "emp", "x := alloc(2)"),
        _alloc_case("alloc2", "alloc2", "narr(1, 5)", "x := alloc(2)",
                    heap_cap=4),
        _alloc_case("alloc3", "alloc3", "narr(1, 4)", "x := alloc(2)",
                    heap_cap=4),
        _alloc_case("alloc4", "alloc4", "narr(1, 3)", "x := alloc(2)",
                    heap_cap=4),
        _alloc_case("alloc5", "alloc5", "narr(1, 3)", "x := alloc(2)",
                    heap_cap=4),
    ]
    pre, c, psi = _cano1("emp", "x := alloc(1)")
    cases.append(RuleCase("alloc-er", "alloc-er",
                          Triple(pre, c, "er", Assertion.false())))
    return cases


def _reject_cases():
    T = _triple
    cases = [
        RuleCase("skip-wrong-post", "skip",
                 T("x == 1 * emp", "skip", "ok", "x == 2 * emp"),
                 accept=False),
        RuleCase("seq1-ok-exit", "seq1",
                 T("emp", "skip; skip", "ok", "emp"),
                 premises=(T("emp", "skip", "ok", "emp"),),
                 accept=False),
        RuleCase("cons-backwards", "cons",
                 T("x == 1 * emp", "skip", "ok", "x <= 1 * emp"),
                 premises=(T("x <= 1 * emp", "skip", "ok",
                             "x <= 1 * emp"),),
                 accept=False, needs_universe=True),
        RuleCase("exist-var-in-command", "exist",
                 T("exists x. x == 2 * emp", "y := x", "ok",
                   "exists x. x == 2 * y == x * emp"),
                 premises=(T("x == 2 * emp", "y := x", "ok",
                             "x == 2 * y == x * emp"),),
                 side={"var": "x"}, accept=False, vars=("x", "y")),
        RuleCase("frame-er-exit", "frame-ok",
                 T("x |-> 3", "error()", "er", "x |-> 3"),
                 premises=(T("emp", "error()", "er", "emp"),),
                 side={"frame": parse_heap("x |-> 3")},
                 accept=False),
        RuleCase("frame-modified-var", "frame-ok",
                 T("x |-> 3", "x := 2", "ok", "x == 2 * x |-> 3"),
                 premises=(T("emp", "x := 2", "ok", "x == 2 * emp"),),
                 side={"frame": parse_heap("x |-> 3")},
                 accept=False),
    ]
    pre, c, psi = _cano1("x |-> 3", "y := [x]")
    post = wpo_sh_load(psi, "y", c.addr, "ok")
    cases.append(RuleCase("load-arr-on-ptr", "load-arr",
                          Triple(pre, c, "ok", post), accept=False,
                          vars=("x", "y")))
    cases.append(RuleCase("heap-rule-with-premise", "load-ptr",
                          Triple(pre, c, "ok", post),
                          premises=(Triple(pre, c, "ok", post),),
                          accept=False, vars=("x", "y")))
    pre, c, psi = _cano1("arr(1, 4)", "[2] := 0")
    post = wpo_sh_store(psi, c.addr, c.value, "ok")
    cases.append(RuleCase("store-arr1-on-mid", "store-arr1",
                          Triple(pre, c, "ok", post), accept=False,
                          heap_cap=3))
    pre, c, psi = _cano1("x |-> 2 * b(x) == x * e(x) == x + 1", "free(x)")
    post = wpo_sh_free(psi, c.addr, "ok")
    cases.append(RuleCase("free-arr1-on-exact", "free-arr1",
                          Triple(pre, c, "ok", post), accept=False))
    cases.append(RuleCase("free-er-on-base", "free-er",
                          Triple(pre, c, "er",
                                 Assertion.of_heap(psi)), accept=False))
    pre, c, psi = _cano1("emp", "x := alloc(2)")
    out = wpo_sh_alloc(psi, c.var, c.size, "ok")
    cases.append(RuleCase("alloc1-band-out-of-range", "alloc1",
                          Triple(pre, c, "ok",
                                 Assertion((out.disjuncts[0],))),
                          side={"alpha": 9, "beta": 9}, accept=False))
    return cases


def rule_instances() -> tuple:
    """The soundness battery: every rule applied at least once in a way
    the checker must accept, plus applications it must reject."""
    return tuple(_structural_cases() + _heap_cases() + _reject_cases())
