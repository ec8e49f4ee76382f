"""Proof-rule instance checking.

check_rule_instance validates one application of the proof system's
rules: given a rule name, the premise triples, the side conditions, and
the claimed conclusion, it rebuilds what the rule schema permits and
compares up to renaming of binders and reordering of disjuncts.  There
is no proof search; an instance either matches its schema or is
rejected.

Entailment side conditions (the consequence rule's two inclusions) are
decided by model enumeration over a universe; pure guards go through the
arithmetic engine.  Anything undecided rejects the instance, so an
accepted instance never leans on an unproven premise.

The heap-manipulating rules demand a canonical precondition (one
disjunct, no binders, term order decided); the schema shapes they accept
are exactly what the post-image computation emits for that shape, so
accepted instances and computed post-images cannot drift apart.
"""

from __future__ import annotations

import logging

from .canonical import is_canonical
from .checker import Triple
from .entailment import (decide, entails_assertion, entails_pure_any,
                         pure_closure)
from .syntax import (Add, Alloc, Assertion, Assign, Assume, BlockBase,
                     BlockEnd, Choice, Disjunct, Eq, Error, Free, Havoc,
                     Lit, Load, Local, Neq, NULL, PointsTo, Seq, Skip, Star,
                     Store, SymbolicHeap, alpha_eq, command_term_set,
                     heap_vars, modified_vars, rename_bound, term_vars)
from .wpo import (_AllocLayout, _free_chain, heap_target, wpo_sh_basic,
                  wpo_sh_free, wpo_sh_load, wpo_sh_store)

log = logging.getLogger("islarr.rules")

STRUCTURAL_RULES = (
    "skip", "error", "seq1", "seq2", "loop-zero", "loop-nonzero", "cons",
    "disj", "choice", "exist", "assign", "havoc", "assume", "local",
    "frame-ok",
)

HEAP_RULES = (
    "alloc1", "alloc2", "alloc3", "alloc4", "alloc5", "alloc-er",
    "free-arr1", "free-arr2", "free-arr3", "free-arr4", "free-er",
    "load-ptr", "load-arr", "load-er",
    "store-ptr", "store-arr1", "store-arr2", "store-arr3", "store-er",
)

ALL_RULES = STRUCTURAL_RULES + HEAP_RULES


def _drop_vacuous(a: Assertion) -> Assertion:
    """Binders that bind nothing don't change meaning; strip them so a
    schema written with an explicit quantifier matches a pruned result."""
    out = []
    for d in a.disjuncts:
        used = heap_vars(d.heap)
        out.append(Disjunct(tuple(x for x in d.bound if x in used),
                            d.heap, d.origin))
    return Assertion(tuple(out), a.truncated)


def _same(a: Assertion, b: Assertion) -> bool:
    return alpha_eq(_drop_vacuous(a), _drop_vacuous(b))


def _single_heap(a: Assertion):
    """The quantifier-free symbolic heap of a one-disjunct assertion, or
    None; the heap rules' schemas are stated over bare symbolic heaps."""
    if len(a.disjuncts) != 1:
        return None
    d = a.disjuncts[0]
    if d.bound:
        return None
    return d.heap


def _exists_close(a: Assertion, x: str):
    """Prefix every disjunct with an x binder (None if x is already
    bound somewhere)."""
    out = []
    for d in a.disjuncts:
        if x in d.bound:
            return None
        out.append(Disjunct((x,) + d.bound, d.heap, d.origin))
    return Assertion(tuple(out), a.truncated)


def _star_frame(a: Assertion, frame: SymbolicHeap):
    """Star a frame onto every disjunct, renaming binders that would
    capture frame variables."""
    fvars = heap_vars(frame)
    out = []
    for d in a.disjuncts:
        clash = set(d.bound) & fvars
        if clash:
            taken = heap_vars(d.heap) | set(d.bound) | fvars
            ren = {}
            for x in sorted(clash):
                i = 0
                while "%s_%d" % (x, i) in taken:
                    i += 1
                ren[x] = "%s_%d" % (x, i)
                taken.add(ren[x])
            d = rename_bound(d, ren)
        out.append(Disjunct(d.bound, d.heap.star(frame), d.origin))
    return Assertion(tuple(out), a.truncated)


def _reject(rule, why):
    log.debug("rule %s rejected: %s", rule, why)
    return False


def _need(side, key, rule):
    if not side or key not in side:
        raise ValueError("rule %s needs side condition %r" % (rule, key))
    return side[key]


def _entails(p, q, u, rule, what):
    if u is None:
        raise ValueError(
            "rule %s needs a universe to decide its entailment side "
            "conditions" % rule)
    r = entails_assertion(p, q, u)
    if r.status == "yes":
        return True
    return _reject(rule, "%s entailment %s" % (what, r.status))


# ---------------------------------------------------------------------------
# Structural rules


def _check_structural(rule, premises, side, tr, u):
    if rule == "skip":
        if premises or not isinstance(tr.prog, Skip):
            return _reject(rule, "schema")
        if tr.exit == "ok":
            return _same(tr.post, tr.pre)
        return tr.post.is_false()

    if rule == "error":
        if premises or not isinstance(tr.prog, Error):
            return _reject(rule, "schema")
        if tr.exit == "er":
            return _same(tr.post, tr.pre)
        return tr.post.is_false()

    if rule == "seq1":
        if len(premises) != 1 or not isinstance(tr.prog, Seq):
            return _reject(rule, "schema")
        (p1,) = premises
        return (p1.exit == "er" == tr.exit
                and p1.prog == tr.prog.first
                and _same(p1.pre, tr.pre)
                and _same(p1.post, tr.post))

    if rule == "seq2":
        if len(premises) != 2 or not isinstance(tr.prog, Seq):
            return _reject(rule, "schema")
        p1, p2 = premises
        return (p1.exit == "ok"
                and p1.prog == tr.prog.first
                and p2.prog == tr.prog.second
                and p2.exit == tr.exit
                and _same(p1.pre, tr.pre)
                and _same(p1.post, p2.pre)
                and _same(p2.post, tr.post))

    if rule == "loop-zero":
        if premises or not isinstance(tr.prog, Star):
            return _reject(rule, "schema")
        if tr.exit == "ok":
            return _same(tr.post, tr.pre)
        return tr.post.is_false()

    if rule == "loop-nonzero":
        if len(premises) != 1 or not isinstance(tr.prog, Star):
            return _reject(rule, "schema")
        (p1,) = premises
        return (p1.prog == Seq(tr.prog, tr.prog.body)
                and p1.exit == tr.exit
                and _same(p1.pre, tr.pre)
                and _same(p1.post, tr.post))

    if rule == "cons":
        if len(premises) != 1:
            return _reject(rule, "schema")
        (p1,) = premises
        if p1.prog != tr.prog or p1.exit != tr.exit:
            return _reject(rule, "schema")
        return (_entails(p1.pre, tr.pre, u, rule, "precondition")
                and _entails(tr.post, p1.post, u, rule, "postcondition"))

    if rule == "disj":
        if not premises:
            return _reject(rule, "schema")
        pre = Assertion(())
        post = Assertion(())
        for p in premises:
            if p.prog != tr.prog or p.exit != tr.exit:
                return _reject(rule, "schema")
            pre = pre.union(p.pre)
            post = post.union(p.post)
        return _same(tr.pre, pre) and _same(tr.post, post)

    if rule == "choice":
        if len(premises) != 2 or not isinstance(tr.prog, Choice):
            return _reject(rule, "schema")
        p1, p2 = premises
        return (p1.prog == tr.prog.left and p2.prog == tr.prog.right
                and p1.exit == p2.exit == tr.exit
                and _same(p1.pre, tr.pre) and _same(p2.pre, tr.pre)
                and _same(p1.post, tr.post) and _same(p2.post, tr.post))

    if rule == "exist":
        if len(premises) != 1:
            return _reject(rule, "schema")
        (p1,) = premises
        x = _need(side, "var", rule)
        if p1.prog != tr.prog or p1.exit != tr.exit:
            return _reject(rule, "schema")
        cvars = set()
        for t in command_term_set(tr.prog):
            cvars |= term_vars(t)
        if x in cvars:
            return _reject(rule, "%s occurs in the command's terms" % x)
        pre = _exists_close(p1.pre, x)
        post = _exists_close(p1.post, x)
        if pre is None or post is None:
            return _reject(rule, "%s already bound in a premise" % x)
        return _same(tr.pre, pre) and _same(tr.post, post)

    if rule == "assign":
        if premises or not isinstance(tr.prog, Assign):
            return _reject(rule, "schema")
        psi = _single_heap(tr.pre)
        if psi is None:
            return _reject(rule, "precondition not a symbolic heap")
        return _same(tr.post, wpo_sh_basic(psi, tr.prog, tr.exit))

    if rule == "havoc":
        if premises or not isinstance(tr.prog, Havoc):
            return _reject(rule, "schema")
        psi = _single_heap(tr.pre)
        if psi is None:
            return _reject(rule, "precondition not a symbolic heap")
        return _same(tr.post, wpo_sh_basic(psi, tr.prog, tr.exit))

    if rule == "assume":
        if premises or not isinstance(tr.prog, Assume):
            return _reject(rule, "schema")
        psi = _single_heap(tr.pre)
        if psi is None:
            return _reject(rule, "precondition not a symbolic heap")
        return _same(tr.post, wpo_sh_basic(psi, tr.prog, tr.exit))

    if rule == "local":
        if len(premises) != 1 or not isinstance(tr.prog, Local):
            return _reject(rule, "schema")
        (p1,) = premises
        x = tr.prog.var
        if p1.prog != tr.prog.body or p1.exit != tr.exit:
            return _reject(rule, "schema")
        if x in tr.pre.free_vars():
            return _reject(rule, "%s free in the precondition" % x)
        post = _exists_close(p1.post, x)
        if post is None:
            return _reject(rule, "%s already bound in the premise post" % x)
        return _same(tr.pre, p1.pre) and _same(tr.post, post)

    if rule == "frame-ok":
        if tr.exit != "ok":
            return _reject(rule, "no frame rule exists for the error exit")
        if len(premises) != 1:
            return _reject(rule, "schema")
        (p1,) = premises
        frame = _need(side, "frame", rule)
        if not isinstance(frame, SymbolicHeap):
            raise TypeError("frame side condition must be a symbolic heap")
        if p1.prog != tr.prog or p1.exit != "ok":
            return _reject(rule, "schema")
        if modified_vars(tr.prog) & heap_vars(frame):
            return _reject(rule, "command modifies a frame variable")
        return (_same(tr.pre, _star_frame(p1.pre, frame))
                and _same(tr.post, _star_frame(p1.post, frame)))

    raise ValueError("unknown rule %r" % (rule,))


# ---------------------------------------------------------------------------
# Heap rules


_ALLOC_SHAPES = {
    "alloc2": (False, False),
    "alloc3": (True, False),
    "alloc4": (False, True),
    "alloc5": (True, True),
}

_FREE_SHAPES = {
    "free-arr1": (True, True),
    "free-arr2": (False, True),
    "free-arr3": (False, False),
    "free-arr4": (True, False),
}


def _check_alloc(rule, side, tr):
    if not isinstance(tr.prog, Alloc):
        return _reject(rule, "schema")
    psi = _single_heap(tr.pre)
    if psi is None:
        return _reject(rule, "precondition not a symbolic heap")
    if not is_canonical(tr.pre, tr.prog):
        return _reject(rule, "precondition not canonical for the command")
    if rule == "alloc-er":
        return tr.exit == "er" and tr.post.is_false()
    if tr.exit != "ok":
        return _reject(rule, "allocation cannot fault")
    lay = _AllocLayout(psi, tr.prog.var, tr.prog.size)
    if rule == "alloc1":
        carves = [None]
    else:
        lx, rx = _ALLOC_SHAPES[rule]
        carves = [(j, k, lx, rx)
                  for j in range(1, lay.m + 1)
                  for k in range(j, lay.m + 1)]
    alphas = range(lay.n + 1)
    betas = None
    if side:
        if "alpha" in side:
            alphas = [side["alpha"]]
        if "beta" in side:
            betas = [side["beta"]]
        if "j" in side and rule != "alloc1":
            lx, rx = _ALLOC_SHAPES[rule]
            carves = [(side["j"], side.get("k", side["j"]), lx, rx)]
    for alpha in alphas:
        for beta in (betas if betas is not None
                     else range(alpha, lay.n + 1)):
            if not 0 <= alpha <= beta <= lay.n:
                continue
            for carve in carves:
                if carve is not None:
                    j, k, _, _ = carve
                    if not 1 <= j <= k <= lay.m:
                        continue
                d = lay.case(alpha, beta, carve)
                if _same(tr.post, Assertion((d,))):
                    return True
    return _reject(rule, "no band and carve-out matched the postcondition")


def _check_free(rule, tr):
    if not isinstance(tr.prog, Free):
        return _reject(rule, "schema")
    psi = _single_heap(tr.pre)
    if psi is None:
        return _reject(rule, "precondition not a symbolic heap")
    if not is_canonical(tr.pre, tr.prog):
        return _reject(rule, "precondition not canonical for the command")
    t = tr.prog.addr
    closure = pure_closure(psi)
    bt = BlockBase(t)
    if rule == "free-er":
        guard = entails_pure_any(closure, (Neq(bt, t), Eq(bt, NULL)))
        if guard.status != "yes":
            return _reject(rule, "fault guard %s" % guard.status)
        if tr.exit == "ok":
            return tr.post.is_false()
        return _same(tr.post, Assertion.of_heap(psi))
    if tr.exit == "er":
        return tr.post.is_false()
    if not decide(closure, Eq(bt, t)):
        return _reject(rule, "target not provably the block base")
    hit = _free_chain(psi, closure, bt, BlockEnd(t))
    if hit is None:
        return _reject(rule, "no atom run tiles the freed block")
    _, left, right = hit
    if (left, right) != _FREE_SHAPES[rule]:
        return _reject(rule, "boundary shape is %s" % (
            {v: k for k, v in _FREE_SHAPES.items()}[(left, right)]))
    return _same(tr.post, wpo_sh_free(psi, t, "ok"))


def _check_load(rule, tr):
    if not isinstance(tr.prog, Load):
        return _reject(rule, "schema")
    psi = _single_heap(tr.pre)
    if psi is None:
        return _reject(rule, "precondition not a symbolic heap")
    if not is_canonical(tr.pre, tr.prog):
        return _reject(rule, "precondition not canonical for the command")
    t = tr.prog.addr
    closure = pure_closure(psi)
    if rule == "load-er":
        if not decide(closure, Eq(BlockBase(t), NULL)):
            return _reject(rule, "address not provably outside all blocks")
        if tr.exit == "ok":
            return tr.post.is_false()
        return _same(tr.post, Assertion.of_heap(psi))
    if tr.exit == "er":
        return tr.post.is_false()
    a = heap_target(psi, closure, t)
    if a is None:
        return _reject(rule, "address falls in no atom")
    if rule == "load-ptr" and not isinstance(a, PointsTo):
        return _reject(rule, "target atom is an array")
    if rule == "load-arr" and isinstance(a, PointsTo):
        return _reject(rule, "target atom is a points-to")
    return _same(tr.post, wpo_sh_load(psi, tr.prog.var, t, "ok"))


def _check_store(rule, tr):
    if not isinstance(tr.prog, Store):
        return _reject(rule, "schema")
    psi = _single_heap(tr.pre)
    if psi is None:
        return _reject(rule, "precondition not a symbolic heap")
    if not is_canonical(tr.pre, tr.prog):
        return _reject(rule, "precondition not canonical for the command")
    t = tr.prog.addr
    closure = pure_closure(psi)
    if rule == "store-er":
        if not decide(closure, Eq(BlockBase(t), NULL)):
            return _reject(rule, "address not provably outside all blocks")
        if tr.exit == "ok":
            return tr.post.is_false()
        return _same(tr.post, Assertion.of_heap(psi))
    if tr.exit == "er":
        return tr.post.is_false()
    a = heap_target(psi, closure, t)
    if a is None:
        return _reject(rule, "address falls in no atom")
    if rule == "store-ptr":
        if not isinstance(a, PointsTo):
            return _reject(rule, "target atom is an array")
    else:
        if isinstance(a, PointsTo):
            return _reject(rule, "target atom is a points-to")
        head = decide(closure, Eq(a.lo, t))
        tail = decide(closure, Eq(Add(t, Lit(1)), a.hi))
        want = {"store-arr1": head is True,
                "store-arr2": head is False and tail is False,
                "store-arr3": tail is True}[rule]
        if not want:
            return _reject(rule, "written cell sits elsewhere in the array")
    return _same(tr.post, wpo_sh_store(psi, t, tr.prog.value, "ok"))


# ---------------------------------------------------------------------------


def check_rule_instance(rule_name: str, premises, side_conditions,
                        conclusion: Triple, universe=None) -> bool:
    """Does this application of the named rule follow its schema?

    premises: triples, in the rule's order.  side_conditions: a dict for
    data the rule cannot infer ("var" for the existential rule, "frame"
    for the frame rule, optional band and carve indices for allocation).
    universe: needed by rules with assertion-entailment side conditions.
    Undecided guards and entailments reject the instance."""
    if rule_name not in ALL_RULES:
        raise ValueError("unknown rule %r" % (rule_name,))
    premises = tuple(premises)
    for p in premises:
        if not isinstance(p, Triple):
            raise TypeError("premise %r is not a triple" % (p,))
    tr = conclusion
    if not isinstance(tr, Triple):
        raise TypeError("conclusion must be a triple")
    if rule_name in STRUCTURAL_RULES:
        return _check_structural(rule_name, premises, side_conditions, tr,
                                 universe)
    if premises:
        return _reject(rule_name, "heap rules take no triple premises")
    if rule_name.startswith("alloc"):
        return _check_alloc(rule_name, side_conditions, tr)
    if rule_name.startswith("free"):
        return _check_free(rule_name, tr)
    if rule_name.startswith("load"):
        return _check_load(rule_name, tr)
    return _check_store(rule_name, tr)
