"""Command-line front end.

One subcommand per analysis: `wpo` prints a post-image, `check` decides
a triple, `find-bugs` reports reachable error exits, `oracle-diff` runs
the dual-route expressiveness comparison, `check-rule` validates one
proof-rule application.  Flags carry everything; `--config file.json`
supplies defaults for anything not given on the command line (flags
win).

`--pre`, `--post`, and `--prog` accept either a file path or the text
itself: a value naming a readable file is read, anything else is parsed
as written.

Exit codes for `check`: 0 valid, 1 invalid, 2 the verdict was bounded
or unknown.  `find-bugs` exits 1 when the report is nonempty,
`oracle-diff` exits 1 when any case fails, `check-rule` exits 1 on a
rejected instance.  When `--method both` produces verdicts that
contradict each other outright, that is a bug in this tool, reported
loudly with exit code 70.

The log level comes from the ISLARR_LOG environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .canonical import CaseLimitError
from .checker import (BOUNDED, INVALID, Triple, UNKNOWN, VALID,
                      check_triple_logical, check_triple_semantic,
                      expressiveness_diff, find_bugs)
from .corpus import ExprCase, handwritten_cases, random_cases
from .parser import (ParseError, format_assertion, format_command,
                     parse_assertion, parse_command, parse_heap)
from .rules import check_rule_instance
from .semantics import Universe, state_to_json
from .syntax import Assertion, assertion_vars, command_vars
from .wpo import WpoBudget, wpo

EXIT_CODES = {VALID: 0, INVALID: 1, BOUNDED: 2, UNKNOWN: 2}
TOOL_BUG = 70


def _read_source(value: str) -> str:
    if os.path.isfile(value):
        with open(value) as fh:
            return fh.read()
    return value


def _fmt_state(s) -> str:
    store = ", ".join("%s=%d" % kv for kv in sorted(s.store.items()))
    heap = ", ".join("%d: %s" % (l, "bot" if v is None else v)
                     for l, v in sorted(s.heap.items()))
    blocks = ", ".join("[%d, %d)" % tuple(b) for b in sorted(s.blocks))
    return "store {%s} heap {%s} blocks {%s}" % (store, heap, blocks)


def _emit(args, obj: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(obj, indent=2, sort_keys=True))
    else:
        print(text)


# ---------------------------------------------------------------------------
# Configuration


_CONFIG_KEYS = ("pre", "post", "prog", "exit", "vars", "vmax", "heap_cap",
                "loop_bound", "case_cap", "method", "format", "seed",
                "jobs", "count", "rule", "var", "frame", "premises",
                "side")


def _apply_config(args) -> None:
    """Fill unset flags from the --config file; explicit flags win."""
    if not getattr(args, "config", None):
        return
    with open(args.config) as fh:
        data = json.load(fh)
    for key in _CONFIG_KEYS:
        if key not in data:
            continue
        if getattr(args, key, None) is None:
            setattr(args, key, data[key])


def _budget(args) -> WpoBudget:
    kw = {}
    if getattr(args, "loop_bound", None) is not None:
        kw["loop_bound"] = args.loop_bound
    if getattr(args, "case_cap", None) is not None:
        kw["case_cap"] = args.case_cap
    return WpoBudget(**kw)


def _universe(args, *parsed) -> Universe:
    """Build the enumeration universe; variables default to everything
    free in the parsed inputs."""
    if args.vmax is None:
        raise SystemExit("error: this analysis needs --vmax to bound "
                         "the state universe")
    if getattr(args, "vars", None):
        vars = tuple(v.strip() for v in args.vars.split(",") if v.strip())
    else:
        names = set()
        for item in parsed:
            if isinstance(item, Assertion):
                names |= assertion_vars(item)
            elif item is not None:
                names |= command_vars(item)
        vars = tuple(sorted(names))
    heap_cap = args.heap_cap if args.heap_cap is not None else 2
    loop_bound = args.loop_bound if args.loop_bound is not None else 3
    return Universe(vars, args.vmax, heap_cap, loop_bound)


def _require(args, *keys):
    for key in keys:
        if getattr(args, key, None) is None:
            raise SystemExit("error: --%s is required here"
                             % key.replace("_", "-"))


# ---------------------------------------------------------------------------
# Subcommands


def cmd_wpo(args) -> int:
    _require(args, "pre", "prog")
    p = parse_assertion(_read_source(args.pre))
    c = parse_command(_read_source(args.prog))
    w = wpo(p, c, args.exit, _budget(args))
    obj = {
        "schema": "islarr/wpo-v1",
        "pre": format_assertion(p),
        "prog": format_command(c),
        "exit": args.exit,
        "post": format_assertion(w),
        "disjuncts": [format_assertion(Assertion((d,)))
                      for d in w.disjuncts],
        "truncated": w.truncated,
    }
    _emit(args, obj, format_assertion(w))
    if w.truncated and args.format == "text":
        print("note: the disjunction was cut off by the budget; deeper "
              "unrollings exist", file=sys.stderr)
    return 0


def _agreeing(sem, log_) -> bool:
    if sem.status == log_.status:
        return True
    # one route giving up (bounded/unknown) cannot contradict the other;
    # only definite opposite answers indicate a tool bug
    definite = {VALID, INVALID}
    return not (sem.status in definite and log_.status in definite)


def cmd_check(args) -> int:
    _require(args, "pre", "prog", "post")
    p = parse_assertion(_read_source(args.pre))
    c = parse_command(_read_source(args.prog))
    q = parse_assertion(_read_source(args.post))
    tr = Triple(p, c, args.exit, q)
    u = _universe(args, p, q, c)
    sem = log_ = None
    if args.method in ("semantic", "both"):
        sem = check_triple_semantic(tr, u)
    if args.method in ("logical", "both"):
        log_ = check_triple_logical(tr, u, _budget(args))
    if args.method == "both" and not _agreeing(sem, log_):
        print("TOOL BUG: the semantic and logical checkers contradict "
              "each other (%s vs %s) on the same triple; one of them is "
              "wrong" % (sem.status, log_.status), file=sys.stderr)
        return TOOL_BUG
    verdict = sem if sem is not None else log_
    obj = {
        "schema": "islarr/check-v1",
        "triple": tr.to_json(),
        "method": args.method,
        "verdict": verdict.to_json(),
    }
    if args.method == "both":
        obj["semantic"] = sem.to_json()
        obj["logical"] = log_.to_json()
    lines = ["%s  [%s] %s [%s: %s]" % (verdict.status,
                                       format_assertion(p),
                                       format_command(c), args.exit,
                                       format_assertion(q))]
    if verdict.witness is not None:
        lines.append("witness: %s" % _fmt_state(verdict.witness))
    for note in verdict.notes:
        lines.append("note: %s" % note)
    _emit(args, obj, "\n".join(lines))
    return EXIT_CODES[verdict.status]


def cmd_find_bugs(args) -> int:
    _require(args, "pre", "prog")
    p = parse_assertion(_read_source(args.pre))
    c = parse_command(_read_source(args.prog))
    u = _universe(args, p, c) if args.vmax is not None else None
    report = find_bugs(p, c, u, _budget(args))
    obj = {
        "schema": "islarr/bugs-v1",
        "pre": format_assertion(p),
        "prog": format_command(c),
        "report": report.to_json(),
    }
    if report.empty:
        text = "no reachable error exit found"
    else:
        lines = ["%d way(s) to fault:" % len(report.er_disjuncts)]
        for d, wit, src in zip(report.er_disjuncts,
                               report.witness_states,
                               report.source_commands):
            lines.append("- %s" % (src or "error exit"))
            lines.append("    under: %s"
                         % format_assertion(Assertion((d,))))
            if wit is not None:
                lines.append("    witness: %s" % _fmt_state(wit))
        if report.truncated:
            lines.append("(truncated: deeper behaviors were cut off)")
        text = "\n".join(lines)
    _emit(args, obj, text)
    return 0 if report.empty else 1


def _diff_case(case: ExprCase) -> dict:
    p, c = case.parsed()
    d = expressiveness_diff(p, c, case.exit, case.universe(),
                            budget=case.budget())
    return {
        "name": case.name,
        "pre": case.pre,
        "prog": case.prog,
        "exit": case.exit,
        "status": "pass" if d.empty else "fail",
        "extra": len(d.extra),
        "missing": len(d.missing),
        "truncated": d.truncated,
    }


def cmd_oracle_diff(args) -> int:
    if args.pre is not None or args.prog is not None:
        _require(args, "pre", "prog")
        p = parse_assertion(_read_source(args.pre))
        c = parse_command(_read_source(args.prog))
        u = _universe(args, p, c)
        d = expressiveness_diff(p, c, args.exit, u, budget=_budget(args))
        entry = {
            "name": "cli",
            "pre": format_assertion(p),
            "prog": format_command(c),
            "exit": args.exit,
            "status": "pass" if d.empty else "fail",
            "extra": len(d.extra),
            "missing": len(d.missing),
            "truncated": d.truncated,
            "extra_states": [state_to_json(s) for s in d.extra],
            "missing_states": [state_to_json(s) for s in d.missing],
        }
        entries = [entry]
    else:
        cases = list(handwritten_cases())
        if args.count:
            cases += list(random_cases(args.count, args.seed or 0))
        jobs = args.jobs or os.cpu_count() or 1
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                entries = list(pool.map(_diff_case, cases))
        else:
            entries = [_diff_case(case) for case in cases]
    failures = sum(1 for e in entries if e["status"] == "fail")
    obj = {"schema": "islarr/diff-v1", "cases": entries,
           "failures": failures}
    lines = []
    for e in entries:
        mark = "ok " if e["status"] == "pass" else "FAIL"
        lines.append("%s %-22s extra=%d missing=%d%s" % (
            mark, e["name"], e["extra"], e["missing"],
            " (truncated)" if e["truncated"] else ""))
    lines.append("%d case(s), %d failure(s)" % (len(entries), failures))
    _emit(args, obj, "\n".join(lines))
    return 0 if failures == 0 else 1


def cmd_check_rule(args) -> int:
    _require(args, "rule", "pre", "prog", "post")
    p = parse_assertion(_read_source(args.pre))
    c = parse_command(_read_source(args.prog))
    q = parse_assertion(_read_source(args.post))
    tr = Triple(p, c, args.exit, q)
    premises = []
    for entry in args.premises or ():
        premises.append(Triple(parse_assertion(entry["pre"]),
                               parse_command(entry["prog"]),
                               entry.get("exit", "ok"),
                               parse_assertion(entry["post"])))
    side = dict(args.side) if args.side else {}
    if args.var is not None:
        side["var"] = args.var
    if args.frame is not None:
        side["frame"] = args.frame
    if isinstance(side.get("frame"), str):
        side["frame"] = parse_heap(_read_source(side["frame"]))
    u = _universe(args, p, q, c) if args.vmax is not None else None
    accepted = check_rule_instance(args.rule, premises, side or None, tr,
                                   universe=u)
    obj = {"schema": "islarr/rule-v1", "rule": args.rule,
           "accepted": accepted}
    _emit(args, obj, "%s: %s" % (args.rule,
                                 "accepted" if accepted else "rejected"))
    return 0 if accepted else 1


# ---------------------------------------------------------------------------
# Argument plumbing


def _add_io_flags(sp, post=False):
    sp.add_argument("--pre", help="precondition (file or text)")
    sp.add_argument("--prog", help="program (file or text)")
    if post:
        sp.add_argument("--post", help="postcondition (file or text)")
    sp.add_argument("--exit", choices=("ok", "er"), default=None)


def _add_bound_flags(sp):
    sp.add_argument("--vars", help="comma-separated store variables "
                    "(default: the free variables of the inputs)")
    sp.add_argument("--vmax", type=int,
                    help="largest value and location to enumerate")
    sp.add_argument("--heap-cap", type=int, dest="heap_cap",
                    help="largest heap domain to enumerate (default 2)")
    sp.add_argument("--loop-bound", type=int, dest="loop_bound",
                    help="loop unrollings on both routes (default 3)")
    sp.add_argument("--case-cap", type=int, dest="case_cap",
                    help="most order terms a disjunct may split over")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="islarr",
        description="Under-approximate heap reasoning: post-images, "
                    "triple checking, bug finding, and brute-force "
                    "oracles.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("wpo", help="print the post-image of an "
                        "assertion under a program")
    _add_io_flags(sp)
    sp.add_argument("--loop-bound", type=int, dest="loop_bound")
    sp.add_argument("--case-cap", type=int, dest="case_cap")
    sp.set_defaults(func=cmd_wpo)

    sp = sub.add_parser("check", help="decide a triple over a bounded "
                        "universe")
    _add_io_flags(sp, post=True)
    _add_bound_flags(sp)
    sp.add_argument("--method", choices=("semantic", "logical", "both"),
                    default=None)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("find-bugs", help="report reachable error exits")
    _add_io_flags(sp)
    _add_bound_flags(sp)
    sp.set_defaults(func=cmd_find_bugs)

    sp = sub.add_parser("oracle-diff", help="diff the symbolic "
                        "post-image against brute-force enumeration")
    _add_io_flags(sp)
    _add_bound_flags(sp)
    sp.add_argument("--count", type=int,
                    help="random cases to add to the built-in corpus")
    sp.add_argument("--seed", type=int, help="random-case seed")
    sp.add_argument("--jobs", type=int,
                    help="worker processes (default: logical cores)")
    sp.set_defaults(func=cmd_oracle_diff)

    sp = sub.add_parser("check-rule", help="validate one proof-rule "
                        "application")
    sp.add_argument("--rule", help="rule name")
    _add_io_flags(sp, post=True)
    _add_bound_flags(sp)
    sp.add_argument("--var", help="variable side condition (existential "
                    "introduction)")
    sp.add_argument("--frame", help="frame side condition (symbolic "
                    "heap, file or text)")
    sp.set_defaults(func=cmd_check_rule, premises=None, side=None)

    for parser in sub.choices.values():
        parser.add_argument("--format", choices=("text", "json"),
                            default=None)
        parser.add_argument("--config", help="JSON file of flag defaults")
    return ap


def main(argv=None) -> int:
    level = os.environ.get("ISLARR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    args = build_parser().parse_args(argv)
    _apply_config(args)
    if args.exit is None:
        args.exit = "ok"
    if args.format is None:
        args.format = "text"
    if getattr(args, "method", None) is None and hasattr(args, "method"):
        args.method = "semantic"
    try:
        return args.func(args)
    except (ParseError, CaseLimitError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
