"""Under-approximate reasoning about heap programs with variable-length
arrays.

The package computes symbolic post-images of symbolic-heap assertions
(`wpo`), checks triple validity both symbolically and by brute-force
enumeration over a finite universe of concrete states, reports
memory-safety bugs as reachable error exits, and validates individual
proof-rule applications.  The enumeration side exists on purpose: every
symbolic computation here has an independent, slow, obviously-correct
counterpart to diff against.
"""

from .canonical import (CaseLimitError, DEFAULT_CASE_CAP, cano,
                        is_canonical, order_cases)
from .checker import (BOUNDED, BugReport, DiffReport, INVALID, Triple,
                      UNKNOWN, VALID, Verdict, check_triple_logical,
                      check_triple_semantic, expressiveness_diff,
                      find_bugs)
from .entailment import (AssertionEntailment, PureResult, decide,
                         entails_assertion, entails_pure, pure_closure,
                         sat_pure)
from .parser import (ParseError, format_assertion, format_command,
                     format_term, parse_assertion, parse_command,
                     parse_heap, parse_term)
from .rules import (ALL_RULES, HEAP_RULES, STRUCTURAL_RULES,
                    check_rule_instance)
from .semantics import (ConcreteState, Universe, denote, models,
                        satisfies, state_from_json, state_to_json,
                        wpo_semantic)
from .syntax import (Add, Alloc, Arr, Assertion, Assign, Assume,
                     BlockBase, BlockEnd, Choice, Command, Disjunct, Emp,
                     Eq, Error, Free, Havoc, Le, Lit, Load, Local,
                     LocalInit, Lt, NegArr, Neq, Null, PointsTo, Seq,
                     Skip, Star, Store, SymbolicHeap, Var, alpha_eq)
from .wpo import WpoBudget, wpo

__version__ = "0.1.0"

__all__ = [
    "ALL_RULES", "Add", "Alloc", "Arr", "Assertion",
    "AssertionEntailment", "Assign", "Assume", "BOUNDED", "BlockBase",
    "BlockEnd", "BugReport", "CaseLimitError", "Choice", "Command",
    "ConcreteState", "DEFAULT_CASE_CAP", "DiffReport", "Disjunct", "Emp",
    "Eq", "Error", "Free", "HEAP_RULES", "Havoc", "INVALID", "Le", "Lit",
    "Load", "Local", "LocalInit", "Lt", "NegArr", "Neq", "Null",
    "ParseError", "PointsTo", "PureResult", "STRUCTURAL_RULES", "Seq",
    "Skip", "Star", "Store", "SymbolicHeap", "Triple", "UNKNOWN",
    "Universe", "VALID", "Var", "Verdict", "WpoBudget", "alpha_eq",
    "cano", "check_rule_instance", "check_triple_logical",
    "check_triple_semantic", "decide", "denote", "entails_assertion",
    "entails_pure", "expressiveness_diff", "find_bugs", "format_assertion",
    "format_command", "format_term", "is_canonical", "models",
    "order_cases", "parse_assertion", "parse_command", "parse_heap",
    "parse_term", "pure_closure", "sat_pure", "satisfies",
    "state_from_json", "state_to_json", "wpo", "wpo_semantic",
]
