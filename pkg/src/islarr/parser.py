"""Concrete text syntax: parsing and printing.

Terms        n, x, t + t, b(t), e(t), null
Pure atoms   t == t, t != t, t <= t, t < t
Spatial      emp, t |-> t, arr(t, t), narr(t, t), and the sugar `t !|->`
             for narr(t, t+1)
Assertions   atoms joined by *, disjuncts by \\/, `exists x y. ...` binds
             one disjunct, `false` is the empty disjunction
Commands     skip, x := t, x := *, assume(p), local x in { c },
             local x := t in { c }, c ; c, c + c, c*, error(),
             x := alloc(t), free(t), x := [t], [t] := t

`;` binds loosest, then `+`, then the postfix `*`; parentheses group.
`exists` scopes to the end of its disjunct.  Printing normalizes atom order
(the multiset order of SymbolicHeap) and parenthesizes so that
parse(format(x)) == x.
"""

from __future__ import annotations

import re

from .syntax import (
    Add, Alloc, Arr, Assertion, Assign, Assume, BlockBase, BlockEnd, Choice,
    Command, Disjunct, Emp, Eq, Error, Free, Havoc, Le, Lit, Load, Local,
    LocalInit, Lt, NegArr, Neq, Null, PointsTo, PureAtom, Seq, Skip,
    SpatialAtom, Star, Store, SymbolicHeap, Term, Var,
)


class ParseError(ValueError):
    def __init__(self, message, line, col):
        super().__init__("%s (line %d, column %d)" % (message, line, col))
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_$']*)
  | (?P<sym>!\|->|\|->|:=|==|!=|<=|\\/|[+*(){}\[\];,.<])
""", re.VERBOSE)

_KEYWORDS = frozenset([
    "null", "emp", "arr", "narr", "exists", "false", "skip", "assume",
    "local", "in", "error", "alloc", "free",
])


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return "%s(%r)" % (self.kind, self.text)


def _tokenize(text):
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError("unexpected character %r" % text[pos], line, col)
        chunk = m.group(0)
        if m.lastgroup == "num":
            tokens.append(_Token("num", chunk, line, col))
        elif m.lastgroup == "ident":
            kind = chunk if chunk in _KEYWORDS else "ident"
            tokens.append(_Token(kind, chunk, line, col))
        elif m.lastgroup == "sym":
            tokens.append(_Token(chunk, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rindex("\n")
        else:
            col += len(chunk)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def at(self, kind):
        return self.peek().kind == kind

    def accept(self, kind):
        if self.at(kind):
            return self.next()
        return None

    def expect(self, kind):
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError("expected %r, found %r" % (kind, tok.text or
                                                        "end of input"),
                             tok.line, tok.col)
        return self.next()

    def fail(self, message):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.col)

    # -- terms --------------------------------------------------------------

    def term(self) -> Term:
        t = self.primary()
        while self.accept("+"):
            t = Add(t, self.primary())
        return t

    def primary(self) -> Term:
        tok = self.peek()
        if tok.kind == "num":
            self.next()
            return Lit(int(tok.text))
        if tok.kind == "null":
            self.next()
            return Null()
        if tok.kind == "(":
            self.next()
            t = self.term()
            self.expect(")")
            return t
        if tok.kind == "ident":
            self.next()
            if self.at("(") and tok.text in ("b", "e"):
                self.next()
                arg = self.term()
                self.expect(")")
                try:
                    return (BlockBase(arg) if tok.text == "b"
                            else BlockEnd(arg))
                except ValueError as exc:
                    raise ParseError(str(exc), tok.line, tok.col)
            if self.at("("):
                raise ParseError("unknown function %r" % tok.text, tok.line,
                                 tok.col)
            return Var(tok.text)
        self.fail("expected a term, found %r" % (tok.text or "end of input"))

    # -- assertions ---------------------------------------------------------

    def atom(self):
        tok = self.peek()
        if tok.kind == "emp":
            self.next()
            return Emp()
        if tok.kind in ("arr", "narr"):
            self.next()
            self.expect("(")
            lo = self.term()
            self.expect(",")
            hi = self.term()
            self.expect(")")
            return Arr(lo, hi) if tok.kind == "arr" else NegArr(lo, hi)
        t = self.term()
        op = self.peek()
        if op.kind == "|->":
            self.next()
            return PointsTo(t, self.term())
        if op.kind == "!|->":
            self.next()
            return NegArr(t, Add(t, Lit(1)))
        if op.kind == "==":
            self.next()
            return Eq(t, self.term())
        if op.kind == "!=":
            self.next()
            return Neq(t, self.term())
        if op.kind == "<=":
            self.next()
            return Le(t, self.term())
        if op.kind == "<":
            self.next()
            return Lt(t, self.term())
        self.fail("expected |->, !|->, ==, !=, <=, or < after a term")

    def heap(self) -> SymbolicHeap:
        atoms = [self.atom()]
        while self.accept("*"):
            atoms.append(self.atom())
        return SymbolicHeap(atoms)

    def disjunct(self) -> Disjunct:
        bound = []
        if self.accept("exists"):
            while self.at("ident"):
                bound.append(self.next().text)
            if not bound:
                self.fail("exists needs at least one variable")
            self.expect(".")
        tok = self.peek()
        try:
            return Disjunct(tuple(bound), self.heap())
        except ValueError as exc:
            raise ParseError(str(exc), tok.line, tok.col)

    def assertion(self) -> Assertion:
        if self.accept("false"):
            return Assertion(())
        disjuncts = [self.disjunct()]
        while self.accept("\\/"):
            disjuncts.append(self.disjunct())
        return Assertion(tuple(disjuncts))

    # -- commands -----------------------------------------------------------

    def command(self) -> Command:
        c = self.choice_cmd()
        if self.accept(";"):
            return Seq(c, self.command())
        return c

    def choice_cmd(self) -> Command:
        c = self.star_cmd()
        while self.accept("+"):
            c = Choice(c, self.star_cmd())
        return c

    def star_cmd(self) -> Command:
        c = self.base_cmd()
        while self.accept("*"):
            c = Star(c)
        return c

    def base_cmd(self) -> Command:
        tok = self.peek()
        try:
            return self._base_cmd(tok)
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), tok.line, tok.col)

    def _base_cmd(self, tok) -> Command:
        if self.accept("skip"):
            return Skip()
        if self.accept("error"):
            self.expect("(")
            self.expect(")")
            return Error()
        if self.accept("assume"):
            self.expect("(")
            cond = self.heap()
            self.expect(")")
            return Assume(cond)
        if self.accept("free"):
            self.expect("(")
            t = self.term()
            self.expect(")")
            return Free(t)
        if self.accept("local"):
            name = self.expect("ident").text
            init = None
            if self.accept(":="):
                init = self.term()
            self.expect("in")
            self.expect("{")
            body = self.command()
            self.expect("}")
            if init is None:
                return Local(name, body)
            return LocalInit(name, init, body)
        if self.accept("("):
            c = self.command()
            self.expect(")")
            return c
        if self.accept("["):
            addr = self.term()
            self.expect("]")
            self.expect(":=")
            return Store(addr, self.term())
        if tok.kind == "ident":
            name = self.next().text
            self.expect(":=")
            if self.accept("*"):
                return Havoc(name)
            if self.accept("alloc"):
                self.expect("(")
                size = self.term()
                self.expect(")")
                return Alloc(name, size)
            if self.accept("["):
                addr = self.term()
                self.expect("]")
                return Load(name, addr)
            return Assign(name, self.term())
        self.fail("expected a command, found %r" % (tok.text or
                                                    "end of input"))


def _parse(text, production):
    p = _Parser(text)
    result = production(p)
    tok = p.peek()
    if tok.kind != "eof":
        raise ParseError("trailing input starting at %r" % tok.text,
                         tok.line, tok.col)
    return result


def parse_term(text: str) -> Term:
    return _parse(text, _Parser.term)


def parse_heap(text: str) -> SymbolicHeap:
    return _parse(text, _Parser.heap)


def parse_assertion(text: str) -> Assertion:
    return _parse(text, _Parser.assertion)


def parse_command(text: str) -> Command:
    return _parse(text, _Parser.command)


# ---------------------------------------------------------------------------
# Printing


def format_term(t: Term) -> str:
    if isinstance(t, Null):
        return "null"
    if isinstance(t, Lit):
        return str(t.value)
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Add):
        right = format_term(t.right)
        if isinstance(t.right, Add):
            right = "(%s)" % right
        return "%s + %s" % (format_term(t.left), right)
    if isinstance(t, BlockBase):
        return "b(%s)" % format_term(t.arg)
    if isinstance(t, BlockEnd):
        return "e(%s)" % format_term(t.arg)
    raise TypeError(t)


def format_atom(a) -> str:
    if isinstance(a, Emp):
        return "emp"
    if isinstance(a, PointsTo):
        return "%s |-> %s" % (format_term(a.addr), format_term(a.value))
    if isinstance(a, Arr):
        return "arr(%s, %s)" % (format_term(a.lo), format_term(a.hi))
    if isinstance(a, NegArr):
        if a.hi == Add(a.lo, Lit(1)):
            return "%s !|->" % format_term(a.lo)
        return "narr(%s, %s)" % (format_term(a.lo), format_term(a.hi))
    ops = {Eq: "==", Neq: "!=", Le: "<=", Lt: "<"}
    return "%s %s %s" % (format_term(a.left), ops[type(a)],
                         format_term(a.right))


def format_heap(psi: SymbolicHeap) -> str:
    if not psi.atoms:
        return "emp"
    return " * ".join(format_atom(a) for a in psi.atoms)


def format_assertion(a: Assertion) -> str:
    if not a.disjuncts:
        return "false"
    parts = []
    for d in a.disjuncts:
        body = format_heap(d.heap)
        if d.bound:
            body = "exists %s. %s" % (" ".join(d.bound), body)
        parts.append(body)
    return " \\/ ".join(parts)


def format_command(c: Command) -> str:
    # atomic commands never need parentheses; compound ones are wrapped by
    # their context below
    if isinstance(c, Skip):
        return "skip"
    if isinstance(c, Error):
        return "error()"
    if isinstance(c, Assign):
        return "%s := %s" % (c.var, format_term(c.term))
    if isinstance(c, Havoc):
        return "%s := *" % c.var
    if isinstance(c, Assume):
        return "assume(%s)" % format_heap(c.cond)
    if isinstance(c, Local):
        return "local %s in { %s }" % (c.var, format_command(c.body))
    if isinstance(c, LocalInit):
        return "local %s := %s in { %s }" % (c.var, format_term(c.init),
                                             format_command(c.body))
    if isinstance(c, Seq):
        left = format_command(c.first)
        if isinstance(c.first, Seq):
            left = "(%s)" % left
        return "%s; %s" % (left, format_command(c.second))
    if isinstance(c, Choice):
        # Assign and Store end in a bare term, which would absorb the `+`
        def wrap(sub, is_right):
            text = format_command(sub)
            if isinstance(sub, (Seq, Assign, Store)):
                return "(%s)" % text
            if is_right and isinstance(sub, Choice):
                return "(%s)" % text
            return text
        return "%s + %s" % (wrap(c.left, False), wrap(c.right, True))
    if isinstance(c, Star):
        body = format_command(c.body)
        if not isinstance(c.body, (Skip, Error, Star)):
            body = "(%s)" % body
        return "%s*" % body
    if isinstance(c, Alloc):
        return "%s := alloc(%s)" % (c.var, format_term(c.size))
    if isinstance(c, Free):
        return "free(%s)" % format_term(c.addr)
    if isinstance(c, Load):
        return "%s := [%s]" % (c.var, format_term(c.addr))
    if isinstance(c, Store):
        return "[%s] := %s" % (format_term(c.addr), format_term(c.value))
    raise TypeError(c)
