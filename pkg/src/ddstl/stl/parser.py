"""Recursive-descent parser for the text form of STL specifications.

Grammar, loosest binding first::

    formula  := disj ('->' formula)?
    disj     := conj ('or' conj)*
    conj     := until ('and' until)*
    until    := unary ('U' '[' INT ',' INT ']' unary)?
    unary    := 'not' unary | 'G' iv unary | 'F' iv unary | atom
    atom     := 'true' | 'false' | '(' formula ')' | side RELOP side
    side     := 'abs' '(' linexpr ')' | linexpr
    linexpr  := affine combination of y1..yN, schedule names and numbers

Every comparison becomes a strict predicate ``expr > 0``; ``>=`` and ``<=`` are
read as their strict versions.  ``abs(e) >= r`` expands to ``e >= r or
-e >= r`` and ``abs(e) <= r`` to ``e <= r and -e <= r``.  ``a -> b`` is
``not a or b``.  ``#`` starts a comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .formula import Always, And, Const, Eventually, Formula, Not, Or, Predicate, Until


class StlSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>->|>=|<=|&&|\|\||[()\[\],+\-*/<>!&|])
""", re.VERBOSE)

_KEYWORDS = {"and", "or", "not", "true", "false", "abs", "G", "F", "U"}
_ALIASES = {"&&": "and", "&": "and", "||": "or", "|": "or", "!": "not"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise StlSyntaxError(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            if kind == "op" and text in _ALIASES:
                kind, text = "ident", _ALIASES[text]
            toks.append(_Tok(kind, text, line, pos - line_start + 1))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


@dataclass
class _Lin:
    coeffs: np.ndarray
    const: float = 0.0
    sched: dict = field(default_factory=dict)

    def is_const(self) -> bool:
        return not np.any(self.coeffs) and not any(self.sched.values())

    def scaled(self, k: float) -> "_Lin":
        return _Lin(self.coeffs * k, self.const * k, {n: c * k for n, c in self.sched.items()})

    def plus(self, other: "_Lin", sign: float = 1.0) -> "_Lin":
        s = dict(self.sched)
        for n, c in other.sched.items():
            s[n] = s.get(n, 0.0) + sign * c
        return _Lin(self.coeffs + sign * other.coeffs, self.const + sign * other.const, s)

    def predicate(self) -> Predicate:
        return Predicate(tuple(self.coeffs), self.const, tuple(self.sched.items()))


class _Parser:
    def __init__(self, src: str, n_y: int, schedules: Optional[Iterable[str]]):
        self.toks = _tokenize(src)
        self.i = 0
        self.n_y = n_y
        self.schedules = None if schedules is None else set(schedules)

    # -- token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, expected: str, tok: Optional[_Tok] = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise StlSyntaxError(f"expected {expected}, found {found}", tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "ident")

    def eat(self, text: str) -> _Tok:
        if not self.at(text):
            self.error(repr(text))
        t = self.tok
        self.i += 1
        return t

    # -- formulas
    def parse(self) -> Formula:
        f = self.formula()
        if self.tok.kind != "eof":
            self.error("end of input")
        return f

    def formula(self) -> Formula:
        lhs = self.disj()
        if self.at("->"):
            self.i += 1
            rhs = self.formula()
            return Or((Not(lhs), rhs))
        return lhs

    def disj(self) -> Formula:
        parts = [self.conj()]
        while self.at("or"):
            self.i += 1
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conj(self) -> Formula:
        parts = [self.until()]
        while self.at("and"):
            self.i += 1
            parts.append(self.until())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def until(self) -> Formula:
        lhs = self.unary()
        if self.at("U"):
            self.i += 1
            a, b = self.interval()
            rhs = self.unary()
            return Until(a, b, lhs, rhs)
        return lhs

    def interval(self) -> tuple[int, int]:
        start = self.eat("[")
        a = self.integer()
        self.eat(",")
        b = self.integer()
        self.eat("]")
        if a > b:
            raise StlSyntaxError(f"empty interval [{a},{b}]", start.line, start.col)
        return a, b

    def integer(self) -> int:
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            self.error("a nonnegative integer")
        self.i += 1
        return int(t.text)

    def unary(self) -> Formula:
        if self.at("not"):
            self.i += 1
            return Not(self.unary())
        if self.at("G") or self.at("F"):
            op = self.tok.text
            self.i += 1
            a, b = self.interval()
            child = self.unary()
            return Always(a, b, child) if op == "G" else Eventually(a, b, child)
        return self.atom()

    def atom(self) -> Formula:
        if self.at("true") or self.at("false"):
            v = self.tok.text == "true"
            self.i += 1
            return Const(v)
        if self.at("("):
            save = self.i
            try:
                self.i += 1
                f = self.formula()
                self.eat(")")
                if not (self.tok.kind == "op" and self.tok.text in "+-*/<><=>="):
                    return f
            except StlSyntaxError:
                pass
            self.i = save
        return self.comparison()

    # -- comparisons and linear expressions
    def comparison(self) -> Formula:
        start = self.tok
        lhs, labs = self.side()
        if not (self.tok.kind == "op" and self.tok.text in (">", ">=", "<", "<=")):
            self.error("a comparison operator ('>', '>=', '<', '<=')")
        op = self.tok.text
        self.i += 1
        rhs, rabs = self.side()
        if labs and rabs:
            raise StlSyntaxError("abs() may appear on one side of a comparison only", start.line, start.col)
        if rabs:
            lhs, rhs = rhs, lhs
            op = {">": "<", ">=": "<=", "<": ">", "<=": ">="}[op]
        if labs or rabs:
            # lhs is the argument of abs()
            if op in (">", ">="):
                return Or((lhs.plus(rhs, -1).predicate(), lhs.scaled(-1).plus(rhs, -1).predicate()))
            return And((rhs.plus(lhs, -1).predicate(), rhs.plus(lhs).predicate()))
        if op in (">", ">="):
            return lhs.plus(rhs, -1).predicate()
        return rhs.plus(lhs, -1).predicate()

    def side(self) -> tuple[_Lin, bool]:
        if self.at("abs"):
            self.i += 1
            self.eat("(")
            e = self.linexpr()
            self.eat(")")
            return e, True
        return self.linexpr(), False

    def linexpr(self) -> _Lin:
        if self.at("-"):
            self.i += 1
            e = self.term().scaled(-1)
        else:
            if self.at("+"):
                self.i += 1
            e = self.term()
        while self.at("+") or self.at("-"):
            sign = 1.0 if self.tok.text == "+" else -1.0
            self.i += 1
            e = e.plus(self.term(), sign)
        return e

    def term(self) -> _Lin:
        e = self.factor()
        while self.at("*") or self.at("/"):
            op = self.tok
            self.i += 1
            f = self.factor()
            if op.text == "/":
                if not f.is_const() or f.const == 0.0:
                    raise StlSyntaxError("division is only allowed by a nonzero constant", op.line, op.col)
                e = e.scaled(1.0 / f.const)
            elif e.is_const():
                e = f.scaled(e.const)
            elif f.is_const():
                e = e.scaled(f.const)
            else:
                raise StlSyntaxError("product of two non-constant terms is not affine", op.line, op.col)
        return e

    def factor(self) -> _Lin:
        t = self.tok
        zero = np.zeros(self.n_y)
        if t.kind == "num":
            self.i += 1
            return _Lin(zero, float(t.text))
        if self.at("-"):
            self.i += 1
            return self.factor().scaled(-1)
        if self.at("("):
            self.i += 1
            e = self.linexpr()
            self.eat(")")
            return e
        if t.kind == "ident" and t.text not in _KEYWORDS:
            self.i += 1
            m = re.fullmatch(r"y(\d+)", t.text)
            if m:
                k = int(m.group(1))
                if not 1 <= k <= self.n_y:
                    raise StlSyntaxError(f"output {t.text} does not exist (system has {self.n_y} outputs)",
                                         t.line, t.col)
                c = zero.copy()
                c[k - 1] = 1.0
                return _Lin(c)
            if self.schedules is not None and t.text in self.schedules:
                return _Lin(zero, 0.0, {t.text: 1.0})
            raise StlSyntaxError(f"unknown name {t.text!r}", t.line, t.col)
        self.error("a number, output y<i>, schedule name or '('")


def parse(src: str, n_y: int = 1, schedules: Optional[Iterable[str]] = None) -> Formula:
    """Parse specification text into a formula over ``n_y`` outputs.

    ``schedules`` names the time-indexed series a predicate may refer to.
    """
    return _Parser(src, n_y, schedules).parse()
