"""Pratt parser for the expression grammar.

Precedence, loosest first: ``+ -``, ``* /``, unary ``-``, ``^``.  ``^`` is
right-associative, the rest left-associative.  Atoms::

    D0[q] D1[q] D2[q] D3[q]   chain levels of coordinate q
    p[q] pi[q] p0             momenta
    t hbar A                  time, Planck constant, additive constant
    E[i] Ep[i] eta[i] lam[i]  integration constants of sector i

Functions are ``sqrt sin cos asin``.  Numeric literals are integers; use
``p/q`` for rationals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .atoms import AtomId, Role, MAX_LEVEL
from .expr import (
    Atom, Const, Expr, FUNC_BUILDERS, add, mul, neg, power, sqrt,
)


class ParseError(ValueError):
    def __init__(self, message: str, source: str, pos: int):
        self.source = source
        self.pos = pos
        self.line = source.count("\n", 0, pos) + 1
        self.column = pos - (source.rfind("\n", 0, pos) + 1) + 1
        self.message = message
        super().__init__(f"line {self.line}, column {self.column}: {message}")


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()\[\],])
    """,
    re.VERBOSE,
)

_COORD_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*$")
_INDEXED = {"E": Role.E, "Ep": Role.EP, "eta": Role.ETA, "lam": Role.LAMBDA}
_BARE = {"t": Role.TIME, "hbar": Role.HBAR, "A": Role.CONST_A, "p0": Role.P0}
_FUNCS = {"sqrt": sqrt, **FUNC_BUILDERS}

_LBP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_UNARY_RBP = 25


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", src, pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(src)))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None):
        return ParseError(msg, self.src, (tok or self.tok).pos)

    def advance(self) -> _Tok:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            raise self.error("empty expression")
        e = self.expression(0)
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return e

    def expression(self, rbp: int) -> Expr:
        left = self.prefix()
        while True:
            t = self.tok
            lbp = _LBP.get(t.text, 0) if t.kind == "op" else 0
            if lbp <= rbp:
                return left
            self.advance()
            left = self.infix(t, left)

    def infix(self, t: _Tok, left: Expr) -> Expr:
        op = t.text
        if op == "^":
            exp_tok = self.tok
            right = self.expression(_LBP["^"] - 1)
            if not isinstance(right, Const):
                raise self.error("exponent must be a rational constant", exp_tok)
            return power(left, right.value)
        right = self.expression(_LBP[op])
        if op == "+":
            return add(left, right)
        if op == "-":
            return add(left, neg(right))
        if op == "*":
            return mul(left, right)
        try:
            return mul(left, power(right, -1))
        except ZeroDivisionError:
            raise self.error("division by zero", t) from None

    def prefix(self) -> Expr:
        t = self.advance()
        if t.kind == "num":
            if not t.text.isdigit():
                raise self.error(
                    f"non-rational numeric literal {t.text!r}; write it as a fraction p/q", t
                )
            return Const(int(t.text))
        if t.text == "-":
            return neg(self.expression(_UNARY_RBP))
        if t.text == "(":
            e = self.expression(0)
            self.expect(")")
            return e
        if t.kind == "name":
            return self.name(t)
        if t.kind == "end":
            raise self.error("unexpected end of input", t)
        raise self.error(f"unexpected {t.text!r}", t)

    def bracket_arg(self) -> _Tok:
        self.expect("[")
        arg = self.advance()
        if arg.kind not in ("name", "num"):
            raise self.error("expected an index inside [...]", arg)
        self.expect("]")
        return arg

    def name(self, t: _Tok) -> Expr:
        word = t.text
        if word in _FUNCS:
            self.expect("(")
            arg = self.expression(0)
            self.expect(")")
            return _FUNCS[word](arg)
        m = re.fullmatch(r"D(\d+)", word)
        if m and self.tok.text == "[":
            level = int(m.group(1))
            if level > MAX_LEVEL:
                raise self.error(f"chain level {level} exceeds D{MAX_LEVEL}", t)
            return Atom(AtomId(Role.COORD, self._coord_name(), level))
        if word in ("p", "pi") and self.tok.text == "[":
            role = Role.MOMENTUM if word == "p" else Role.PI
            return Atom(AtomId(role, self._coord_name()))
        if word in _INDEXED and self.tok.text == "[":
            arg = self.bracket_arg()
            if not arg.text.isdigit():
                raise self.error(f"{word}[...] takes an integer sector index", arg)
            return Atom(AtomId(_INDEXED[word], int(arg.text)))
        if word in _BARE:
            return Atom(AtomId(_BARE[word]))
        raise self.error(f"unknown atom {word!r}", t)

    def _coord_name(self) -> str:
        arg = self.bracket_arg()
        if not _COORD_NAME.match(arg.text):
            raise self.error(f"bad coordinate name {arg.text!r}", arg)
        return arg.text


def parse(source: str) -> Expr:
    """Parse ``source`` into a canonical expression."""
    return _Parser(source).parse()
