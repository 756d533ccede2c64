"""Text rendering in the shared expression grammar.

``parse(to_text(e)) == e`` holds for every canonical ``e``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Mapping

from .atoms import AtomId
from .expr import Add, Atom, Const, Expr, Func, Mul, Pow, split_coeff

Namer = Callable[[AtomId], str]

# binding strength of the printed form of each node
_P_SUM, _P_PROD, _P_UNARY, _P_POW, _P_ATOM = 1, 2, 3, 4, 5


def _frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def to_text(e: Expr, names: Mapping[AtomId, str] | None = None) -> str:
    namer: Namer = (lambda a: names.get(a, a.name)) if names else (lambda a: a.name)
    return _Printer(namer).render(e)


class _Printer:
    def __init__(self, namer: Namer):
        self.namer = namer

    def render(self, e: Expr) -> str:
        return self._text(e)[0]

    def _wrap(self, e: Expr, min_prec: int) -> str:
        s, p = self._text(e)
        return s if p >= min_prec else f"({s})"

    def _text(self, e: Expr) -> tuple[str, int]:
        if isinstance(e, Const):
            v = e.value
            if v < 0:
                return "-" + _frac(-v), _P_UNARY if v.denominator == 1 else _P_PROD
            return _frac(v), _P_ATOM if v.denominator == 1 else _P_PROD
        if isinstance(e, Atom):
            return self.namer(e.id), _P_ATOM
        if isinstance(e, Func):
            return f"{e.name}({self.render(e.arg)})", _P_ATOM
        if isinstance(e, Pow):
            return self._pow(e)
        if isinstance(e, Mul):
            return self._mul(e)
        if isinstance(e, Add):
            return self._add(e)
        raise TypeError(type(e))

    def _pow(self, e: Pow) -> tuple[str, int]:
        if e.exp == Fraction(1, 2):
            return f"sqrt({self.render(e.base)})", _P_ATOM
        base = self._wrap(e.base, _P_ATOM)
        x = e.exp
        if x.denominator == 1 and x > 0:
            return f"{base}^{x.numerator}", _P_POW
        return f"{base}^({_frac(x)})", _P_POW

    def _mul(self, e: Mul) -> tuple[str, int]:
        c, factors = split_coeff(e)
        body = "*".join(self._wrap(f, _P_POW) for f in factors)
        if c == 1:
            return body, _P_PROD
        if c == -1:
            return "-" + body, _P_UNARY
        if c < 0:
            return f"-{_frac(-c)}*{body}", _P_UNARY
        return f"{_frac(c)}*{body}", _P_PROD

    def _add(self, e: Add) -> tuple[str, int]:
        parts = []
        for i, t in enumerate(e.terms):
            c, _ = split_coeff(t)
            if i and c < 0:
                parts.append(" - " + self._wrap(-t, _P_PROD))
            elif i:
                parts.append(" + " + self._wrap(t, _P_PROD))
            else:
                parts.append(self._wrap(t, _P_PROD))
        return "".join(parts), _P_SUM
