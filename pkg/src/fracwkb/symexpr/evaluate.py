"""Floating-point evaluation of expressions."""

from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence

from .atoms import AtomId
from .expr import Add, Atom, Const, Expr, Func, Mul, Pow


class EvaluationError(ArithmeticError):
    pass


class UnboundAtomError(EvaluationError, KeyError):
    def __init__(self, atom: AtomId):
        self.atom = atom
        super().__init__(f"no value assigned to {atom.name}")

    def __str__(self) -> str:
        return self.args[0]


class DomainError(EvaluationError, ValueError):
    """The assignment left the region where the expression is real."""


def _rpow(b: float, e: float, integral: bool) -> float:
    if integral:
        if b == 0.0 and e < 0:
            raise DomainError("division by zero")
        return b**e
    if b < 0.0:
        raise DomainError(f"negative base {b!r} under fractional power {e!r}")
    if b == 0.0 and e < 0:
        raise DomainError("zero base under negative power")
    return b**e


def _asin(x: float) -> float:
    if abs(x) > 1.0:
        raise DomainError(f"asin argument {x!r} outside [-1, 1]")
    return math.asin(x)


def eval_numeric(e: Expr, assignment: Mapping[AtomId, float]) -> float:
    memo: dict[int, float] = {}

    def go(x: Expr) -> float:
        k = id(x)
        if k in memo:
            return memo[k]
        if isinstance(x, Const):
            out = float(x.value)
        elif isinstance(x, Atom):
            try:
                out = float(assignment[x.id])
            except KeyError:
                raise UnboundAtomError(x.id) from None
        elif isinstance(x, Add):
            out = math.fsum(go(t) for t in x.terms)
        elif isinstance(x, Mul):
            out = 1.0
            for f in x.factors:
                out *= go(f)
        elif isinstance(x, Pow):
            out = _rpow(go(x.base), float(x.exp), x.exp.denominator == 1)
        elif isinstance(x, Func):
            a = go(x.arg)
            out = math.sin(a) if x.name == "sin" else math.cos(a) if x.name == "cos" else _asin(a)
        else:  # pragma: no cover
            raise TypeError(type(x))
        memo[k] = out
        return out

    return go(e)


def compile_exprs(exprs: Sequence[Expr], atoms: Sequence[AtomId]) -> Callable[..., tuple]:
    """Compile expressions into one Python function of the given atoms.

    The function takes the atom values positionally and returns a tuple with
    one float per expression.  Shared subtrees are computed once.
    """
    pos = {a: i for i, a in enumerate(atoms)}
    lines: list[str] = []
    names: dict[Expr, str] = {}

    def emit(x: Expr) -> str:
        if x in names:
            return names[x]
        if isinstance(x, Const):
            return repr(float(x.value))
        if isinstance(x, Atom):
            if x.id not in pos:
                raise UnboundAtomError(x.id)
            return f"a{pos[x.id]}"
        if isinstance(x, Add):
            code = "(" + " + ".join(emit(t) for t in x.terms) + ")"
        elif isinstance(x, Mul):
            code = "(" + " * ".join(emit(f) for f in x.factors) + ")"
        elif isinstance(x, Pow):
            b = emit(x.base)
            if x.exp.denominator == 1 and x.exp > 0:
                code = f"({b} ** {int(x.exp)})"
            else:
                integral = x.exp.denominator == 1
                code = f"_rpow({b}, {float(x.exp)!r}, {integral})"
        else:
            arg = emit(x.arg)
            code = {"sin": "_sin", "cos": "_cos", "asin": "_asin"}[x.name] + f"({arg})"
        name = f"v{len(names)}"
        names[x] = name
        lines.append(f"    {name} = {code}")
        return name

    outs = [emit(e) for e in exprs]
    params = ", ".join(f"a{i}" for i in range(len(atoms)))
    src = f"def _f({params}):\n" + "\n".join(lines) + "\n"
    src += f"    return ({', '.join(outs)}{',' if len(outs) == 1 else ''})\n"
    env = {"_rpow": _rpow, "_asin": _asin, "_sin": math.sin, "_cos": math.cos}
    exec(compile(src, "<compiled-expr>", "exec"), env)
    fn = env["_f"]

    def wrapped(*values):
        try:
            return fn(*values)
        except ZeroDivisionError as exc:
            raise DomainError(str(exc)) from None

    return wrapped


def domain_margins(e: Expr, assignment: Mapping[AtomId, float]) -> list[float]:
    """Distances to the real domain at ``assignment``.

    One entry per fractional-power base (its value) and per asin argument
    (``1 - |arg|``).  Negative entries mean the point is outside.
    """
    out: list[float] = []
    seen: set[Expr] = set()

    def go(x: Expr):
        if x in seen:
            return
        seen.add(x)
        for c in x.children:
            go(c)
        if isinstance(x, Pow) and (x.exp.denominator != 1 or x.exp < 0):
            v = eval_numeric(x.base, assignment)
            out.append(v if x.exp.denominator != 1 else abs(v))
        elif isinstance(x, Func) and x.name == "asin":
            out.append(1.0 - abs(eval_numeric(x.arg, assignment)))

    go(e)
    return out
