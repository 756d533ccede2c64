"""Exact symbolic expressions over rationals: build, parse, differentiate, evaluate."""

from .atoms import (
    AtomId, Role, CONST_A, HBAR, P0, TIME,
    const_E, const_Ep, const_eta, const_lam, coord, mom_p, mom_pi,
)
from .evaluate import (
    DomainError, EvaluationError, UnboundAtomError,
    compile_exprs, domain_margins, eval_numeric,
)
from .expr import (
    Add, Atom, Const, Expr, Func, Mul, NotPolynomialError, ONE, Pow, ZERO,
    add, as_expr, asin, atom, collect, const, cos, differentiate,
    integrate_polynomial, mul, neg, power, simplify, sin, split_coeff, sqrt,
    sub, substitute, terms_of,
)
from .parser import ParseError, parse
from .printer import to_text

__all__ = [
    "AtomId", "Role", "CONST_A", "HBAR", "P0", "TIME",
    "const_E", "const_Ep", "const_eta", "const_lam", "coord", "mom_p", "mom_pi",
    "DomainError", "EvaluationError", "UnboundAtomError",
    "compile_exprs", "domain_margins", "eval_numeric",
    "Add", "Atom", "Const", "Expr", "Func", "Mul", "NotPolynomialError", "ONE",
    "Pow", "ZERO", "add", "as_expr", "asin", "atom", "collect", "const", "cos",
    "differentiate", "integrate_polynomial", "mul", "neg", "power", "simplify",
    "sin", "split_coeff", "sqrt", "sub", "substitute", "terms_of",
    "ParseError", "parse", "to_text",
]
