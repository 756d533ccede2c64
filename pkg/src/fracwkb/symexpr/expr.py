"""Expression nodes and the canonicalizing constructors.

Nodes may be built raw (``Add((x, y))``) or through the smart constructors
``add``, ``mul``, ``power``, ``sin``, ``cos``, ``asin``.  The constructors
return canonical trees:

* sums and products are flat, n-ary and sorted, with at least two children;
* the numeric coefficient of a product is its first child (absent when 1);
* like terms and equal bases are merged, constants are folded;
* products are distributed over sums and positive integer powers of sums are
  expanded, so polynomial parts are always fully expanded;
* ``x^0`` and ``x^1`` never survive; ``sqrt(x)`` is ``x^(1/2)``.

Bases of non-integer powers are taken to be non-negative (radicands of the
classically allowed region), which is what licenses ``(R^(1/2))^2 -> R`` and
``R^a * R^b -> R^(a+b)``.  ``(x^(2k))^(1/2)`` is the one merge that is never
made, since it equals ``|x|^k``.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Union

from .atoms import AtomId

FUNCTIONS = ("sin", "cos", "asin")

# kind ranks for the structural total order
_K_CONST, _K_ATOM, _K_POW, _K_FUNC, _K_MUL, _K_ADD = range(6)


class Expr:
    __slots__ = ("_key", "_hash", "_atoms")

    # subclasses fill _key in __init__
    @property
    def key(self) -> tuple:
        return self._key

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = self._hash = hash(self._key)
        return h

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return hash(self) == hash(other) and self._key == other._key

    def __ne__(self, other) -> bool:
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __lt__(self, other: Expr) -> bool:
        return self._key < other._key

    @property
    def children(self) -> tuple[Expr, ...]:
        return ()

    @property
    def atoms(self) -> frozenset[AtomId]:
        a = self._atoms
        if a is None:
            a = frozenset().union(*(c.atoms for c in self.children))
            self._atoms = a
        return a

    def has(self, *atoms: AtomId) -> bool:
        own = self.atoms
        return any(a in own for a in atoms)

    def is_zero(self) -> bool:
        return isinstance(self, Const) and self.value == 0

    # arithmetic sugar, always canonical
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), -1))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, -1))

    def __pow__(self, exponent):
        return power(self, exponent)

    def __neg__(self):
        return neg(self)

    def __str__(self) -> str:
        from .printer import to_text

        return to_text(self)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self}>"


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        v = value if type(value) is Fraction else Fraction(value)
        self.value = v
        self._key = (_K_CONST, v)
        self._hash = None
        self._atoms = frozenset()


class Atom(Expr):
    __slots__ = ("id",)

    def __init__(self, atom_id: AtomId):
        self.id = atom_id
        self._key = (_K_ATOM, int(atom_id.role), atom_id.index, atom_id.level)
        self._hash = None
        self._atoms = frozenset((atom_id,))


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Expr]):
        self.terms = tuple(terms)
        self._key = (_K_ADD, tuple(t._key for t in self.terms))
        self._hash = None
        self._atoms = None

    @property
    def children(self):
        return self.terms


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: Iterable[Expr]):
        self.factors = tuple(factors)
        self._key = (_K_MUL, tuple(f._key for f in self.factors))
        self._hash = None
        self._atoms = None

    @property
    def children(self):
        return self.factors


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp):
        self.base = base
        self.exp = exp if type(exp) is Fraction else Fraction(exp)
        self._key = (_K_POW, base._key, self.exp)
        self._hash = None
        self._atoms = None

    @property
    def children(self):
        return (self.base,)


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unsupported function {name!r}")
        self.name = name
        self.arg = arg
        self._key = (_K_FUNC, name, arg._key)
        self._hash = None
        self._atoms = None

    @property
    def children(self):
        return (self.arg,)


ZERO = Const(0)
ONE = Const(1)
_F0 = Fraction(0)
_F1 = Fraction(1)
_HALF = Fraction(1, 2)
NumberLike = Union[int, Fraction, Rational]


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, AtomId):
        return Atom(x)
    if isinstance(x, bool) or not isinstance(x, (int, Fraction, Rational)):
        raise TypeError(f"cannot use {x!r} in an exact expression")
    return Const(x)


def const(value) -> Const:
    return Const(value)


def atom(atom_id: AtomId) -> Atom:
    return Atom(atom_id)


# ---------------------------------------------------------------- ordering

def _factor_key(f: Expr) -> tuple:
    if isinstance(f, Pow):
        return (f.base._key, f.exp)
    return (f._key, _F1)


def split_coeff(e: Expr) -> tuple[Fraction, tuple[Expr, ...]]:
    """Rational coefficient and remaining factors of a canonical term."""
    if isinstance(e, Const):
        return e.value, ()
    if isinstance(e, Mul) and e.factors and isinstance(e.factors[0], Const):
        return e.factors[0].value, e.factors[1:]
    if isinstance(e, Mul):
        return _F1, e.factors
    return _F1, (e,)


def _monomial(factors: tuple[Expr, ...]) -> Expr | None:
    if not factors:
        return None
    if len(factors) == 1:
        return factors[0]
    return Mul(factors)


def _term_key(t: Expr) -> tuple:
    _, factors = split_coeff(t)
    if not factors:
        return (1, ())
    return (0, tuple(_factor_key(f) for f in factors))


def _scaled(c: Fraction, m: Expr | None) -> Expr:
    if m is None:
        return Const(c)
    if c == 1:
        return m
    if isinstance(m, Mul):
        return Mul((Const(c),) + m.factors)
    return Mul((Const(c), m))


# ---------------------------------------------------------------- constructors

def add(*args: Expr) -> Expr:
    acc: dict[Expr | None, Fraction] = {}
    stack = list(args)
    while stack:
        a = stack.pop()
        if isinstance(a, Add):
            stack.extend(a.terms)
            continue
        c, factors = split_coeff(a)
        if not c:
            continue
        m = _monomial(factors)
        prev = acc.get(m)
        acc[m] = c if prev is None else prev + c
    constant = acc.pop(None, _F0)
    terms = [_scaled(c, m) for m, c in acc.items() if c != 0]
    terms.sort(key=_term_key)
    if constant != 0:
        terms.append(Const(constant))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Add(terms)


def _distribute(a: Expr, b: Expr) -> Expr:
    ta = a.terms if isinstance(a, Add) else (a,)
    tb = b.terms if isinstance(b, Add) else (b,)
    return add(*(mul(x, y) for x in ta for y in tb))


def mul(*args: Expr) -> Expr:
    coeff = _F1
    powers: dict[Expr, Fraction] = {}
    stack = list(args)
    while stack:
        a = stack.pop()
        if isinstance(a, Const):
            coeff *= a.value
            continue
        if isinstance(a, Mul):
            stack.extend(a.factors)
            continue
        if isinstance(a, Pow):
            base, e = a.base, a.exp
        else:
            base, e = a, _F1
        prev = powers.get(base)
        powers[base] = e if prev is None else prev + e
    if coeff == 0:
        return ZERO

    factors: list[Expr] = []
    sums: list[Expr] = []
    leftovers: list[Expr] = []
    for base, e in powers.items():
        if isinstance(base, Add) and e.denominator == 1 and e > 0:
            sums.extend([base] * int(e))
            continue
        f = power(base, e)
        if isinstance(f, Const):
            coeff *= f.value
        elif isinstance(f, (Mul, Add)):
            leftovers.append(f)
        else:
            factors.append(f)
    if coeff == 0:
        return ZERO
    if leftovers:
        # a power re-expanded into a product or sum; merge again
        return mul(Const(coeff), *factors, *sums, *leftovers)

    factors.sort(key=_factor_key)
    if coeff == 1 and len(factors) == 1:
        out = factors[0]
    elif not factors:
        out = Const(coeff)
    elif coeff == 1:
        out = Mul(factors)
    else:
        out = Mul([Const(coeff)] + factors)
    for s in sums:
        out = _distribute(out, s)
    return out


def _factorize(n: int, limit: int = 10**6) -> dict[int, int] | None:
    """Prime factorization by trial division; None if ``n`` is too large."""
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        if d > limit:
            return None
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _const_power(c: Fraction, e: Fraction) -> Expr:
    if e.denominator == 1:
        if c == 0 and e < 0:
            raise ZeroDivisionError("zero raised to a negative power")
        return Const(c ** int(e))
    if c == 0:
        if e < 0:
            raise ZeroDivisionError("zero raised to a negative power")
        return ZERO
    if c == 1:
        return ONE
    if c < 0:
        return Pow(Const(c), e)
    num, den = _factorize(c.numerator), _factorize(c.denominator)
    if num is None or den is None:
        return Pow(Const(c), e)
    primes = {p: k for p, k in num.items()}
    for p, k in den.items():
        primes[p] = primes.get(p, 0) - k
    # one factor p^r per prime, 0 < r < 1; integer parts fold into the coefficient
    coeff = Fraction(1)
    factors: list[Expr] = []
    for p in sorted(primes):
        x = primes[p] * e
        whole = x.numerator // x.denominator
        coeff *= Fraction(p) ** whole
        if x != whole:
            factors.append(Pow(Const(p), x - whole))
    if not factors:
        return Const(coeff)
    if coeff == 1 and len(factors) == 1:
        return factors[0]
    return Mul(([Const(coeff)] if coeff != 1 else []) + factors)


def power(base: Expr, exponent) -> Expr:
    base = as_expr(base)
    if isinstance(exponent, Const):
        exponent = exponent.value
    e = exponent if type(exponent) is Fraction else Fraction(exponent)
    if e == 0:
        return ONE
    if e == 1:
        return base
    if isinstance(base, Const):
        return _const_power(base.value, e)
    if isinstance(base, Pow):
        a = base.exp
        even_int = a.denominator == 1 and a.numerator % 2 == 0
        if e.denominator == 1 or not even_int:
            return power(base.base, a * e)
        return Pow(base, e)
    if isinstance(base, Mul) and e.denominator == 1:
        return mul(*(power(f, e) for f in base.factors))
    if isinstance(base, Add) and e.denominator == 1 and e > 0:
        out = base
        for _ in range(int(e) - 1):
            out = _distribute(out, base)
        return out
    return Pow(base, e)


def neg(e: Expr) -> Expr:
    return mul(Const(-1), e)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def sqrt(e: Expr) -> Expr:
    return power(e, Fraction(1, 2))


def sin(e: Expr) -> Expr:
    e = as_expr(e)
    if e.is_zero():
        return ZERO
    return Func("sin", e)


def cos(e: Expr) -> Expr:
    e = as_expr(e)
    if e.is_zero():
        return ONE
    return Func("cos", e)


def asin(e: Expr) -> Expr:
    e = as_expr(e)
    if e.is_zero():
        return ZERO
    return Func("asin", e)


FUNC_BUILDERS = {"sin": sin, "cos": cos, "asin": asin}


def terms_of(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Add):
        return e.terms
    if e.is_zero():
        return ()
    return (e,)


# ---------------------------------------------------------------- rewriting

def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the canonical constructors.

    Idempotent, and the identity on trees that are already canonical.
    """
    memo: dict[int, Expr] = {}

    def go(x: Expr) -> Expr:
        k = id(x)
        hit = memo.get(k)
        if hit is not None:
            return hit
        if isinstance(x, (Const, Atom)):
            out = x
        elif isinstance(x, Add):
            out = add(*(go(t) for t in x.terms))
        elif isinstance(x, Mul):
            out = mul(*(go(f) for f in x.factors))
        elif isinstance(x, Pow):
            out = power(go(x.base), x.exp)
        elif isinstance(x, Func):
            out = FUNC_BUILDERS[x.name](go(x.arg))
        else:  # pragma: no cover
            raise TypeError(type(x))
        memo[k] = out
        return out

    return go(e)


def substitute(e: Expr, bindings) -> Expr:
    """Simultaneous substitution of atoms, followed by canonicalization."""
    table = {k: as_expr(v) for k, v in dict(bindings).items()}
    if not table:
        return simplify(e)
    keys = frozenset(table)
    memo: dict[int, Expr] = {}

    def go(x: Expr) -> Expr:
        if isinstance(x, Atom):
            return table.get(x.id, x)
        if isinstance(x, Const) or keys.isdisjoint(x.atoms):
            return simplify(x)
        k = id(x)
        hit = memo.get(k)
        if hit is not None:
            return hit
        if isinstance(x, Add):
            out = add(*(go(t) for t in x.terms))
        elif isinstance(x, Mul):
            out = mul(*(go(f) for f in x.factors))
        elif isinstance(x, Pow):
            out = power(go(x.base), x.exp)
        else:
            out = FUNC_BUILDERS[x.name](go(x.arg))
        memo[k] = out
        return out

    return go(e)


def differentiate(e: Expr, v: AtomId) -> Expr:
    """Partial derivative with respect to the atom ``v``.

    All other atoms are independent of ``v``; the result is canonical.
    """
    memo: dict[int, Expr] = {}

    def go(x: Expr) -> Expr:
        if v not in x.atoms:
            return ZERO
        if isinstance(x, Atom):
            return ONE
        k = id(x)
        hit = memo.get(k)
        if hit is not None:
            return hit
        if isinstance(x, Add):
            out = add(*(go(t) for t in x.terms))
        elif isinstance(x, Mul):
            fs = x.factors
            parts = []
            for i, f in enumerate(fs):
                df = go(f)
                if not df.is_zero():
                    parts.append(mul(*fs[:i], df, *fs[i + 1:]))
            out = add(*parts)
        elif isinstance(x, Pow):
            out = mul(Const(x.exp), power(x.base, x.exp - 1), go(x.base))
        elif x.name == "sin":
            out = mul(cos(x.arg), go(x.arg))
        elif x.name == "cos":
            out = mul(Const(-1), sin(x.arg), go(x.arg))
        else:  # asin
            one_minus = add(ONE, neg(power(x.arg, 2)))
            out = mul(power(one_minus, Fraction(-1, 2)), go(x.arg))
        memo[k] = out
        return out

    return go(e)


class NotPolynomialError(ValueError):
    pass


def collect(e: Expr, v: AtomId) -> dict[int, Expr]:
    """Coefficients of ``e`` as a polynomial in ``v``.

    Raises NotPolynomialError when ``v`` appears other than as a
    non-negative integer power of a top-level factor.
    """
    target = Atom(v)
    buckets: dict[int, list[Expr]] = {}
    for term in terms_of(e):
        c, factors = split_coeff(term)
        deg = 0
        rest = []
        for f in factors:
            if f == target:
                deg += 1
            elif isinstance(f, Pow) and f.base == target:
                if f.exp.denominator != 1 or f.exp < 0:
                    raise NotPolynomialError(f"{v.name} appears as {f}")
                deg += int(f.exp)
            elif v in f.atoms:
                raise NotPolynomialError(f"{v.name} appears inside {f}")
            else:
                rest.append(f)
        buckets.setdefault(deg, []).append(mul(Const(c), *rest))
    return {d: add(*ts) for d, ts in sorted(buckets.items())}


def integrate_polynomial(e: Expr, v: AtomId) -> Expr:
    """Antiderivative in ``v`` (zero constant) of a polynomial in ``v``."""
    out = []
    for d, c in collect(e, v).items():
        out.append(mul(c, Const(Fraction(1, d + 1)), power(Atom(v), d + 1)))
    return add(*out)
