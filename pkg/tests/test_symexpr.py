import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from fracwkb.symexpr import (
    Add, Atom, Const, DomainError, Mul, ParseError, Pow, UnboundAtomError,
    add, coord, const_E, const_Ep, const_eta, differentiate, domain_margins,
    eval_numeric, mom_p, mom_pi, mul, parse, power, simplify, sqrt, substitute,
    TIME, compile_exprs, collect, integrate_polynomial,
)

from randexpr import POOL, rand_assignment, rand_canonical, rand_expr

q = "q"
D0, D1, D2 = (coord(q, k) for k in range(3))


def P(s):
    return parse(s)


# ---------------------------------------------------------------- parse

def test_parse_example1_lagrangian():
    e = P("1/2*(D2[q1]^2 - D1[q1]^2)")
    assert isinstance(e, Add) and len(e.terms) == 2
    expected = add(mul(Const(Fraction(1, 2)), power(Atom(coord("q1", 2)), 2)),
                   mul(Const(Fraction(-1, 2)), power(Atom(coord("q1", 1)), 2)))
    assert e == expected


def test_parse_zero():
    assert P("0") == Const(0)


def test_parse_example2_three_terms():
    e = P("D1[q3]*D2[q3] + D1[q3]*D0[q3] + D0[q2]*D1[q2]")
    assert isinstance(e, Add) and len(e.terms) == 3
    assert all(isinstance(t, Mul) for t in e.terms)


@pytest.mark.parametrize("src,expected", [
    ("2^3^2", "512"),
    ("-D0[q]^2", "-D0[q]^2"),
    ("(-D0[q])^2", "D0[q]^2"),
    ("1 - 2 - 3", "-4"),
    ("12/4/3", "1"),
    ("D0[q]^-1*D0[q]", "1"),
    ("sqrt(4)", "2"),
    ("2*-3", "-6"),
])
def test_precedence(src, expected):
    assert P(src) == P(expected)


@pytest.mark.parametrize("src,fragment", [
    ("D0[q] +", "unexpected end"),
    ("D0[q] * (E[1]", "expected ')'"),
    ("foo + 1", "unknown atom 'foo'"),
    ("exp(D0[q])", "unknown atom 'exp'"),
    ("0.5*D0[q]", "non-rational numeric literal"),
    ("D4[q]", "chain level"),
    ("D0[q]^D1[q]", "exponent must be a rational constant"),
    ("E[q]", "integer sector index"),
    ("D0[q] $ 1", "unexpected character"),
])
def test_parse_errors(src, fragment):
    with pytest.raises(ParseError) as info:
        P(src)
    assert fragment in str(info.value)


def test_parse_error_reports_line_and_column():
    with pytest.raises(ParseError) as info:
        P("D0[q] +\n  bogus")
    assert (info.value.line, info.value.column) == (2, 3)


# ---------------------------------------------------------------- differentiate

def test_derivative_momentum_example1():
    assert differentiate(P("1/2*D2[q]^2"), D2) == Atom(D2)


def test_derivative_momentum_example2():
    assert differentiate(P("D1[q3]*D2[q3]"), coord("q3", 2)) == Atom(coord("q3", 1))


def test_derivative_sqrt_matches_central_difference():
    x = coord("x", 0)
    e = P("sqrt(E[1] - D0[x]^2)")
    d = differentiate(e, x)
    at = {const_E(1): 1.0, x: 0.3}
    h = 1e-6
    fd = (eval_numeric(e, {**at, x: 0.3 + h}) - eval_numeric(e, {**at, x: 0.3 - h})) / (2 * h)
    sym = eval_numeric(d, at)
    assert sym == pytest.approx(-0.3 / math.sqrt(0.91), rel=1e-12)
    assert abs(sym - fd) <= 1e-6 * abs(sym)


def test_derivative_of_functions():
    x = coord("x", 1)
    assert differentiate(P("sin(D1[x]^2)"), x) == P("2*D1[x]*cos(D1[x]^2)")
    assert differentiate(P("cos(D1[x])"), x) == P("-sin(D1[x])")
    assert differentiate(P("asin(D1[x])"), x) == P("(1 - D1[x]^2)^(-1/2)")


def _fd_case(rng):
    e = rand_canonical(rng, 3)
    if not e.atoms:
        return None
    v = rng.choice(sorted(e.atoms))
    sigma = rand_assignment(rng, e.atoms)
    h = 1e-6
    try:
        if any(m < 1e-3 for m in domain_margins(e, sigma)):
            return None
        f0 = eval_numeric(e, sigma)
        fp = eval_numeric(e, {**sigma, v: sigma[v] + h})
        fm = eval_numeric(e, {**sigma, v: sigma[v] - h})
        d = eval_numeric(differentiate(e, v), sigma)
    except (DomainError, OverflowError):
        return None
    if max(abs(f0), abs(d)) > 1e3:
        return None
    return d, (fp - fm) / (2 * h)


def test_derivative_finite_difference_property():
    rng = random.Random(20240601)
    checked = 0
    while checked < 500:
        case = _fd_case(rng)
        if case is None:
            continue
        d, fd = case
        assert abs(d - fd) <= 1e-6 * max(1.0, abs(d)), (d, fd)
        checked += 1


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 10**9), a=st.fractions(-5, 5, max_denominator=6),
       b=st.fractions(-5, 5, max_denominator=6))
def test_derivative_linearity(seed, a, b):
    rng = random.Random(seed)
    e1, e2 = rand_canonical(rng, 2), rand_canonical(rng, 2)
    v = rng.choice(POOL)
    lhs = differentiate(add(mul(Const(a), e1), mul(Const(b), e2)), v)
    rhs = add(mul(Const(a), differentiate(e1, v)), mul(Const(b), differentiate(e2, v)))
    assert lhs == rhs


# ---------------------------------------------------------------- simplify

def test_radical_rule_collapses_square_of_root():
    R = "2*Ep[1] + E[1]^2 - (D1[q] + E[1])^2"
    assert P(f"sqrt({R})^2") == P(R)
    raw = Pow(Pow(P(R), Fraction(1, 2)), Fraction(2))
    assert simplify(raw) == P(R)


def test_radical_rule_even_powers():
    R = P("1 - D1[q]^2")
    assert power(sqrt(R), 4) == power(R, 2)
    assert power(power(R, Fraction(1, 2)), -2) == power(R, -1)


def test_square_root_of_square_is_not_collapsed():
    e = power(power(Atom(D0), 2), Fraction(1, 2))
    assert e != Atom(D0)
    assert eval_numeric(e, {D0: -2.0}) == 2.0


def test_add_zero_identity():
    assert simplify(Add([Atom(D0), Const(0)])) == Atom(D0)


def test_canonical_invariants_hold_for_constructed_trees():
    rng = random.Random(7)

    def check(x):
        if isinstance(x, Const):
            assert x.value.denominator > 0
        if isinstance(x, (Add, Mul)):
            assert len(x.children) >= 2
            assert not any(type(c) is type(x) for c in x.children)
        if isinstance(x, Mul):
            assert not any(isinstance(c, (Const, Add)) for c in x.factors[1:])
        if isinstance(x, Pow):
            assert x.exp not in (0, 1)
        for c in x.children:
            check(c)

    for _ in range(300):
        try:
            check(simplify(rand_expr(rng, 3)))
        except ZeroDivisionError:
            pass


def test_simplify_preserves_value_on_random_expressions():
    rng = random.Random(99)
    compared = 0
    for _ in range(10_000):
        e = rand_expr(rng, 3)
        try:
            s = simplify(e)
        except ZeroDivisionError:
            continue
        sigma = rand_assignment(rng, e.atoms)
        try:
            v = eval_numeric(e, sigma)
        except (DomainError, OverflowError):
            continue
        w = eval_numeric(s, sigma)
        assert abs(v - w) <= 1e-10 * max(1.0, abs(v)), (e, s)
        compared += 1
    assert compared > 7000


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 10**9))
def test_simplify_idempotent(seed):
    rng = random.Random(seed)
    try:
        s = simplify(rand_expr(rng, 4))
    except ZeroDivisionError:
        return
    assert simplify(s) == s


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 10**9))
def test_parse_print_round_trip(seed):
    rng = random.Random(seed)
    try:
        s = simplify(rand_expr(rng, 4))
    except ZeroDivisionError:
        return
    assert parse(str(s)) == s


# ---------------------------------------------------------------- substitute

def test_substitute_reproduces_example1_hamiltonian():
    e = P("-1/2*(pi[q]^2 - D1[q]^2) + p[q]*D1[q] + pi[q]*D2[q]")
    out = substitute(e, {D2: Atom(mom_pi(q))})
    assert out == P("p[q]*D1[q] + 1/2*pi[q]^2 + 1/2*D1[q]^2")


def test_substitute_empty_is_simplify():
    raw = Add([Atom(D0), Atom(D0), Const(0)])
    assert substitute(raw, {}) == simplify(raw)


def test_substitute_is_simultaneous():
    e = P("D0[q] + 2*D1[q]")
    swapped = substitute(e, {D0: Atom(D1), D1: Atom(D0)})
    assert swapped == P("D1[q] + 2*D0[q]")


def test_chained_equals_simultaneous_when_disjoint():
    rng = random.Random(5)
    domain = [coord("x", 0), coord("x", 1)]
    range_pool = [coord("z", 0), coord("z", 1), mom_p("z")]
    for _ in range(100):
        e = rand_canonical(rng, 3, pool=domain + [mom_pi("x")], funcs=False, radicals=False)
        b = {a: rand_canonical(rng, 2, pool=range_pool, funcs=False, radicals=False)
             for a in domain}
        try:
            together = substitute(e, b)
            chained = e
            for a, val in b.items():
                chained = substitute(chained, {a: val})
        except ZeroDivisionError:
            continue
        assert together == chained


# ---------------------------------------------------------------- eval

def test_eval_trajectory_formula():
    e = P("sqrt(2*Ep[1] + E[1]^2)*sin(eta[1] + t) - E[1]")
    at = {const_E(1): 1.0, const_Ep(1): 1.0, const_eta(1): 0.0, TIME: math.pi / 2}
    assert eval_numeric(e, at) == pytest.approx(math.sqrt(3) - 1, abs=1e-12)
    assert eval_numeric(e, at) == pytest.approx(0.7320508, abs=1e-7)


def test_eval_constant():
    assert eval_numeric(P("7/2"), {D0: 123.0}) == 3.5


def test_eval_domain_errors():
    with pytest.raises(DomainError):
        eval_numeric(P("sqrt(-1)"), {})
    with pytest.raises(DomainError):
        eval_numeric(P("asin(D0[q])"), {D0: 1.5})
    with pytest.raises(DomainError):
        eval_numeric(P("D0[q]^(-1)"), {D0: 0.0})


def test_eval_unbound_atom():
    with pytest.raises(UnboundAtomError, match="D1"):
        eval_numeric(P("D0[q] + D1[q]"), {D0: 1.0})


def test_compiled_matches_interpreted():
    rng = random.Random(3)
    atoms = sorted(POOL)
    for _ in range(200):
        e = rand_canonical(rng, 3)
        sigma = rand_assignment(rng, atoms)
        f = compile_exprs([e], atoms)
        try:
            v = eval_numeric(e, sigma)
        except DomainError:
            with pytest.raises(DomainError):
                f(*(sigma[a] for a in atoms))
            continue
        assert f(*(sigma[a] for a in atoms))[0] == pytest.approx(v, rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------- polynomial helpers

def test_collect_and_integrate():
    x = coord("x", 1)
    e = P("3*D1[x]^2*E[1] - D1[x] + 5")
    assert collect(e, x) == {0: Const(5), 1: Const(-1), 2: P("3*E[1]")}
    assert integrate_polynomial(e, x) == P("D1[x]^3*E[1] - 1/2*D1[x]^2 + 5*D1[x]")
