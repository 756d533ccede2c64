"""WKB wave function and the hbar-graded action of the momentum operators.

``Psi = A * exp(i*S/hbar)`` is held as the pair (A, S) and never expanded.
A momentum becomes ``(hbar/i) d/dv`` with ``v`` its conjugate variable (``t``
for ``p0``).  Writing ``s_v = dS/dv`` and ``a_v = (dA/dv)/A``::

    (hbar/i) d_v Psi / Psi         = s_v - i*hbar*a_v
    (hbar/i)^2 d_u d_v Psi / Psi   = s_u*s_v - i*hbar*(a_u*s_v + a_v*s_u + s_uv)
                                     - hbar^2*(d_u a_v + a_u*a_v)

so every operator at most quadratic in the momenta gives a series
``R0 + hbar*R1 + hbar^2*R2`` with coefficients over the rationals extended by
``i``.  Coordinates sit to the left of derivatives in every mixed term.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .hjsolve import HJSolution
from .legendre import CanonicalSystem, UnsupportedStructureError
from .symexpr import (
    CONST_A, HBAR, P0, TIME, ZERO, AtomId, Const, DomainError, Expr, NotPolynomialError,
    Role, add, collect, compile_exprs, coord, differentiate, domain_margins, mul, neg, power,
    substitute, terms_of, to_text,
)
from .symexpr.atoms import MOMENTUM_ROLES

HALF = Fraction(1, 2)


class AmplitudeError(ValueError):
    pass


class QuantizationError(RuntimeError):
    def __init__(self, message: str, report: "WkbReport"):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------- complex coefficients

@dataclass(frozen=True)
class CExpr:
    """``re + i*im`` with both parts real expressions."""

    re: Expr = ZERO
    im: Expr = ZERO

    def __add__(self, other: "CExpr") -> "CExpr":
        return CExpr(add(self.re, other.re), add(self.im, other.im))

    def scale(self, c: Expr) -> "CExpr":
        return CExpr(mul(c, self.re), mul(c, self.im))

    def is_zero(self) -> bool:
        return self.re.is_zero() and self.im.is_zero()

    def __str__(self) -> str:
        if self.im.is_zero():
            return to_text(self.re)
        im = to_text(self.im)
        im_part = f"i*({im})" if len(terms_of(self.im)) > 1 else f"i*{im}"
        if self.re.is_zero():
            return im_part
        return f"{to_text(self.re)} + {im_part}"


def real(e: Expr) -> CExpr:
    return CExpr(e, ZERO)


def imag(e: Expr) -> CExpr:
    return CExpr(ZERO, e)


# ---------------------------------------------------------------- wave function

@dataclass(frozen=True)
class WaveFunction:
    hj: HJSolution
    factors: dict[AtomId, Expr]  # conjugate coordinate -> gradient^(-1/2)
    gradients: dict[AtomId, Expr]

    @property
    def phase(self) -> Expr:
        return self.hj.action()

    @property
    def amplitude(self) -> Expr:
        return mul(*self.factors.values())

    def log_derivative(self, v: AtomId) -> Expr:
        """a_v = (dA/dv)/A, summed factor by factor."""
        return add(*(mul(Const(-HALF), differentiate(g, v), power(g, -1))
                     for g in self.gradients.values()))

    def phase_gradient(self, v: AtomId) -> Expr:
        return self.hj.gradient(v)


def build_wave_function(hj: HJSolution, cs: CanonicalSystem | None = None) -> WaveFunction:
    cs = cs or hj.cs
    factors, grads = {}, {}
    for a in cs.a_indices:
        for v in (coord(a, 0), coord(a, 1)):
            g = hj.gradient(v)
            if g.is_zero():
                raise AmplitudeError(f"dS/d{v.name} vanishes identically; amplitude undefined")
            grads[v] = g
            factors[v] = power(g, Fraction(-1, 2))
    psi = WaveFunction(hj, factors, grads)
    forbidden = {TIME, HBAR} | {coord(m, k) for m in cs.mu_indices for k in (0, 1)}
    bad = psi.amplitude.atoms & forbidden
    if bad:
        raise AmplitudeError("amplitude depends on " + ", ".join(sorted(a.name for a in bad)))
    return psi


# ---------------------------------------------------------------- operator action

def conjugate(m: AtomId) -> AtomId:
    if m == P0:
        return TIME
    return coord(m.index, 0 if m.role == Role.MOMENTUM else 1)


@dataclass(frozen=True)
class HbarSeries:
    R0: CExpr
    R1: CExpr
    R2: CExpr

    def coefficients(self) -> tuple[CExpr, CExpr, CExpr]:
        return self.R0, self.R1, self.R2

    def all_zero(self) -> bool:
        return all(c.is_zero() for c in self.coefficients())

    def render(self) -> str:
        return f"R0 = {self.R0}; R1 = {self.R1}; R2 = {self.R2}"


def split_operator(op: Expr) -> list[tuple[Expr, tuple[AtomId, ...]]]:
    """Terms of ``op`` as (coefficient, momenta) with momenta sorted and repeated."""
    out = []
    for term in terms_of(op):
        moms = sorted(a for a in term.atoms if a.role in MOMENTUM_ROLES)
        word: list[AtomId] = []
        for m in moms:
            try:
                degs = collect(term, m)
            except NotPolynomialError:
                raise UnsupportedStructureError(f"{m.name} enters non-polynomially", term) from None
            (d,) = degs
            word += [m] * d
        if len(word) > 2:
            raise UnsupportedStructureError("momentum degree above 2", term)
        coeff = substitute(term, {m: Const(1) for m in moms})
        for m in moms:
            if conjugate(m) in coeff.atoms:
                raise UnsupportedStructureError(
                    f"ordering ambiguity: {m.name} multiplies a function of {conjugate(m).name}",
                    term)
        out.append((coeff, tuple(word)))
    return out


def apply_operator_series(op: Expr, psi: WaveFunction) -> HbarSeries:
    if HBAR in op.atoms:
        raise UnsupportedStructureError("operator already contains hbar", op)
    s_cache: dict[AtomId, Expr] = {}
    a_cache: dict[AtomId, Expr] = {}

    def s(v):
        if v not in s_cache:
            s_cache[v] = psi.phase_gradient(v)
        return s_cache[v]

    def a(v):
        if v not in a_cache:
            a_cache[v] = psi.log_derivative(v)
        return a_cache[v]

    R0, R1, R2 = CExpr(), CExpr(), CExpr()
    for c, word in split_operator(op):
        if not word:
            R0 += real(c)
        elif len(word) == 1:
            v = conjugate(word[0])
            R0 += real(mul(c, s(v)))
            R1 += imag(neg(mul(c, a(v))))
        else:
            u, v = conjugate(word[0]), conjugate(word[1])
            R0 += real(mul(c, s(u), s(v)))
            first = add(mul(a(u), s(v)), mul(a(v), s(u)), differentiate(s(u), v))
            R1 += imag(neg(mul(c, first)))
            second = add(differentiate(a(v), u), mul(a(u), a(v)))
            R2 += real(neg(mul(c, second)))
    return HbarSeries(R0, R1, R2)


def table_R2(hj: HJSolution) -> Expr:
    """hbar^2 coefficient expected from -1/2*d^2/dD1^2 acting on R^(-1/4) per sector."""
    parts = []
    for sec in hj.sectors:
        R = sec.radicand()
        d1 = differentiate(R, sec.x.id)
        d2 = differentiate(d1, sec.x.id)
        parts.append(mul(Const(Fraction(-5, 32)), power(d1, 2), power(R, -2)))
        parts.append(mul(Const(Fraction(1, 8)), d2, power(R, -1)))
    return add(*parts)


# ---------------------------------------------------------------- verification

SAMPLE_BOX = 3.0
SAMPLE_MARGIN = 1e-2


@dataclass(frozen=True)
class OperatorResult:
    label: str
    series: HbarSeries
    is_constraint: bool
    r0_symbolic_zero: bool
    r0_numeric_max: float
    numeric_max: dict[str, float]

    @property
    def exact_annihilation(self) -> bool:
        return self.series.all_zero()

    @property
    def consistent(self) -> bool:
        return self.r0_symbolic_zero or self.r0_numeric_max < 1e-10


@dataclass(frozen=True)
class WkbReport:
    results: tuple[OperatorResult, ...]
    seed: int
    points: int
    r2_matches_table: bool

    @property
    def consistent(self) -> bool:
        return all(r.consistent for r in self.results)

    def result(self, label: str) -> OperatorResult:
        return next(r for r in self.results if r.label == label)


def _sample_points(psi: WaveFunction, exprs: list[Expr], n: int, seed: int):
    atoms = set(psi.amplitude.atoms) | set(psi.phase.atoms)
    for e in exprs:
        atoms |= e.atoms
    fixed = {}
    free = []
    for x in sorted(atoms):
        if x.role in (Role.E, Role.EP):
            fixed[x] = 1.0
        elif x.role in (Role.ETA, Role.LAMBDA) or x == CONST_A:
            fixed[x] = 0.0
        else:
            free.append(x)
    guards = [psi.amplitude, *psi.gradients.values(), *exprs]
    rng = random.Random(seed)
    points = []
    tries = 0
    while len(points) < n:
        tries += 1
        if tries > 200 * n:
            raise RuntimeError("classically allowed region too small to sample")
        pt = {**fixed, **{x: rng.uniform(-SAMPLE_BOX, SAMPLE_BOX) for x in free}}
        try:
            if all(m >= SAMPLE_MARGIN for g in guards for m in domain_margins(g, pt)):
                points.append(pt)
        except DomainError:
            continue
    return points


def _numeric_max(exprs: dict[str, Expr], points) -> dict[str, float]:
    if not exprs or not points:
        return {k: 0.0 for k in exprs}
    atoms = sorted(set().union(*(e.atoms for e in exprs.values())) | set(points[0]))
    f = compile_exprs(list(exprs.values()), atoms)
    best = [0.0] * len(exprs)
    for pt in points:
        vals = f(*(pt[a] for a in atoms))
        best = [max(b, abs(v)) for b, v in zip(best, vals)]
    return dict(zip(exprs, best))


def _semiclassical_numeric(op: Expr, psi: WaveFunction, points) -> float:
    """max |op| with each momentum set to the numeric value of dS/d(conjugate)."""
    moms = sorted(a for a in op.atoms if a.role in MOMENTUM_ROLES)
    grads = [psi.phase_gradient(conjugate(m)) for m in moms]
    base = sorted(set(points[0]))
    g = compile_exprs(grads, base) if grads else (lambda *_: ())
    f = compile_exprs([op], base + moms)
    best = 0.0
    for pt in points:
        vals = [pt[a] for a in base]
        best = max(best, abs(f(*vals, *g(*vals))[0]))
    return best


def verify_quantization(cs: CanonicalSystem, psi: WaveFunction, seed: int = 0,
                        n_points: int = 1000) -> WkbReport:
    ops = [("H'0", cs.extended_hamiltonian, False)]
    ops += [(c.label, c.function, True) for c in cs.constraints]
    series = [(label, apply_operator_series(op, psi), is_c) for label, op, is_c in ops]
    # the phase-space sample is shared by every operator
    checked: dict[str, Expr] = {}
    for label, ser, is_c in series:
        if is_c:
            for k, c in (("R1", ser.R1), ("R2", ser.R2)):
                checked[f"{label}|{k}.re"] = c.re
                checked[f"{label}|{k}.im"] = c.im
    live = {k: e for k, e in checked.items() if not e.is_zero()}
    points = _sample_points(psi, [op for _, op, _ in ops] + list(live.values()), n_points, seed)
    maxima = _numeric_max(live, points)
    results = []
    for (label, ser, is_c), (_, op, _) in zip(series, ops):
        mine = {k.split("|", 1)[1]: maxima.get(k, 0.0)
                for k in checked if k.split("|", 1)[0] == label}
        r0 = _semiclassical_numeric(op, psi, points)
        mine["R0"] = r0
        results.append(OperatorResult(label, ser, is_c, ser.R0.is_zero(), r0, mine))
    h0 = results[0].series
    r2_ok = h0.R2.im.is_zero() and h0.R2.re == table_R2(psi.hj)
    report = WkbReport(tuple(results), seed, len(points), r2_ok)
    bad = [r for r in results if not r.consistent]
    if bad:
        worst = bad[0]
        raise QuantizationError(
            f"quantization inconsistency: {worst.label} has R0 = {worst.series.R0}"
            f" with sampled max |R0| = {worst.r0_numeric_max:.6g}", report)
    return report
