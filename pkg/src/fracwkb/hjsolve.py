"""Separable solution of the Hamilton-Jacobi equations and closed-form trajectories.

The Hamiltonian must split into independent sectors, one per unconstrained
coordinate ``a``::

    H0 = sum_a [ c_a * D1[a] + 1/2*pi[a]^2 + V_a(D1[a]) ]

with ``c_a = gamma*p[a] + delta*D0[a] + eps`` (rational ``gamma != 0``) and
``V_a`` a polynomial of degree <= 2 without a linear term (any constant part of
the ``D1[a]`` coefficient is kept in ``c_a``).  Setting ``c_a = E[a]`` separates
the sector and leaves

    1/2*(dW'/dD1)^2 + U(D1) = Ep[a],    U = E*D1 + v2*D1^2 + v0.

``W' = int sqrt(R) dD1`` with ``R = 2*(Ep - U)`` comes from a two-entry
integral table keyed on the degree of ``R``: affine (``v2 = 0``) or concave
quadratic (``v2 > 0``).  Each entry stores the antiderivative, its partial
derivatives in ``E`` and ``Ep``, the inversion of ``eta = dS/dEp`` and the
closed form of ``dW'/dE`` along the motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping

from .legendre import CanonicalSystem, UnsupportedStructureError
from .model import PhaseSpace
from .symexpr import (
    CONST_A, P0, TIME, ZERO, Atom, AtomId, Const, Expr, NotPolynomialError, Role,
    add, asin, collect, const_E, const_Ep, const_eta, const_lam, coord, cos,
    differentiate, eval_numeric, integrate_polynomial, mom_p, mom_pi, mul, neg,
    power, sin, sqrt, substitute, terms_of, to_text,
)

HALF = Fraction(1, 2)


class NonSeparableError(UnsupportedStructureError):
    def __init__(self, reason: str, offending: Expr | None = None):
        super().__init__(f"non-separable: {reason}", offending)


class DegenerateConstantError(ValueError):
    pass


class InversionError(ValueError):
    pass


def _c(x) -> Const:
    return Const(Fraction(x))


# ---------------------------------------------------------------- HJ PDE display

@dataclass(frozen=True)
class HJPDE:
    name: str
    expr: Expr  # in terms of momenta; momenta read as gradients of S

    def render(self) -> str:
        names = {P0: "dS/dt"}
        for a in self.expr.atoms:
            if a.role == Role.MOMENTUM:
                names[a] = f"dS/dD0[{a.index}]"
            elif a.role == Role.PI:
                names[a] = f"dS/dD1[{a.index}]"
        return f"{self.name}: {to_text(self.expr, names)} = 0"


def build_hjpdes(cs: CanonicalSystem) -> list[HJPDE]:
    out = [HJPDE("H'0", cs.extended_hamiltonian)]
    out.extend(HJPDE(c.label, c.function) for c in cs.constraints)
    return out


# ---------------------------------------------------------------- integral table

@dataclass(frozen=True)
class TableIntegral:
    """``W' = int sqrt(R) dvar`` resolved by one table family."""

    family: str
    var: AtomId
    radicand: Expr
    antiderivative: Expr
    d_dE: Expr
    d_dEp: Expr

    @property
    def integrand(self) -> Expr:
        return sqrt(self.radicand)

    def render(self) -> str:
        return f"int({self.integrand}, {self.var.name})"


@dataclass(frozen=True)
class Sector:
    """One separated coordinate and its table entry."""

    coord: str
    index: int
    gamma: Fraction
    delta: Fraction
    eps: Fraction
    v2: Fraction
    v0: Fraction

    @property
    def E(self) -> Atom:
        return Atom(const_E(self.index))

    @property
    def Ep(self) -> Atom:
        return Atom(const_Ep(self.index))

    @property
    def eta(self) -> Atom:
        return Atom(const_eta(self.index))

    @property
    def lam(self) -> Atom:
        return Atom(const_lam(self.index))

    @property
    def x(self) -> Atom:
        return Atom(coord(self.coord, 1))

    @property
    def y(self) -> Atom:
        return Atom(coord(self.coord, 0))

    @property
    def family(self) -> str:
        return "affine" if self.v2 == 0 else "arcsine"

    # pieces of the arcsine family
    @property
    def m(self) -> Fraction:
        return 2 * self.v2

    def K(self) -> Expr:
        return add(mul(_c(2), add(self.Ep, _c(-self.v0))), mul(_c(1 / self.m), power(self.E, 2)))

    def b(self) -> Expr:
        return mul(_c(1 / self.m), self.E)

    def potential(self) -> Expr:
        """U(D1) = E*D1 + v2*D1^2 + v0."""
        return add(mul(self.E, self.x), mul(_c(self.v2), power(self.x, 2)), _c(self.v0))

    def radicand(self) -> Expr:
        return mul(_c(2), add(self.Ep, neg(self.potential())))

    def W(self) -> Expr:
        """W_a(D0; E) from c_a = E."""
        y = self.y
        body = add(mul(add(self.E, _c(-self.eps)), y), mul(_c(-self.delta / 2), power(y, 2)))
        return mul(_c(1 / self.gamma), body)

    def momentum_of(self, y: Expr) -> Expr:
        """p_a as a function of D0 on the separated solution."""
        return mul(_c(1 / self.gamma), add(self.E, mul(_c(-self.delta), y), _c(-self.eps)))

    def table_integral(self) -> TableIntegral:
        R = self.radicand()
        x = self.x
        if self.family == "affine":
            k = self.E
            anti = mul(_c(Fraction(-1, 3)), power(k, -1), power(R, Fraction(3, 2)))
            d_dEp = neg(mul(power(k, -1), sqrt(R)))
            d_dE = add(mul(_c(Fraction(1, 3)), power(k, -2), power(R, Fraction(3, 2))),
                       mul(x, power(k, -1), sqrt(R)))
        else:
            K, b, m = self.K(), self.b(), self.m
            omega = sqrt(_c(m))
            u = add(x, b)
            arc = asin(mul(omega, u, power(K, Fraction(-1, 2))))
            anti = mul(_c(HALF), add(mul(u, sqrt(R)), mul(K, power(omega, -1), arc)))
            d_dEp = mul(power(omega, -1), arc)
            d_dE = add(mul(_c(1 / m), sqrt(R)), mul(b, power(omega, -1), arc))
        return TableIntegral(self.family, x.id, R, anti, d_dE, d_dEp)

    # closed forms along the motion, s = eta + t
    def s(self) -> Expr:
        return add(self.eta, Atom(TIME))

    def velocity_path(self) -> Expr:
        s = self.s()
        if self.family == "affine":
            k = self.E
            return add(mul(add(self.Ep, _c(-self.v0)), power(k, -1)),
                       mul(_c(-HALF), k, power(s, 2)))
        omega = sqrt(_c(self.m))
        return add(mul(sqrt(self.K()), power(omega, -1), sin(mul(omega, s))), neg(self.b()))

    def pi_candidate(self) -> Expr:
        """sqrt(R) along the motion, on the branch the inversion produces."""
        s = self.s()
        if self.family == "affine":
            return neg(mul(self.E, s))
        omega = sqrt(_c(self.m))
        return mul(sqrt(self.K()), cos(mul(omega, s)))

    def dE_path(self, pi_path: Expr) -> Expr:
        """dW'/dE along the motion."""
        s = self.s()
        if self.family == "affine":
            k = self.E
            return add(mul(_c(Fraction(1, 6)), k, power(s, 3)),
                       neg(mul(add(self.Ep, _c(-self.v0)), power(k, -1), s)))
        return add(mul(_c(1 / self.m), pi_path), mul(self.b(), s))

    # numeric helpers
    def check_constants(self, E: float, Ep: float) -> None:
        if self.family == "affine":
            if E == 0:
                raise DegenerateConstantError(
                    f"degenerate constant: E[{self.index}] = 0 divides the affine-family inversion")
        else:
            K = 2 * (Ep - float(self.v0)) + E * E / float(self.m)
            if K <= 0:
                raise DegenerateConstantError(
                    f"degenerate constant: 2*(Ep[{self.index}] - v0) + E[{self.index}]^2/m = {K!r} <= 0"
                    " leaves no classically allowed region")


@dataclass(frozen=True)
class HJSolution:
    cs: CanonicalSystem
    sectors: tuple[Sector, ...]
    integrals: tuple[TableIntegral, ...]
    time_part: Expr
    W_parts: tuple[Expr, ...]
    mu_parts: dict[str, tuple[Expr, Expr]]
    extra: Expr = ZERO  # test hook: perturbation added to S

    @property
    def explicit(self) -> Expr:
        """S without the table integrals."""
        parts = [self.time_part, *self.W_parts, Atom(CONST_A), self.extra]
        for f, fp in self.mu_parts.values():
            parts += [f, fp]
        return add(*parts)

    def action(self) -> Expr:
        """S with every integral replaced by its closed-form antiderivative."""
        return add(self.explicit, *(ti.antiderivative for ti in self.integrals))

    def render(self) -> str:
        parts = [str(self.explicit)] + [ti.render() for ti in self.integrals]
        return " + ".join(parts)

    def gradient(self, v: AtomId) -> Expr:
        out = [differentiate(self.explicit, v)]
        for sec, ti in zip(self.sectors, self.integrals):
            if v == ti.var:
                out.append(ti.integrand)
            elif v == sec.E.id:
                out.append(ti.d_dE)
            elif v == sec.Ep.id:
                out.append(ti.d_dEp)
        return add(*out)

    def momentum_substitution(self) -> dict[AtomId, Expr]:
        ps = self.cs.phase_space
        sub = {P0: self.gradient(TIME)}
        for q in ps.coords:
            sub[mom_p(q)] = self.gradient(coord(q, 0))
            sub[mom_pi(q)] = self.gradient(coord(q, 1))
        return sub

    def hj_residual(self) -> Expr:
        """dS/dt + H0 evaluated on the gradients of S."""
        return substitute(self.cs.extended_hamiltonian, self.momentum_substitution())

    def constraint_residuals(self) -> dict[str, Expr]:
        sub = self.momentum_substitution()
        return {c.label: substitute(c.function, sub) for c in self.cs.constraints}

    def lambda_integrand(self, sector: Sector) -> Expr:
        """Integrand of the lambda relation, d/dE sqrt(R)."""
        return differentiate(sqrt(sector.radicand()), sector.E.id)

    def with_perturbation(self, extra: Expr) -> HJSolution:
        return replace(self, extra=add(self.extra, extra))


def _rational(e: Expr, what: str, offending: Expr) -> Fraction:
    if not isinstance(e, Const):
        raise NonSeparableError(f"{what} must be a rational constant", offending)
    return e.value


def _decompose_sector(q: str, h: Expr, index: int) -> Sector:
    x, y, p, pi = coord(q, 1), coord(q, 0), mom_p(q), mom_pi(q)
    try:
        by_pi = collect(h, pi)
    except NotPolynomialError:
        raise NonSeparableError(f"pi[{q}] enters non-polynomially", h) from None
    if set(by_pi) - {0, 2} or by_pi.get(2) != Const(HALF):
        raise NonSeparableError(f"sector {q} needs the kinetic term 1/2*pi[{q}]^2", h)
    rest = by_pi.get(0, ZERO)
    try:
        by_x = collect(rest, x)
    except NotPolynomialError:
        raise NonSeparableError(f"D1[{q}] enters non-polynomially", rest) from None
    if max(by_x, default=0) > 2:
        raise NonSeparableError(f"potential U of degree > 2 in D1[{q}]", rest)
    c = by_x.get(1, ZERO)
    v2 = _rational(by_x.get(2, ZERO), f"D1[{q}]^2 coefficient", rest)
    v0 = _rational(by_x.get(0, ZERO), f"D1[{q}]-free part of sector {q}", rest)
    if v2 < 0:
        raise NonSeparableError(f"convex radicand in sector {q} is not in the integral table", rest)
    try:
        by_p = collect(c, p)
        gamma = _rational(by_p.get(1, ZERO), f"p[{q}] coefficient", c)
        by_y = collect(by_p.get(0, ZERO), y)
    except NotPolynomialError:
        raise NonSeparableError(f"D1[{q}] coefficient is not affine", c) from None
    if set(by_p) - {0, 1} or set(by_y) - {0, 1} or gamma == 0:
        raise NonSeparableError(f"D1[{q}] coefficient must be affine in p[{q}] and D0[{q}]", c)
    delta = _rational(by_y.get(1, ZERO), f"D0[{q}] coefficient", c)
    eps = _rational(by_y.get(0, ZERO), "constant", c)
    return Sector(q, index, gamma, delta, eps, v2, v0)


def solve_separable(cs: CanonicalSystem) -> HJSolution:
    H0 = cs.hamiltonian
    ps: PhaseSpace = cs.phase_space
    if TIME in H0.atoms:
        raise NonSeparableError("time-dependent Hamiltonian", H0)
    mu_set = set(cs.mu_indices)
    groups: dict[str, list[Expr]] = {q: [] for q in cs.a_indices}
    constant = []
    for term in terms_of(H0):
        owners = {a.index for a in term.atoms if a.role in (Role.COORD, Role.MOMENTUM, Role.PI)}
        if owners & mu_set:
            raise NonSeparableError("Hamiltonian depends on a constrained coordinate", term)
        if len(owners) > 1:
            raise NonSeparableError("term couples two sectors", term)
        if not owners:
            constant.append(term)
        else:
            groups[owners.pop()].append(term)
    if constant and not cs.a_indices:
        raise NonSeparableError("no dynamical sector", H0)
    if constant:
        first = cs.a_indices[0]
        groups[first].extend(constant)

    sectors = tuple(_decompose_sector(q, add(*groups[q]), ps.sector(q)) for q in cs.a_indices)
    integrals = tuple(s.table_integral() for s in sectors)
    time_part = neg(mul(add(*(s.Ep for s in sectors)), Atom(TIME)))

    mu_parts = {}
    for m in cs.mu_indices:
        pieces = []
        for c in (x for x in cs.constraints if x.coord == m):
            var = coord(m, 0) if c.kind == "p" else coord(m, 1)
            if c.rest.atoms - {var}:
                raise NonSeparableError(f"{c.label} depends on more than {var.name}", c.function)
            try:
                pieces.append(integrate_polynomial(neg(c.rest), var))
            except NotPolynomialError:
                raise NonSeparableError(f"{c.label} is not polynomial in {var.name}",
                                        c.function) from None
        mu_parts[m] = (pieces[0], pieces[1])

    hj = HJSolution(cs, sectors, integrals, time_part, tuple(s.W() for s in sectors), mu_parts)
    return hj


# ---------------------------------------------------------------- trajectories

SAMPLE_CONSTANTS = {"E": 1.0, "Ep": 1.0, "eta": 0.0, "lam": 0.0}


@dataclass(frozen=True)
class Trajectory:
    hj: HJSolution
    coords: dict[AtomId, Expr]
    momenta: dict[AtomId, Expr]
    parameters: tuple[AtomId, ...]
    branches: dict[str, int] = field(default_factory=dict)

    @property
    def constant_atoms(self) -> list[AtomId]:
        out = []
        for s in self.hj.sectors:
            out += [s.E.id, s.Ep.id, s.eta.id, s.lam.id]
        return out

    def check_constants(self, values: Mapping[AtomId, float]) -> None:
        for s in self.hj.sectors:
            s.check_constants(values[s.E.id], values[s.Ep.id])

    def state_at(self, t: float, constants: Mapping[AtomId, float],
                 params: Mapping[AtomId, float] | None = None) -> dict[AtomId, float]:
        self.check_constants(constants)
        env = {**constants, **(params or {}), TIME: t}
        return {a: eval_numeric(e, env) for a, e in {**self.coords, **self.momenta}.items()}

    def constants_from_state(self, state: Mapping[AtomId, float], t0: float) -> dict[AtomId, float]:
        """Recover E, Ep, eta, lambda per sector from a phase-space point at t0."""
        out: dict[AtomId, float] = {}
        for s in self.hj.sectors:
            needed = [s.y.id, s.x.id, mom_p(s.coord), mom_pi(s.coord)]
            if any(a not in state for a in needed):
                raise InversionError(f"constants unsolvable: state lacks sector {s.coord}")
            y, x = state[s.y.id], state[s.x.id]
            p, pi = state[mom_p(s.coord)], state[mom_pi(s.coord)]
            E = float(s.gamma) * p + float(s.delta) * y + float(s.eps)
            Ep = 0.5 * pi * pi + E * x + float(s.v2) * x * x + float(s.v0)
            s.check_constants(E, Ep)
            sign = self.branches.get(s.coord, 1)
            if s.family == "affine":
                sv = -pi / E
                G = E * sv**3 / 6 - (Ep - float(s.v0)) / E * sv
            else:
                m = float(s.m)
                omega = math.sqrt(m)
                K = 2 * (Ep - float(s.v0)) + E * E / m
                u = x + E / m
                sv = math.atan2(omega * u / math.sqrt(K), sign * pi / math.sqrt(K)) / omega
                G = pi / m + (E / m) * sv
            out[s.E.id], out[s.Ep.id] = E, Ep
            out[s.eta.id] = sv - t0
            out[s.lam.id] = y / float(s.gamma) + G
        return out


def _numeric_slope(e: Expr, env: dict, t: float, h: float = 1e-6) -> float:
    return (eval_numeric(e, {**env, TIME: t + h}) - eval_numeric(e, {**env, TIME: t - h})) / (2 * h)


def derive_trajectories(hj: HJSolution) -> Trajectory:
    coords: dict[AtomId, Expr] = {}
    momenta: dict[AtomId, Expr] = {}
    branches: dict[str, int] = {}
    for s in hj.sectors:
        x_path = s.velocity_path()
        cand = s.pi_candidate()
        env = {s.E.id: SAMPLE_CONSTANTS["E"], s.Ep.id: SAMPLE_CONSTANTS["Ep"],
               s.eta.id: SAMPLE_CONSTANTS["eta"], s.lam.id: SAMPLE_CONSTANTS["lam"]}
        s.check_constants(env[s.E.id], env[s.Ep.id])
        # dD1/dt = pi decides the sign of the square root
        t_probe = 0.1 - env[s.eta.id]
        slope = _numeric_slope(x_path, env, t_probe)
        val = eval_numeric(cand, {**env, TIME: t_probe})
        if abs(slope - val) <= 1e-6 * max(1.0, abs(val)):
            sign = 1
        elif abs(slope + val) <= 1e-6 * max(1.0, abs(val)):
            sign = -1
        else:
            raise InversionError(f"no square-root branch of sector {s.coord} satisfies dD1/dt = pi")
        branches[s.coord] = sign
        pi_path = mul(_c(sign), cand)
        y_path = mul(_c(s.gamma), add(s.lam, neg(s.dE_path(pi_path))))
        coords[s.x.id] = x_path
        coords[s.y.id] = y_path
        momenta[mom_p(s.coord)] = s.momentum_of(y_path)
        momenta[mom_pi(s.coord)] = pi_path
    params = []
    for c in hj.cs.constraints:
        momenta[c.momentum] = neg(c.rest)
        params.extend(a for a in c.rest.atoms if a not in params)
    for m in hj.cs.mu_indices:
        for lvl in (0, 1):
            if coord(m, lvl) not in params:
                params.append(coord(m, lvl))
    return Trajectory(hj, coords, momenta, tuple(params), branches)
