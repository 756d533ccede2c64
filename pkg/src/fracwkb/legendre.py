"""Singularity analysis and passage to phase space.

Supported class: Lagrangians quadratic in the level-2 atoms with a constant
Hessian, whose constraints come out free of momenta once rearranged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .model import LagrangianSystem, PhaseSpace, shift_time_derivative
from .symexpr import (
    HBAR, ZERO, Atom, AtomId, Const, Expr, Role, add, coord, differentiate,
    mom_p, mom_pi, mul, neg, substitute,
)
from .symexpr.atoms import MOMENTUM_ROLES


class UnsupportedStructureError(ValueError):
    """The system falls outside the class the engine handles."""

    def __init__(self, message: str, offending: Expr | None = None):
        self.offending = offending
        if offending is not None:
            message = f"{message}: {offending}"
        super().__init__(message)


Matrix = list[list[Fraction]]


def _rank(rows: Matrix) -> int:
    m = [list(r) for r in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col] / m[rank][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[rank])]
        rank += 1
    return rank


def _inverse(a: Matrix) -> Matrix:
    n = len(a)
    m = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(a)]
    for col in range(n):
        pivot = next((i for i in range(col, n) if m[i][col] != 0), None)
        if pivot is None:
            raise UnsupportedStructureError("acceleration system is not solvable")
        m[col], m[pivot] = m[pivot], m[col]
        piv = m[col][col]
        m[col] = [x / piv for x in m[col]]
        for i in range(n):
            if i != col and m[i][col] != 0:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[col])]
    return [r[n:] for r in m]


@dataclass(frozen=True)
class HessianReport:
    matrix: tuple[tuple[Expr, ...], ...]
    rank: int
    a_indices: tuple[str, ...]
    mu_indices: tuple[str, ...]

    @property
    def regular(self) -> bool:
        return not self.mu_indices

    def rational(self) -> Matrix:
        return [[c.value for c in row] for row in self.matrix]


def hessian_and_rank(sys: LagrangianSystem) -> HessianReport:
    coords = sys.coords
    L = sys.lagrangian
    accel = [coord(q, 2) for q in coords]
    first = [differentiate(L, a) for a in accel]
    matrix = tuple(tuple(differentiate(first[i], accel[j]) for j in range(len(coords)))
                   for i in range(len(coords)))
    for row in matrix:
        for w in row:
            if not isinstance(w, Const):
                raise UnsupportedStructureError("non-constant Hessian entry", w)
    rows = [[w.value for w in row] for row in matrix]
    rank = _rank(rows)
    # greedy pass gives the lexicographically smallest full-rank index set
    chosen: list[int] = []
    for i in range(len(coords)):
        if _rank([rows[j] for j in chosen + [i]]) > len(chosen):
            chosen.append(i)
    a_idx = tuple(coords[i] for i in chosen)
    mu_idx = tuple(q for q in coords if q not in a_idx)
    return HessianReport(matrix, rank, a_idx, mu_idx)


@dataclass(frozen=True)
class Constraint:
    """``kind`` is ``"p"`` or ``"pi"``; the function is ``momentum + rest``."""

    coord: str
    kind: str
    function: Expr
    rest: Expr  # H^p_mu or H^pi_mu: the constraint reads momentum + rest = 0
    index: int = 0  # 1-based sector number used in labels

    @property
    def momentum(self) -> AtomId:
        return mom_p(self.coord) if self.kind == "p" else mom_pi(self.coord)

    @property
    def label(self) -> str:
        return f"H'{self.index}^{self.kind}"


@dataclass(frozen=True)
class CanonicalSystem:
    system: LagrangianSystem
    hessian: HessianReport
    accelerations: dict[str, Expr]
    onshell_p: dict[str, Expr]
    onshell_pi: dict[str, Expr]
    constraints: tuple[Constraint, ...]
    hamiltonian: Expr
    notes: tuple[str, ...] = field(default=())

    @property
    def phase_space(self) -> PhaseSpace:
        return self.system.phase_space

    @property
    def a_indices(self) -> tuple[str, ...]:
        return self.hessian.a_indices

    @property
    def mu_indices(self) -> tuple[str, ...]:
        return self.hessian.mu_indices

    @property
    def extended_hamiltonian(self) -> Expr:
        """H'0 = p0 + H0."""
        from .symexpr import P0

        return add(Atom(P0), self.hamiltonian)

    def constraint_surface(self) -> dict[AtomId, Expr]:
        """Substitution placing the momenta of the mu-sector on the constraints."""
        return {c.momentum: neg(c.rest) for c in self.constraints}


def _check_free(e: Expr, what: str, forbid_momenta: bool = True):
    for a in e.atoms:
        if a.role == Role.COORD and a.level >= 2:
            raise UnsupportedStructureError(f"{what} still contains {a.name}", e)
        if forbid_momenta and a.role in MOMENTUM_ROLES:
            raise UnsupportedStructureError(f"{what} contains momenta", e)


def legendre_transform(sys: LagrangianSystem, h: HessianReport | None = None) -> CanonicalSystem:
    if h is None:
        h = hessian_and_rank(sys)
    coords = sys.coords
    L = sys.lagrangian
    a_idx, mu_idx = h.a_indices, h.mu_indices
    pos = {q: i for i, q in enumerate(coords)}
    W = h.rational()
    accel = {q: coord(q, 2) for q in coords}
    zero_accel = {accel[q]: ZERO for q in coords}

    # pi_a = sum_j W_aj D2_j + g_a  ->  D2_a = w_a
    dL_dacc = {q: differentiate(L, accel[q]) for q in coords}
    rhs = {}
    for a in a_idx:
        g = substitute(dL_dacc[a], zero_accel)
        parts = [Atom(mom_pi(a)), neg(g)]
        for m in mu_idx:
            wam = W[pos[a]][pos[m]]
            if wam:
                parts.append(mul(Const(-wam), Atom(accel[m])))
        rhs[a] = add(*parts)
    inv = _inverse([[W[pos[a]][pos[b]] for b in a_idx] for a in a_idx]) if a_idx else []
    w = {}
    for i, a in enumerate(a_idx):
        w[a] = add(*(mul(Const(inv[i][j]), rhs[b]) for j, b in enumerate(a_idx)))
    on_a = {accel[a]: w[a] for a in a_idx}

    constraints = []
    hp_rest: dict[str, Expr] = {}
    hpi_rest: dict[str, Expr] = {}
    for m in mu_idx:
        pi_val = substitute(dL_dacc[m], on_a)
        _check_free(pi_val, f"pi[{m}] constraint")
        p_val = add(differentiate(L, coord(m, 1)), neg(shift_time_derivative(dL_dacc[m])))
        p_val = substitute(p_val, on_a)
        _check_free(p_val, f"p[{m}] constraint")
        hp_rest[m] = neg(p_val)
        hpi_rest[m] = neg(pi_val)
        k = sys.phase_space.sector(m)
        constraints.append(Constraint(m, "p", add(Atom(mom_p(m)), hp_rest[m]), hp_rest[m], k))
        constraints.append(Constraint(m, "pi", add(Atom(mom_pi(m)), hpi_rest[m]), hpi_rest[m], k))

    onshell_p = {}
    onshell_pi = {}
    for q in coords:
        onshell_p[q] = add(differentiate(L, coord(q, 1)), neg(shift_time_derivative(dL_dacc[q])))
        onshell_pi[q] = dL_dacc[q]

    parts = [neg(L)]
    for a in a_idx:
        parts.append(mul(Atom(mom_p(a)), Atom(coord(a, 1))))
        parts.append(mul(Atom(mom_pi(a)), Atom(accel[a])))
    for m in mu_idx:
        parts.append(neg(mul(Atom(coord(m, 1)), hp_rest[m])))
        parts.append(neg(mul(Atom(accel[m]), hpi_rest[m])))
    H0 = substitute(add(*parts), on_a)
    for a in H0.atoms:
        if (a.role == Role.COORD and a.level >= 2) or a == HBAR:
            raise UnsupportedStructureError(f"Hamiltonian is not free of {a.name}", H0)
        if a.role in (Role.MOMENTUM, Role.PI) and a.index in mu_idx:
            raise UnsupportedStructureError(f"Hamiltonian contains {a.name}", H0)

    return CanonicalSystem(
        system=sys, hessian=h, accelerations=w, onshell_p=onshell_p,
        onshell_pi=onshell_pi, constraints=tuple(constraints), hamiltonian=H0,
    )


def poisson_bracket(a: Expr, b: Expr, ps: PhaseSpace) -> Expr:
    for e in (a, b):
        for at in e.atoms:
            if at.role == Role.COORD and at.level >= 2:
                raise ValueError(f"{at.name} is not a phase-space variable")
    parts = []
    for x, px in ps.canonical_pairs():
        da_x, db_p = differentiate(a, x), differentiate(b, px)
        da_p, db_x = differentiate(a, px), differentiate(b, x)
        parts.append(mul(da_x, db_p))
        parts.append(neg(mul(da_p, db_x)))
    return add(*parts)


@dataclass(frozen=True)
class BracketEntry:
    left: str
    right: str
    value: Expr
    on_surface: Expr


@dataclass(frozen=True)
class ConstraintClassification:
    brackets: tuple[BracketEntry, ...]
    first_class: bool
    integrable: bool

    @property
    def verdict(self) -> str:
        if not self.brackets:
            return "no constraints; integrable"
        cls = "first-class" if self.first_class else "not first-class"
        integ = "integrable" if self.integrable else "not integrable"
        return f"{cls}; {integ}"


def classify_and_check_integrability(cs: CanonicalSystem) -> ConstraintClassification:
    from .symexpr import TIME

    ps = cs.phase_space
    surface = cs.constraint_surface()
    funcs = [("H'0", cs.hamiltonian)] + [(c.label, c.function) for c in cs.constraints]
    entries = []
    for i in range(len(funcs)):
        for j in range(i + 1, len(funcs)):
            (ln, lf), (rn, rf) = funcs[i], funcs[j]
            value = poisson_bracket(rf, lf, ps) if i == 0 else poisson_bracket(lf, rf, ps)
            if i == 0:
                ln, rn = rn, ln
            entries.append(BracketEntry(ln, rn, value, substitute(value, surface)))
    first_class = all(e.on_surface.is_zero() for e in entries)
    # dC/dt = {C, H0} + dC/dt|explicit must vanish on the surface
    integrable = first_class and all(
        substitute(differentiate(c.function, TIME), surface).is_zero() for c in cs.constraints
    )
    return ConstraintClassification(tuple(entries), first_class, integrable)
