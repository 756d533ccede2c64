"""Derivative-chain phase space and the chain-shift time derivative.

Each coordinate ``q`` carries the chain ``D0[q] -> D1[q] -> D2[q] -> D3[q]``
standing for ``D^(alpha-1) q, D^alpha q, D^(2 alpha) q, D^(3 alpha) q``.  With
integer-order reduction the total time derivative moves one step along the
chain, so ``alpha`` is only a label here and no fractional integral is ever
evaluated.  Which range of ``alpha`` is admissible is left open upstream;
nothing in this package depends on that choice.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .symexpr import (
    TIME, Atom, AtomId, Expr, Role, add, coord, differentiate, mom_p, mom_pi, mul, parse,
)
from .symexpr.atoms import MOMENTUM_ROLES


class ModelError(ValueError):
    """A Lagrangian system that violates the model's invariants."""


@dataclass(frozen=True)
class PhaseSpace:
    coords: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.coords)) != len(self.coords):
            raise ModelError(f"coordinate names must be distinct: {self.coords}")
        if not self.coords:
            raise ModelError("at least one coordinate is required")

    @property
    def n(self) -> int:
        return len(self.coords)

    def sector(self, name: str) -> int:
        """1-based position of a coordinate; indexes its integration constants."""
        return self.coords.index(name) + 1

    def level(self, name: str, k: int) -> AtomId:
        return coord(name, k)

    def p(self, name: str) -> AtomId:
        return mom_p(name)

    def pi(self, name: str) -> AtomId:
        return mom_pi(name)

    def canonical_pairs(self) -> list[tuple[AtomId, AtomId]]:
        """(coordinate, conjugate momentum) pairs spanning the bracket."""
        pairs = []
        for q in self.coords:
            pairs.append((coord(q, 0), mom_p(q)))
            pairs.append((coord(q, 1), mom_pi(q)))
        return pairs


@dataclass(frozen=True)
class LagrangianSystem:
    phase_space: PhaseSpace
    lagrangian: Expr

    @property
    def coords(self) -> tuple[str, ...]:
        return self.phase_space.coords


def validate_lagrangian(ps: PhaseSpace, L: Expr) -> None:
    for a in sorted(L.atoms):
        if a.role in MOMENTUM_ROLES:
            raise ModelError(f"momenta are not allowed in the Lagrangian: {a.name}")
        if a.role == Role.COORD:
            if a.index not in ps.coords:
                raise ModelError(f"unknown coordinate {a.index!r} in {a.name}")
            if a.level > 2:
                raise ModelError(f"level-3 atom {a.name} is not allowed in the Lagrangian")
        elif a.role != Role.TIME:
            raise ModelError(f"{a.name} is not allowed in the Lagrangian")


def build_system(coords: Sequence[str], lagrangian_source: str | Expr) -> LagrangianSystem:
    ps = PhaseSpace(tuple(coords))
    L = parse(lagrangian_source) if isinstance(lagrangian_source, str) else lagrangian_source
    validate_lagrangian(ps, L)
    return LagrangianSystem(ps, L)


def shift_time_derivative(e: Expr) -> Expr:
    """Total time derivative on configuration-space expressions.

    ``d/dt D_k[q] = D_{k+1}[q]`` and ``dt/dt = 1``; the result may contain
    level-3 atoms.
    """
    terms = []
    for a in sorted(e.atoms):
        if a.role in MOMENTUM_ROLES:
            raise ModelError(f"time shift is defined on configuration space only; found {a.name}")
        if a.role == Role.COORD:
            if a.level >= 3:
                raise ModelError(f"cannot shift {a.name} beyond level 3")
            terms.append(mul(differentiate(e, a), Atom(coord(a.index, a.level + 1))))
        elif a.role == Role.TIME:
            terms.append(differentiate(e, TIME))
    return add(*terms)
