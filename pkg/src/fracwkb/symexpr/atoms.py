"""Atom identities for the expression trees.

Every named quantity (phase variable, integration constant, time, hbar) is an
``AtomId``.  Atoms are compared by the triple ``(role, index, level)``, and
that triple also fixes their position in canonical sums and products.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Union

Index = Union[str, int]


class Role(IntEnum):
    # Declaration order is the canonical order of atoms inside products.
    P0 = 0
    MOMENTUM = 1
    PI = 2
    COORD = 3
    E = 4
    EP = 5
    ETA = 6
    LAMBDA = 7
    CONST_A = 8
    TIME = 9
    HBAR = 10


MAX_LEVEL = 3

# roles whose index is a coordinate name rather than a sector number
NAMED_ROLES = frozenset({Role.MOMENTUM, Role.PI, Role.COORD})
CONSTANT_ROLES = frozenset({Role.E, Role.EP, Role.ETA, Role.LAMBDA, Role.CONST_A})
MOMENTUM_ROLES = frozenset({Role.P0, Role.MOMENTUM, Role.PI})

_INDEXED_PREFIX = {Role.E: "E", Role.EP: "Ep", Role.ETA: "eta", Role.LAMBDA: "lam"}
_BARE_NAME = {Role.P0: "p0", Role.TIME: "t", Role.CONST_A: "A", Role.HBAR: "hbar"}


@dataclass(frozen=True, order=True)
class AtomId:
    role: Role
    index: Index = 0
    level: int = 0

    def __post_init__(self):
        if self.role in NAMED_ROLES:
            if not isinstance(self.index, str) or not self.index:
                raise ValueError(f"{self.role.name} atom needs a coordinate name")
        elif not isinstance(self.index, int):
            raise ValueError(f"{self.role.name} atom needs an integer index")
        if self.role == Role.COORD:
            if not 0 <= self.level <= MAX_LEVEL:
                raise ValueError(f"chain level {self.level} outside 0..{MAX_LEVEL}")
        elif self.level != 0:
            raise ValueError("only coordinate atoms carry a chain level")

    @property
    def name(self) -> str:
        if self.role == Role.COORD:
            return f"D{self.level}[{self.index}]"
        if self.role == Role.MOMENTUM:
            return f"p[{self.index}]"
        if self.role == Role.PI:
            return f"pi[{self.index}]"
        if self.role in _INDEXED_PREFIX:
            return f"{_INDEXED_PREFIX[self.role]}[{self.index}]"
        return _BARE_NAME[self.role]

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"AtomId({self.name})"


def coord(name: str, level: int) -> AtomId:
    return AtomId(Role.COORD, name, level)


def mom_p(name: str) -> AtomId:
    return AtomId(Role.MOMENTUM, name)


def mom_pi(name: str) -> AtomId:
    return AtomId(Role.PI, name)


def const_E(i: int) -> AtomId:
    return AtomId(Role.E, i)


def const_Ep(i: int) -> AtomId:
    return AtomId(Role.EP, i)


def const_eta(i: int) -> AtomId:
    return AtomId(Role.ETA, i)


def const_lam(i: int) -> AtomId:
    return AtomId(Role.LAMBDA, i)


TIME = AtomId(Role.TIME)
HBAR = AtomId(Role.HBAR)
P0 = AtomId(Role.P0)
CONST_A = AtomId(Role.CONST_A)
