"""Reader for system description files.

::

    # comment
    coords: q1 q2 q3
    L: 1/2*(D2[q1]^2 + D2[q2]^2) + D1[q3]*D2[q3]
    perturb: D1[q1]^3          (optional, added to S; test hook)

    [constants]                (optional; defaults E = Ep = 1, eta = lam = 0)
    E[1] = 1
    Ep[1] = 3/2

    [run]                      (optional; defaults t0 = 0, t1 = 10, h = 1/1000)
    t0 = 0
    t1 = 10
    h = 1/1000
    D0[q3] = sin(t)            (constrained coordinates as functions of t)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .symexpr import (
    TIME, Atom, AtomId, Expr, ParseError, Role, eval_numeric, parse,
)

DEFAULT_CONSTANTS = {Role.E: 1.0, Role.EP: 1.0, Role.ETA: 0.0, Role.LAMBDA: 0.0}
CONSTANT_ROLES = tuple(DEFAULT_CONSTANTS)


class SystemFileError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1, path: str = "<system>"):
        self.line, self.column, self.path = line, column, path
        super().__init__(f"{path}:{line}:{column}: {message}")


@dataclass(frozen=True)
class RunBlock:
    t0: float = 0.0
    t1: float = 10.0
    h: float = 1e-3
    params: dict[AtomId, Expr] = field(default_factory=dict)


@dataclass(frozen=True)
class SystemFile:
    path: str
    coords: tuple[str, ...]
    lagrangian: Expr
    perturbation: Expr | None = None
    constants: dict[AtomId, float] = field(default_factory=dict)
    run: RunBlock = field(default_factory=RunBlock)

    def constant_values(self, atoms) -> dict[AtomId, float]:
        """Values for the given constant atoms, falling back to the defaults."""
        return {a: self.constants.get(a, DEFAULT_CONSTANTS[a.role]) for a in atoms}


def _number(text: str, where) -> float:
    try:
        return float(text)
    except ValueError:
        pass
    e = _expr(text, where)
    if e.atoms:
        raise SystemFileError("expected a number", *where)
    return eval_numeric(e, {})


def _expr(text: str, where) -> Expr:
    line, col, path = where
    try:
        return parse(text)
    except ParseError as exc:
        # shift the column to the position inside the file line
        raise SystemFileError(exc.message, line + exc.line - 1,
                              col + exc.column - 1, path) from None


def parse_system_text(text: str, path: str = "<system>") -> SystemFile:
    coords = lagrangian = perturb = None
    constants: dict[AtomId, float] = {}
    run = {"t0": 0.0, "t1": 10.0, "h": 1e-3}
    params: dict[AtomId, Expr] = {}
    section = None
    seen = set()
    pending_constants = []

    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        indent = len(stripped) - len(stripped.lstrip())
        body = stripped.strip()
        if body.startswith("["):
            if body not in ("[constants]", "[run]"):
                raise SystemFileError(f"unknown section {body}", lineno, indent + 1, path)
            section = body[1:-1]
            continue
        if section is None:
            key, sep, value = body.partition(":")
            if not sep:
                raise SystemFileError("expected 'key: value'", lineno, indent + 1, path)
            key = key.strip()
            vcol = indent + len(body) - len(value.lstrip()) + 1
            if key in seen:
                raise SystemFileError(f"duplicate '{key}' line", lineno, indent + 1, path)
            seen.add(key)
            if key == "coords":
                coords = tuple(value.split())
                if not coords:
                    raise SystemFileError("no coordinates declared", lineno, vcol, path)
            elif key == "L":
                lagrangian = _expr(value.strip(), (lineno, vcol, path))
            elif key == "perturb":
                perturb = _expr(value.strip(), (lineno, vcol, path))
            else:
                raise SystemFileError(f"unknown key '{key}'", lineno, indent + 1, path)
            continue
        lhs, sep, rhs = body.partition("=")
        if not sep:
            raise SystemFileError("expected 'name = value'", lineno, indent + 1, path)
        lhs = lhs.strip()
        vcol = indent + len(body) - len(rhs.lstrip()) + 1
        where = (lineno, vcol, path)
        if section == "run" and lhs in run:
            run[lhs] = _number(rhs.strip(), where)
            continue
        target = _expr(lhs, (lineno, indent + 1, path))
        if not isinstance(target, Atom):
            raise SystemFileError(f"cannot assign to '{lhs}'", lineno, indent + 1, path)
        a = target.id
        if section == "constants":
            if a.role not in CONSTANT_ROLES:
                raise SystemFileError(f"{a.name} is not an integration constant",
                                      lineno, indent + 1, path)
            constants[a] = _number(rhs.strip(), where)
            pending_constants.append((a, lineno, indent + 1))
        else:
            if a.role != Role.COORD or a.level > 1:
                raise SystemFileError(f"{a.name} cannot be prescribed in [run]",
                                      lineno, indent + 1, path)
            e = _expr(rhs.strip(), where)
            if e.atoms - {TIME}:
                raise SystemFileError("parameter functions may depend on t only",
                                      lineno, vcol, path)
            params[a] = e

    if coords is None:
        raise SystemFileError("missing 'coords:' line", 1, 1, path)
    if lagrangian is None:
        raise SystemFileError("missing 'L:' line", 1, 1, path)
    for a, ln, col in pending_constants:
        if not 1 <= a.index <= len(coords):
            raise SystemFileError(f"{a.name} refers to an undeclared sector", ln, col, path)
    for a in params:
        if a.index not in coords:
            raise SystemFileError(f"{a.name} refers to an undeclared coordinate", 1, 1, path)
    return SystemFile(path, coords, lagrangian, perturb, constants,
                      RunBlock(run["t0"], run["t1"], run["h"], params))


def read_system_file(path) -> SystemFile:
    p = Path(path)
    return parse_system_text(p.read_text(), str(path))
