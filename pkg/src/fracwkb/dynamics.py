"""Total-differential equations of motion and a fixed-step RK4 check.

The rates come straight from partial derivatives of ``H'0`` and the
constraint functions.  Constrained coordinates are not evolved: the caller
supplies them as functions of ``t`` (frozen at their initial values by
default) and their time derivatives drive the constraint terms.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .hjsolve import InversionError, Trajectory
from .legendre import CanonicalSystem
from .symexpr import (
    TIME, Add, AtomId, Const, DomainError, Expr, add, compile_exprs, coord, differentiate,
    mom_p, mom_pi, mul, substitute,
)


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EomSystem:
    """``dX = dt_part[X]*dt + sum_m mu_part[X][m]*dm`` for every evolving atom."""

    cs: CanonicalSystem
    state: tuple[AtomId, ...]
    dt_part: dict[AtomId, Expr]
    mu_part: dict[AtomId, dict[AtomId, Expr]]
    mu_coords: tuple[AtomId, ...]

    def render(self) -> list[str]:
        lines = []
        for x in self.state:
            pieces = []
            if not self.dt_part[x].is_zero() or not self.mu_part[x]:
                pieces.append(_times(self.dt_part[x], "dt"))
            for m, c in self.mu_part[x].items():
                pieces.append(_times(c, f"d{m.name}"))
            lines.append(f"d{x.name} = " + " + ".join(pieces))
        return lines

    def rates(self, params: Mapping[AtomId, Expr]) -> dict[AtomId, Expr]:
        """dX/dt with the constrained coordinates replaced by functions of t."""
        rate_of = {m: differentiate(params[m], TIME) for m in self.mu_coords}
        out = {}
        for x in self.state:
            r = add(self.dt_part[x], *(mul(c, rate_of[m]) for m, c in self.mu_part[x].items()))
            out[x] = substitute(r, params)
        return out


def _times(c: Expr, d: str) -> str:
    if c == Const(1):
        return d
    text = str(c)
    return f"({text})*{d}" if isinstance(c, Add) else f"{text}*{d}"


def derive_eom(cs: CanonicalSystem) -> EomSystem:
    Hp = cs.extended_hamiltonian
    mu_coords = tuple(coord(m, k) for m in cs.mu_indices for k in (0, 1))
    gen = {}
    for c in cs.constraints:
        gen[coord(c.coord, 0 if c.kind == "p" else 1)] = c.function

    state: list[AtomId] = []
    for q in cs.phase_space.coords:
        if q in cs.a_indices:
            state += [coord(q, 0), coord(q, 1)]
        state += [mom_p(q), mom_pi(q)]

    # the conjugate partner and the sign of each rate
    partner = {}
    for a in cs.a_indices:
        partner[coord(a, 0)] = (mom_p(a), 1)
        partner[coord(a, 1)] = (mom_pi(a), 1)
    for q in cs.phase_space.coords:
        partner[mom_p(q)] = (coord(q, 0), -1)
        partner[mom_pi(q)] = (coord(q, 1), -1)

    dt_part, mu_part = {}, {}
    for x in state:
        v, sign = partner[x]
        dt_part[x] = mul(Const(sign), differentiate(Hp, v))
        mu_part[x] = {}
        for m, f in gen.items():
            c = mul(Const(sign), differentiate(f, v))
            if not c.is_zero():
                mu_part[x][m] = c
    return EomSystem(cs, tuple(state), dt_part, mu_part, mu_coords)


@dataclass(frozen=True)
class RunSpec:
    initial: dict[AtomId, float]
    t0: float = 0.0
    t1: float = 10.0
    h: float = 1e-3
    params: dict[AtomId, Expr] = field(default_factory=dict)

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step h must be positive")
        if self.t1 < self.t0:
            raise ValueError("t1 must not precede t0")

    @property
    def steps(self) -> int:
        return int(round((self.t1 - self.t0) / self.h))


@dataclass(frozen=True)
class NumericRun:
    eom: EomSystem
    spec: RunSpec
    params: dict[AtomId, Expr]
    times: np.ndarray
    states: np.ndarray  # one row per time, columns follow eom.state

    def column(self, a: AtomId) -> np.ndarray:
        return self.states[:, self.eom.state.index(a)]

    def initial_state(self) -> dict[AtomId, float]:
        out = dict(zip(self.eom.state, self.states[0].tolist()))
        for m, e in self.params.items():
            out[m] = _eval_t(e, self.times[0])
        return out

    def param_values(self) -> dict[AtomId, np.ndarray]:
        out = {}
        for m, e in self.params.items():
            f = compile_exprs([e], [TIME])
            out[m] = np.array([f(t)[0] for t in self.times])
        return out

    def along(self, e: Expr) -> np.ndarray:
        """Values of a phase-space expression at every recorded step."""
        atoms = [TIME, *self.eom.state, *self.params]
        f = compile_exprs([e], atoms)
        pv = self.param_values()
        cols = [self.times] + [self.states[:, i] for i in range(len(self.eom.state))]
        cols += [pv[m] for m in self.params]
        return np.array([f(*row)[0] for row in zip(*cols)])

    def hamiltonian_drift(self) -> float:
        H = self.along(self.eom.cs.hamiltonian)
        return float(np.max(np.abs(H - H[0])))

    def constraint_values(self) -> dict[str, float]:
        return {c.label: float(np.max(np.abs(self.along(c.function))))
                for c in self.eom.cs.constraints}

    def write_csv(self, path) -> None:
        cols = []
        for q in self.eom.cs.phase_space.coords:
            cols += [coord(q, 0), coord(q, 1), mom_p(q), mom_pi(q)]
        pv = self.param_values()
        data = []
        for a in cols:
            data.append(pv[a] if a in pv else self.column(a))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [a.name for a in cols])
            for i, t in enumerate(self.times):
                w.writerow([f"{t:.17g}"] + [f"{d[i]:.17g}" for d in data])


def _eval_t(e: Expr, t: float) -> float:
    return compile_exprs([e], [TIME])(t)[0]


def default_params(eom: EomSystem, initial: Mapping[AtomId, float]) -> dict[AtomId, Expr]:
    out = {}
    for m in eom.mu_coords:
        if m not in initial:
            raise ValueError(f"initial state lacks {m.name}")
        out[m] = Const(Fraction(initial[m]))
    return out


def integrate(eom: EomSystem, spec: RunSpec) -> NumericRun:
    params = {**default_params(eom, {**spec.initial, **{m: 0.0 for m in spec.params}}),
              **spec.params}
    missing = [a.name for a in eom.state if a not in spec.initial]
    if missing:
        raise ValueError(f"initial state lacks {', '.join(missing)}")
    rates = eom.rates(params)
    f = compile_exprs([rates[x] for x in eom.state], [TIME, *eom.state])
    n, h = spec.steps, spec.h
    y = [float(spec.initial[x]) for x in eom.state]
    out = np.empty((n + 1, len(y)))
    out[0] = y
    times = spec.t0 + h * np.arange(n + 1)
    t = spec.t0
    try:
        for k in range(n):
            t = float(times[k])
            k1 = f(t, *y)
            k2 = f(t + h / 2, *(a + h / 2 * b for a, b in zip(y, k1)))
            k3 = f(t + h / 2, *(a + h / 2 * b for a, b in zip(y, k2)))
            k4 = f(t + h, *(a + h * b for a, b in zip(y, k3)))
            y = [a + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
                 for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]
            out[k + 1] = y
    except DomainError as exc:
        raise IntegrationError(f"domain error at t = {t!r}: {exc}") from exc
    return NumericRun(eom, spec, params, times, out)


@dataclass(frozen=True)
class ComparisonReport:
    deviations: dict[str, float]
    tol: float
    constants: dict[AtomId, float]

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tol


def initial_state_from_trajectory(traj: Trajectory, constants: Mapping[AtomId, float],
                                  t0: float = 0.0,
                                  params: Mapping[AtomId, float] | None = None) -> dict[AtomId, float]:
    """Phase-space point of the closed-form motion at t0.

    Constrained coordinates take ``params`` (zero by default), which also
    places their momenta on the constraint surface.
    """
    pv = {a: 0.0 for a in traj.parameters}
    pv.update(params or {})
    state = traj.state_at(t0, constants, pv)
    state.update(pv)
    return state


def compare(run: NumericRun, traj: Trajectory, tol: float = 1e-6) -> ComparisonReport:
    init = run.initial_state()
    constants = traj.constants_from_state(init, float(run.times[0]))
    closed = {**traj.coords, **traj.momenta}
    tracked = [a for a in run.eom.state if a in closed]
    if len(tracked) != len(run.eom.state):
        raise InversionError("constants unsolvable: run and trajectory describe different systems")
    cons = list(constants)
    params = list(run.params)
    f = compile_exprs([closed[a] for a in tracked], [TIME, *cons, *params])
    pv = run.param_values()
    cvals = [constants[c] for c in cons]
    ref = np.array([f(t, *cvals, *(pv[m][i] for m in params))
                    for i, t in enumerate(run.times)])
    dev = {a.name: float(np.max(np.abs(ref[:, j] - run.column(a))))
           for j, a in enumerate(tracked)}
    return ComparisonReport(dev, tol, constants)


__all__ = [
    "EomSystem", "IntegrationError", "RunSpec", "NumericRun", "ComparisonReport",
    "derive_eom", "integrate", "compare", "default_params", "initial_state_from_trajectory",
]
