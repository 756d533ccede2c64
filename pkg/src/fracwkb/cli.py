"""Command-line front end: analyze | solve | verify | quantize.

Each command reads a system file, runs the pipeline up to its stage and
prints a plain-text report.  Exit codes: 0 success, 2 parse error,
3 unsupported structure, 4 verification failure, 5 quantization inconsistency.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

from .dynamics import (
    IntegrationError, RunSpec, compare, derive_eom, initial_state_from_trajectory, integrate,
)
from .hjsolve import (
    DegenerateConstantError, InversionError, build_hjpdes, derive_trajectories, solve_separable,
)
from .legendre import (
    UnsupportedStructureError, classify_and_check_integrability, legendre_transform,
)
from .model import ModelError, build_system
from .symexpr import TIME, Atom, Const, ParseError, add, eval_numeric, mul, sin
from .sysfile import SystemFile, SystemFileError, read_system_file
from .wkb import AmplitudeError, QuantizationError, build_wave_function, verify_quantization

EXIT_OK, EXIT_PARSE, EXIT_UNSUPPORTED, EXIT_VERIFY, EXIT_QUANT = 0, 2, 3, 4, 5


@dataclass
class Report:
    command: str
    sf: SystemFile
    lines: list[str] = field(default_factory=list)
    status: int = EXIT_OK

    def __post_init__(self):
        self.lines += [f"# fracwkb {self.command}", f"system: {self.sf.path}",
                       f"coords: {' '.join(self.sf.coords)}", f"L = {self.sf.lagrangian}",
                       "numeric defaults: E[a] = 1, Ep[a] = 1, eta[a] = 0, lam[a] = 0"]
        if self.sf.constants:
            self.lines.append("overrides: " + ", ".join(
                f"{a.name} = {v:g}" for a, v in sorted(self.sf.constants.items())))

    def add(self, key: str, value="") -> None:
        self.lines.append(f"{key}: {value}" if value != "" else f"{key}:")

    def item(self, text: str) -> None:
        self.lines.append(f"  {text}")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.3e}"


# ---------------------------------------------------------------- stages

def _analyze(sf: SystemFile, rep: Report):
    cs = legendre_transform(build_system(sf.coords, sf.lagrangian))
    h = cs.hessian
    rep.add("hessian")
    for row in h.matrix:
        rep.item("[" + ", ".join(str(c) for c in row) + "]")
    kind = "regular" if h.regular else "singular"
    rep.add("rank", f"{h.rank} of {len(sf.coords)}")
    rep.add("a-indices", " ".join(h.a_indices) or "(none)")
    rep.add("mu-indices", " ".join(h.mu_indices) or "(none)")
    rep.add("summary", f"{kind}, rank {h.rank}, H0 = {cs.hamiltonian}")
    rep.add("accelerations")
    for a, w in cs.accelerations.items():
        rep.item(f"D2[{a}] = {w}")
    rep.add("constraints", "" if cs.constraints else "(none)")
    for c in cs.constraints:
        rep.item(f"{c.label} = {c.function}")
    cls = classify_and_check_integrability(cs)
    rep.add("brackets", "" if cls.brackets else "(none)")
    for b in cls.brackets:
        rep.item(f"{{{b.left}, {b.right}}} = {b.value}  (on surface: {b.on_surface})")
    rep.add("classification", cls.verdict)
    return cs


def _constants_header(sf: SystemFile, traj, rep: Report):
    vals = sf.constant_values(traj.constant_atoms)
    rep.add("constants", ", ".join(f"{a.name} = {v:g}" for a, v in vals.items()))
    return vals


def _solve(sf: SystemFile, rep: Report, cs):
    hj = solve_separable(cs)
    if sf.perturbation is not None:
        hj = hj.with_perturbation(sf.perturbation)
    rep.add("HJPDEs")
    for p in build_hjpdes(cs):
        rep.item(p.render())
    rep.add("S", hj.render())
    for sec, ti in zip(hj.sectors, hj.integrals):
        rep.add(f"integral {sec.coord}", f"{ti.family} family")
        rep.item(f"{ti.render()} = {ti.antiderivative}")
        rep.item(f"lambda integrand d/dE[{sec.index}] sqrt(R) = {hj.lambda_integrand(sec)}")
    residual = hj.hj_residual()
    rep.add("HJ residual", str(residual))
    for label, r in hj.constraint_residuals().items():
        rep.add(f"{label} residual", str(r))
    traj = derive_trajectories(hj)
    rep.add("trajectories")
    for a, e in traj.coords.items():
        rep.item(f"{a.name}(t) = {e}")
    for a, e in traj.momenta.items():
        rep.item(f"{a.name}(t) = {e}")
    if traj.parameters:
        rep.item(", ".join(a.name for a in traj.parameters) + ": arbitrary parameter")
    rep.add("branches", ", ".join(f"{q}: {'+' if s > 0 else '-'}" for q, s in traj.branches.items()))
    if not residual.is_zero() or not all(r.is_zero() for r in hj.constraint_residuals().values()):
        rep.status = EXIT_VERIFY
    return hj, traj


def _alternative_params(params):
    """A second choice of the constrained coordinates for the independence check."""
    return {m: add(e, sin(mul(Const(k + 1), Atom(TIME))))
            for k, (m, e) in enumerate(sorted(params.items()))}


def cmd_analyze(sf: SystemFile) -> Report:
    rep = Report("analyze", sf)
    _analyze(sf, rep)
    return rep


def cmd_solve(sf: SystemFile) -> Report:
    rep = Report("solve", sf)
    cs = _analyze(sf, rep)
    _solve(sf, rep, cs)
    return rep


def cmd_verify(sf: SystemFile, csv_path: str | None = None, tol: float = 1e-6) -> Report:
    rep = Report("verify", sf)
    cs = _analyze(sf, rep)
    _, traj = _solve(sf, rep, cs)
    consts = _constants_header(sf, traj, rep)
    run_cfg = sf.run
    rep.add("run", f"t0 = {run_cfg.t0:g}, t1 = {run_cfg.t1:g}, h = {run_cfg.h:g}, RK4")
    eom = derive_eom(cs)
    rep.add("equations of motion")
    for line in eom.render():
        rep.item(line)
    params = {m: run_cfg.params.get(m) for m in eom.mu_coords}
    p0 = {m: (0.0 if e is None else _value_at(e, run_cfg.t0)) for m, e in params.items()}
    init = initial_state_from_trajectory(traj, consts, run_cfg.t0, p0)
    spec_params = {m: e for m, e in params.items() if e is not None}
    spec = RunSpec(init, run_cfg.t0, run_cfg.t1, run_cfg.h, spec_params)
    run = integrate(eom, spec)
    cmp = compare(run, traj, tol)
    rep.add("max deviation vs closed form")
    for name, d in cmp.deviations.items():
        rep.item(f"{name}: {_fmt(d)}")
    drift = run.hamiltonian_drift()
    rep.add("H0 drift", _fmt(drift))
    for label, v in run.constraint_values().items():
        rep.add(f"{label} max |value|", _fmt(v))
    if eom.mu_coords:
        alt = integrate(eom, RunSpec(init, run_cfg.t0, run_cfg.t1, run_cfg.h,
                                     _alternative_params(run.params)))
        a_atoms = [x for x in eom.state if x.index in cs.a_indices]
        diff = max(float(abs(run.column(x) - alt.column(x)).max()) for x in a_atoms)
        rep.add("mu-parameter independence (a-sector max difference)", _fmt(diff))
        if diff >= 1e-9:
            rep.status = EXIT_VERIFY
    if csv_path:
        run.write_csv(csv_path)
        rep.add("csv", f"{csv_path} ({len(run.times)} rows)")
    ok = cmp.passed
    rep.add("verdict", f"{'pass' if ok else 'FAIL'} (tol {tol:g})")
    if not ok:
        rep.status = EXIT_VERIFY
    return rep


def _value_at(e, t: float) -> float:
    return eval_numeric(e, {TIME: t})


def cmd_quantize(sf: SystemFile, seed: int = 0) -> Report:
    rep = Report("quantize", sf)
    cs = _analyze(sf, rep)
    hj, traj = _solve(sf, rep, cs)
    rep.status = EXIT_OK
    _constants_header(sf, traj, rep)
    psi = build_wave_function(hj, cs)
    rep.add("amplitude factors")
    for v, f in psi.factors.items():
        rep.item(f"(dS/d{v.name})^(-1/2) = {f}")
    try:
        wr = verify_quantization(cs, psi, seed=seed)
        failed = None
    except QuantizationError as exc:
        wr, failed = exc.report, exc
    rep.add("sampling", f"seed {wr.seed}, {wr.points} classically allowed points")
    verdicts = []
    for r in wr.results:
        rep.add(r.label, r.series.render())
        rep.item(f"sampled max |R0| = {_fmt(r.r0_numeric_max)}")
        if r.is_constraint:
            verdicts.append(f"{r.label}: exact annihilation" if r.exact_annihilation
                            else f"{r.label}: R0 = 0, higher orders survive")
    h0 = wr.results[0]
    if h0.r0_symbolic_zero:
        v = "H'0: R0 = 0 (symbolic)"
    elif h0.consistent:
        v = "H'0: R0 = 0 (numeric)"
    else:
        v = f"H'0: R0 nonzero, sampled max |R0| = {_fmt(h0.r0_numeric_max)}"
    if wr.r2_matches_table:
        v += "; R2 matches paper form"
    verdicts.append(v)
    rep.add("verdict", "; ".join(verdicts))
    if failed is not None:
        rep.add("error", str(failed))
        rep.status = EXIT_QUANT
    return rep


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracwkb", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("analyze", "solve", "verify", "quantize"):
        p = sub.add_parser(name)
        p.add_argument("system", help="system description file")
        if name == "verify":
            p.add_argument("--csv", help="write the numeric trajectory to this CSV file")
            p.add_argument("--tol", type=float, default=1e-6, help="deviation threshold")
        if name == "quantize":
            p.add_argument("--seed", type=int, default=0, help="phase-point sampling seed")
    return ap


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        sf = read_system_file(args.system)
        if args.command == "analyze":
            rep = cmd_analyze(sf)
        elif args.command == "solve":
            rep = cmd_solve(sf)
        elif args.command == "verify":
            rep = cmd_verify(sf, args.csv, args.tol)
        else:
            rep = cmd_quantize(sf, args.seed)
    except (SystemFileError, ParseError, ModelError) as exc:
        print(f"parse error: {exc}", file=err)
        return EXIT_PARSE
    except UnsupportedStructureError as exc:
        print(f"unsupported structure: {exc}", file=err)
        return EXIT_UNSUPPORTED
    except (DegenerateConstantError, InversionError, IntegrationError) as exc:
        print(f"verification failure: {exc}", file=err)
        return EXIT_VERIFY
    except AmplitudeError as exc:
        print(f"quantization inconsistency: {exc}", file=err)
        return EXIT_QUANT
    except OSError as exc:
        print(f"cannot read system file: {exc}", file=err)
        return EXIT_PARSE
    out.write(rep.text())
    return rep.status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
