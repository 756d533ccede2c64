"""RK4 error against the closed form as the step shrinks.

Prints max deviation per step size and the ratio between successive halvings
(about 16 for a fourth-order method; below h = 1e-3 the error sits on a
roundoff floor near 1e-13 and the ratio collapses).
"""

import argparse

from fracwkb.dynamics import RunSpec, compare, derive_eom, initial_state_from_trajectory, integrate
from fracwkb.hjsolve import derive_trajectories, solve_separable
from fracwkb.legendre import legendre_transform
from fracwkb.model import build_system
from fracwkb.sysfile import read_system_file


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("system", nargs="?", default="systems/example1.sys")
    ap.add_argument("--t1", type=float, default=10.0)
    ap.add_argument("--steps", type=float, nargs="+",
                    default=[0.4, 0.2, 0.1, 0.05, 0.025, 0.0125, 1e-3])
    args = ap.parse_args()

    sf = read_system_file(args.system)
    cs = legendre_transform(build_system(sf.coords, sf.lagrangian))
    traj = derive_trajectories(solve_separable(cs))
    consts = sf.constant_values(traj.constant_atoms)
    init = initial_state_from_trajectory(traj, consts, 0.0)
    eom = derive_eom(cs)

    prev = None
    print(f"{'h':>10} {'max deviation':>15} {'ratio':>8}")
    for h in args.steps:
        err = compare(integrate(eom, RunSpec(init, 0.0, args.t1, h)), traj).max_deviation
        ratio = f"{prev / err:8.2f}" if prev and err > 0 else " " * 8
        print(f"{h:10.4g} {err:15.3e} {ratio}")
        prev = err


if __name__ == "__main__":
    main()
