import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from fracwkb.hjsolve import derive_trajectories, solve_separable  # noqa: E402
from fracwkb.legendre import legendre_transform  # noqa: E402
from fracwkb.model import build_system  # noqa: E402

ROOT = pathlib.Path(__file__).resolve().parents[1]
SYSTEMS = ROOT / "systems"

EX1 = (["q"], "1/2*(D2[q]^2 - D1[q]^2)")
EX2 = (["q1", "q2", "q3"],
       "1/2*(D2[q1]^2 + D2[q2]^2) + D1[q3]*D2[q3] + D1[q3]*D0[q3] + D0[q2]*D1[q2]")
FREE = (["q"], "1/2*D2[q]^2")
ARTIFICIAL = (["q1", "q2"], "1/2*D2[q1]^2 + D0[q2]*D2[q1]")


def canonical(spec):
    return legendre_transform(build_system(*spec))


@pytest.fixture(scope="session")
def cs1():
    return canonical(EX1)


@pytest.fixture(scope="session")
def cs2():
    return canonical(EX2)


@pytest.fixture(scope="session")
def cs_free():
    return canonical(FREE)


@pytest.fixture(scope="session")
def hj1(cs1):
    return solve_separable(cs1)


@pytest.fixture(scope="session")
def hj2(cs2):
    return solve_separable(cs2)


@pytest.fixture(scope="session")
def hj_free(cs_free):
    return solve_separable(cs_free)


@pytest.fixture(scope="session")
def traj1(hj1):
    return derive_trajectories(hj1)


@pytest.fixture(scope="session")
def traj2(hj2):
    return derive_trajectories(hj2)


@pytest.fixture(scope="session")
def traj_free(hj_free):
    return derive_trajectories(hj_free)


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
