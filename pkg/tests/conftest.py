import numpy as np
import pytest

from gwphase.biortho import track_branches
from gwphase.scenarios.cone import ComplexCone, cone_loop

ACCEPTANCE_LINES = []


def report(number, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


def complex_solid_angle(theta):
    return -np.pi * (1 - np.cos(theta))


@pytest.fixture(scope="session")
def complex_cone_branch():
    cone = ComplexCone(1.0, 0.5 + 0.2j)
    loop = cone_loop(cone, 4001)
    return loop, track_branches(loop)[1]


@pytest.fixture(scope="session")
def hermitian_cone_branch():
    cone = ComplexCone(1.0, np.pi / 3)
    loop = cone_loop(cone, 4001)
    return loop, track_branches(loop)[1]
