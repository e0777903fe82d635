import numpy as np
import pytest

from macroale.cutting import LevelSet
from macroale.mesh import boundary_classify, build_macro_mesh, dof_layout

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS = {}


@pytest.fixture(scope="session")
def mesh4():
    return build_macro_mesh(4)


@pytest.fixture(scope="session")
def mesh8():
    return build_macro_mesh(8)


@pytest.fixture(scope="session")
def mesh2():
    return build_macro_mesh(2)


@pytest.fixture
def moving_sphere():
    return LevelSet("moving_sphere", (0.125, 0.125, 0.125), 0.12, (1.0, 1.0, 1.0))


@pytest.fixture
def growing_sphere():
    return LevelSet("growing_sphere", (0.5, 0.5, 0.5), 0.08, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: (int("".join(c for c in k if c.isdigit())), k)):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")
