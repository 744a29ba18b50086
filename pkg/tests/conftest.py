import functools

import numpy as np
import pytest

from fraclab.grid import DirichletProblem, Domain, Grid, boundary_data
from fraclab.kernel import KernelSpec, assemble_weights
from fraclab.solver import SolveConfig, solve

UNIT = Domain("interval", (0.0,), (1.0,))


def reference_grid(interior=129):
    """Interval (-1, 1) in the box [-3, 3] with ``interior`` nodes inside."""
    return Grid(1, 3.0, 2.0 / interior, UNIT)


@functools.lru_cache(maxsize=None)
def reference_case(p, s, interior=129, family="constant", Lam=1.0, profile="bump", far_field=True):
    """Cached (problem, weights, solution) for the 1D reference configuration."""
    grid = reference_grid(interior)
    spec = KernelSpec(1, s, p, lam=1.0, Lam=Lam, family=family, allow_supercritical=True)
    if profile == "bump":
        g = boundary_data(grid, "bump", center=(2.0,), width=0.75, height=1.0)
    elif profile == "ramp":
        g = boundary_data(grid, "linear-ramp", slope=1.0)
    else:
        g = boundary_data(grid, "bump", center=(2.0,), width=0.75, height=-1.0)
    prob = DirichletProblem(spec, grid, g, far_field=far_field)
    W = assemble_weights(spec, grid)
    return prob, W, solve(prob, SolveConfig(), W)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance(request):
    """Record one acceptance line: ``acceptance(number, passed, detail)``."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number, passed, detail):
        store[number] = (bool(passed), detail)
        print(f"CRITERION {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        passed, detail = store[number]
        terminalreporter.write_line(f"CRITERION {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
