import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraclab.errors import ConfigurationError
from fraclab.grid import (DirichletProblem, Domain, Grid, ball_nodes, boundary_data, compactly_supported, cutoff,
                          level_truncate)
from fraclab.kernel import KernelSpec


@pytest.fixture
def grid():
    # h = 0.1 on [-1, 1]; a small interval leaves the required collar
    return Grid(1, 1.0, 0.1, Domain("interval", (0.0,), (0.25,)))


def test_ball_enumeration(grid):
    idx = ball_nodes(grid, 0.0, 0.25)
    assert np.allclose(np.sort(grid.nodes[idx, 0]), [-0.15, -0.05, 0.05, 0.15])


def test_ball_superset_and_isolation(grid):
    assert ball_nodes(grid, 0.0, 10.0).size == grid.size
    idx = ball_nodes(grid, grid.nodes[7], 0.04)
    assert idx.tolist() == [7]


def test_nodes_symmetric(grid):
    assert np.array_equal(grid.nodes[::-1, 0], -grid.nodes[:, 0])


def test_partition(grid):
    assert np.all(grid.interior ^ grid.collar)


@pytest.mark.parametrize("bad", [dict(h=0.3), dict(L=0.5), dict(n=3)])
def test_grid_rejects(bad):
    kw = dict(n=1, L=1.0, h=0.1, omega=Domain("interval", (0.0,), (0.25,)))
    kw.update(bad)
    with pytest.raises(ConfigurationError):
        Grid(**kw)


def test_collar_requirement():
    with pytest.raises(ConfigurationError, match="collar"):
        Grid(1, 2.0, 0.1, Domain("interval", (0.0,), (1.0,)))


def test_cutoff_profile(grid):
    phi = cutoff(grid, 0.0, 0.2, 0.6)
    x = grid.nodes[:, 0]
    assert phi[np.argmin(np.abs(x))] == 1.0
    assert np.all(phi[np.abs(x) >= 0.6] == 0.0)
    assert np.all((phi >= 0) & (phi <= 1))
    assert cutoff(grid, 0.05, 0.2, 0.6)[np.argmin(np.abs(x - 0.45))] == pytest.approx(0.5)


def test_cutoff_lipschitz():
    grid = Grid(2, 1.0, 0.1, Domain("disc", (0.0, 0.0), (0.3,)))
    phi = cutoff(grid, (0.05, -0.05), 0.1, 0.4)
    d = np.linalg.norm(grid.nodes[:, None] - grid.nodes[None], axis=-1)
    diff = np.abs(phi[:, None] - phi[None])
    off = d > 0
    assert np.all(diff[off] / d[off] <= 1 / 0.3 + 1e-12)


def test_cutoff_rejects_order(grid):
    with pytest.raises(ConfigurationError):
        cutoff(grid, 0.0, 0.5, 0.5)


def test_truncation_examples():
    u = np.full(4, 3.0)
    assert np.all(level_truncate(u, 1, "plus") == 2)
    assert np.all(level_truncate(u, 1, "minus") == 0)
    assert level_truncate([0, 2, 5], 2, "plus").tolist() == [0, 0, 3]
    with pytest.raises(ConfigurationError):
        level_truncate(u, 0, "up")


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30), st.floats(-1e3, 1e3))
def test_truncation_identity(values, k):
    u = np.array(values)
    assert np.allclose(level_truncate(u, k, "plus") - level_truncate(u, k, "minus"), u - k, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 3.0), st.floats(0.01, 3.0))
def test_balls_nested(r1, r2):
    grid = Grid(2, 1.0, 0.1, Domain("disc", (0.0, 0.0), (0.3,)))
    small, large = sorted((r1, r2))
    assert set(ball_nodes(grid, (0.1, 0.0), small)) <= set(ball_nodes(grid, (0.1, 0.0), large))


def test_profiles(grid, tmp_path):
    bump = boundary_data(grid, "bump", center=(0.7,), width=0.2)
    assert np.all(bump[grid.interior] == 0) and bump.max() <= 1.0 and bump.max() > 0.5
    step = boundary_data(grid, "step", position=0.5, height=2.0)
    assert set(np.unique(step)) <= {0.0, 2.0}
    ramp = boundary_data(grid, "linear-ramp", slope=2.0, offset=1.0)
    out = grid.collar
    assert np.allclose(ramp[out], 1.0 + 2.0 * grid.nodes[out, 0])
    path = tmp_path / "g.csv"
    np.savetxt(path, np.column_stack([grid.nodes[:, 0], ramp]), delimiter=",", header="x,value", comments="")
    assert np.array_equal(boundary_data(grid, "csv", path=str(path)), ramp)
    with pytest.raises(ConfigurationError):
        boundary_data(grid, "sawtooth")


def test_compact_support_flag(grid):
    assert compactly_supported(grid, boundary_data(grid, "bump", center=(0.7,), width=0.2))
    assert not compactly_supported(grid, boundary_data(grid, "constant", value=1.0))


def test_problem_validation(grid):
    spec = KernelSpec(1, 0.4, 2.0)
    g = np.zeros(grid.size)
    g[grid.interior] = 1.0
    with pytest.raises(ConfigurationError):
        DirichletProblem(spec, grid, g)
    with pytest.raises(ConfigurationError):
        DirichletProblem(KernelSpec(2, 0.4, 2.0), grid, np.zeros(grid.size))
    prob = DirichletProblem(spec, grid, np.zeros(grid.size))
    u = prob.admissible(np.arange(int(grid.interior.sum()), dtype=float))
    assert np.all(u[grid.collar] == 0)
