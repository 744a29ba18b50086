"""Computational geometry: box, domain, balls, cutoffs and exterior data.

Nodes are cell centers of a uniform partition of the box ``[-L, L]^n`` into
cells of side ``h``.  Coordinates are stored as odd multiples of ``h/2`` so
that the node set is exactly symmetric about the origin.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .kernel import KernelSpec

_SHAPES = ("interval", "box", "disc")


@dataclass(frozen=True)
class Domain:
    """The open set Omega inside the computational box.

    ``shape`` is ``"interval"`` (n = 1), ``"box"`` (axis-aligned, n = 2) or
    ``"disc"`` (n = 2).  ``size`` holds the half-widths for interval/box and
    the radius for a disc.
    """

    shape: str
    center: tuple
    size: tuple

    def __post_init__(self):
        if self.shape not in _SHAPES:
            raise ConfigurationError(f"unknown domain shape {self.shape!r}; expected one of {_SHAPES}")
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        size = tuple(float(c) for c in np.atleast_1d(self.size))
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "size", size)
        if any(v <= 0 for v in size):
            raise ConfigurationError("domain size must be positive")
        if self.shape == "interval" and (len(center) != 1 or len(size) != 1):
            raise ConfigurationError("an interval domain needs a scalar center and half-width")
        if self.shape == "box" and (len(center) != 2 or len(size) not in (1, 2)):
            raise ConfigurationError("a box domain needs a 2D center and one or two half-widths")
        if self.shape == "box" and len(size) == 1:
            object.__setattr__(self, "size", size * 2)
        if self.shape == "disc" and (len(center) != 2 or len(size) != 1):
            raise ConfigurationError("a disc domain needs a 2D center and a radius")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def diameter(self) -> float:
        if self.shape == "disc":
            return 2.0 * self.size[0]
        return 2.0 * float(np.linalg.norm(self.size))

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Strict membership test for an ``(N, n)`` array of points."""
        z = np.asarray(points, dtype=float) - np.asarray(self.center)
        if self.shape == "disc":
            return np.sqrt(np.sum(z * z, axis=-1)) < self.size[0]
        return np.all(np.abs(z) < np.asarray(self.size), axis=-1)

    def boundary_distance(self, x0) -> float:
        """Distance from an interior point to the complement of the domain."""
        z = np.atleast_1d(np.asarray(x0, dtype=float)) - np.asarray(self.center)
        if self.shape == "disc":
            return self.size[0] - float(np.sqrt(np.sum(z * z)))
        return float(np.min(np.asarray(self.size) - np.abs(z)))

    def contains_ball(self, x0, radius: float) -> bool:
        return self.boundary_distance(x0) >= radius

    def extent(self) -> np.ndarray:
        """Per-axis distance from the origin to the farthest point of the domain."""
        c = np.abs(np.asarray(self.center))
        if self.shape == "disc":
            return c + self.size[0]
        return c + np.asarray(self.size)


class Grid:
    """Uniform cell-centered grid of the box ``[-L, L]^n`` with a domain inside.

    Parameters
    ----------
    n : int
        Dimension, 1 or 2.
    L : float
        Box half-width.
    h : float
        Cell side; ``2L/h`` must be an integer.
    omega : Domain
        The domain; it must leave a collar at least as wide as its diameter.
    """

    def __init__(self, n: int, L: float, h: float, omega: Domain):
        if n not in (1, 2):
            raise ConfigurationError(f"dimension must be 1 or 2, got {n}")
        if L <= 0 or h <= 0:
            raise ConfigurationError("box half-width and cell side must be positive")
        cells = 2.0 * L / h
        m = int(round(cells))
        if m < 1 or abs(cells - m) > 1e-9 * max(1.0, cells):
            raise ConfigurationError(f"2L/h = {cells!r} is not an integer")
        if omega.dim != n:
            raise ConfigurationError(f"domain dimension {omega.dim} does not match grid dimension {n}")
        collar = L - omega.extent()
        if np.any(collar < omega.diameter * (1 - 1e-12)):
            raise ConfigurationError(
                f"collar width {float(np.min(collar))!r} is smaller than the domain diameter {omega.diameter!r}")

        self.n = n
        self.L = float(L)
        self.h = float(h)
        self.cells = m
        self.omega = omega

        idx1 = np.arange(m)
        if n == 1:
            index = idx1[:, None]
        else:
            i, j = np.meshgrid(idx1, idx1, indexing="ij")
            index = np.stack([i.ravel(), j.ravel()], axis=1)
        self.index = index
        # odd integers 2i+1-m, so nodes are exactly symmetric about 0
        self.odd = 2 * index + 1 - m
        self.nodes = self.odd * (self.h / 2.0)
        self.interior = omega.contains(self.nodes)
        if not self.interior.any():
            raise ConfigurationError("the domain contains no grid node")
        self.collar = ~self.interior
        for arr in (self.index, self.odd, self.nodes, self.interior, self.collar):
            arr.setflags(write=False)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    def __repr__(self):
        return (f"Grid(n={self.n}, L={self.L}, h={self.h}, cells={self.cells}, "
                f"interior={int(self.interior.sum())}, domain={self.omega})")

    def point(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.n,):
            raise ConfigurationError(f"expected a point of dimension {self.n}, got shape {x.shape}")
        return x

    def distances(self, center) -> np.ndarray:
        z = self.nodes - self.point(center)
        return np.sqrt(np.sum(z * z, axis=1))

    def function(self, values) -> np.ndarray:
        """Validate ``values`` as a grid function and return it as a float array."""
        v = np.asarray(values, dtype=float)
        if v.shape != (self.size,):
            raise ConfigurationError(f"grid function has shape {v.shape}, expected ({self.size},)")
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("grid function has non-finite values")
        return v


def ball_nodes(grid: Grid, center, radius: float) -> np.ndarray:
    """Indices of the nodes with ``|x_i - center| < radius`` (ascending order)."""
    if radius <= 0:
        raise ConfigurationError("radius must be positive")
    return np.flatnonzero(grid.distances(center) < radius)


def cutoff(grid: Grid, center, inner_r: float, outer_r: float) -> np.ndarray:
    """Piecewise-linear radial cutoff: 1 on ``B_inner``, 0 outside ``B_outer``."""
    if not 0 < inner_r < outer_r:
        raise ConfigurationError(f"cutoff needs 0 < inner_r < outer_r, got {inner_r!r}, {outer_r!r}")
    rho = grid.distances(center)
    return np.clip((outer_r - rho) / (outer_r - inner_r), 0.0, 1.0)


def level_truncate(u, k: float, sign: str) -> np.ndarray:
    """``(u - k)_+`` for ``sign="plus"``, ``(k - u)_+`` for ``sign="minus"``."""
    u = np.asarray(u, dtype=float)
    if sign == "plus":
        return np.maximum(u - k, 0.0)
    if sign == "minus":
        return np.maximum(k - u, 0.0)
    raise ConfigurationError(f"sign must be 'plus' or 'minus', got {sign!r}")


# --- exterior data -----------------------------------------------------------

def _bump(grid, center=None, width=0.5, height=1.0):
    if center is None:
        raise ConfigurationError("bump profile needs a center")
    rho = grid.distances(center) / float(width)
    out = np.zeros(grid.size)
    inside = rho < 1.0
    out[inside] = height * np.exp(1.0 - 1.0 / (1.0 - rho[inside] ** 2))
    return out


def _step(grid, position=0.0, height=1.0, axis=0):
    return np.where(grid.nodes[:, axis] > position, float(height), 0.0)


def _ramp(grid, slope=1.0, offset=0.0, axis=0):
    return offset + slope * grid.nodes[:, axis]


def _constant(grid, value=0.0):
    return np.full(grid.size, float(value))


def _csv(grid, path=None):
    if path is None:
        raise ConfigurationError("csv profile needs a path")
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    values = data[:, -1]
    if values.shape != (grid.size,):
        raise ConfigurationError(f"CSV {path} has {values.size} values, grid has {grid.size} nodes")
    return values


PROFILES = {
    "zero": lambda grid: np.zeros(grid.size),
    "constant": _constant,
    "bump": _bump,
    "step": _step,
    "linear-ramp": _ramp,
    "csv": _csv,
}


def boundary_data(grid: Grid, profile: str, **params) -> np.ndarray:
    """Evaluate a named profile on the nodes and clear the interior slots.

    Only collar values act as constraints, so interior slots are set to 0.
    """
    try:
        make = PROFILES[profile]
    except KeyError:
        raise ConfigurationError(f"unknown data profile {profile!r}; expected one of {sorted(PROFILES)}") from None
    try:
        g = np.asarray(make(grid, **params), dtype=float)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for profile {profile!r}: {exc}") from None
    g = g.copy()
    g[grid.interior] = 0.0
    return grid.function(g)


def compactly_supported(grid: Grid, g) -> bool:
    """True when ``g`` vanishes on the outermost layer of cells of the box."""
    edge = np.any((grid.index == 0) | (grid.index == grid.cells - 1), axis=1)
    return bool(np.all(np.asarray(g)[edge] == 0.0))


@dataclass
class DirichletProblem:
    """Kernel, grid and exterior data ``g`` (prescribed on the collar).

    ``far_field`` switches on the interaction of the domain with the region
    beyond the box, where ``g`` is taken to be zero.  Without it the problem
    is posed on the box alone, which makes it invariant under adding
    constants to ``g``.
    """

    kernel: KernelSpec
    grid: Grid
    g: np.ndarray
    far_field: bool = True
    compact_support: bool = field(init=False)

    def __post_init__(self):
        if self.kernel.n != self.grid.n:
            raise ConfigurationError(
                f"kernel dimension {self.kernel.n} does not match grid dimension {self.grid.n}")
        self.g = self.grid.function(self.g)
        if np.any(self.g[self.grid.interior] != 0.0):
            raise ConfigurationError("exterior data g must vanish on interior slots")
        self.compact_support = compactly_supported(self.grid, self.g)

    def admissible(self, interior_values) -> np.ndarray:
        """Assemble a full grid function equal to ``g`` on the collar."""
        u = self.g.copy()
        u[self.grid.interior] = interior_values
        return u
