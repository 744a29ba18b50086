"""Kernels of order (s, p) and the pairwise quadrature weights.

A kernel is ``K(x, y) = a(x, y) |x - y|^{-(n + sp)}`` with a symmetric
coefficient ``lam <= a <= Lam``.  The weight of a pair of cells approximates
``int_{Q_i} int_{Q_j} K``: far pairs use the midpoint rule, touching pairs
integrate the power kernel exactly (1D) or with a Duffy split around the
singular corner (2D) and multiply by the coefficient at the cell centers.
"""
from __future__ import annotations

import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigurationError, DomainError, UnsupportedError

if TYPE_CHECKING:
    from .grid import Grid

FAMILIES = ("constant", "checkerboard", "smooth-bump", "random")

_TABLE = {1: 4096, 2: 256}


@dataclass(frozen=True)
class KernelSpec:
    """Order, ellipticity bounds and coefficient family of a kernel.

    ``lam`` and ``Lam`` are the lower/upper ellipticity constants.  The
    coefficient families are

    * ``constant``: ``a = lam``;
    * ``checkerboard``: ``(lam+Lam)/2 + (Lam-lam)/2 * chi(x) chi(y)`` with
      ``chi = +-1`` on a checkerboard of cell size ``period``;
    * ``smooth-bump``: ``lam + (Lam-lam) b(x) b(y)`` with a Gaussian ``b`` of
      width ``width`` around ``bump_center``;
    * ``random``: ``lam + (Lam-lam) (z(x) + z(y))/2`` with ``z`` uniform on
      cells of size ``period``, drawn from ``seed``.
    """

    n: int
    s: float
    p: float
    lam: float = 1.0
    Lam: float = 1.0
    family: str = "constant"
    period: float = 0.25
    width: float = 0.5
    bump_center: tuple | None = None
    seed: int = 0
    allow_supercritical: bool = False

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ConfigurationError(f"dimension must be 1 or 2, got {self.n}")
        if not 0.0 < self.s < 1.0:
            raise ConfigurationError(f"s must lie in (0, 1), got {self.s}")
        if not self.p > 1.0:
            raise ConfigurationError(f"p must exceed 1, got {self.p}")
        if not 1.0 <= self.lam <= self.Lam:
            raise ConfigurationError(f"need 1 <= lam <= Lam, got lam={self.lam}, Lam={self.Lam}")
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown coefficient family {self.family!r}; expected one of {FAMILIES}")
        if self.period <= 0 or self.width <= 0:
            raise ConfigurationError("period and width must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if self.sp >= self.n and not self.allow_supercritical:
            raise ConfigurationError(
                f"sp = {self.sp} >= n = {self.n}; set allow_supercritical to accept it")
        center = self.bump_center
        if center is None:
            center = (0.0,) * self.n
        center = tuple(float(c) for c in np.atleast_1d(center))
        if len(center) != self.n:
            raise ConfigurationError("bump_center dimension does not match n")
        object.__setattr__(self, "bump_center", center)

    @property
    def sp(self) -> float:
        return self.s * self.p

    @property
    def order(self) -> float:
        """Exponent ``n + sp`` of the singularity."""
        return self.n + self.s * self.p

    @property
    def critical_exponent(self) -> float:
        """Fractional Sobolev exponent ``p* = np / (n - sp)``."""
        if self.sp >= self.n:
            raise UnsupportedError("p* is undefined for sp >= n")
        return self.n * self.p / (self.n - self.sp)

    @property
    def beta(self) -> float:
        """Gain exponent ``sp / (n - sp) = p*/p - 1`` of the De Giorgi recursion."""
        if self.sp >= self.n:
            raise UnsupportedError("beta is undefined for sp >= n")
        return self.sp / (self.n - self.sp)

    def coefficient(self, x, y) -> np.ndarray:
        """Symmetric coefficient ``a(x, y)`` for ``(..., n)`` point arrays."""
        x = _as_points(x, self.n)
        y = _as_points(y, self.n)
        lam, Lam = self.lam, self.Lam
        if self.family == "constant":
            return np.full(np.broadcast_shapes(x.shape[:-1], y.shape[:-1]), lam)
        if self.family == "checkerboard":
            return 0.5 * (lam + Lam) + 0.5 * (Lam - lam) * (self._checker(x) * self._checker(y))
        if self.family == "smooth-bump":
            return lam + (Lam - lam) * (self._bump(x) * self._bump(y))
        return lam + (Lam - lam) * 0.5 * (self._random(x) + self._random(y))

    def _checker(self, x):
        cells = np.floor(x / self.period).astype(np.int64)
        return 1.0 - 2.0 * (np.sum(cells, axis=-1) & 1)

    def _bump(self, x):
        z = x - np.asarray(self.bump_center)
        return np.exp(-np.sum(z * z, axis=-1) / (2.0 * self.width ** 2))

    def _random(self, x):
        table = _random_table(int(self.seed), self.n)
        cells = np.floor(x / self.period).astype(np.int64) % table.shape[0]
        return table[tuple(np.moveaxis(cells, -1, 0))]


@functools.lru_cache(maxsize=8)
def _random_table(seed: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    table = rng.random((_TABLE[n],) * n)
    table.setflags(write=False)
    return table


def _as_points(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        return x[..., None]
    if x.shape[-1] != n:
        raise ConfigurationError(f"points have trailing dimension {x.shape[-1]}, expected {n}")
    return x


def evaluate_kernel(spec: KernelSpec, x, y) -> np.ndarray:
    """``K(x, y) = a(x, y) |x - y|^{-(n+sp)}``; raises on coincident points."""
    x = _as_points(x, spec.n)
    y = _as_points(y, spec.n)
    z = x - y
    r = np.sqrt(np.sum(z * z, axis=-1))
    if np.any(r == 0.0):
        raise DomainError("kernel is singular on the diagonal x == y")
    out = spec.coefficient(x, y) * r ** (-spec.order)
    return out[()] if out.ndim == 0 else out


# --- reference integrals of the power kernel over pairs of unit cells ----------

def cell_pair_integral_1d(m: int, sp: float) -> float:
    """``int_0^1 int_m^{m+1} |x - y|^{-(1+sp)} dy dx`` for an integer offset m >= 1.

    Uses the double antiderivative ``F(t) = t^{1-sp} / (-sp (1-sp))`` of the
    power kernel: the integral is ``F(m+1) - 2F(m) + F(m-1)``.
    """
    m = abs(int(m))
    if m < 1:
        raise DomainError("cell pair integral needs disjoint cells")
    if not 0.0 < sp < 1.0:
        raise ConfigurationError(f"touching-cell integrals are finite only for 0 < sp < 1, got {sp}")

    def F(t):
        return t ** (1.0 - sp) / (-sp * (1.0 - sp)) if t > 0 else 0.0

    return F(m + 1) - 2.0 * F(m) + F(m - 1)


def _tent_piece(d: int, k: int):
    """``T(t - d) = max(0, 1 - |t - d|)`` on ``[k, k+1]`` as ``alpha + beta * t``."""
    if k == d - 1:
        return 1.0 - d, 1.0
    return 1.0 + d, -1.0


@functools.lru_cache(maxsize=64)
def _gauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def cell_pair_integral_2d(d1: int, d2: int, sp: float, order: int = 40) -> float:
    """``int_{[0,1]^2} int_{[d1,d1+1]x[d2,d2+1]} |x - y|^{-(2+sp)}`` for a lattice offset.

    The substitution ``z = y - x`` turns the four-fold integral into
    ``int k(z) T(z1 - d1) T(z2 - d2) dz`` with hat functions ``T``.  On each
    unit square where both hats are linear, squares with the singular
    corner at the origin are split into two triangles with apex there and
    mapped to ``(u, t)`` coordinates (Duffy); the radial integral is then a
    closed form and the angular one is Gauss-Legendre.  The remaining
    squares are smooth and use a tensor Gauss rule.
    """
    d1, d2 = abs(int(d1)), abs(int(d2))
    if (d1, d2) == (0, 0):
        raise DomainError("cell pair integral needs disjoint cells")
    if max(d1, d2) <= 1 and not 0.0 < sp < 1.0:
        raise ConfigurationError(f"touching-cell integrals are finite only for 0 < sp < 1, got {sp}")
    order_ = 2.0 + sp
    t, wt = _gauss(order)
    total = 0.0
    for k1 in (d1 - 1, d1):
        a1, b1 = _tent_piece(d1, k1)
        for k2 in (d2 - 1, d2):
            a2, b2 = _tent_piece(d2, k2)
            corners = {(k1, k2), (k1 + 1, k2), (k1, k2 + 1), (k1 + 1, k2 + 1)}
            if (0, 0) in corners:
                if abs(a1 * a2) > 0:
                    raise DomainError("hat product does not vanish at the singular corner")
                ox = 2 * k1 + 1
                oy = 2 * k2 + 1
                opposite = np.array([ox, oy], dtype=float)
                for A, B in ((np.array([ox, 0.0]), opposite), (opposite, np.array([0.0, oy]))):
                    w = A[None, :] + t[:, None] * (B - A)[None, :]
                    jac = abs(A[0] * (B - A)[1] - A[1] * (B - A)[0])
                    c1 = a1 * b2 * w[:, 1] + a2 * b1 * w[:, 0]
                    c2 = b1 * b2 * w[:, 0] * w[:, 1]
                    rad = c1 / (1.0 - sp) + c2 / (2.0 - sp)
                    norm = np.sqrt(np.sum(w * w, axis=1))
                    total += jac * np.sum(wt * norm ** (-order_) * rad)
            else:
                # split into 2x2 sub-squares for a comfortable Gauss radius
                for sx in (0.0, 0.5):
                    for sy in (0.0, 0.5):
                        z1 = k1 + sx + 0.5 * t
                        z2 = k2 + sy + 0.5 * t
                        Z1, Z2 = np.meshgrid(z1, z2, indexing="ij")
                        f = (Z1 * Z1 + Z2 * Z2) ** (-order_ / 2.0) * (a1 + b1 * Z1) * (a2 + b2 * Z2)
                        total += 0.25 * np.sum(wt[:, None] * wt[None, :] * f)
    return float(total)


@functools.lru_cache(maxsize=64)
def near_reference(n: int, sp: float) -> dict:
    """Unit-cell reference integrals keyed by squared lattice distance (1 or 2)."""
    if n == 1:
        return {1: cell_pair_integral_1d(1, sp)}
    return {1: cell_pair_integral_2d(1, 0, sp), 2: cell_pair_integral_2d(1, 1, sp)}


# --- assembly ------------------------------------------------------------------

@dataclass
class WeightMatrix:
    """Dense symmetric pair weights ``w_ij`` with zero diagonal.

    The matrix is stored in full so that row sums and matrix-vector style
    reductions need no index bookkeeping; ``triplets`` exports each pair once.
    """

    matrix: np.ndarray
    h: float
    n: int
    near_scheme: str
    far_scheme: str = "midpoint"

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def triplets(self):
        """``(i, j, w)`` arrays for the pairs ``i < j`` in row-major order."""
        i, j = np.triu_indices(self.size, k=1)
        return i, j, self.matrix[i, j]

    def to_csv(self, path) -> None:
        i, j, w = self.triplets()
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("i,j,w\n")
            for a, b, c in zip(i.tolist(), j.tolist(), w.tolist()):
                fh.write(f"{a},{b},{c!r}\n")

    def to_binary(self, path) -> None:
        """Little-endian records ``(int64 i, int64 j, float64 w)``."""
        i, j, w = self.triplets()
        rec = np.empty(i.size, dtype=[("i", "<i8"), ("j", "<i8"), ("w", "<f8")])
        rec["i"], rec["j"], rec["w"] = i, j, w
        rec.tofile(Path(path))

    @staticmethod
    def read_binary(path, size: int) -> np.ndarray:
        rec = np.fromfile(Path(path), dtype=[("i", "<i8"), ("j", "<i8"), ("w", "<f8")])
        mat = np.zeros((size, size))
        mat[rec["i"], rec["j"]] = rec["w"]
        mat[rec["j"], rec["i"]] = rec["w"]
        return mat


def assemble_weights(spec: KernelSpec, grid: "Grid", threads: int = 1, block: int = 128) -> WeightMatrix:
    """Quadrature weights for every pair of grid cells.

    Pairs whose centers are at least ``2h`` apart get ``K(x_i, x_j) h^{2n}``;
    closer pairs get ``a(x_i, x_j) h^{n-sp}`` times the exact unit-cell
    integral of the power kernel.  For ``sp >= 1`` that integral diverges
    for touching cells, and every pair falls back to the midpoint rule.
    Rows are filled in independent blocks, so the result does not depend
    on ``threads``.
    """
    if spec.n != grid.n:
        raise ConfigurationError(f"kernel dimension {spec.n} does not match grid dimension {grid.n}")
    n, h, N = grid.n, grid.h, grid.size
    near_vals = np.zeros(3)
    exact_near = spec.sp < 1.0
    if exact_near:
        for q, val in near_reference(n, spec.sp).items():
            near_vals[q] = val * h ** (n - spec.sp)
    else:
        near_vals[1:] = (h * np.sqrt([1.0, 2.0])) ** (-spec.order) * h ** (2 * n)
    mat = np.zeros((N, N))
    index, nodes = grid.index, grid.nodes

    def fill(start):
        stop = min(start + block, N)
        dm = index[None, :, :] - index[start:stop, None, :]
        q = np.sum(dm * dm, axis=-1)
        coef = spec.coefficient(nodes[start:stop, None, :], nodes[None, :, :])
        with np.errstate(divide="ignore"):
            far = (h * np.sqrt(q)) ** (-spec.order) * h ** (2 * n)
        w = np.where(q >= 4, far, near_vals[np.minimum(q, 2)])
        w[q == 0] = 0.0
        mat[start:stop] = coef * w

    starts = range(0, N, block)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, starts))
    else:
        for st in starts:
            fill(st)
    if not exact_near:
        scheme = "midpoint"
    elif n == 1:
        scheme = "closed-form antiderivative"
    else:
        scheme = "duffy split + gauss-legendre"
    return WeightMatrix(matrix=mat, h=h, n=n, near_scheme=scheme)
