"""Nonlocal tail and closed-form far-field integrals of the power weight."""
from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, DomainError
from .grid import Grid, level_truncate
from .kernel import _gauss


def _box_pieces(x0: np.ndarray, L: float):
    """Angular pieces of the ray exit distance from ``x0`` to the box ``[-L, L]^2``.

    Returns a list of ``(theta_a, theta_b, face_distance, face_normal_angle)``;
    on each piece the exit distance is ``d / cos(theta - phi)``.
    """
    x, y = x0
    corners = [(L - x, L - y), (-L - x, L - y), (-L - x, -L - y), (L - x, -L - y)]
    angles = [np.arctan2(cy, cx) for cx, cy in corners]
    # faces: right (phi=0), top (pi/2), left (pi), bottom (3pi/2) between consecutive corners
    faces = [(L - x, 0.0), (L - y, np.pi / 2), (L + x, np.pi), (L + y, 1.5 * np.pi)]
    pieces = []
    a0 = angles[3]
    for k in range(4):
        a = angles[k - 1] if k > 0 else a0
        b = angles[k]
        while b <= a:
            b += 2 * np.pi
        d, phi = faces[k]
        pieces.append((a, b, d, phi))
    return pieces


def exterior_integral(grid: Grid, x0, sp: float, R: float = 0.0) -> float:
    """``int`` of ``|x - x0|^{-(n+sp)}`` over the complement of ``box U B_R(x0)``.

    Closed form in 1D; in 2D the radial integral is exact and the angular
    one is Gauss-Legendre on pieces where the exit distance is smooth.
    """
    x0 = grid.point(x0)
    if np.any(np.abs(x0) > grid.L):
        raise DomainError("x0 must lie inside the computational box")
    L = grid.L
    if grid.n == 1:
        right = max(L - x0[0], R)
        left = max(L + x0[0], R)
        with np.errstate(divide="ignore"):
            return float((right ** -sp + left ** -sp) / sp)
    t, w = _gauss(48)
    total = 0.0
    for a, b, d, phi in _box_pieces(x0, L):
        if d <= 0.0:
            continue
        breaks = [a, b]
        if R > d:
            c = np.arccos(d / R)
            breaks += [th for th in (phi - c, phi + c, phi - c + 2 * np.pi, phi + c + 2 * np.pi,
                                     phi - c - 2 * np.pi, phi + c - 2 * np.pi) if a < th < b]
        breaks = sorted(breaks)
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            th = lo + (hi - lo) * t
            rho = np.maximum(d / np.cos(th - phi), R)
            total += (hi - lo) * np.sum(w * rho ** -sp)
    return float(total / sp)


def far_field_weights(grid: Grid, spec) -> np.ndarray:
    """``h^n a(x_i, x_i) int_{outside box} K``-style weights for interior nodes, zero on the collar."""
    out = np.zeros(grid.size)
    for i in np.flatnonzero(grid.interior):
        x = grid.nodes[i]
        out[i] = exterior_integral(grid, x, spec.sp) * spec.coefficient(x, x)
    return out * grid.cell_volume


def _cell_weights(grid: Grid, x0: np.ndarray, sp: float, R: float) -> np.ndarray:
    """Exact (1D) or sub-sampled (2D) integrals of the power weight over each cell minus the ball."""
    h, n = grid.h, grid.n
    if n == 1:
        lo = grid.nodes[:, 0] - h / 2 - x0[0]
        hi = grid.nodes[:, 0] + h / 2 - x0[0]

        def prim(a, b):
            # int_a^b t^{-1-sp} dt over t in [max(a,R), b]
            a = np.maximum(a, R)
            with np.errstate(divide="ignore", invalid="ignore"):
                val = (a ** -sp - b ** -sp) / sp
            return np.where(b > a, val, 0.0)

        return prim(lo, hi) + prim(-hi, -lo)
    dist = grid.distances(x0)
    far = dist - h / np.sqrt(2.0) >= R
    out = np.zeros(grid.size)
    t, w = _gauss(4)
    offs = (t - 0.5) * h
    ww = np.outer(w, w).ravel() * h * h
    ox, oy = [a.ravel() for a in np.meshgrid(offs, offs, indexing="ij")]
    for i in np.flatnonzero(far):
        z = grid.nodes[i] - x0
        r2 = (z[0] + ox) ** 2 + (z[1] + oy) ** 2
        out[i] = np.sum(ww * r2 ** (-(2 + sp) / 2))
    m = 16
    sub = ((np.arange(m) + 0.5) / m - 0.5) * h
    sx, sy = [a.ravel() for a in np.meshgrid(sub, sub, indexing="ij")]
    for i in np.flatnonzero(~far & (dist + h / np.sqrt(2.0) > R)):
        z = grid.nodes[i] - x0
        r = np.sqrt((z[0] + sx) ** 2 + (z[1] + sy) ** 2)
        keep = r >= R
        out[i] = np.sum(r[keep] ** (-(2 + sp))) * (h / m) ** 2
    return out


def tail_record(grid: Grid, v, x0, R: float, s: float, p: float, *,
                quadrature: str = "midpoint", exterior: float = 0.0) -> dict:
    """Tail value and the far-field truncation bound.

    ``exterior`` is the value of ``v`` beyond the box (0 for a zero
    extension).  ``truncation_bound`` bounds how much ``tail**(p-1)`` could
    grow if ``v`` were instead extended by its sup over the box.
    """
    if R <= 0:
        raise DomainError(f"tail radius must be positive, got {R!r}")
    x0 = grid.point(x0)
    v = grid.function(v)
    sp, n = s * p, grid.n
    if quadrature == "midpoint":
        dist = grid.distances(x0)
        mask = dist >= R
        weight = np.zeros(grid.size)
        weight[mask] = dist[mask] ** (-(n + sp)) * grid.cell_volume
    elif quadrature == "cell":
        weight = _cell_weights(grid, x0, sp, R)
    else:
        raise ConfigurationError(f"unknown tail quadrature {quadrature!r}")
    ext = exterior_integral(grid, x0, sp, R)
    inner = np.sum(np.abs(v) ** (p - 1) * weight) + abs(exterior) ** (p - 1) * ext
    value = (R ** sp * inner) ** (1.0 / (p - 1))
    sup = max(float(np.max(np.abs(v))), abs(exterior))
    bound_pm1 = sup ** (p - 1) * R ** sp * ext
    return {
        "value": float(value),
        "truncation_bound": float(bound_pm1),
        "truncation_bound_tail": float((value ** (p - 1) + bound_pm1) ** (1.0 / (p - 1)) - value),
        "quadrature": quadrature,
        "x0": [float(c) for c in x0],
        "R": float(R),
    }


def tail(grid: Grid, v, x0, R: float, s: float, p: float, **kw) -> float:
    """``Tail(v; x0, R) = [R^sp int_{|x-x0|>=R} |v|^{p-1} |x-x0|^{-(n+sp)}]^{1/(p-1)}``."""
    return tail_record(grid, v, x0, R, s, p, **kw)["value"]


def tail_of_truncation(grid: Grid, u, k: float, sign: str, x0, R: float, s: float, p: float, **kw) -> float:
    """Tail of ``(u-k)_+`` or ``(u-k)_-``; beyond the box ``u`` is 0, so the truncation is ``(0-k)_+-``."""
    w = level_truncate(u, k, sign)
    ext = float(level_truncate(np.array([kw.pop("exterior", 0.0)]), k, sign)[0])
    return tail(grid, w, x0, R, s, p, exterior=ext, **kw)
