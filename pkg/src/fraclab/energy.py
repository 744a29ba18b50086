"""Discrete energy, its gradient (the discrete fractional p-Laplacian) and the weak pairing.

With pair weights ``w_ij`` the energy is ``sum_{i,j} w_ij psi(v_i - v_j)``
over all ordered pairs with at least one free node, where
``psi(t) = (t^2 + delta^2)^{p/2} - delta^p`` (``|t|^p`` when delta = 0).
Pairs of two fixed (collar) nodes are constant over the admissible class
and are left out.  An optional far-field vector adds the interaction
``2 sum_i f_i psi(v_i)`` of free nodes with the zero data beyond the box.

All reductions run over fixed row blocks and sum in a fixed order, so
results are reproducible bit for bit.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .kernel import WeightMatrix

_BLOCK_ELEMS = 1 << 21


def psi(t, p: float, delta: float):
    if delta == 0.0:
        return np.abs(t) ** p
    return (t * t + delta * delta) ** (p / 2.0) - delta ** p


def phi(t, p: float, delta: float):
    """Smoothed odd power ``(t^2 + delta^2)^{(p-2)/2} t``; ``|t|^{p-2} t`` (0 at 0) when delta = 0."""
    if delta == 0.0:
        return np.sign(t) * np.abs(t) ** (p - 1.0)
    return (t * t + delta * delta) ** ((p - 2.0) / 2.0) * t


def dphi(t, p: float, delta: float):
    if delta == 0.0:
        with np.errstate(divide="ignore"):
            return (p - 1.0) * np.abs(t) ** (p - 2.0)
    r2 = t * t + delta * delta
    return r2 ** ((p - 4.0) / 2.0) * ((p - 1.0) * t * t + delta * delta)


class EnergyWorkspace:
    """Weights, exponent and smoothing for energy evaluations.

    Parameters
    ----------
    weights : WeightMatrix or ndarray
        Symmetric pair weights with zero diagonal.
    p : float
        Exponent, ``p > 1``.
    delta : float
        Smoothing of ``|t|^{p-2} t``; 0 evaluates the exact functional.
    free : bool array, optional
        Free (interior) nodes.  Pairs of two non-free nodes are dropped.
        Default: every node is free.
    far_field : array, optional
        Far-field weights ``f_i`` (only read on free nodes).
    """

    def __init__(self, weights, p: float, delta: float = 0.0, free=None, far_field=None):
        W = weights.matrix if isinstance(weights, WeightMatrix) else np.asarray(weights, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ConfigurationError("weights must be a square matrix")
        if not p > 1.0:
            raise ConfigurationError(f"p must exceed 1, got {p}")
        if delta < 0.0:
            raise ConfigurationError(f"delta must be nonnegative, got {delta}")
        N = W.shape[0]
        self.p = float(p)
        self.delta = float(delta)
        self.size = N
        self.free = np.ones(N, dtype=bool) if free is None else np.asarray(free, dtype=bool).copy()
        if self.free.shape != (N,):
            raise ConfigurationError("free mask does not match the weight matrix")
        self.F = np.flatnonzero(self.free)
        self.C = np.flatnonzero(~self.free)
        if self.C.size == 0:
            self.W_FF = W
        else:
            self.W_FF = W[np.ix_(self.F, self.F)]
        self.W_FC = W[np.ix_(self.F, self.C)]
        far = np.zeros(N) if far_field is None else np.asarray(far_field, dtype=float)
        self.far = far[self.F].copy()
        self._rows = max(1, _BLOCK_ELEMS // max(N, 1))

    def with_delta(self, delta: float) -> "EnergyWorkspace":
        clone = object.__new__(EnergyWorkspace)
        clone.__dict__.update(self.__dict__)
        if delta < 0.0:
            raise ConfigurationError(f"delta must be nonnegative, got {delta}")
        clone.delta = float(delta)
        return clone

    def with_p(self, p: float) -> "EnergyWorkspace":
        clone = self.with_delta(self.delta)
        clone.p = float(p)
        return clone

    def _blocks(self):
        nF = self.F.size
        for a in range(0, nF, self._rows):
            yield a, min(a + self._rows, nF)

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.size,):
            raise ConfigurationError(f"grid function has shape {v.shape}, expected ({self.size},)")
        return v


def energy(ws: EnergyWorkspace, v) -> float:
    """``2 sum_{i<j} w_ij psi(v_i - v_j)`` (plus the far-field term)."""
    v = ws._check(v)
    p, delta = ws.p, ws.delta
    vF, vC = v[ws.F], v[ws.C]
    rows = np.empty(ws.F.size)
    for a, b in ws._blocks():
        d = vF[a:b, None] - vF[None, :]
        acc = np.sum(ws.W_FF[a:b] * psi(d, p, delta), axis=1)
        if vC.size:
            acc += 2.0 * np.sum(ws.W_FC[a:b] * psi(vF[a:b, None] - vC[None, :], p, delta), axis=1)
        rows[a:b] = acc
    rows += 2.0 * ws.far * psi(vF, p, delta)
    return float(np.sum(rows))


def gradient(ws: EnergyWorkspace, v) -> np.ndarray:
    """Component ``i`` is ``2p sum_j w_ij phi(v_i - v_j)`` (plus far field)."""
    v = ws._check(v)
    p, delta = ws.p, ws.delta
    vF, vC = v[ws.F], v[ws.C]
    gF = np.empty(ws.F.size)
    gC = np.zeros(ws.C.size)
    for a, b in ws._blocks():
        d = vF[a:b, None] - vF[None, :]
        acc = np.sum(ws.W_FF[a:b] * phi(d, p, delta), axis=1)
        if vC.size:
            t = ws.W_FC[a:b] * phi(vF[a:b, None] - vC[None, :], p, delta)
            acc += np.sum(t, axis=1)
            gC -= np.sum(t, axis=0)
        gF[a:b] = acc
    gF += ws.far * phi(vF, p, delta)
    out = np.empty(ws.size)
    out[ws.F] = 2.0 * p * gF
    out[ws.C] = 2.0 * p * gC
    return out


def free_hessian(ws: EnergyWorkspace, v) -> np.ndarray:
    """Hessian of the energy restricted to the free nodes (dense)."""
    v = ws._check(v)
    p, delta = ws.p, ws.delta
    vF, vC = v[ws.F], v[ws.C]
    nF = ws.F.size
    H = np.empty((nF, nF))
    diag = np.zeros(nF)
    for a, b in ws._blocks():
        d = vF[a:b, None] - vF[None, :]
        d[np.arange(b - a), np.arange(a, b)] = 1.0  # w_ii = 0; keep dphi finite
        t = ws.W_FF[a:b] * dphi(d, p, delta)
        H[a:b] = -t
        acc = np.sum(t, axis=1)
        if vC.size:
            acc += np.sum(ws.W_FC[a:b] * dphi(vF[a:b, None] - vC[None, :], p, delta), axis=1)
        diag[a:b] = acc
    diag += ws.far * dphi(vF, p, delta)
    H[np.arange(nF), np.arange(nF)] = diag
    return 2.0 * p * H


def weak_pairing(ws: EnergyWorkspace, u, eta) -> float:
    """``2 sum_{i<j} w_ij phi(u_i - u_j)(eta_i - eta_j)``, i.e. ``<gradient(u), eta> / p``.

    ``eta`` must vanish on the non-free nodes.
    """
    eta = ws._check(eta)
    if ws.C.size and np.any(eta[ws.C] != 0.0):
        raise ContractViolation("test function must vanish on the collar")
    return float(np.sum(gradient(ws, u) * eta)) / ws.p


def problem_workspace(problem, weights: WeightMatrix, p: float | None = None, delta: float = 0.0) -> EnergyWorkspace:
    """Workspace for a Dirichlet problem: interior nodes free, far field if enabled."""
    from .tail import far_field_weights

    far = far_field_weights(problem.grid, problem.kernel) if problem.far_field else None
    return EnergyWorkspace(weights, problem.kernel.p if p is None else p, delta,
                           free=problem.grid.interior, far_field=far)
