"""Minimization of the discrete energy over the admissible class.

The energy is convex, and strictly convex in the free values for p > 1, so
any stationary point is the unique minimizer.  Two descent methods are
available:

* ``newton``: damped Newton on the free block of the (smoothed) energy;
* ``pgd``: gradient descent preconditioned by the p = 2 Hessian diagonal.

Both use a backtracking line search that accepts a step on the Armijo test
or, when energy differences drown in round-off, when the directional
derivative at the trial point is still nonpositive (for a convex function
that already implies descent).  For p < 2 the kernel ``|t|^{p-2} t`` is
smoothed and the smoothing is driven to zero by continuation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from threadpoolctl import threadpool_limits

from .energy import EnergyWorkspace, energy, free_hessian, gradient, problem_workspace, weak_pairing
from .errors import ConfigurationError, NonConvergenceError
from .grid import DirichletProblem
from .kernel import WeightMatrix, assemble_weights

log = logging.getLogger(__name__)

DEFAULT_DELTAS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)


@dataclass
class SolveConfig:
    """Stopping rules and line-search parameters.

    ``grad_tol`` is a sup-norm bound on the interior gradient; ``None``
    picks 1e-9 for p >= 2 and 1e-7 for p < 2.  ``delta_schedule`` is
    relative to the oscillation of the exterior data.
    """

    grad_tol: float | None = None
    energy_tol: float = 1e-15
    max_iters: int = 100_000
    delta_schedule: tuple = DEFAULT_DELTAS
    shrink: float = 0.5
    armijo: float = 1e-4
    method: str = "newton"
    init: str = "harmonic"
    seed: int = 0
    stall_window: int = 200

    def __post_init__(self):
        if self.grad_tol is not None and not self.grad_tol > 0:
            raise ConfigurationError("grad_tol must be positive")
        sched = tuple(float(d) for d in self.delta_schedule)
        if not sched or any(b >= a for a, b in zip(sched, sched[1:])) or sched[-1] > 1e-8 or sched[-1] <= 0:
            raise ConfigurationError("delta_schedule must be positive, strictly decreasing and end at <= 1e-8")
        self.delta_schedule = sched
        if not 0 < self.shrink < 1 or not 0 < self.armijo < 1:
            raise ConfigurationError("line search needs 0 < shrink < 1 and 0 < armijo < 1")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be positive")
        if self.method not in ("newton", "pgd"):
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.init not in ("harmonic", "zero", "random"):
            raise ConfigurationError(f"unknown init {self.init!r}")

    def tolerance(self, p: float) -> float:
        if self.grad_tol is not None:
            return self.grad_tol
        return 1e-9 if p >= 2 else 1e-7


@dataclass
class Solution:
    u: np.ndarray
    iterations: int
    final_grad_norm: float
    energy_value: float
    certificate: float
    delta: float
    grad_tol: float
    p: float
    energies: list = field(default_factory=list)
    stages: list = field(default_factory=list)
    converged: bool = True

    def record(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "final_grad_norm": self.final_grad_norm,
            "energy": self.energy_value,
            "certificate": self.certificate,
            "delta": self.delta,
            "grad_tol": self.grad_tol,
            "p": self.p,
            "stages": self.stages,
            "energies": self.energies,
        }


def _spd_solve(H: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # single-threaded LAPACK keeps results independent of the BLAS pool
    with threadpool_limits(limits=1):
        mu = 0.0
        scale = float(np.max(np.abs(np.diag(H)))) or 1.0
        for _ in range(12):
            try:
                A = H if mu == 0.0 else H + mu * np.eye(H.shape[0])
                c = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
                return scipy.linalg.cho_solve(c, rhs)
            except (np.linalg.LinAlgError, ValueError):
                mu = 1e-14 * scale if mu == 0.0 else mu * 100.0
    raise NonConvergenceError("Hessian could not be factorized")


def _initial(problem: DirichletProblem, ws: EnergyWorkspace, cfg: SolveConfig) -> np.ndarray:
    g = problem.g
    u = g.copy()
    F = ws.F
    if cfg.init == "zero":
        return u
    if cfg.init == "random":
        rng = np.random.default_rng(cfg.seed)
        lo, hi = float(np.min(g[ws.C])), float(np.max(g[ws.C]))
        u[F] = rng.uniform(lo, hi if hi > lo else lo + 1.0, size=F.size)
        return u
    ws2 = ws.with_p(2.0).with_delta(0.0)
    H = free_hessian(ws2, u)
    u[F] -= _spd_solve(H, gradient(ws2, u)[F])
    return u


def _descend(ws: EnergyWorkspace, u: np.ndarray, cfg: SolveConfig, tol: float, budget: int, precond=None):
    """Run one stage; returns (u, iterations, grad_norm, energies)."""
    F = ws.F
    u = u.copy()
    g = gradient(ws, u)[F]
    gn = float(np.max(np.abs(g))) if g.size else 0.0
    E = energy(ws, u)
    energies = [E]
    it = 0
    t_prev = 1.0
    flat = 0
    best = gn
    while gn > tol:
        if it >= budget:
            raise NonConvergenceError(
                f"no convergence within {budget} iterations (grad norm {gn:.3e} > {tol:.3e})",
                last_iterate=u, diagnostics={"grad_norm": gn, "energy": E, "iterations": it})
        if cfg.method == "newton":
            step = _spd_solve(free_hessian(ws, u), g)
            t = 1.0
        else:
            step = g / precond
            t = min(1.0, 2.0 * t_prev) if it else 1.0
        slope = -float(np.sum(g * step))
        trial = u.copy()
        while True:
            trial[F] = u[F] - t * step
            Et = energy(ws, trial)
            if Et <= E + cfg.armijo * t * slope:
                break
            gt = gradient(ws, trial)[F]
            if -float(np.sum(gt * step)) <= 0.0 and Et <= E + 1e-12 * abs(E):
                break
            t *= cfg.shrink
            if t < 1e-30:
                raise NonConvergenceError(
                    f"line search stalled (grad norm {gn:.3e} > {tol:.3e})",
                    last_iterate=u, diagnostics={"grad_norm": gn, "energy": E, "iterations": it})
        rel = (E - Et) / max(abs(E), 1e-300)
        u, E, t_prev = trial, Et, t
        g = gradient(ws, u)[F]
        gn = float(np.max(np.abs(g)))
        # stalled: no energy decrease and no new best gradient
        flat = flat + 1 if rel < cfg.energy_tol and gn >= best else 0
        best = min(best, gn)
        energies.append(E)
        it += 1
        if flat >= cfg.stall_window:
            raise NonConvergenceError(
                f"energy stagnated for {flat} iterations (grad norm {gn:.3e} > {tol:.3e})",
                last_iterate=u, diagnostics={"grad_norm": gn, "energy": E, "iterations": it})
    return u, it, gn, energies


def solve(problem: DirichletProblem, cfg: SolveConfig | None = None, weights: WeightMatrix | None = None,
          threads: int = 1) -> Solution:
    """Compute the discrete minimizer; collar values equal ``g`` exactly."""
    cfg = cfg or SolveConfig()
    p = problem.kernel.p
    if weights is None:
        weights = assemble_weights(problem.kernel, problem.grid, threads=threads)
    ws0 = problem_workspace(problem, weights)
    tol = cfg.tolerance(p)
    gC = problem.g[ws0.C]
    scale = float(np.max(gC) - np.min(gC)) if gC.size else 0.0
    scale = scale if scale > 0 else 1.0
    deltas = [0.0] if p >= 2 else [d * scale for d in cfg.delta_schedule]
    precond = None
    if cfg.method == "pgd":
        ws2 = ws0.with_p(2.0)
        precond = np.diag(free_hessian(ws2, problem.g)).copy()
    u = _initial(problem, ws0, cfg)
    total = 0
    energies, stages = [], []
    gn = float("nan")
    for delta in deltas:
        ws = ws0.with_delta(delta)
        u, it, gn, stage_energies = _descend(ws, u, cfg, tol, cfg.max_iters - total, precond)
        total += it
        energies.extend(stage_energies)
        stages.append({"delta": delta, "iterations": it, "grad_norm": gn, "energy": stage_energies[-1]})
        log.debug("stage delta=%g: %d iterations, grad %.3e", delta, it, gn)
    u[ws0.C] = problem.g[ws0.C]
    ws = ws0.with_delta(deltas[-1])
    sol = Solution(u=u, iterations=total, final_grad_norm=gn, energy_value=energy(ws, u),
                   certificate=0.0, delta=deltas[-1], grad_tol=tol, p=p,
                   energies=energies, stages=stages)
    sol.certificate = verify_euler_lagrange(sol, problem, weights, workspace=ws)["certificate"]
    return sol


def verify_euler_lagrange(sol: Solution, problem: DirichletProblem, weights: WeightMatrix | None = None,
                          basis_size: int | None = None, workspace: EnergyWorkspace | None = None) -> dict:
    """Weak residual against the nodal basis ``{e_i : i interior}``.

    ``certificate`` is ``max_i |pairing(u, e_i)|``; it equals the interior
    gradient sup-norm divided by p.  ``normalized`` divides each pairing by
    its Hoelder bound ``E(u)^{(p-1)/p} E(e_i)^{1/p}``.
    """
    ws = workspace
    if ws is None:
        if weights is None:
            weights = assemble_weights(problem.kernel, problem.grid)
        ws = problem_workspace(problem, weights, delta=sol.delta)
    F = ws.F if basis_size is None else ws.F[:basis_size]
    grad = gradient(ws, sol.u)
    pair = grad[F] / ws.p
    if F.size and F.size < 8:
        # spot-check the identity through the pairing itself
        for k, i in enumerate(F):
            e = np.zeros(ws.size)
            e[i] = 1.0
            pair[k] = weak_pairing(ws, sol.u, e)
    cert = float(np.max(np.abs(pair))) if pair.size else 0.0
    Eu = energy(ws.with_delta(0.0), sol.u)
    basis_energy = 2.0 * (np.sum(ws.W_FF, axis=1) + np.sum(ws.W_FC, axis=1) + ws.far)
    idx = np.searchsorted(ws.F, F)
    denom = Eu ** ((ws.p - 1) / ws.p) * basis_energy[idx] ** (1 / ws.p)
    with np.errstate(divide="ignore", invalid="ignore"):
        norm = np.where(denom > 0, np.abs(pair) / denom, 0.0)
    return {
        "certificate": cert,
        "normalized": float(np.max(norm)) if norm.size else 0.0,
        "bound": sol.grad_tol / ws.p,
        "passed": bool(cert <= sol.grad_tol / ws.p * (1 + 1e-12)),
        "basis_size": int(F.size),
    }


def comparison_check(sol: Solution, problem: DirichletProblem, tol: float = 1e-8) -> dict:
    """Check ``min g - tol <= u_i <= max g + tol`` on interior nodes.

    With the far field on, the data beyond the box (0) joins the range.
    """
    grid = problem.grid
    gC = problem.g[grid.collar]
    lo, hi = float(np.min(gC)), float(np.max(gC))
    if problem.far_field:
        lo, hi = min(lo, 0.0), max(hi, 0.0)
    uI = sol.u[grid.interior]
    lower = float(np.min(uI) - lo)
    upper = float(hi - np.max(uI))
    return {
        "min_data": lo,
        "max_data": hi,
        "min_u": float(np.min(uI)),
        "max_u": float(np.max(uI)),
        "lower_slack": lower,
        "upper_slack": upper,
        "passed": bool(lower >= -tol and upper >= -tol),
    }
