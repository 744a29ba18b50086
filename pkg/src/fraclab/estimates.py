"""Numerical checks of the quantitative estimates on computed solutions.

Every verifier returns an :class:`EstimateReport` holding the left-hand
side, the constant-free right-hand side pieces and their ratio (the
empirical constant).  Structural constants are never compared against
theoretical values; only their finiteness and stability are checked.

Discretization conventions: the sup over a ball is the max over ball
nodes, integrals over balls are ``h^n``-weighted node sums, averages
divide by the node count, and double integrals against ``K`` are sums of
the assembled pair weights over ordered node pairs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import gamma

from .errors import ConfigurationError, PreconditionError, UnsupportedError
from .grid import DirichletProblem, ball_nodes, cutoff, level_truncate
from .kernel import WeightMatrix
from .solver import Solution
from .tail import exterior_integral, tail_of_truncation, tail_record

SIGMA = 0.25


@dataclass
class EstimateReport:
    name: str
    parameters: dict
    lhs: float
    rhs_components: dict
    empirical_constant: float | None
    passed: bool
    unbounded: bool = False
    metadata: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def __post_init__(self):
        if self.empirical_constant is not None and not self.empirical_constant >= 0:
            raise ValueError("empirical constant must be nonnegative")

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "parameters": self.parameters,
            "lhs": self.lhs,
            "rhs_components": self.rhs_components,
            "empirical_constant": self.empirical_constant,
            "unbounded": self.unbounded,
            "passed": self.passed,
            "metadata": self.metadata,
            "records": self.records,
        }


def _ratio(num: float, den: float):
    """``num/den`` with ``0/0 = 0``; returns ``(value, unbounded)``."""
    if den > 0:
        return num / den, False
    if num <= 0:
        return 0.0, False
    return None, True


def _meta(sol: Solution, problem: DirichletProblem) -> dict:
    g = problem.grid
    return {"h": g.h, "n": g.n, "nodes": g.size, "interior": int(g.interior.sum()),
            "certificate": sol.certificate, "grad_tol": sol.grad_tol}


def _weights(weights) -> np.ndarray:
    return weights.matrix if isinstance(weights, WeightMatrix) else np.asarray(weights)


def _require_ball(problem: DirichletProblem, x0, r: float, what: str = "B_r(x0)"):
    if r <= 0:
        raise ConfigurationError("radius must be positive")
    if not problem.grid.omega.contains_ball(problem.grid.point(x0), r):
        raise ConfigurationError(f"{what} with r = {r} is not contained in the domain")


def _ball(problem, x0, r):
    idx = ball_nodes(problem.grid, x0, r)
    if idx.size == 0:
        raise ConfigurationError(f"ball of radius {r} around {x0} contains no node")
    return idx


# --- elementary inequality -----------------------------------------------------

def lemma_constant(p):
    """``c_p = (p - 1) Gamma(max{1, p - 2})``."""
    p = np.asarray(p, dtype=float)
    return (p - 1.0) * gamma(np.maximum(1.0, p - 2.0))


def check_elementary_inequality(samples: int = 1_000_000, seed: int = 0, p_max: float = 6.0,
                                constant=lemma_constant, chunk: int = 100_000, keep: int = 10) -> dict:
    """Sample ``|a|^p <= |b|^p + c eps |b|^p + (1 + c eps) eps^{1-p} |a-b|^p``.

    ``a, b`` are uniform in ``[-10, 10]^m`` with ``m`` uniform in {1, 2, 3},
    ``eps`` uniform in ``(0, 1]`` and ``p`` uniform in ``(1, p_max]``.
    A sample violates the inequality when the slack is below
    ``-1e-12 * max(lhs, rhs)``.
    """
    if samples < 1:
        raise ConfigurationError("samples must be positive")
    rng = np.random.default_rng(seed)
    violations = 0
    tightest = math.inf
    worst = []
    by_p = []
    done = 0
    while done < samples:
        m_count = min(chunk, samples - done)
        dim = rng.integers(1, 4, size=m_count)
        a = rng.uniform(-10.0, 10.0, size=(m_count, 3))
        b = rng.uniform(-10.0, 10.0, size=(m_count, 3))
        mask = np.arange(3)[None, :] < dim[:, None]
        a, b = a * mask, b * mask
        eps = 1.0 - rng.random(m_count)
        p = 1.0 + (p_max - 1.0) * (1.0 - rng.random(m_count))
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        nd = np.linalg.norm(a - b, axis=1)
        c = constant(p)
        lhs = na ** p
        rhs = nb ** p + c * eps * nb ** p + (1.0 + c * eps) * eps ** (1.0 - p) * nd ** p
        slack = rhs - lhs
        scale = np.maximum(np.maximum(lhs, rhs), 1e-300)
        rel = slack / scale
        bad = slack < -1e-12 * scale
        violations += int(np.sum(bad))
        tightest = min(tightest, float(np.min(rel)))
        for k in np.flatnonzero(bad):
            by_p.append(float(p[k]))
            worst.append({"p": float(p[k]), "eps": float(eps[k]), "abs_a": float(na[k]),
                          "abs_b": float(nb[k]), "abs_a_minus_b": float(nd[k]), "relative_slack": float(rel[k])})
        worst = sorted(worst, key=lambda w: w["relative_slack"])[:keep]
        done += m_count
    return {
        "samples": samples,
        "seed": seed,
        "violations": violations,
        "tightest_relative_slack": tightest,
        "violating_p_range": [min(by_p), max(by_p)] if by_p else None,
        "worst": worst,
        "c_2": float(lemma_constant(2.0)),
        "passed": violations == 0,
    }


# --- Caccioppoli ---------------------------------------------------------------

def verify_caccioppoli(sol: Solution, problem: DirichletProblem, weights, x0, r: float, k: float,
                       sign: str = "plus", inner: float | None = None, outer: float | None = None,
                       ceiling: float = math.inf) -> EstimateReport:
    """Caccioppoli inequality with tail for ``w = (u - k)_+`` or ``(k - u)_+``.

    The cutoff is the radial ramp from ``inner`` (default ``r/2``) to
    ``outer`` (default ``r``); its support must stay inside ``B_r``.
    RHS2's outer integral runs over the box minus ``B_r`` plus the
    exterior of the box, where ``u = 0``.
    """
    grid, spec = problem.grid, problem.kernel
    p = spec.p
    _require_ball(problem, x0, r)
    inner = r / 2 if inner is None else inner
    outer = r if outer is None else outer
    if outer > r:
        raise ConfigurationError(f"cutoff support radius {outer} exceeds r = {r}")
    W = _weights(weights)
    u = sol.u
    w = level_truncate(u, k, sign)
    w_ext = float(level_truncate(np.array([0.0]), k, sign)[0])
    phi = cutoff(grid, x0, inner, outer)
    B = _ball(problem, x0, r)
    WB = W[np.ix_(B, B)]
    wB, phiB = w[B], phi[B]
    wphi = wB * phiB
    lhs = float(np.sum(WB * np.abs(wphi[:, None] - wphi[None, :]) ** p))
    mx = np.maximum(wB[:, None], wB[None, :])
    rhs1 = float(np.sum(WB * mx ** p * np.abs(phiB[:, None] - phiB[None, :]) ** p))
    mass = float(np.sum(wB * phiB ** p)) * grid.cell_volume
    outside = np.ones(grid.size, dtype=bool)
    outside[B] = False
    supp = B[phiB > 0]
    sup_term = 0.0
    if supp.size:
        inner_sums = W[np.ix_(supp, np.flatnonzero(outside))] @ (w[outside] ** (p - 1)) / grid.cell_volume
        if w_ext > 0:
            ext = np.array([exterior_integral(grid, grid.nodes[y], spec.sp)
                            * float(spec.coefficient(grid.nodes[y], grid.nodes[y])) for y in supp])
            inner_sums = inner_sums + w_ext ** (p - 1) * ext
        sup_term = float(np.max(inner_sums))
    rhs2 = mass * sup_term
    emp, unbounded = _ratio(lhs, rhs1 + rhs2)
    return EstimateReport(
        name="caccioppoli",
        parameters={"p": p, "s": spec.s, "n": spec.n, "lam": spec.lam, "Lam": spec.Lam, "family": spec.family,
                    "x0": [float(c) for c in np.atleast_1d(x0)], "r": r, "k": k, "sign": sign,
                    "inner": inner, "outer": outer},
        lhs=lhs,
        rhs_components={"local": rhs1, "tail": rhs2, "mass": mass, "tail_sup": sup_term},
        empirical_constant=emp,
        unbounded=unbounded,
        passed=bool(not unbounded and emp <= ceiling),
        metadata=_meta(sol, problem),
    )


def caccioppoli_sweep(sol: Solution, problem: DirichletProblem, weights, draws: int = 50, seed: int = 0,
                      ceiling: float = math.inf) -> EstimateReport:
    """Random ``(x0, r, k, sign)`` draws with ``B_r(x0)`` inside the domain.

    ``k`` is uniform between the min and max of ``u`` on the ball, so the
    truncation is never identically zero.
    """
    grid = problem.grid
    omega = grid.omega
    rng = np.random.default_rng(seed)
    rmin = 4.0 * grid.h
    interior = grid.nodes[grid.interior]
    depth = np.array([omega.boundary_distance(x) for x in interior])
    centers = interior[depth > rmin * 1.5]
    if centers.size == 0:
        raise ConfigurationError("domain too small for the sweep at this resolution")
    records = []
    for _ in range(draws):
        x0 = centers[rng.integers(centers.shape[0])]
        rmax = omega.boundary_distance(x0)
        r = float(rng.uniform(rmin, rmax))
        B = _ball(problem, x0, r)
        lo, hi = float(np.min(sol.u[B])), float(np.max(sol.u[B]))
        k = float(rng.uniform(lo, hi)) if hi > lo else lo
        sign = "plus" if rng.random() < 0.5 else "minus"
        rep = verify_caccioppoli(sol, problem, weights, x0, r, k, sign)
        records.append({"x0": [float(c) for c in x0], "r": r, "k": k, "sign": sign, "lhs": rep.lhs,
                        "local": rep.rhs_components["local"], "tail": rep.rhs_components["tail"],
                        "ratio": rep.empirical_constant})
    ratios = [rec["ratio"] for rec in records]
    unbounded = any(q is None for q in ratios)
    finite = [q for q in ratios if q is not None]
    emp = max(finite) if finite else 0.0
    return EstimateReport(
        name="caccioppoli-sweep",
        parameters={"p": problem.kernel.p, "s": problem.kernel.s, "family": problem.kernel.family,
                    "draws": draws, "seed": seed},
        lhs=max(rec["lhs"] for rec in records),
        rhs_components={"min_ratio": min(finite) if finite else 0.0, "median_ratio": float(np.median(finite)) if finite else 0.0},
        empirical_constant=None if unbounded else emp,
        unbounded=unbounded,
        passed=bool(not unbounded and emp <= ceiling),
        metadata=_meta(sol, problem),
        records=records,
    )


# --- logarithmic estimates -------------------------------------------------------

def _nonnegative_on(sol, problem, x0, R):
    idx = _ball(problem, x0, R)
    vals = sol.u[idx]
    if np.any(vals < 0):
        bad = idx[np.argmin(vals)]
        loc = tuple(float(c) for c in problem.grid.nodes[bad])
        raise PreconditionError(f"u = {float(sol.u[bad])!r} < 0 inside B_R(x0)", location=loc)


def _log_bracket(sol, problem, x0, R, r, d):
    spec, grid = problem.kernel, problem.grid
    p, sp = spec.p, spec.sp
    t = tail_of_truncation(grid, sol.u, 0.0, "minus", x0, R, spec.s, p)
    tail_term = d ** (1 - p) * (r / R) ** sp * t ** (p - 1)
    return t, tail_term


def verify_log_lemma(sol: Solution, problem: DirichletProblem, weights, x0, R: float, r: float, d: float,
                     ceiling: float = math.inf) -> EstimateReport:
    """Logarithmic estimate on ``B_r`` for a solution nonnegative on ``B_R``."""
    spec, grid = problem.kernel, problem.grid
    p, sp, n = spec.p, spec.sp, spec.n
    if d <= 0:
        raise ConfigurationError("d must be positive")
    if 2 * r > R:
        raise ConfigurationError(f"need 2r <= R, got r = {r}, R = {R}")
    _require_ball(problem, x0, R, "B_R(x0)")
    _nonnegative_on(sol, problem, x0, R)
    B = _ball(problem, x0, r)
    W = _weights(weights)
    lu = np.log(d + sol.u[B])
    lhs = float(np.sum(W[np.ix_(B, B)] * np.abs(lu[:, None] - lu[None, :]) ** p))
    t, tail_term = _log_bracket(sol, problem, x0, R, r, d)
    geometric = r ** (n - sp)
    rhs = geometric * (tail_term + 1.0)
    emp, unbounded = _ratio(lhs, rhs)
    return EstimateReport(
        name="log-lemma",
        parameters={"p": p, "s": spec.s, "n": n, "x0": [float(c) for c in np.atleast_1d(x0)],
                    "R": R, "r": r, "d": d},
        lhs=lhs,
        rhs_components={"geometric": geometric, "tail_term": tail_term, "tail": t, "bracket": tail_term + 1.0},
        empirical_constant=emp,
        unbounded=unbounded,
        passed=bool(not unbounded and emp <= ceiling),
        metadata=_meta(sol, problem),
    )


def log_lemma_sweep(sol: Solution, problem: DirichletProblem, weights, x0, R: float, r: float,
                    ds=(0.01, 0.1, 1.0), relative: bool = True, spread: float = 10.0) -> EstimateReport:
    """Log estimate over several ``d``; passes when the constants stay within ``spread``.

    With ``relative`` the values of ``d`` are multiples of ``osc_{B_R} u``.
    """
    B = _ball(problem, x0, R)
    osc = float(np.ptp(sol.u[B]))
    scale = osc if relative and osc > 0 else 1.0
    reps = [verify_log_lemma(sol, problem, weights, x0, R, r, d * scale) for d in ds]
    consts = [rep.empirical_constant for rep in reps]
    unbounded = any(c is None for c in consts)
    finite = [c for c in consts if c is not None]
    positive = [c for c in finite if c > 0]
    ratio = max(positive) / min(positive) if positive else 1.0
    return EstimateReport(
        name="log-lemma-sweep",
        parameters={"p": problem.kernel.p, "s": problem.kernel.s, "x0": [float(c) for c in np.atleast_1d(x0)],
                    "R": R, "r": r, "d_factors": list(ds), "d_scale": scale},
        lhs=max(rep.lhs for rep in reps),
        rhs_components={"spread": ratio},
        empirical_constant=None if unbounded else max(finite),
        unbounded=unbounded,
        passed=bool(not unbounded and ratio <= spread),
        metadata=_meta(sol, problem),
        records=[{"d": rep.parameters["d"], "lhs": rep.lhs, "tail_term": rep.rhs_components["tail_term"],
                  "constant": rep.empirical_constant} for rep in reps],
    )


def truncated_log(u, a: float, b: float, d: float) -> np.ndarray:
    """``min{(log(a+d) - log(u+d))_+, log b}``."""
    if a <= 0 or d <= 0 or b <= 1:
        raise ConfigurationError("need a > 0, d > 0 and b > 1")
    return np.minimum(np.maximum(np.log(a + d) - np.log(np.asarray(u) + d), 0.0), math.log(b))


def verify_poincare_log(sol: Solution, problem: DirichletProblem, x0, R: float, r: float, a: float,
                        b: float, d: float, ceiling: float = math.inf) -> EstimateReport:
    """Mean ``p``-th power deviation of the truncated log on ``B_r``."""
    spec = problem.kernel
    p = spec.p
    if 2 * r > R:
        raise ConfigurationError(f"need r <= R/2, got r = {r}, R = {R}")
    _require_ball(problem, x0, R, "B_R(x0)")
    _nonnegative_on(sol, problem, x0, R)
    B = _ball(problem, x0, r)
    v = truncated_log(sol.u[B], a, b, d)
    lhs = float(np.mean(np.abs(v - np.mean(v)) ** p))
    t, tail_term = _log_bracket(sol, problem, x0, R, r, d)
    emp, unbounded = _ratio(lhs, tail_term + 1.0)
    return EstimateReport(
        name="poincare-log",
        parameters={"p": p, "s": spec.s, "x0": [float(c) for c in np.atleast_1d(x0)], "R": R, "r": r,
                    "a": a, "b": b, "d": d},
        lhs=lhs,
        rhs_components={"tail_term": tail_term, "tail": t, "bracket": tail_term + 1.0,
                        "truncation_bound": math.log(b) ** p},
        empirical_constant=emp,
        unbounded=unbounded,
        passed=bool(not unbounded and emp <= ceiling and lhs <= math.log(b) ** p * (1 + 1e-12)),
        metadata=_meta(sol, problem),
    )


# --- local boundedness -----------------------------------------------------------

def sup_exponent(n: int, s: float, p: float) -> float:
    """Exponent ``(p-1) n / (s p^2)`` of ``delta`` in the local sup bound."""
    return (p - 1) * n / (s * p * p)


def exponent_identity(n: int, s: float, p: float) -> bool:
    """Exact rational check of ``(p-1) p* / (beta p^2) = (p-1) n / (s p^2)``.

    The inputs are converted to exact fractions, so the identity is tested
    without rounding.
    """
    n, s, p = Fraction(n), Fraction(s), Fraction(p)
    sp = s * p
    if sp >= n:
        raise UnsupportedError("p* is undefined for sp >= n")
    pstar = n * p / (n - sp)
    beta = sp / (n - sp)
    lhs = (p - 1) * pstar / (beta * p * p)
    chain = (p - 1) / p * (n / (n - p * s)) * ((n - sp) / sp)
    return lhs == chain == (p - 1) * n / (s * p * p)


def verify_local_boundedness(sol: Solution, problem: DirichletProblem, x0, r: float,
                             deltas=(0.1, 0.5, 1.0), ceiling: float = math.inf) -> EstimateReport:
    """Local sup bound with tail, one empirical constant per ``delta``."""
    spec, grid = problem.kernel, problem.grid
    n, s, p = spec.n, spec.s, spec.p
    if spec.sp >= n:
        raise UnsupportedError("the local sup bound needs sp < n")
    if not exponent_identity(n, s, p):
        raise AssertionError("exponent bookkeeping mismatch")
    _require_ball(problem, x0, r)
    half = _ball(problem, x0, r / 2)
    B = _ball(problem, x0, r)
    sup = float(np.max(sol.u[half]))
    t = tail_of_truncation(grid, sol.u, 0.0, "plus", x0, r / 2, s, p)
    avg = float(np.mean(np.maximum(sol.u[B], 0.0) ** p)) ** (1 / p)
    e = sup_exponent(n, s, p)
    records = []
    for delta in deltas:
        if not 0 < delta <= 1:
            raise ConfigurationError(f"delta must lie in (0, 1], got {delta}")
        local = delta ** (-e) * avg
        excess = max(sup - delta * t, 0.0)
        c, unb = _ratio(excess, local)
        records.append({"delta": delta, "tail_term": delta * t, "local_factor": local,
                        "constant": c, "unbounded": unb})
    unbounded = any(rec["unbounded"] for rec in records)
    consts = [rec["constant"] for rec in records if rec["constant"] is not None]
    emp = max(consts) if consts else 0.0
    return EstimateReport(
        name="local-boundedness",
        parameters={"p": p, "s": s, "n": n, "x0": [float(c) for c in np.atleast_1d(x0)], "r": r,
                    "deltas": list(deltas), "exponent": e},
        lhs=sup,
        rhs_components={"tail": t, "mean_p": avg},
        empirical_constant=None if unbounded else emp,
        unbounded=unbounded,
        passed=bool(not unbounded and emp <= ceiling),
        metadata=_meta(sol, problem),
        records=records,
    )


# --- De Giorgi iteration -----------------------------------------------------------

@dataclass
class DeGiorgiSchedule:
    """Radii ``r_j = (1 + 2^-j) r / 2`` and levels ``k_j = k + (1 - 2^-j) k_tilde``."""

    r: float
    k: float
    k_tilde: float
    J: int

    def __post_init__(self):
        if self.r <= 0 or self.k_tilde <= 0 or self.J < 1:
            raise ConfigurationError("need r > 0, k_tilde > 0 and J >= 1")

    @property
    def radii(self) -> np.ndarray:
        j = np.arange(self.J + 1)
        return 0.5 * (1.0 + 2.0 ** -j) * self.r

    @property
    def mid_radii(self) -> np.ndarray:
        rr = self.radii
        return 0.5 * (rr[:-1] + rr[1:])

    @property
    def levels(self) -> np.ndarray:
        j = np.arange(self.J + 1)
        return self.k + (1.0 - 2.0 ** -j) * self.k_tilde

    @property
    def mid_levels(self) -> np.ndarray:
        kk = self.levels
        return 0.5 * (kk[:-1] + kk[1:])


def degiorgi_masses(u, grid, x0, schedule: DeGiorgiSchedule) -> np.ndarray:
    """Truncations ``w_j = (u - k_j)_+`` restricted to ``B_j``, one array per ``j``."""
    out = []
    for rj, kj in zip(schedule.radii, schedule.levels):
        idx = ball_nodes(grid, x0, rj)
        out.append(np.maximum(u[idx] - kj, 0.0))
    return out


def degiorgi_diagnostic(sol: Solution, problem: DirichletProblem, x0, r: float, k: float = 0.0,
                        k_tilde: float | None = None, J: int = 20, delta: float = 1.0,
                        H: float | None = None, safety: float = 2.0) -> EstimateReport:
    """Masses ``A_j`` along the De Giorgi schedule.

    Without ``k_tilde`` the level increment follows
    ``k_tilde = delta Tail(w_0; x0, r/2) + delta^{-e} H A_0``.  Without
    ``H``, the smallest ``H`` giving ``k + k_tilde >= sup_{B_{r/2}} u`` is
    fitted and multiplied by ``safety``.
    """
    spec, grid = problem.kernel, problem.grid
    p = spec.p
    if spec.sp >= spec.n:
        raise UnsupportedError("the De Giorgi iteration needs sp < n")
    _require_ball(problem, x0, r)
    u = sol.u
    B0 = _ball(problem, x0, r)
    A0 = float(np.mean(np.maximum(u[B0] - k, 0.0) ** p)) ** (1 / p)
    t = tail_of_truncation(grid, u, k, "plus", x0, r / 2, spec.s, p)
    e = sup_exponent(spec.n, spec.s, p)
    sup_half = float(np.max(u[_ball(problem, x0, r / 2)]))
    H_fit = None
    if k_tilde is None:
        if H is None:
            need = sup_half - k - delta * t
            H_fit = max(need, 0.0) / (delta ** (-e) * A0) if A0 > 0 else 0.0
            H = safety * H_fit
        k_tilde = delta * t + delta ** (-e) * H * A0
    if k_tilde <= 0:
        # nothing above the base level: every mass vanishes
        A = np.zeros(J + 1)
        sched = None
    else:
        sched = DeGiorgiSchedule(r, k, k_tilde, J)
        A = np.array([float(np.mean(w ** p)) ** (1 / p) for w in degiorgi_masses(u, grid, x0, sched)])
    nonincreasing = bool(np.all(np.diff(A[1:]) <= 1e-15 * max(A0, 1.0)))
    decayed = bool(A[-1] <= 1e-3 * A[0]) if A[0] > 0 else True
    pos = np.flatnonzero(A > 0)
    rate = None
    if pos.size >= 2:
        rate = float(np.exp(np.polyfit(pos, np.log(A[pos]), 1)[0]))
    return EstimateReport(
        name="degiorgi",
        parameters={"p": p, "s": spec.s, "n": spec.n, "x0": [float(c) for c in np.atleast_1d(x0)], "r": r,
                    "k": k, "k_tilde": k_tilde, "J": J, "delta": delta, "H": H, "H_fit": H_fit,
                    "exponent": e},
        lhs=float(A[-1]),
        rhs_components={"A0": float(A[0]), "tail": t, "sup_half": sup_half, "bound": k + k_tilde},
        empirical_constant=H_fit if H_fit is not None else H,
        passed=bool(nonincreasing and decayed),
        metadata={**_meta(sol, problem), "decay_rate": rate, "nonincreasing_after_1": nonincreasing,
                  "decayed": decayed},
        records=[{"j": j, "radius": float(sched.radii[j]) if sched else None,
                  "level": float(sched.levels[j]) if sched else None, "A": float(A[j])}
                 for j in range(J + 1)],
    )


# --- Hoelder diagnostic --------------------------------------------------------------

@dataclass
class OscillationSchedule:
    """Radii ``r_j = sigma^j r/2`` and the model oscillations ``omega_j``."""

    r: float
    levels: int
    omega0: float
    alpha: float
    sigma: float = SIGMA

    def __post_init__(self):
        if not 0 < self.sigma <= 0.25:
            raise ConfigurationError("sigma must lie in (0, 1/4]")
        if self.alpha <= 0:
            raise ConfigurationError("alpha must be positive")

    @property
    def radii(self) -> np.ndarray:
        return self.sigma ** np.arange(self.levels) * self.r / 2

    @property
    def omegas(self) -> np.ndarray:
        return (self.radii / self.radii[0]) ** self.alpha * self.omega0


def _fit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r2


def estimate_holder(sol: Solution, problem: DirichletProblem, x0, r: float, levels: int = 4,
                    sigma: float = SIGMA, c_sup: float = 1.0, min_nodes: int = 8):
    """Fit the oscillation decay over ``B_{sigma^j r/2}`` and record the density dichotomy.

    Returns ``(alpha_fit, report)``; ``alpha_fit`` is ``None`` when every
    oscillation is below ``10 * grad_tol`` (the report is then flagged
    inconclusive).  The model oscillation ``omega`` starts from
    ``2 (Tail(u; x0, r/2) + c_sup (mean_{B_r} |u|^p)^{1/p})`` and decays with
    ``alpha_used``, the fitted exponent clamped below ``sp/(p-1)``.
    """
    spec, grid = problem.kernel, problem.grid
    p, sp = spec.p, spec.sp
    if levels < 4:
        raise ConfigurationError("levels must be at least 4")
    _require_ball(problem, x0, 2 * r, "B_2r(x0)")
    u = sol.u
    radii = sigma ** np.arange(levels) * r / 2
    balls = [ball_nodes(grid, x0, rho) for rho in radii]
    if balls[-1].size < min_nodes:
        raise ConfigurationError(
            f"smallest ball (radius {radii[-1]:.3g}) holds {balls[-1].size} nodes, need {min_nodes}; refine the grid")
    osc = np.array([float(np.ptp(u[b])) for b in balls])
    monotone = bool(np.all(np.diff(osc) <= 0.0))
    keep = osc > 10 * sol.grad_tol
    inconclusive = int(np.sum(keep)) < 2
    alpha_fit, r2 = (None, None)
    if not inconclusive:
        alpha_fit, r2 = _fit(np.log(radii[keep]), np.log(osc[keep]))
    cap = sp / (p - 1)
    alpha_used = min(alpha_fit, 0.99 * cap) if alpha_fit and alpha_fit > 0 else 0.5 * cap
    t = tail_record(grid, u, x0, r / 2, spec.s, p)["value"]
    Br = _ball(problem, x0, r)
    omega0 = 2.0 * (t + c_sup * float(np.mean(np.abs(u[Br]) ** p)) ** (1 / p))
    sched = OscillationSchedule(r, levels, omega0, alpha_used, sigma)
    omegas = sched.omegas
    eps = sigma ** (cap - alpha_used)
    records = []
    for j in range(levels):
        rec = {"j": j, "radius": float(radii[j]), "osc": float(osc[j]), "nodes": int(balls[j].size),
               "omega": float(omegas[j]), "osc_within_omega": bool(osc[j] <= omegas[j])}
        if j + 1 < levels:
            tb = ball_nodes(grid, x0, 2 * radii[j + 1])
            low = float(np.min(u[balls[j]]))
            mid = low + omegas[j] / 2
            upper_frac = float(np.mean(u[tb] >= mid))
            lower_frac = float(np.mean(u[tb] <= mid))
            if upper_frac >= 0.5:
                uj, case = u[tb] - low, "upper"
            else:
                uj, case = omegas[j] - (u[tb] - low), "lower"
            ratio = float(np.mean(uj <= 2 * eps * omegas[j]))
            rec.update({"upper_density": upper_frac, "lower_density": lower_frac, "alternative": case,
                        "measure_ratio": ratio, "c_log_empirical": ratio * math.log(1 / sigma)})
        records.append(rec)
    rep = EstimateReport(
        name="holder",
        parameters={"p": p, "s": spec.s, "n": spec.n, "x0": [float(c) for c in np.atleast_1d(x0)], "r": r,
                    "levels": levels, "sigma": sigma, "c_sup": c_sup},
        lhs=float(osc[0]),
        rhs_components={"omega0": omega0, "tail": t, "alpha_cap": cap, "alpha_used": alpha_used,
                        "epsilon": eps},
        empirical_constant=None if alpha_fit is None else max(alpha_fit, 0.0),
        passed=bool(monotone and not inconclusive and alpha_fit > 0),
        metadata={**_meta(sol, problem), "alpha_fit": alpha_fit, "r_squared": r2,
                  "monotone": monotone, "inconclusive": inconclusive},
        records=records,
    )
    return alpha_fit, rep
