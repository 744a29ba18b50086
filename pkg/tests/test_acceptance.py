"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v``; the lines are gathered in the
``acceptance criteria`` section of the terminal summary.
"""
import math
import time
from pathlib import Path

import numpy as np
from scipy import integrate

from fraclab import estimates as est
from fraclab.cli import main
from fraclab.grid import DirichletProblem, Domain, Grid, boundary_data
from fraclab.kernel import KernelSpec, assemble_weights
from fraclab.solver import SolveConfig, solve, verify_euler_lagrange
from fraclab.tail import far_field_weights, tail, tail_record

from conftest import reference_case, reference_grid
from test_solver import _grid_search, tiny_problem

ROOT = Path(__file__).resolve().parents[1]


def _bump(y, center=2.0, width=0.75):
    z = (np.asarray(y) - center) / width
    inside = np.abs(z) < 1
    out = np.zeros_like(z, dtype=float)
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - z[inside] ** 2))
    return out


def test_criterion_01_minimizer_is_weak_solution(acceptance):
    lines, ok = [], True
    for p in (1.5, 2.0, 3.0):
        for s in (0.3, 0.4):
            t0 = time.perf_counter()
            grid = reference_grid(129)
            spec = KernelSpec(1, s, p, allow_supercritical=True)
            prob = DirichletProblem(spec, grid, boundary_data(grid, "bump", center=(2.0,), width=0.75))
            W = assemble_weights(spec, grid)
            a = solve(prob, SolveConfig(init="zero"), W)
            b = solve(prob, SolveConfig(init="random", seed=11), W)
            cert = verify_euler_lagrange(a, prob, W)
            diff = float(np.max(np.abs(a.u - b.u)))
            dt = time.perf_counter() - t0
            good = cert["certificate"] <= a.grad_tol / p and diff <= 10 * a.grad_tol and dt <= 60
            ok &= good
            lines.append(f"(p={p},s={s}) cert={cert['certificate']:.1e} diff={diff:.1e} t={dt:.1f}s")
    acceptance(1, ok, "; ".join(lines))
    assert ok


def test_criterion_02_linear_oracle(acceptance):
    # dense stationarity system on N = 257
    grid = reference_grid(257)
    spec = KernelSpec(1, 0.4, 2.0)
    prob = DirichletProblem(spec, grid, boundary_data(grid, "bump", center=(2.0,), width=0.75))
    W = assemble_weights(spec, grid).matrix
    F, C = np.flatnonzero(grid.interior), np.flatnonzero(grid.collar)
    far = far_field_weights(grid, spec)[F]
    A = np.diag(W[F].sum(axis=1) + far) - W[np.ix_(F, F)]
    exact = np.linalg.solve(A, W[np.ix_(F, C)] @ prob.g[C])
    sol = solve(prob, weights=assemble_weights(spec, grid))
    dense_err = float(np.max(np.abs(sol.u[F] - exact)))

    # refinement against the Poisson kernel of the interval (-1, 1)
    s = 0.4
    c = math.sin(math.pi * s) / math.pi
    errs = []
    for N in (65, 129, 257):
        g = reference_grid(N)
        pr = DirichletProblem(KernelSpec(1, s, 2.0), g, boundary_data(g, "bump", center=(2.0,), width=0.75))
        u = solve(pr).u
        x = g.nodes[g.interior, 0]
        ref = np.array([integrate.quad(lambda y: c * ((1 - xx * xx) / (y * y - 1)) ** s / abs(xx - y) * _bump(y),
                                       1.25, 2.75, epsabs=1e-13, epsrel=1e-12)[0] for xx in x])
        errs.append(float(np.max(np.abs(u[g.interior] - ref))))
    ok = dense_err <= 1e-10 and errs[0] > errs[1] > errs[2]
    acceptance(2, ok, f"dense sup error {dense_err:.1e}; Poisson-kernel errors N=65/129/257: "
                      + ", ".join(f"{e:.2e}" for e in errs))
    assert ok


def test_criterion_03_brute_force(acceptance):
    prob = tiny_problem(3.0)
    W = assemble_weights(prob.kernel, prob.grid).matrix
    ref = _grid_search(prob, W, 3.0, tol=1e-6)
    err = float(np.max(np.abs(solve(prob).u[prob.grid.interior] - ref)))
    ok = err <= 1e-5
    acceptance(3, ok, f"5 unknowns, sup error {err:.1e}")
    assert ok


def test_criterion_04_elementary_inequality(acceptance):
    res = est.check_elementary_inequality(1_000_000, seed=0)
    ok = res["violations"] == 0 and res["c_2"] == 1.0
    rng = res["violating_p_range"]
    acceptance(4, ok, f"violations={res['violations']} of 1e6, c_2={res['c_2']}, "
                      f"tightest relative slack {res['tightest_relative_slack']:.3f}"
                      + (f", violating p in [{rng[0]:.3f}, {rng[1]:.3f}]" if rng else ""))
    assert ok


def test_criterion_05_tail_closed_form(acceptance):
    L = 1.5e8
    grid = Grid(1, L, L / 1500, Domain("interval", (0.0,), (L / 3,)))
    rec = tail_record(grid, np.ones(grid.size), 0.0, 1.0, 0.4, 2.0, quadrature="cell")
    err = abs(rec["value"] - 2.5)
    g2 = reference_grid(129)
    v = np.random.default_rng(5).normal(size=g2.size)
    hom = max(abs(tail(g2, lam * v, 0.0, 0.5, 0.4, 2.0) - lam * tail(g2, v, 0.0, 0.5, 0.4, 2.0))
              / (lam * tail(g2, v, 0.0, 0.5, 0.4, 2.0)) for lam in (0.1, 3.0, 250.0))
    ok = err <= 1e-3 and rec["truncation_bound"] < 1e-6 and hom <= 1e-12
    acceptance(5, ok, f"tail={rec['value']:.9f} (error {err:.1e}, truncation bound {rec['truncation_bound']:.1e}); "
                      f"homogeneity rel. error {hom:.1e}")
    assert ok


def test_criterion_06_caccioppoli(acceptance):
    t0 = time.perf_counter()
    lines, ok = [], True
    for p in (2.0, 3.0):
        maxima = {}
        for fam in ("constant", "checkerboard", "smooth-bump", "random"):
            prob, W, sol = reference_case(p, 0.3, family=fam, Lam=2.0)
            rep = est.caccioppoli_sweep(sol, prob, W, draws=50, seed=0)
            ok &= not rep.unbounded
            maxima[fam] = rep.empirical_constant
        spread = max(maxima.values()) / min(maxima.values())
        ok &= spread <= 4
        lines.append(f"p={p}: max ratios " + ", ".join(f"{k}={v:.3f}" for k, v in maxima.items())
                     + f" (spread {spread:.2f})")
    dt = time.perf_counter() - t0
    ok &= dt <= 300
    acceptance(6, ok, "; ".join(lines) + f"; {dt:.1f}s")
    assert ok


def test_criterion_07_log_lemma(acceptance):
    lines, ok = [], True
    for p in (1.5, 2.0, 3.0):
        prob, W, sol = reference_case(p, 0.3)
        # d in units of osc u on B_R, i.e. data normalized to unit oscillation
        rel = est.log_lemma_sweep(sol, prob, W, 0.0, 0.9, 0.45, relative=True)
        raw = est.log_lemma_sweep(sol, prob, W, 0.0, 0.9, 0.45, relative=False)
        base = est.verify_log_lemma(sol, prob, W, 0.0, 0.9, 0.45, 0.05)
        inv = 0.0
        for lam in (0.2, 7.0):
            scaled = DirichletProblem(prob.kernel, prob.grid, lam * prob.g)
            s2 = type(sol)(**{**sol.__dict__, "u": lam * sol.u})
            r2 = est.verify_log_lemma(s2, scaled, W, 0.0, 0.9, 0.45, 0.05 * lam)
            inv = max(inv, abs(r2.lhs - base.lhs) / base.lhs)
        good = rel.passed and not rel.unbounded and inv <= 1e-10
        ok &= good
        lines.append(f"p={p}: spread {rel.rhs_components['spread']:.2f} (absolute d: "
                     f"{raw.rhs_components['spread']:.0f}), invariance {inv:.1e}")
    acceptance(7, ok, "; ".join(lines))
    assert ok


def test_criterion_08_local_boundedness(acceptance):
    lines, ok = [], True
    for p in (1.5, 2.0, 3.0):
        prob, W, sol = reference_case(p, 0.3)
        rep = est.verify_local_boundedness(sol, prob, 0.0, 0.9)
        ok &= not rep.unbounded
        lines.append(f"p={p}: c_emp=" + "/".join(f"{r['constant']:.3f}" for r in rep.records))
        prob, W, sol = reference_case(p, 0.3, profile="negative")
        neg = est.verify_local_boundedness(sol, prob, 0.0, 0.9)
        exact = neg.lhs <= 0 and all(r["tail_term"] == 0 and r["local_factor"] == 0 for r in neg.records)
        ok &= exact
        lines.append(f"u<=0 sup={neg.lhs:.2e} exact={exact}")
    acceptance(8, ok, "; ".join(lines))
    assert ok


def test_criterion_09_degiorgi(acceptance):
    prob, W, sol = reference_case(2.0, 0.4)
    rep = est.degiorgi_diagnostic(sol, prob, 0.0, 0.9, delta=0.1, J=20)
    A = [r["A"] for r in rep.records]
    nonincr = all(b <= a for a, b in zip(A[1:], A[2:]))
    ok = nonincr and A[20] <= 1e-3 * A[0]
    acceptance(9, ok, f"H_fit={rep.parameters['H_fit']:.3f}, k_tilde={rep.parameters['k_tilde']:.3f}, "
                      f"A_0={A[0]:.3e}, A_20={A[20]:.1e}, nonincreasing={nonincr}")
    assert ok


def test_criterion_10_holder(acceptance):
    lines, ok = [], True
    for p in (1.5, 2.0, 3.0):
        grid = reference_grid(2049)
        spec = KernelSpec(1, 0.3, p)
        prob = DirichletProblem(spec, grid, boundary_data(grid, "bump", center=(2.0,), width=0.75))
        W = assemble_weights(spec, grid)
        sol = solve(prob, SolveConfig(), W)
        del W
        alpha, rep = est.estimate_holder(sol, prob, 0.0, 0.5)
        good = rep.metadata["monotone"] and alpha is not None and alpha > 0 and rep.metadata["r_squared"] >= 0.9
        ok &= good
        lines.append(f"p={p}: alpha={alpha:.3f} R2={rep.metadata['r_squared']:.4f} "
                     f"monotone={rep.metadata['monotone']}")
    acceptance(10, ok, "N=2049; " + "; ".join(lines))
    assert ok


def test_criterion_11_determinism(acceptance, tmp_path, capsys):
    cfg = ROOT / "configs" / "reference.toml"
    snaps = []
    for i, threads in enumerate(("1", "1", "8")):
        main(["all", "--config", str(cfg), "--out", str(tmp_path / f"run{i}"), "--threads", threads])
        run_dir = Path(capsys.readouterr().out.strip())
        snaps.append({f.name: f.read_bytes() for f in sorted(run_dir.iterdir())})
    ok = snaps[0] == snaps[1] == snaps[2] and len(snaps[0]) > 5
    acceptance(11, ok, f"{len(snaps[0])} files byte-identical across two runs and threads 1 vs 8")
    assert ok
