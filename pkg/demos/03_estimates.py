"""
A tour of the quantitative estimates on one converged solution:
Caccioppoli, logarithmic, local boundedness, De Giorgi masses and the
oscillation decay.
"""

import numpy as np

from fraclab import DirichletProblem, Domain, Grid, KernelSpec, assemble_weights, boundary_data, solve
from fraclab import estimates as est
from fraclab.tail import tail

grid = Grid(1, 3.0, 2.0 / 129, Domain("interval", (0.0,), (1.0,)))
spec = KernelSpec(1, 0.4, 2.0)
prob = DirichletProblem(spec, grid, boundary_data(grid, "bump", center=(2.0,), width=0.75))
W = assemble_weights(spec, grid)
sol = solve(prob, weights=W)

## The nonlocal tail seen from the origin
for R in (0.25, 0.5, 0.9):
    print(f"Tail(u; 0, {R}) = {tail(grid, sol.u, 0.0, R, spec.s, spec.p):.4e}")

## Caccioppoli over random balls and levels
rep = est.caccioppoli_sweep(sol, prob, W, draws=50, seed=0)
print("caccioppoli: max LHS/RHS", round(rep.empirical_constant, 4), "median", round(rep.rhs_components["median_ratio"], 4))

## Logarithmic estimate; d in units of osc u
rep = est.log_lemma_sweep(sol, prob, W, 0.0, 0.9, 0.45)
for r in rep.records:
    print(f"  d={r['d']:.2e}  constant {r['constant']:.4f}")

## Local boundedness for three interpolation parameters
rep = est.verify_local_boundedness(sol, prob, 0.0, 0.9)
print("sup over B_{r/2}:", rep.lhs, "constants", [round(r["constant"], 4) for r in rep.records])

## De Giorgi masses along shrinking balls and rising levels
rep = est.degiorgi_diagnostic(sol, prob, 0.0, 0.9, delta=0.1)
print("A_j:", " ".join(f"{r['A']:.2e}" for r in rep.records[:8]), "...")

## Oscillation decay needs a finer grid so the smallest ball is resolved
fine = Grid(1, 3.0, 2.0 / 1025, Domain("interval", (0.0,), (1.0,)))
prob = DirichletProblem(spec, fine, boundary_data(fine, "bump", center=(2.0,), width=0.75))
sol = solve(prob)
alpha, rep = est.estimate_holder(sol, prob, 0.0, 0.5, min_nodes=4)
print("osc:", [f"{r['osc']:.3e}" for r in rep.records], "alpha fit", round(alpha, 3))
