"""
Minimizers of the discrete nonlocal energy on the interval (-1, 1).

The exterior data is a bump centered at x = 2; the solution inside the
interval feels it only through the long-range kernel.
"""

import numpy as np

from fraclab import DirichletProblem, Domain, Grid, KernelSpec, assemble_weights, boundary_data, solve
from fraclab.solver import SolveConfig, comparison_check

## A grid: box [-3, 3], 129 nodes inside the interval
grid = Grid(1, 3.0, 2.0 / 129, Domain("interval", (0.0,), (1.0,)))
g = boundary_data(grid, "bump", center=(2.0,), width=0.75, height=1.0)
print(grid.size, "nodes,", int(grid.interior.sum()), "free")

## Solve for several exponents p
x = grid.nodes[:, 0]
inside = grid.interior
for p in (1.5, 2.0, 3.0):
    spec = KernelSpec(n=1, s=0.3, p=p)
    prob = DirichletProblem(spec, grid, g)
    W = assemble_weights(spec, grid)
    sol = solve(prob, SolveConfig(), W)
    cmp = comparison_check(sol, prob)
    print(f"p={p}: {sol.iterations} iterations, certificate {sol.certificate:.1e}, "
          f"u(0)={sol.u[np.argmin(np.abs(x))]:.4f}, u(0.9)={sol.u[np.argmin(np.abs(x - 0.9))]:.4f}, "
          f"range ok: {cmp['passed']}")

## The p = 2 profile; the harmonic initial guess is already the answer, hence 0 iterations
## Compare a profile sampled at a few points
spec = KernelSpec(n=1, s=0.3, p=2.0)
u = solve(DirichletProblem(spec, grid, g)).u
for xx in (-0.9, -0.5, 0.0, 0.5, 0.9):
    print(f"  x={xx:+.1f}  u={u[np.argmin(np.abs(x - xx))]:.5f}")

## Newton versus preconditioned gradient descent
prob = DirichletProblem(KernelSpec(n=1, s=0.3, p=2.5), grid, g)
a = solve(prob, SolveConfig(method="newton"))
b = solve(prob, SolveConfig(method="pgd"))
print("newton", a.iterations, "pgd", b.iterations, "max difference", np.max(np.abs(a.u - b.u)))
