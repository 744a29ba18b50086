"""
For p = 2 the minimizer is s-harmonic in the interval, so the Poisson
kernel of the ball gives it in closed form.  This script watches the
discrete solution approach it under refinement.
"""

import math

import numpy as np
from scipy import integrate

from fraclab import DirichletProblem, Domain, Grid, KernelSpec, boundary_data, solve

s = 0.4
c = math.sin(math.pi * s) / math.pi


def bump(y):
    z = (y - 2.0) / 0.75
    return math.exp(1.0 - 1.0 / (1.0 - z * z)) if abs(z) < 1 else 0.0


def poisson(x):
    f = lambda y: c * ((1 - x * x) / (y * y - 1)) ** s / abs(x - y) * bump(y)
    return integrate.quad(f, 1.25, 2.75, epsabs=1e-13)[0]


## Refinement study
prev = None
for N in (33, 65, 129, 257):
    grid = Grid(1, 3.0, 2.0 / N, Domain("interval", (0.0,), (1.0,)))
    prob = DirichletProblem(KernelSpec(1, s, 2.0), grid, boundary_data(grid, "bump", center=(2.0,), width=0.75))
    u = solve(prob).u
    x = grid.nodes[grid.interior, 0]
    err = np.max(np.abs(u[grid.interior] - np.array([poisson(t) for t in x])))
    rate = "" if prev is None else f"  observed order {math.log2(prev / err):.2f}"
    print(f"N={N:4d}  h={grid.h:.4f}  sup error {err:.3e}{rate}")
    prev = err

## The error concentrates at the boundary, where u behaves like dist^s
