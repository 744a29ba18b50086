"""
The elementary inequality

    |a|^p <= |b|^p + c eps |b|^p + (1 + c eps) eps^{1-p} |a - b|^p

with c = (p - 1) Gamma(max{1, p - 2}) holds for p <= 2 but not for all
p > 2.  This script samples it and then exhibits an exact witness.
"""

from fractions import Fraction

import numpy as np

from fraclab import estimates as est

## Sampling
res = est.check_elementary_inequality(200_000, seed=0)
print("violations:", res["violations"], "p range:", res["violating_p_range"])
print("c at p = 2:", res["c_2"])
for w in res["worst"][:3]:
    print({k: round(v, 4) for k, v in w.items()})

## Violations per p bucket
edges = np.arange(1.0, 6.5, 0.5)
ps = np.array([w["p"] for w in est.check_elementary_inequality(200_000, seed=0, keep=10**6)["worst"]])
print(np.histogram(ps, bins=edges)[0])

## Exact witness at p = 3, where c = 2
a, b, eps, c = Fraction(1), Fraction(1, 2), Fraction(1), Fraction(2)
rhs = b ** 3 + c * eps * b ** 3 + (1 + c * eps) * eps ** -2 * (a - b) ** 3
print("lhs =", a ** 3, " rhs =", rhs)

## The smallest constant that works at a given p, from a crude scan; it matches 2^(p-1) - 1
for p in (2.5, 3.0, 4.0):
    bb, ee = np.meshgrid(np.linspace(0, 1, 801), np.linspace(1e-3, 1, 800))
    need = (1 - bb ** p - ee ** (1 - p) * (1 - bb) ** p) / (ee * (bb ** p + ee ** (1 - p) * (1 - bb) ** p))
    print(f"p={p}: needed c >= {need.max():.3f}, formula gives {float(est.lemma_constant(p)):.3f}")
