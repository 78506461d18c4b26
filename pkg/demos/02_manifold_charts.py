"""Local invariant manifold charts via the parameterization method.

The chart solves the invariance equation order by order: the zeroth
coefficient is the equilibrium, the first-order ones are scaled
eigenvectors, and each higher coefficient solves a linear homological
system whose solvability is exactly the non-resonance condition.

Run:  python3 demos/02_manifold_charts.py
"""

import numpy as np

from connorb.manifold import (
    check_nonresonance,
    conjugacy_error,
    eval_chart,
    solve_homological,
)
from connorb.polyfield import field_from_config
from connorb.problems import cubic_1d_config, lotka_volterra_config

# -- scalar warmup: u' = u - u^3 ----------------------------------------------
g = field_from_config(cubic_1d_config()["field"])
chart = solve_homological(g, [1.0], "stable", (10,), scale=0.15)
print("stable chart of u' = u - u^3 at u = 1:")
print("  eigenvalue:", chart.lam[0])
print("  leading coefficients:", np.round(chart.coeffs[:5, 0].real, 8))

# the chart conjugates the nonlinear flow to the linear one
err = conjugacy_error(g, chart, [0.5], 1.0)
print(f"  conjugacy defect after time 1: {err:.2e}")

# -- non-resonance is a finite check -------------------------------------------
print("\nnon-resonance enumeration:")
for lam in ([-1.0, -2.0], [-1.0, -1.5]):
    rep = check_nonresonance(lam)
    print(f"  lam = {lam}: resonant = {rep.resonant}, "
          f"witness = {rep.witness_k}, cutoff |k| <= {rep.cutoff}")

# -- a genuine 3-D chart with a complex conjugate pair -------------------------
glv = field_from_config(lotka_volterra_config()["field"])
stable = solve_homological(glv, [1.0, 0, 0, 0], "stable", (9, 9, 9),
                           scale=np.sqrt(0.0635))
print("\nLotka-Volterra stable chart at (1,0,0,0):")
print("  eigenvalues:", np.round(stable.lam, 4))
print("  conjugate pairs:", stable.inv.pairs)
phi = np.array([0.3 + 0.2j, 0.3 - 0.2j, 0.25 + 0j])  # a symmetric point
val = eval_chart(stable, phi)
print("  chart value at a symmetric point is real:",
      np.round(val.real, 6), "imag <", float(np.max(np.abs(val.imag))))
