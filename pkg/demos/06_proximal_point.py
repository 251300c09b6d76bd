#!/usr/bin/env python3
"""The proximal point method as an implicit, invertible dynamical system.

Each PP update solves z + alpha grad f(z) = x (a strongly convex
subproblem for alpha < 1/L), so the update map is a C^1 diffeomorphism
with explicit inverse u(x) = x + alpha grad f(x) and differential
(I + alpha Hess f)^{-1}.  That inverse structure gives the Luzin N^-1
property for free: the Jacobian determinant never vanishes, as the scan
at the end confirms, in contrast with plain gradient descent where
det(I - alpha Hess) can cross zero at isolated step sizes.
"""

import numpy as np

from saddlescope import luzin_scan
from saddlescope.optimizers import prox_inverse, prox_solve, pp_system
from saddlescope.phcert import constant_schedule
from saddlescope.testfns import get

dw = get("double_well").objective
alpha = 0.03  # below 1/L = 1/26 on the declared box
rng = np.random.default_rng(1)
X = rng.uniform(-3, 3, size=(5, 2))
Z = prox_solve(dw, alpha, X, inner_tol=1e-13)
print("proximal step on the double well (alpha = 0.03):")
for x, z in zip(X, Z):
    print(f"  x = {np.round(x, 4)}  ->  z = {np.round(z, 4)}")

back = prox_inverse(dw, alpha, Z)
print(f"\nround trip max |u(g(x)) - x| = {np.max(np.abs(back - X)):.2e}")

system = pp_system(dw, constant_schedule(alpha))
J = system.map_at(0).jacobian(X[0])
print(f"||Dg(x)|| = {np.linalg.norm(J, 2):.4f} <= 1/(1 - alpha L) = "
      f"{1 / (1 - alpha * 26):.4f}")

print("\nLuzin scans (min |det D g_alpha| over 200 samples each):")
gd_scan = luzin_scan("double_well", "gd", [0.25, 0.5, 1.0], x_samples=200, seed=3)
for a, m in zip(gd_scan.alphas, gd_scan.min_abs_det):
    mark = "  <-- flagged" if a in gd_scan.flagged_alphas else ""
    print(f"  gd  alpha={a:<5g} min|det| = {m:.3e}{mark}")
pp_scan = luzin_scan("double_well", "pp", [0.01, 0.02, 0.03], x_samples=200, seed=3)
for a, m in zip(pp_scan.alphas, pp_scan.min_abs_det):
    print(f"  pp  alpha={a:<5g} min|det| = {m:.3e}")
print("gradient descent degenerates at alpha = 1 (det(1 - alpha) = 0);"
      " the proximal maps never do.")
