#!/usr/bin/env python3
"""Step-size schedules, admissibility, and instability certificates.

A saddle's Hessian eigenvalues h_i turn into per-step multipliers
|1 - alpha_k h_i| under gradient descent.  A schedule is admissible when
those multipliers eventually settle into a fixed center-stable/unstable
partition with an expansion margin: |1 - alpha_k h_j| >= 1 + c alpha_k
on the unstable side.  From the margin c one reads off the per-step
certificate (lambda_k, mu_k, eps_k) = (1, 1 + c a_k, c a_k / 5), whose
eps/(mu - 2 eps) ratios are non-summable exactly when the steps are.
"""

import json

import numpy as np

from saddlescope import (
    SpectralData,
    build_gd_certificate,
    build_pp_certificate,
    check_admissible,
    classify_nonsummable,
    constant_schedule,
    cosine_schedule,
    polynomial_schedule,
)
from saddlescope.testfns import get

h = np.array([2.0, -1.0])
print(f"eigenvalues at the saddle: {h}\n")

for label, sched in [
    ("constant 0.3", constant_schedule(0.3)),
    ("constant 1.2 (overshoots h=2)", constant_schedule(1.2)),
    ("polynomial 4/(k+1) (large early steps)", polynomial_schedule(4.0, 1.0)),
    ("cosine, gamma=1, T=4", cosine_schedule(0.5, 1.0, 4)),
]:
    res = check_admissible(h, sched)
    print(
        f"{label:40s} I_cs={sorted(res.I_cs)} I_u={sorted(res.I_u)} "
        f"c={res.c:g} K={res.K}  sum(alpha)={classify_nonsummable(sched)}"
    )

print("""
note the second row: with a large constant step even the positive
eigenvalue becomes unstable (|1 - 1.2*2| = 1.4 > 1); with vanishing
steps the partition is always the sign partition, though large initial
steps push the settling index K past 0 (third row).
""")

dw = get("double_well")
H = np.asarray(dw.objective.hess(np.zeros(2)))
spectral = SpectralData.from_hessian(H)
cert = build_gd_certificate(spectral, constant_schedule(0.1), dw.objective.hess)
print("GD certificate at the double-well saddle, constant steps 0.1:")
print(json.dumps(json.loads(cert.to_json()), indent=2, sort_keys=True))

qs = get("quad_saddle")
pp = build_pp_certificate(
    SpectralData.from_hessian(np.asarray(qs.objective.hess(np.zeros(2)))),
    constant_schedule(0.5),
    L=1.0,
)
print("\nPP certificate on the quadratic saddle (alpha=0.5, L=1):")
print(f"  mu_k = {pp.mu_formula} -> {pp.mu(np.array(0)):g}")
print(f"  eps_k = {pp.eps_formula} -> {pp.eps(np.array(0)):g}")
print(f"  eps < (mu - lambda)/4: {pp.eps(np.array(0)):g} < {(pp.mu(np.array(0)) - 1) / 4:g}")
