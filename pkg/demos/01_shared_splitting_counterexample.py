#!/usr/bin/env python3
"""Why instability needs a shared invariant splitting.

Two linear maps, each with the origin as a strictly unstable fixed
point.  Their expanding directions disagree, and composing them in the
pattern (g1 g2 g2) twice annihilates the entire plane: every initial
condition lands exactly on the "unstable" fixed point after six steps.
Avoidance results for non-autonomous systems therefore have to assume
the maps share one center-stable/unstable splitting; this script is the
numerical regression for that cautionary example.
"""

import numpy as np

from saddlescope import counterexample_product

g1 = np.array([[0.0, 0.0], [-0.2, 2.0]])
g2 = np.array([[198.0, 0.2], [0.0, 2.0]])

print("spectral radius of g1:", max(abs(np.linalg.eigvals(g1))))
print("spectral radius of g2:", max(abs(np.linalg.eigvals(g2))))
print("so each map expands *some* direction at the origin\n")

print("g2 @ g2 =\n", g2 @ g2)
print("g1 @ g2 @ g2 =\n", g1 @ g2 @ g2)

prod = counterexample_product()
print("\n(g1 g2 g2)^2 =\n", prod)
print("max |entry| =", np.max(np.abs(prod)))
assert np.max(np.abs(prod)) < 1e-9

rng = np.random.default_rng(0)
cloud = rng.uniform(-100, 100, size=(5, 2))
print("\na random cloud of initial points, pushed through the six maps:")
print(cloud @ prod.T)
print("every trajectory is AT the origin: a full-measure stable set.")
