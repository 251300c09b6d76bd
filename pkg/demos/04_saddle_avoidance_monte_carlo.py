#!/usr/bin/env python3
"""Monte Carlo saddle avoidance, with a deliberate counter-probe.

Random initializations of gradient descent on the double well
f = (x^2-1)^2/4 + y^2/2 never converge to the strict saddle at the
origin; they split between the two minima (plus or minus 1, 0).  The
stable set of the saddle is the measure-zero axis {x = 0}, and a probe
started exactly on it IS classified as a saddle hit, so the zero count
from random starts is not a blindness of the classifier.
"""

import numpy as np

from saddlescope import monte_carlo_avoidance
from saddlescope.phcert import constant_schedule, polynomial_schedule

for label, sched, steps in [
    ("constant steps 0.5", constant_schedule(0.5), 100_000),
    ("harmonic steps 0.5/(k+1)", polynomial_schedule(0.5, 1.0), 100_000),
]:
    report = monte_carlo_avoidance(
        "double_well",
        "gd",
        sched,
        trials=500,
        seed=42,
        max_steps=steps,
        probes=[np.array([0.0, 0.5]), np.array([0.0, -1.3])],
    )
    print(f"double_well / gd / {label}")
    for cls, cnt in sorted(report.counts.items()):
        if cnt:
            print(f"  {cls:28s} {cnt}")
    print(f"  saddle hits from random starts: {len(report.saddle_hits)}")
    for probe in report.stable_set_probe:
        print(
            f"  probe at {probe['x0']}: {probe['classification']}"
            f" after {probe['steps']} steps"
        )
    print()

print("""
with constant steps both probes land on the saddle (the axis is
invariant and contracts onto it); with harmonic steps convergence slows
to a polynomial crawl, so even on-axis probes do not reach the 1e-8
gradient gate within the horizon -- exactly the transient the
conservative saddle-declaration rule is designed to ignore.
""")
