"""Bounds per iteration for one trial, and iteration counts over many.

Run: python demos/convergence.py
"""

import numpy as np

from svcnoma.experiments import SweepSpec, iterations_to_converge, run_convergence

spec = SweepSpec(p_max_dbm=23.0, radius_m=1000.0, trials=20)
rows = run_convergence(spec, (2, 3, 4))

# the longest four-device trace: the upper bound falls onto the incumbent
four = [r for r in rows if r.devices == 4]
longest = max({r.trial for r in four}, key=lambda t: sum(r.trial == t for r in four))
trace = [r for r in four if r.trial == longest]
print(f"trial {longest}, final status {trace[-1].status}")
for r in trace[:: max(1, len(trace) // 10)] + trace[-1:]:
    print(f"iter {r.iteration:4d}  upper {r.upper_bound:8.4f}  best {r.best_value:8.4f}  gap {r.gap:.2e}")

for M, its in sorted(iterations_to_converge(rows).items()):
    print(f"M = {M}: median {np.median(its):.1f} iterations over {len(its)} converged trials")
