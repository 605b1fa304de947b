"""Average PSNR of each scheme as the power cap grows.

Run: python demos/power_sweep.py [trials]
"""

import math
import sys

import numpy as np

from svcnoma.experiments import power_sweep_spec, run_sweep

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 10
rows = run_sweep(power_sweep_spec(trials=trials))

schemes = sorted({r.scheme for r in rows})
print(f"{'p_max dBm':>10}" + "".join(f"{s:>12}" for s in schemes) + f"{'infeasible':>12}")
for value in sorted({r.swept_value for r in rows}):
    cells = [r for r in rows if r.swept_value == value]
    means = []
    for s in schemes:
        psnr = [r.avg_psnr_db for r in cells if r.scheme == s and not math.isnan(r.avg_psnr_db)]
        means.append(np.mean(psnr) if psnr else math.nan)
    lost = sum(r.status == "infeasible" for r in cells if r.scheme == "proposed")
    print(f"{value:>10.0f}" + "".join(f"{m:>12.3f}" for m in means) + f"{lost:>12d}")
