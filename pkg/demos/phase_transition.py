"""P_E of the optimal detector as the transmit power shrinks like c n^-rho.

Single-symbol blocks, mean fading gain 100, c = 0.03 and a 1% false-alarm
target. Below rho = 1/2 the adversary sees Alice almost surely; above it the
sum of errors climbs to 1. Larger n sharpens the step.
"""
import dataclasses

from covertfading import config
from covertfading.experiments import crossing_rho, curves, max_adjacent_jump, run_sweep

cfg = config.sweep(config.preset("fig3"))
# the full preset also runs n = 10^4 and 10^5; two sizes keep this to under a minute
cfg = dataclasses.replace(cfg, n_values=(100, 1000), detectors=("lrt", "power"))
rows = run_sweep(cfg, log=print)

for det in ("lrt", "power"):
    for (n, m), (rho, pe) in sorted(curves(rows, det).items()):
        print(f"{det:5s} n={n:5d}: P_E first exceeds 0.5 at rho = {crossing_rho(rho, pe):.2f}, "
              f"largest step between neighbouring rho = {max_adjacent_jump(rho, pe):.3f}")

print("\n rho   P_E(n=100)  P_E(n=1000)")
lrt = curves(rows, "lrt")
for i, r in enumerate(lrt[(100, 100)][0]):
    print(f"{r:5.2f}   {lrt[(100, 100)][1][i]:9.4f}  {lrt[(1000, 1000)][1][i]:10.4f}")
