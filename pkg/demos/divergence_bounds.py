"""How tight are the closed-form divergence bounds?

For one complex block we estimate D(f1 || f0) by Monte Carlo and compare it
with the convexity bound kappa (1/r + e^r Ei(-r)), r = lambda s0 / sa, and
with its two quadratic relaxations. Note kappa / (2 r^2) drops below the
Ei bound once r exceeds about 1.6; kappa / r^2 never does.
"""
import numpy as np

from covertfading.bounds import (Direction, kl_bound_ei, kl_bound_quartic, kl_bound_simple,
                                 kl_mc, pe_floor)
from covertfading.model import SystemParams

rng = np.random.default_rng(2024)
print("    r   D_mc (+-se)          Ei bound    k/(2r^2)    k/r^2")
for r in [0.5, 1.0, 2.0, 5.0, 20.0]:
    p = SystemParams(n=1, num_blocks=1, fading_rate=1.0, noise_var=1.0, alice_power=1 / r)
    d, se = kl_mc(p, Direction.F1_F0, 200_000, rng)
    print(f"{r:5.1f}   {d:.5f} (+-{se:.5f})   {kl_bound_ei(p):.5f}     "
          f"{kl_bound_simple(p):.5f}     {kl_bound_quartic(p):.5f}")

# with M blocks the divergences add, so the error floor 1 - sqrt(D/2)
# survives only if M sa^2 / lambda^2 stays bounded: sa ~ 1/sqrt(M)
for m in [10, 100, 1000]:
    p = SystemParams(n=m, num_blocks=m, fading_rate=1.0, alice_power=1 / np.sqrt(m))
    print(f"M={m:5d}, sa = M^-1/2: P_E >= {pe_floor(kl_bound_quartic(p, whole_slot=True)):.3f}")
