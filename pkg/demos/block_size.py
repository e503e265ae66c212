"""Same power law at n = 1000, now splitting the slot into 10, 100 or 1000
fading blocks. Longer blocks let the adversary average each block's energy,
which smooths the transition instead of removing it."""
from covertfading import config
from covertfading.experiments import curves, max_adjacent_jump, run_block_sweep

cfg = config.sweep(config.preset("fig4"))
rows = run_block_sweep(cfg)

pe_curves = curves(rows, "lrt")
for (n, m), (rho, pe) in sorted(pe_curves.items()):
    print(f"M={m:4d} (B={n // m:3d}): max step {max_adjacent_jump(rho, pe):.3f}  "
          + " ".join(f"{p:.2f}" for p in pe))
