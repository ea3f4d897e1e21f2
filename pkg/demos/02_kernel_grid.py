# Viability kernel on a grid versus the analytic kernel.
import time

import numpy as np

from evykit import AnalyticKernel, ConstraintSet, LotkaVolterra, PERU_MIN_BIOMASS, PERU_PARAMS, grid_kernel

model = LotkaVolterra(PERU_PARAMS)
cstar = model.equilibrium_catches(np.array(PERU_MIN_BIOMASS))

for share in (0.0, 0.5, 1.0):
    cs = ConstraintSet(PERU_MIN_BIOMASS, tuple(share * cstar))
    t0 = time.perf_counter()
    grid = grid_kernel(model, cs, resolution=(200, 200))
    dt = time.perf_counter() - t0
    agree = grid.agreement(AnalyticKernel(model, cs))
    sizes = [int(layer.sum()) for layer in grid.layers]
    print(f"C_min = {share:.1f} C*: layer sizes {sizes}, stationary at {grid.stationary_index}, "
          f"agreement {100 * agree:.2f}%, {dt:.2f}s")

# crude picture of the last kernel: prey left to right, predator bottom to top (every 10th cell)
k = grid.kernel[::10, ::10]
for row in k.T[::-1]:
    print("".join("#" if c else "." for c in row))

# export for plotting, into the current directory
with open("kernel_grid.csv", "w") as fh:
    grid.write_csv(fh)
