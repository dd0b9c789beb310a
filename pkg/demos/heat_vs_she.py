"""Point-to-point SHE against the heat kernel.

With the noise switched off the lattice solution from a delta start should sit
on top of p_t; with noise, each path fluctuates but the ensemble mean still
follows p_t because the equation is linear and the noise is centred.
"""
import numpy as np

from mlshe import kernels, she
from mlshe.noise import GridSpec, NoiseField, sample_noise

grid = GridSpec.from_spacing(-4.0, 4.0, 0.05, 0.5, 0.05**2 / 4)
t = 0.5

flat = she.solve_she(grid, NoiseField.zeros(grid), ("delta", 0.0))
err = np.max(np.abs(flat.at(t) - kernels.heat_kernel(t, grid.x)))
print(f"zero noise: sup |u - p_t| = {err:.2e}")

vals = np.array([she.solve_she(grid, sample_noise(grid, s), ("delta", 0.0)).value(t, 0.0) for s in range(200)])
se = vals.std(ddof=1) / np.sqrt(vals.size)
print(f"noisy mean u({t}, 0) = {vals.mean():.4f} +- {se:.4f}   p_t(0) = {kernels.heat_kernel(t, 0.0):.4f}")
