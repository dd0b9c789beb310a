"""Two-layer determinant K_2 from one noise realization.

K_2(t, x, y) = det[u(t, x_i, y_j)] with every u driven by the same white
noise.  It should stay nonnegative on sorted (x, y) pairs, and the ratio
M_2 = K_2 / (Delta(x) Delta(y)) should be strictly positive.
"""
import numpy as np

from mlshe import multilayer
from mlshe.noise import GridSpec, sample_noise

grid = GridSpec.from_spacing(-5.0, 5.0, 0.1, 0.5, 0.1**2 / 8, "absorbing")
x = [0.3, -0.3]
fam = multilayer.Family.solve(grid, sample_noise(grid, 11), x)

for t in (0.1, 0.25, 0.5):
    # rows follow x (decreasing), so the columns must run through y decreasing too
    U = np.array([fam.get(a).at(t)[::-1] for a in x])
    print(f"t={t}: min 2x2 minor on sorted nodes = {multilayer.sorted_minors_min(U):.3e}")

y = [0.4, -0.2]
print("M_2(0.5, x, y) =", multilayer.m_n(fam, 0.5, x, y))
