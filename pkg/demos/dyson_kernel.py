"""Dyson transition density and its one-point marginal for two particles."""
import numpy as np

from mlshe import kernels

x = np.array([0.5, -0.5])
print("chamber mass of Q_1(x, .):", kernels.dyson_mass(1.0, x))

# one-point kernel K_1(x, y1) = int Q_1(x, (y1, y2)) dy2, integrated over y1
ys = np.linspace(-7, 7, 281)
K = np.array([kernels.one_point_kernel(1.0, x, y) for y in ys])
print("int K dy1 =", np.trapezoid(K, ys), "(n! = 2)")
i = int(np.argmax(K))
print(f"K peaks at y1 = {ys[i]:.2f} with value {K[i]:.4f}")

# boundary: Q_t(a 1, y) = c_{n,t} Delta(y)^2 prod p_t(y_i - a)
y = np.array([1.0, -1.0])
print("Q_1((0,0), (1,-1)) =", kernels.dyson_density_boundary(1.0, 0.0, y))
