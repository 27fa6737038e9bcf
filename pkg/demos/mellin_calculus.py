"""
Mellin symbol calculus
======================

Mellin pseudodifferential operators act on functions of r > 0 through
x = -log r. We compose two symbols, apply both sides to a bump, and look at
conjugation by a power weight, which shifts the symbol off the real line.
"""
import numpy as np

from fredgraph.functions import Weight
from fredgraph.mellin import (MellinGrid, MellinSymbol, QuadConfig, apply_mellin, compose, conjugate_by_weight,
                              conjugation_defect)

a = MellinSymbol.from_lambda(lambda l: np.tanh(np.pi * l), strip=(-0.5, 0.5), name="tanh")
b = MellinSymbol(lambda r, l: 1 + 0.5 * np.exp(-r) + 0 * l,
                 derivatives={(1, 0): lambda r, l: -0.5 * r * np.exp(-r) + 0 * l})
c = compose(a, b, QuadConfig(eta_max=12), r_grid=np.exp(np.linspace(-24, 24, 97)),
            lam_grid=np.arange(-10, 10.01, 0.05))

grid = MellinGrid(1024, -30, 30)
u = np.exp(-grid.x ** 2)
lhs = apply_mellin(a, apply_mellin(b, u, grid, check=False), grid, check=False)
rhs = apply_mellin(c, u, grid, check=False)
print("relative composition defect:", grid.norm(lhs - rhs) / grid.norm(u))

# %%
# r^kappa a r^-kappa has the symbol a(lambda + i kappa).
for k in (-0.3, 0.3):
    aw = conjugate_by_weight(a, Weight.power(k))
    print(k, aw(1.0, 0.0)[0, 0], np.tanh(np.pi * 1j * k))
    print("  defect", conjugation_defect(a, Weight.power(k), MellinGrid(512, -20, 20), [(0.0, 1.0)]))
