"""
Fourier symbol of a modulated Cauchy kernel
===========================================

Inside an edge the kernel phi(x, y - x) / (y - x) acts like a Fourier
multiplier. For phi = exp(-z^2) the multiplier is erf(xi / 2), which tends
to sgn(xi) faster than any power of 1/xi.
"""
import numpy as np
from scipy.special import erf

from fredgraph.sio import KernelModulation, fourier_symbol_phi

xi = np.array([0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0])
fs = fourier_symbol_phi(KernelModulation.gaussian(), 0.0, xi)
for q, v, r in zip(xi, fs.values.real, fs.remainder):
    print(f"xi={q:5.1f}  sigma={v: .12f}  erf(xi/2)={erf(q / 2): .12f}  |sigma - sgn|={r:.2e}")

# %%
# An odd modulation has phi(x, 0) = 0, so the symbol decays instead of
# tending to a sign.
phi = KernelModulation(lambda x, z: z * np.exp(-z * z) + 0 * np.real(x))
fs = fourier_symbol_phi(phi, 0.0, np.array([0.0, 2.0, 8.0]))
print(fs.leading, fs.values)
