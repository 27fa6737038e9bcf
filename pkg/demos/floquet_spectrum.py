"""
Essential spectrum from Floquet fibers
======================================

A periodic band operator is a multiplier in the quasi-momentum tau. Its
spectrum is the union of the spectra of the cell matrices mu(tau). We check
a Gaussian convolution against its Fourier range [0, sqrt(pi)] and against
the eigenvalues of a large finite section.
"""
import math

import numpy as np

from fredgraph.assemble import assemble_convolution, mesh_graph, shift_band
from fredgraph.catalog import line_graph
from fredgraph.floquet import essential_spectrum, hausdorff, section_eigenvalues

mesh = mesh_graph(line_graph(), 8, 4)
T = assemble_convolution(lambda z: np.exp(-np.abs(z) ** 2), mesh, band_radius=20)

est = essential_spectrum(T, 64)
print("grid", est.grid_size, "motion", est.hausdorff_motion)
print("Hausdorff to [0, sqrt(pi)]:", hausdorff(est.points, np.linspace(0, math.sqrt(math.pi), 5001)))

# %%
# Finite sections of a self-adjoint periodic operator fill the same interval.
ev = section_eigenvalues(T, 30)
print("section range", ev.real.min(), ev.real.max(), "max distance to cloud", est.distance_to(ev).max())

# %%
# The one-cell shift has fibers tau I, so its spectrum is the unit circle.
# The cloud is exactly the grid of roots of unity.
for n in (64, 512, 4096):
    S = essential_spectrum(shift_band(mesh, (1,)), n, adaptive=False)
    circle = np.exp(2j * np.pi * np.arange(100000) / 100000)
    print(n, hausdorff(S.points, circle), 2 * math.sin(math.pi / (2 * n)))
