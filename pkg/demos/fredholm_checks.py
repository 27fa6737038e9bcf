"""
Fredholm verdicts
=================

The checker combines three tests: ellipticity inside edges, invertibility
of the vertex symbols, and invertibility of the Floquet fibers of every
limit operator found by scanning directions at infinity. Failures come with
a witness that does not depend on the thresholds.
"""
import numpy as np

from fredgraph.assemble import assemble_multiplication, assemble_sio, mesh_graph, section_condition_number
from fredgraph.catalog import line_graph
from fredgraph.fredholm import FredholmConfig, check_fredholm_conv, check_fredholm_sio
from fredgraph.functions import PCFunction
from fredgraph.sio import KernelModulation

line = line_graph()
cfg = FredholmConfig(tau_grid=64)
gauss = KernelModulation.gaussian()

print(check_fredholm_sio(1, 0, None, None, 2.0, line, cfg).verdict)
bad = check_fredholm_sio(1, 1, KernelModulation.constant(1.0), None, 2.0, line, cfg)
print(bad.verdict, bad.conditions["edge"].witness)
conv = check_fredholm_conv(2, -1, lambda z: np.exp(-np.abs(z) ** 2), line, 2.0, cfg)
print(conv.verdict, "margin", conv.conditions["infinity"].margin)

# %%
# A periodic coefficient with a Gaussian-modulated Cauchy part.
a = PCFunction.from_expression(line, "2 + sin(2*pi*x)")
rep = check_fredholm_sio(a, 0.5, gauss, None, 2.0, line, cfg)
print(rep.to_json())

# %%
# Finite sections of an invertible operator keep a bounded condition number.
mesh = mesh_graph(line, 8, 4)
A = assemble_multiplication(a, mesh) + assemble_sio(gauss, mesh) * 0.5
for radius in (10, 20, 40):
    print(radius, section_condition_number(A, radius))
