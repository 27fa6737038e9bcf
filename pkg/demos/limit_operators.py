"""
Limit operators
===============

Shifting an operator along a sequence that runs to infinity and taking the
limit keeps only its behaviour at infinity. A slowly oscillating coefficient
such as 3 + arctan(x) becomes a constant, and the limit depends on the
direction.
"""
import math

import numpy as np

from fredgraph.assemble import assemble_convolution, assemble_multiplication, mesh_graph
from fredgraph.catalog import line_graph
from fredgraph.floquet import limit_defect, limit_family, limit_operator_band
from fredgraph.functions import PCFunction, SOFunction

line = line_graph()
mesh = mesh_graph(line, 8, 4)
f = SOFunction.wrap(PCFunction.from_expression(line, "3 + atan(x)"))
A = assemble_multiplication(f, mesh)

L = limit_operator_band(A, lambda m: (m,))
print("limit coefficient", L.block((0,), (0,))[0, 0].real, "expected", 3 + math.pi / 2)
for k in range(2, 9):
    print(f"shift 2^{k}: defect {limit_defect(A, L, (2 ** k,), 4):.3e}")

fam = limit_family(A)
print("directions scanned:", fam.labels)

# %%
# sin(log(1 + |x|)) oscillates ever more slowly; different sequences give
# different constant limits.
g = PCFunction.from_expression(line, "sin(log(1+abs(x)))")
B = assemble_multiplication(g, mesh) + assemble_convolution(lambda z: np.exp(-np.abs(z) ** 2), mesh,
                                                            band_radius=8, tail_tol=np.inf)
for c in (0.5, 2.0):
    h = np.array([[int(math.floor(math.exp(2 * math.pi * k + c)))] for k in range(2, 7)])
    Lc = limit_operator_band(B, h, tol=1e-6)
    print(c, Lc.meta["limit"]["results"][0].values[0], "sin(c) =", math.sin(c))
