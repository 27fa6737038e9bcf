"""
Vertex symbols of the Cauchy-type operator
==========================================

Near a vertex the operator behaves like a matrix of Mellin multipliers, one
row and column per incident edge. For a single ray the multiplier is
tanh(pi lambda); for a straight line through the vertex the off-diagonal
entries carry sech.
"""
import numpy as np

from fredgraph.catalog import honeycomb, line_graph
from fredgraph.functions import PCFunction
from fredgraph.sio import KernelModulation, vertex_symbol_matrix

lam = np.linspace(-3, 3, 7)

# a line graph: each vertex joins one outgoing and one incoming edge
line = line_graph()
vs = vertex_symbol_matrix(line, line.vertex_ids[0])
print("line vertex, lambda = 1:")
print(np.round(vs(1.0, lam)[4], 6))
print("tanh(pi), sech(pi):", np.tanh(np.pi), 1 / np.cosh(np.pi))

# %%
# On the honeycomb every vertex has valency three and the angles between
# edges are 2 pi / 3. S alone is singular at lambda = 0; adding a
# coefficient a I makes the full symbol a + b S invertible.
hexa = honeycomb()
grid = np.linspace(-10, 10, 401)
a, b = PCFunction.from_expression(hexa, "2"), PCFunction.from_expression(hexa, "0.5")
for v in hexa.vertex_ids:
    S = vertex_symbol_matrix(hexa, v)
    A = vertex_symbol_matrix(hexa, v, a, b, KernelModulation.gaussian())
    print(v, "valency", S.star.valency, "min |det S| =", np.abs(S.det(1.0, grid)).min(),
          "min |det(a + b S)| =", np.abs(A.det(1.0, grid)).min())
