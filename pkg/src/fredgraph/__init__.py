"""Symbols, Floquet fibers and Fredholm checks for operators on periodic metric graphs."""
from .assemble import (BandOperator, Mesh, assemble_convolution, assemble_multiplication, assemble_sio,
                       band_norms, finite_section, identity_band, mesh_graph, section_condition_number, shift_band)
from .catalog import honeycomb, line_graph, square_lattice
from .errors import *  # noqa: F401,F403
from .floquet import (FiberFamily, SpectrumEstimate, essential_spectrum, fiber_at, fiber_blocks,
                      fiber_invertibility_scan, fibers, hausdorff, limit_defect, limit_family, limit_operator_band,
                      section_eigenvalues, torus_grid)
from .fredholm import FredholmConfig, FredholmReport, check_fredholm_conv, check_fredholm_sio
from .functions import PCFunction, SOFunction, Weight, check_slowly_oscillating, check_weight_class, limit_function
from .graph import GraphPoint, GraphSpec, MetricGraph, act, build_graph
from .io import load_graph, load_operator, parse_operator
from .mellin import (MellinGrid, MellinSymbol, adjoint, apply_mellin, compose, conjugate_by_weight,
                     conjugation_defect, local_invertibility_zero, seminorm)
from .sio import (KernelModulation, edge_symbol, elliptic, fourier_symbol_phi, nu, vertex_symbol_A, vertex_symbol_S,
                  vertex_symbol_matrix)

__version__ = "0.1.0"
