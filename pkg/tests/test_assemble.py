import math

import numpy as np
import pytest
from scipy.integrate import quad

from fredgraph.assemble import (assemble_convolution, assemble_multiplication, assemble_sio, band_norms,
                                cauchy_panel_weights, finite_section, identity_band, mesh_graph, shift_band)
from fredgraph.errors import BandRadiusTooSmall, DecayViolation, NotPeriodic
from fredgraph.functions import PCFunction, Weight
from fredgraph.sio import KernelModulation

from conftest import gaussian_kernel


@pytest.fixture(scope="module")
def lmesh(line):
    return mesh_graph(line, 8, 4)


@pytest.fixture(scope="module")
def gauss_conv(lmesh):
    return assemble_convolution(gaussian_kernel, lmesh, band_radius=20)


def nodes_x(mesh, M):
    return np.concatenate([mesh.pos.real + c for c in range(-M, M + 1)])


# -- mesh -------------------------------------------------------------------------------
def test_line_mesh_size(lmesh):
    assert lmesh.size == 32
    assert lmesh.n_panels == 8


def test_mesh_weights_sum_to_edge_length(hexa):
    m = mesh_graph(hexa, 4, 8)
    for e, sl in zip(hexa.edges, m.edge_slices):
        assert m.weights[sl].sum() == pytest.approx(e.length, rel=1e-14)


def test_honeycomb_mesh_size(hexa):
    m = mesh_graph(hexa, 4, 4)
    assert m.size == sum(m.panels) * 4
    assert len(m.panels) == 3 and len(set(m.panels)) == 1


def test_mesh_order_validated(line):
    with pytest.raises(ValueError):
        mesh_graph(line, 8, 5)


def test_weighted_mesh_scale(line):
    w = Weight.power(0.2)
    m = mesh_graph(line, 8, 4, weight=w)
    vals = w.on_edge(line, "e0", m.s)
    assert np.allclose(m.scale, np.sqrt(m.weights) * vals, rtol=1e-14)


# -- panel quadrature -----------------------------------------------------------------------
@pytest.mark.parametrize("q", [4, 8])
@pytest.mark.parametrize("t0", [0.3, -0.77, 1.7, 0.2 + 0.1j, -0.5 - 1e-3j, "node"])
def test_cauchy_panel_weights_exact_on_polynomials(q, t0):
    from numpy.polynomial.legendre import leggauss
    t = leggauss(q)[0]
    if t0 == "node":
        t0 = t[1]
    f = lambda x: 1 + x - 2 * x ** 2 + x ** (q - 1)
    W = cauchy_panel_weights(t0, q)[0]
    if np.imag(t0) != 0:
        g = lambda x: f(x) / (x - t0)
        ex = quad(lambda x: g(x).real, -1, 1, limit=200)[0] + 1j * quad(lambda x: g(x).imag, -1, 1, limit=200)[0]
    elif abs(t0) < 1:
        ex = quad(f, -1, 1, weight="cauchy", wvar=float(np.real(t0)))[0]
    else:
        ex = quad(lambda x: f(x) / (x - t0), -1, 1)[0]
    assert abs(W @ f(t) - ex) < 1e-11


# -- SIO --------------------------------------------------------------------------------------
def test_zero_modulation_gives_zero_operator(lmesh):
    S = assemble_sio(KernelModulation.constant(0.0), lmesh, band_radius=3)
    assert all(not np.any(B) for B in S.blocks().values())


def test_constant_density_matches_segment_integral(lmesh):
    M = 20
    S = assemble_sio(KernelModulation.constant(1.0), lmesh, band_radius=2 * M, tail_tol=np.inf)
    x = nodes_x(lmesh, M)
    Su = finite_section(S, M, scaled=False) @ np.ones_like(x)
    a, b = -M, M + 1
    exact = np.log((b - x) / (x - a)) / (math.pi * 1j)
    mid = np.abs(x - 0.5) < M / 2
    assert np.abs(Su - exact)[mid].max() < 1e-4


@pytest.mark.slow
def test_hilbert_pair(lmesh):
    M = 60
    S = assemble_sio(KernelModulation.constant(1.0), lmesh, band_radius=2 * M, tail_tol=np.inf)
    x = nodes_x(lmesh, M)
    Su = finite_section(S, M, scaled=False) @ (1 / (1 + x ** 2))
    # (1/(pi i)) PV int u(y)/(y - x) dy = i H[u] and H[1/(1+y^2)] = x/(1+x^2); truncation error ~ 1/M
    mid = np.abs(x) < 5
    assert np.abs(Su - 1j * x / (1 + x ** 2))[mid].max() < 1e-3


def test_even_density_maps_to_odd(lmesh):
    M = 10
    S = assemble_sio(KernelModulation.gaussian(), lmesh)
    x = nodes_x(lmesh, M)
    Su = finite_section(S, M, scaled=False) @ np.exp(-(x - 0.5) ** 2)
    # the cell layout is symmetric about 1/2: reversing the node order reflects x -> 1 - x
    assert np.allclose(x[::-1], 1 - x, atol=1e-12)
    assert np.abs(Su + Su[::-1]).max() < 1e-8


def test_sio_band_decay(lmesh):
    S = assemble_sio(KernelModulation.gaussian(), lmesh, band_radius=16)
    assert band_norms(S, fit_range=(2, 16)).slope <= -3
    assert S.tail_bound < 1e-8


def test_sio_default_radius_meets_tolerance(lmesh):
    S = assemble_sio(KernelModulation.gaussian(), lmesh)
    assert S.tail_bound <= 1e-8
    with pytest.raises(BandRadiusTooSmall):
        assemble_sio(KernelModulation.gaussian(), lmesh, band_radius=1)


# -- convolution -------------------------------------------------------------------------------
def test_zero_kernel(lmesh):
    T = assemble_convolution(lambda z: 0 * np.abs(z), lmesh, band_radius=2)
    assert all(not np.any(B) for B in T.blocks().values())


def test_gaussian_row_sums(gauss_conv):
    rows = sum(gauss_conv.blocks().values()).sum(axis=1)
    assert np.abs(rows - math.sqrt(math.pi)).max() < 1e-6


def test_compact_kernel_has_three_blocks(lmesh):
    k = lambda z: np.where(np.abs(z) < 0.9, np.cos(np.pi * np.abs(z) / 1.8) ** 2, 0.0)
    T = assemble_convolution(k, lmesh, band_radius=4, tail_tol=np.inf)
    nonzero = {g for g, B in T.blocks().items() if np.any(B)}
    assert nonzero == {(-1,), (0,), (1,)}


def test_convolution_band_decay(gauss_conv):
    assert band_norms(gauss_conv, fit_range=(2, 16)).slope <= -3


def test_slow_kernel_rejected(lmesh):
    with pytest.raises(DecayViolation):
        assemble_convolution(lambda z: 1 / (1 + np.abs(z)), lmesh)


def test_blocks_match_direct_evaluation_in_any_cell(hexa):
    m = mesh_graph(hexa, 2, 4)
    T = assemble_convolution(gaussian_kernel, m, band_radius=3, tail_tol=np.inf)
    for alpha in [(0, 0), (4, -7), (-12, 3)]:
        for gam, B in T.blocks().items():
            src = tuple(a - g for a, g in zip(alpha, gam))
            X = m.pos + hexa.shift(alpha)
            Y = m.pos + hexa.shift(src)
            direct = gaussian_kernel(X[:, None] - Y[None, :]) * m.weights[None, :]
            assert np.abs(T.block(alpha, gam) - direct).max() < 1e-12


# -- multiplication and algebra -------------------------------------------------------------------
def test_multiplication_band(line, lmesh):
    f = PCFunction.from_expression(line, "2 + x")
    A = assemble_multiplication(f, lmesh)
    assert A.offsets() == [(0,)]
    for a in (0, 3, -5):
        assert np.allclose(A.block((a,), (0,)), np.diag(2 + lmesh.pos.real + a), atol=1e-14)


def test_periodic_blocks_are_cell_independent(line, lmesh):
    f = PCFunction.from_expression(line, "2 + sin(2*pi*s)")
    S = assemble_sio(KernelModulation.gaussian(), lmesh).left_multiply(f)
    assert S.periodic
    for g in S.offsets():
        assert np.abs(S.block((0,), g) - S.block((7,), g)).max() <= 1e-12


def test_shift_wiener_sum(lmesh):
    assert band_norms(shift_band(lmesh, (1,))).wiener_sum == pytest.approx(1.0)


def test_composition_consistency(lmesh):
    A = assemble_convolution(gaussian_kernel, lmesh, band_radius=4, tail_tol=np.inf)
    B = assemble_sio(KernelModulation.gaussian(), lmesh, band_radius=4, tail_tol=np.inf)
    P = A @ B
    M = 12
    lhs = finite_section(A, M) @ finite_section(B, M)
    rhs = finite_section(P, M)
    n0 = lmesh.size
    inner = slice((M - M // 3) * n0, (M + M // 3 + 1) * n0)
    assert np.abs(lhs[inner, inner] - rhs[inner, inner]).max() < 1e-12


def test_product_needs_periodic(line, lmesh):
    f = PCFunction.from_expression(line, "atan(x)")
    with pytest.raises(NotPeriodic):
        assemble_multiplication(f, lmesh) @ identity_band(lmesh)


def test_commutator_shrinks_for_slower_coefficients(lmesh, gauss_conv):
    M = 40
    T = finite_section(gauss_conv, M)
    x = nodes_x(lmesh, M)
    inner = np.abs(x) < 4  # a window short against the oscillation scale
    defects = []
    for L in (4.0, 8.0, 16.0):
        f = np.sin(x / L)  # multiplication section is diagonal
        C = f[:, None] * T - T * f[None, :]
        defects.append(np.linalg.norm(C[np.ix_(inner, inner)], 2))
    assert defects[0] / defects[1] >= 1.9 and defects[1] / defects[2] >= 1.9


# -- finite sections ---------------------------------------------------------------------------
def test_identity_section(lmesh):
    assert np.array_equal(finite_section(identity_band(lmesh), 3), np.eye(7 * 32))


def test_shift_section_is_nilpotent(lmesh):
    F = finite_section(shift_band(lmesh, (1,)), 3)
    assert np.any(np.linalg.matrix_power(F, 6))
    assert not np.any(np.linalg.matrix_power(F, 7))


def test_gaussian_section_spectrum_in_range(gauss_conv):
    F = finite_section(gauss_conv, 30)
    assert np.abs(F - F.conj().T).max() < 1e-12
    ev = np.linalg.eigvalsh((F + F.conj().T) / 2)
    assert ev.min() >= -1e-3 and ev.max() <= math.sqrt(math.pi) + 1e-3


def test_sparse_and_dense_sections_agree(gauss_conv):
    assert np.array_equal(finite_section(gauss_conv, 4, sparse=True).toarray(), finite_section(gauss_conv, 4))
