import math

import numpy as np
import pytest

from fredgraph.assemble import (assemble_convolution, assemble_multiplication, assemble_sio,
                                identity_band, mesh_graph, shift_band)
from fredgraph.errors import NotPeriodic, OffTorus
from fredgraph.floquet import (essential_spectrum, fiber_at, fiber_blocks, fiber_invertibility_scan, fibers, hausdorff,
                               limit_defect, limit_family, limit_operator_band, section_eigenvalues, torus_grid)
from fredgraph.functions import PCFunction, SOFunction
from fredgraph.sio import KernelModulation

from conftest import gaussian_kernel


@pytest.fixture(scope="module")
def lmesh(line):
    return mesh_graph(line, 8, 4)


@pytest.fixture(scope="module")
def gauss_conv(lmesh):
    return assemble_convolution(gaussian_kernel, lmesh, band_radius=20)


# -- fibers ------------------------------------------------------------------------------
def test_multiplication_has_one_block(line, lmesh):
    F = fiber_blocks(assemble_multiplication(PCFunction.from_expression(line, "2 + sin(2*pi*s)"), lmesh))
    assert F.offsets.tolist() == [[0]]
    mus = fibers(F, torus_grid(8, 1))
    assert np.all(mus == mus[0])


def test_compact_kernel_fiber_support(lmesh):
    k = lambda z: np.where(np.abs(z) < 0.9, 1 - np.abs(z) / 0.9, 0.0)
    F = fiber_blocks(assemble_convolution(k, lmesh, band_radius=3, tail_tol=np.inf))
    nz = [int(g[0]) for g, B in zip(F.offsets, F.blocks) if np.any(B)]
    assert sorted(nz) == [-1, 0, 1]


def test_gaussian_fiber_blocks_match_direct_quadrature(lmesh, gauss_conv):
    F = fiber_blocks(gauss_conv)
    sw = np.sqrt(lmesh.weights)
    x = lmesh.pos.real
    for g in (0, 1, -2, 5):
        direct = sw[:, None] * np.exp(-(x[:, None] - x[None, :] + g) ** 2) * sw[None, :]
        assert np.linalg.norm(F.block((g,)) - direct, 2) < 1e-10


def test_shift_fiber_is_tau(lmesh):
    F = fiber_blocks(shift_band(lmesh, (1,)))
    for t in np.exp(1j * np.array([0.0, 0.7, 2.0, -3.0])):
        assert np.allclose(fiber_at(F, t), t * np.eye(lmesh.size), atol=1e-15)


def test_fiber_at_one_is_block_sum(gauss_conv):
    F = fiber_blocks(gauss_conv)
    assert np.allclose(fiber_at(F, 1.0), F.blocks.sum(axis=0), atol=1e-13)


def test_discrete_fourier_inversion(hexa):
    m = mesh_graph(hexa, 2, 4)
    A = assemble_sio(KernelModulation.gaussian(), m, band_radius=3, tail_tol=np.inf) + 2.0
    F = fiber_blocks(A)
    tau = torus_grid(8, 2)
    mus = fibers(F, tau)
    for g in [(0, 0), (1, -2), (3, 3), (-3, 0)]:
        phase = np.prod(tau ** (-np.array(g)), axis=1)
        rec = np.einsum("t,tij->ij", phase, mus) / len(tau)
        assert np.abs(rec - F.block(g)).max() < 1e-10


def test_off_torus_rejected(gauss_conv):
    with pytest.raises(OffTorus):
        fiber_at(fiber_blocks(gauss_conv), 1.5)


def test_non_periodic_rejected(line, lmesh):
    with pytest.raises(NotPeriodic):
        fiber_blocks(assemble_multiplication(PCFunction.from_expression(line, "atan(x)"), lmesh))


# -- spectra -------------------------------------------------------------------------------
def test_shift_spectrum_is_circle(lmesh):
    est = essential_spectrum(shift_band(lmesh, (1,)), 512, adaptive=False)
    circle = np.exp(2j * np.pi * np.linspace(0, 1, 200001))
    # the cloud is the grid itself: arc midpoints sit 2 sin(pi / 1024) away
    assert hausdorff(est.points, circle) == pytest.approx(2 * math.sin(math.pi / 1024), rel=1e-2)
    assert np.abs(np.abs(est.points) - 1).max() < 1e-14


def test_periodic_multiplication_spectrum_is_range(line, lmesh):
    f = PCFunction.from_expression(line, "2 + sin(2*pi*s)")
    est = essential_spectrum(assemble_multiplication(f, lmesh), 16, adaptive=False)
    dense = 2 + np.sin(2 * np.pi * np.linspace(0, 1, 20001))
    # half the largest node gap (with wraparound) times sup |f'|
    s = np.sort(lmesh.s)
    gap = max(np.diff(s).max(), 1 - s[-1] + s[0])
    assert hausdorff(est.points, dense) <= 2 * math.pi * gap / 2 + 1e-12


def test_gaussian_spectrum_is_fourier_range(gauss_conv):
    est = essential_spectrum(gauss_conv, 256, adaptive=False)
    assert hausdorff(est.points, np.linspace(0, math.sqrt(math.pi), 20001)) <= 1e-2


def test_spectrum_shift(gauss_conv):
    a = essential_spectrum(gauss_conv, 64, adaptive=False)
    b = essential_spectrum(gauss_conv - 0.7, 64, adaptive=False)
    assert np.abs(np.sort(b.points.real) - (np.sort(a.points.real) - 0.7)).max() < 1e-12


def test_real_blocks_give_conjugation_symmetric_cloud(lmesh, gauss_conv):
    A = gauss_conv + shift_band(lmesh, (1,)) * 0.5 + 1.0
    est = essential_spectrum(A, 64, adaptive=False)
    assert not fiber_blocks(A).is_hermitian()
    assert hausdorff(est.points, est.points.conj()) < 1e-10


def test_adaptive_grid_refines_until_stable(gauss_conv):
    est = essential_spectrum(gauss_conv, 32, cloud_tol=1e-3)
    assert est.hausdorff_motion < 1e-3
    assert est.grid_size > 32


def test_section_eigenvalues_near_cloud(gauss_conv):
    est = essential_spectrum(gauss_conv, 256)
    ev = section_eigenvalues(gauss_conv, 30)
    assert ev.size == 61 * 32
    assert est.distance_to(ev).max() < 5e-2


# -- margins --------------------------------------------------------------------------------
def test_margin_of_twice_identity(lmesh):
    rep = fiber_invertibility_scan(fiber_blocks(identity_band(lmesh) * 2), 16)
    assert rep.margin == pytest.approx(2.0) and rep.passed


def test_margin_of_shifted_shift(lmesh):
    rep = fiber_invertibility_scan(fiber_blocks(shift_band(lmesh, (1,))), 64, shift=0.5)
    assert rep.margin == pytest.approx(0.5, abs=1e-12)
    assert rep.argmin_tau[0] == pytest.approx(1.0)


def test_margin_of_positive_perturbation(gauss_conv):
    rep = fiber_invertibility_scan(fiber_blocks(gauss_conv + 2.0), 64)
    assert rep.passed and rep.margin == pytest.approx(2.0, abs=1e-6)
    # sqrt(pi) is attained at tau = 1 by constant densities
    bad = fiber_invertibility_scan(fiber_blocks(gauss_conv - math.sqrt(math.pi)), 64)
    assert not bad.passed and bad.argmin_tau[0] == pytest.approx(1.0)
    # interior points of the spectrum are missed only by the grid resolution
    assert fiber_invertibility_scan(fiber_blocks(gauss_conv - 1.0), 512).margin < \
        fiber_invertibility_scan(fiber_blocks(gauss_conv - 1.0), 64).margin


# -- limit operators ---------------------------------------------------------------------------
def test_periodic_operator_is_its_own_limit(gauss_conv):
    L = limit_operator_band(gauss_conv, lambda m: (m,))
    for g in gauss_conv.offsets():
        assert np.array_equal(L.block(None, g), gauss_conv.block(None, g))


def test_arctan_limit_coefficient(line, lmesh):
    f = SOFunction.wrap(PCFunction.from_expression(line, "3 + atan(x)"))
    A = assemble_multiplication(f, lmesh)
    for sign, value in ((1, 3 + math.pi / 2), (-1, 3 - math.pi / 2)):
        L = limit_operator_band(A, lambda m, s=sign: (s * m,))
        assert L.periodic
        assert np.abs(L.block((0,), (0,)) - value * np.eye(lmesh.size)).max() < 1e-8
        assert np.array_equal(L.block((9,), (0,)), L.block((0,), (0,)))


def test_log_oscillation_limits_depend_on_sequence(line, lmesh):
    f = PCFunction.from_expression(line, "sin(log(1+abs(x)))")
    A = assemble_multiplication(f, lmesh) + assemble_convolution(gaussian_kernel, lmesh, band_radius=8,
                                                                 tail_tol=np.inf)
    values = []
    for c in (0.5, 2.0):
        h = np.array([[int(math.floor(math.exp(2 * math.pi * k + c)))] for k in range(2, 7)])
        L = limit_operator_band(A, h, tol=1e-6)
        coef = L.meta["limit"]["results"][0].values
        assert np.allclose(coef, math.sin(c), atol=1e-6)
        values.append(coef[0])
        defects = [limit_defect(A, L, h[k], 4) for k in range(3)]
        assert defects[0] > defects[1] > defects[2]
        assert defects[2] < 1e-3
    assert abs(values[0] - values[1]) > 0.4


def test_limit_family_scans_both_directions(line, lmesh):
    f = SOFunction.wrap(PCFunction.from_expression(line, "3 + atan(x)"))
    fam = limit_family(assemble_multiplication(f, lmesh))
    assert sorted(fam.labels) == ["+e1", "-e1"]
    assert not fam.failures
