import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import erf

from fredgraph.errors import PointIsVertex, QuadratureDiverged, SymbolPole
from fredgraph.functions import PCFunction, Weight
from fredgraph.graph import VertexStar
from fredgraph.sio import (KernelModulation, VertexSymbolMatrix, angle_gaps, asymptote_lambda, edge_symbol,
                           edge_symbol_pair, elliptic, fourier_symbol_phi, nu, vertex_symbol_A, vertex_symbol_matrix,
                           vertex_symbol_S)

LAM = np.linspace(-4, 4, 33)


def star(angles, signs):
    order = np.argsort(angles)
    angles, signs = np.asarray(angles, float)[order], np.asarray(signs, float)[order]
    rays = [(f"e{i}", "start" if s > 0 else "end") for i, s in enumerate(signs)]
    return VertexStar("w", 0.1, angles, signs, rays, 0j)


# -- nu -----------------------------------------------------------------------------------
def test_nu_vanishes_at_half_i():
    assert abs(nu(0.0, 0.5j)) < 1e-15


def test_nu_at_pi_is_inverse_sinh():
    z = np.array([0.3 + 0.2j, -1.1 + 0.7j, 2.0 + 0.5j])
    assert np.allclose(nu(np.pi, z), 1 / np.sinh(np.pi * z), rtol=1e-14)


def test_nu_coth_pi_high_precision():
    mpmath.mp.dps = 30
    oracle = float(mpmath.coth(mpmath.pi))
    assert nu(0.0, 1.0) == pytest.approx(oracle, rel=1e-15)
    assert nu(0.0, 1.0).real == pytest.approx(1.003741873, abs=1e-9)


@pytest.mark.parametrize("z", [1j, 0j, -2j, 3j + 1e-10])
def test_nu_poles(z):
    with pytest.raises(SymbolPole):
        nu(0.0, z)


def test_nu_general_formula_matches_direct():
    rng = np.random.default_rng(3)
    d = rng.uniform(0.1, 2 * np.pi - 0.1, 50)
    z = rng.uniform(-3, 3, 50) + 1j * rng.uniform(0.05, 0.95, 50)
    direct = np.exp((np.pi - d) * z) / np.sinh(np.pi * z)
    assert np.allclose(nu(d, z), direct, rtol=1e-12)


def test_nu_overflow_free():
    v = nu(1.0, np.array([800 + 0.5j, -800 + 0.5j]))
    assert np.all(np.isfinite(v)) and np.all(np.abs(v) < 1e-300)


@pytest.mark.parametrize("y", [0.2, 0.5, 0.8])
def test_nu_asymptotes(y):
    assert abs(nu(0.0, 20 + 1j * y) - 1) < 1e-8
    assert abs(nu(0.0, -20 + 1j * y) + 1) < 1e-8
    for d in (1.0, np.pi / 2, np.pi, 4.0, 5.2):
        assert abs(nu(d, 20 + 1j * y)) < 1e-8
        assert abs(nu(d, -20 + 1j * y)) < 1e-8


def test_asymptote_lambda_guarantee():
    L = asymptote_lambda(1e-6)
    lam = np.linspace(L, L + 30, 200)
    assert np.all(np.abs(nu(0.0, lam + 0.5j) - 1) <= 1e-6)


def test_angle_gaps():
    g = angle_gaps([0.0, 1.0, 4.0])
    assert np.all(np.diag(g) == 0)
    assert g[1, 0] == pytest.approx(1.0) and g[0, 1] == pytest.approx(2 * np.pi - 1.0)


# -- vertex symbols ---------------------------------------------------------------------
def test_valency_one_symbol_is_tanh():
    S = vertex_symbol_S(star([0.7], [1]), 2.0, None, 1.0, LAM)
    assert np.allclose(S[..., 0, 0], np.tanh(np.pi * LAM), atol=1e-14)
    assert abs(vertex_symbol_S(star([0.7], [1]), 2.0, None, 1.0, 0.0)[0, 0]) < 1e-15


def test_line_vertex_symbol(line):
    S = vertex_symbol_matrix(line, "v0")(1.0, LAM)
    t, sech = np.tanh(np.pi * LAM), 1 / np.cosh(np.pi * LAM)
    assert np.allclose(S[:, 0, 0], t, atol=1e-14)
    assert np.allclose(S[:, 1, 1], -t, atol=1e-14)
    # nu(pi, lam + i/2) = -i sech(pi lam), multiplied by the column sign
    assert np.allclose(S[:, 0, 1], 1j * sech, atol=1e-14)
    assert np.allclose(S[:, 1, 0], -1j * sech, atol=1e-14)


def test_flipping_sign_negates_column():
    base = star([0.3, 2.0, 4.5], [1, -1, 1])
    flipped = VertexStar("w", 0.1, base.angles, base.signs * np.array([1, 1, -1]), base.rays, 0j)
    S, F = vertex_symbol_S(base, 2.0, None, 1.0, LAM), vertex_symbol_S(flipped, 2.0, None, 1.0, LAM)
    assert np.array_equal(F[..., :2], S[..., :2])
    assert np.array_equal(F[..., 2], -S[..., 2])


@pytest.mark.parametrize("alpha", [0.4, 2.5, 5.9])
def test_rotation_invariance(alpha):
    th = np.array([0.3, 2.0, 4.5])
    eps = np.array([1, -1, 1])
    S = vertex_symbol_S(star(th, eps), 2.0, None, 1.0, LAM)
    rot = (th + alpha) % (2 * np.pi)
    order = np.argsort(rot)
    R = vertex_symbol_S(star(rot, eps), 2.0, None, 1.0, LAM)
    # R in sorted order equals S conjugated by the re-sorting permutation
    assert np.allclose(R, S[..., order[:, None], order[None, :]], atol=1e-12, rtol=0)


def test_det_invariant_under_relabeling(hexa):
    a = PCFunction.from_expression(hexa, "2 + x")
    b = PCFunction.from_expression(hexa, "1 + 0.5*y")
    phi = KernelModulation.gaussian()
    A = vertex_symbol_A(hexa, "A", a, b, phi, 2.0, None, 1.0, LAM)
    P = np.eye(3)[[2, 0, 1]]
    assert np.allclose(np.linalg.det(P @ A @ P.T), np.linalg.det(A), rtol=1e-13)


def test_vertex_symbol_A_reductions(line):
    a = PCFunction.from_expression(line, "2 + x")
    zero = PCFunction.constant(line, 0.0)
    phi = KernelModulation.constant(1.0)
    A0 = vertex_symbol_A(line, "v0", a, zero, phi, 2.0, None, 1.0, LAM)
    assert np.allclose(A0, np.diag([2.0, 2.0]), atol=1e-8)
    one = PCFunction.constant(line, 1.0)
    A1 = vertex_symbol_A(line, "v0", zero, one, phi, 2.0, None, 1.0, LAM)
    A2 = vertex_symbol_A(line, "v0", zero, PCFunction.constant(line, 2.0), phi, 2.0, None, 1.0, LAM)
    assert np.array_equal(A2, 2 * A1)
    assert np.allclose(A1, vertex_symbol_matrix(line, "v0")(1.0, LAM), atol=1e-14)


def test_single_ray_A_is_tanh():
    m = VertexSymbolMatrix("w", star([0.0], [1]), 2.0, None, np.zeros((1, 1)), np.eye(1))
    assert np.allclose(m(1.0, LAM)[..., 0, 0], np.tanh(np.pi * LAM), atol=1e-14)


def test_power_weight_shifts_imaginary_part():
    st = star([0.0], [1])
    w = Weight.power(0.25)
    S = vertex_symbol_S(st, 2.0, w, 1e-3, LAM)
    assert np.allclose(S[..., 0, 0], 1 / np.tanh(np.pi * (LAM + 0.75j)), rtol=1e-12)


def test_out_of_class_weight_hits_pole():
    with pytest.raises(SymbolPole):
        vertex_symbol_S(star([0.0], [1]), 2.0, Weight.power(0.5), 1e-3, np.array([0.0]))


# -- edge symbol ------------------------------------------------------------------------
def test_edge_symbol_values(line):
    x = line.point("e0", 0.4)
    phi = KernelModulation.constant(1.0)
    two, one = PCFunction.constant(line, 2.0), PCFunction.constant(line, 1.0)
    assert np.array_equal(edge_symbol(two, one, phi, x, [1.0, -1.0, 0.0]), [3, 1, 3])
    assert elliptic(two, one, phi, x)
    assert edge_symbol_pair(one, one, phi, x) == (2, 0)
    assert not elliptic(one, one, phi, x)


def test_edge_symbol_rejects_vertices(line):
    c = PCFunction.constant(line, 1.0)
    with pytest.raises(PointIsVertex):
        edge_symbol(c, c, KernelModulation.constant(1.0), line.vertex_point("v0"), 1.0)


def test_ellipticity_on_a_grid(line):
    a = PCFunction.from_expression(line, "2 + sin(x)")
    b = PCFunction.from_expression(line, "cos(x)")
    phi = KernelModulation.constant(1.0)
    s = np.linspace(0.005, 0.995, 100)
    for n in range(-3, 4):
        xs = s + n
        assert np.min(np.abs(2 + np.sin(xs)) - np.abs(np.cos(xs))) > 0  # oracle
        for t in s[::9]:
            assert elliptic(a, b, phi, line.point("e0", t, (n,)))


# -- Fourier symbol ------------------------------------------------------------------------
def test_gaussian_symbol_is_erf():
    xi = np.array([-9.0, -2.0, -0.5, 0.0, 0.3, 1.0, 4.0, 20.0])
    fs = fourier_symbol_phi(KernelModulation.gaussian(), 0.0, xi)
    assert np.allclose(fs.values, erf(xi / 2), atol=1e-12)
    assert fs.values[3] == 0
    # independent oracle: adaptive quadrature of the folded integrand
    for k in (2, 5, 6):
        q = xi[k]
        o = quad(lambda z: 2 * np.exp(-z * z) * np.sin(z * q) / z, 0, np.inf)[0] / np.pi
        assert fs.values[k].real == pytest.approx(o, abs=1e-10)


def test_gaussian_remainder_decays_faster_than_xi_squared():
    xi = np.linspace(4, 64, 61)
    fs = fourier_symbol_phi(KernelModulation.gaussian(), 0.0, np.concatenate([xi, -xi]))
    assert np.max(fs.remainder * np.concatenate([xi, xi]) ** 2) < 1.0


def _smooth_step(t):
    t = np.clip(t, 0, 1)
    with np.errstate(divide="ignore"):
        f = np.where(t > 0, np.exp(-1 / np.where(t > 0, t, 1)), 0.0)
        g = np.where(t < 1, np.exp(-1 / np.where(t < 1, 1 - t, 1)), 0.0)
    return f / (f + g)


def test_cutoff_symbol_tends_to_sign():
    # phi = 1 on |z| <= 1, smooth transition to 0 over 1 <= |z| <= 4
    phi = KernelModulation(lambda x, z: 1 - _smooth_step((np.abs(z) - 1.0) / 3) + 0 * np.real(x))
    xi = np.array([8.0, 12.0, 30.0, 64.0, -8.0, -30.0])
    fs = fourier_symbol_phi(phi, 0.0, xi, z_max=4.0)
    assert np.all(fs.remainder <= 1e-3)


def test_odd_modulation_symbol_vanishes():
    phi = KernelModulation(lambda x, z: z * np.exp(-z * z) + 0 * x)
    xi = np.array([0.0, 2.0, 8.0, 16.0])
    fs = fourier_symbol_phi(phi, 0.0, xi)
    assert fs.leading == 0
    assert np.allclose(fs.values, -1j * np.exp(-xi ** 2 / 4) / math.sqrt(math.pi), atol=1e-12)
    assert abs(fs.values[-1]) < 1e-12


def test_nondecaying_phi_diverges():
    with pytest.raises(QuadratureDiverged):
        fourier_symbol_phi(KernelModulation.constant(1.0), 0.0, [1.0])


# -- kernel modulation ------------------------------------------------------------------------
def test_expression_modulation_matches_gaussian():
    e = KernelModulation.from_expression("exp(-absz^2)")
    g = KernelModulation.gaussian()
    x = np.array([0.1 + 0.2j, 3.0])
    z = np.array([0.5 - 1.0j, 2.0])
    assert np.allclose(e(x, z), g(x, z), rtol=1e-15)


def test_decay_checks():
    pos = np.array([0j, 0.5 + 0.3j])
    assert KernelModulation.gaussian().check_decay(pos)
    assert not KernelModulation.from_expression("1/(1+absz)").check_decay(pos)
    assert KernelModulation.constant(0.0).is_zero()
    assert KernelModulation.gaussian().tail(3.0) == pytest.approx(math.exp(-9))
