import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from fredgraph.errors import MissingLimit, NoConvergentSubsequence, OutOfDomain
from fredgraph.functions import (PCFunction, SOFunction, Weight, check_slowly_oscillating, check_weight_class,
                                 kappa, limit_function, vertex_trace)


# -- traces ----------------------------------------------------------------------------
def test_constant_trace_is_scaled_identity(hexa):
    f = PCFunction.constant(hexa, 2.5 - 1j)
    for v in hexa.vertex_ids:
        assert np.array_equal(vertex_trace(f, v), (2.5 - 1j) * np.eye(3))


def test_sign_function_trace_on_line(line):
    # -1 on the left ray (end of e0 in cell -1), +1 on the right ray (start of e0)
    f = PCFunction(line, {"e0": lambda s, g: np.where(s < 0.5, 1.0, -1.0)})
    assert np.array_equal(vertex_trace(f, "v0"), np.diag([1.0, -1.0]))


def test_angle_function_trace_on_honeycomb(hexa):
    for v in hexa.vertex_ids:
        star = hexa.vertex_star(v, 0.2)
        g = PCFunction.from_position(hexa, lambda z, c=star.position: np.exp(1j * np.angle(z - c)))
        tr = np.diag(vertex_trace(g, v, star))
        # one-sided limit of exp(i arg) along each ray is exp(i theta_j); oracle at r = 1e-6
        oracle = g.ray_values(star, [1e-6])[0]
        assert np.allclose(tr, oracle, atol=1e-8)
        assert np.allclose(tr, np.exp(1j * star.angles), atol=1e-8)


def test_trace_is_multiplicative(hexa):
    f = PCFunction.from_expression(hexa, "1 + x + 2*y")
    g = PCFunction.from_expression(hexa, "cos(x) - 1j*y")
    for v in hexa.vertex_ids:
        assert np.allclose(vertex_trace(f * g, v), vertex_trace(f, v) @ vertex_trace(g, v), atol=1e-12)


def test_missing_limit(line):
    f = PCFunction(line, {"e0": lambda s, g: 1.0 / s})
    with pytest.raises(MissingLimit):
        vertex_trace(f, "v0")


def test_declared_limits_are_checked(line):
    star = line.vertex_star("v0", 0.25)
    f = PCFunction.from_expression(line, "s")
    assert f.check_limits(star)
    bad = PCFunction(line, f.edge_funcs, limits={"v0": {"e0:start": 0.0, "e0:end": 0.5}})
    assert not bad.check_limits(star)


def test_expression_periodicity_detection(line):
    assert PCFunction.from_expression(line, "sin(2*pi*s)").periodic
    assert not PCFunction.from_expression(line, "atan(x)").periodic


# -- weights ---------------------------------------------------------------------------------
@pytest.mark.parametrize("k", [-0.3, 0.0, 0.3])
def test_power_weight_kappa_is_constant(k):
    r = np.geomspace(1e-10, 0.1, 50)
    assert np.allclose(kappa(Weight.power(k), r), k, atol=1e-14)


def test_trivial_weight_kappa_zero():
    assert np.all(Weight.trivial().kappa(np.geomspace(1e-8, 1e-2, 9)) == 0)


def test_slowly_varying_kappa_matches_symbolic_derivative():
    r_ = sp.symbols("r", positive=True)
    sig = sp.sin(sp.log(r_)) / sp.log(r_)
    ksym = sp.lambdify(r_, sp.simplify(r_ * sp.diff(sig, r_)), "numpy")
    w = Weight(sp.lambdify(r_, sig, "numpy"))
    r = np.geomspace(1e-9, 1e-2, 30)
    assert np.allclose(w.kappa(r), ksym(r), atol=1e-8, rtol=0)


def test_kappa_is_additive():
    r = np.geomspace(1e-8, 0.1, 20)
    w1, w2 = Weight.power(0.2), Weight.power(-0.35)
    w = Weight(lambda r: w1.sigma(r) + w2.sigma(r))
    assert np.allclose(w.kappa(r), w1.kappa(r) + w2.kappa(r), atol=1e-9)


def test_kappa_out_of_domain():
    w = Weight.power(0.1, epsilon=0.05)
    with pytest.raises(OutOfDomain):
        w.kappa(np.array([0.1]))


def test_weight_expression_is_w_not_sigma():
    w = Weight.from_expression("r^0.25")
    assert np.allclose(w.kappa(np.geomspace(1e-6, 1e-2, 5)), 0.25, atol=1e-8)


@pytest.mark.parametrize("k", [-0.45, -0.2, 0.2, 0.45])
def test_power_weight_in_class(k):
    assert check_weight_class(Weight.power(k), (-0.5, 0.5)).passed


def test_inverse_r_sigma_fails():
    rep = check_weight_class(Weight(lambda r: 1.0 / r), (-0.5, 0.5))
    assert not rep.passed
    assert rep.sup_kappa < -1e3 or rep.inf_kappa < -1e3


def test_damped_oscillation_weight_report_matches_symbolic():
    r_ = sp.symbols("r", positive=True)
    L = sp.log(1 / r_)
    sig = 0.3 * sp.log(r_) + sp.sin(sp.log(L)) / L
    ksym = sp.lambdify(r_, r_ * sp.diff(sig, r_), "numpy")
    grid = np.geomspace(1e-12, 1e-2, 200)
    rep = check_weight_class(Weight(sp.lambdify(r_, sig, "numpy")), (-0.5, 0.5), grid)
    k = ksym(grid)
    assert rep.inf_kappa == pytest.approx(k.min(), abs=1e-6)
    assert rep.sup_kappa == pytest.approx(k.max(), abs=1e-6)
    assert rep.passed == (k.min() >= -0.49 and k.max() <= 0.49 and rep.so_defect <= 1e-2)


def test_weight_is_periodic_on_edges(hexa):
    w = Weight.power(0.3)
    s = np.linspace(0.01, 0.99, 7)
    for e in hexa.edges:
        vals = w.on_edge(hexa, e.id, s)
        assert np.all(vals > 0)


# -- slow oscillation -----------------------------------------------------------------------
def test_periodic_function_has_zero_defect(hexa):
    f = PCFunction.from_expression(hexa, "sin(2*pi*s) + cx")
    rep = check_slowly_oscillating(f, [(1, 0), (1, -1)], [1, 5, 20])
    assert rep.passed
    assert all(v == 0.0 for seq in rep.defects.values() for v in seq)


def test_log_oscillation_is_slow(line):
    f = PCFunction.from_expression(line, "sin(log(1+abs(x)))")
    rep = check_slowly_oscillating(f, [(1,), (2,)], [1, 10, 100, 1000], tol=5e-3)
    assert rep.passed
    seq = rep.defects[(1,)]
    assert seq[-1] < seq[0]


def test_sine_is_not_slow(line):
    f = PCFunction.from_expression(line, "sin(abs(x))")
    rep = check_slowly_oscillating(f, [(1,)], [1, 10, 100, 1000])
    assert not rep.passed
    assert min(rep.defects[(1,)]) > 0.5


# -- limit functions -------------------------------------------------------------------------
def test_limit_of_periodic_function_is_itself(hexa):
    f = PCFunction.from_expression(hexa, "cos(2*pi*s)", periodic=True)
    res = limit_function(f, lambda m: (m, 2 * m))
    direct = np.concatenate([f.evaluate(e, np.array([s])) for e, s in res.points])
    assert np.allclose(res.values, direct, atol=1e-15)


def test_arctan_limit(line):
    f = PCFunction.from_expression(line, "atan(x)")
    res = limit_function(f, lambda m: m)
    assert np.allclose(res.values, math.pi / 2, atol=1e-8)
    assert res.tolerance <= 1e-8


def test_log_oscillation_limits_depend_on_sequence(line):
    f = PCFunction.from_expression(line, "sin(log(1+abs(x)))")
    # along exp(m) the argument log(1 + e^m) ~ m: pick m = 2 pi k + c so the limit is sin(c)
    for c in (0.5, 2.0):
        h = np.array([[int(math.floor(math.exp(2 * math.pi * k + c)))] for k in range(2, 7)])
        res = limit_function(f, h, tol=1e-6)
        assert np.allclose(res.values, math.sin(c), atol=1e-6)
        # oracle: direct evaluation at the last sequence element
        direct = f.evaluate("e0", np.array([0.5]), tuple(h[-1]))[0]
        assert abs(res.values[0] - direct) < 1e-6


def test_limit_is_shift_invariant(line):
    f = SOFunction.wrap(PCFunction.from_expression(line, "3 + atan(x)"))
    res = limit_function(f, lambda m: m)
    lim = res.function()
    s = np.linspace(0, 1, 5)
    for b in (-2, -1, 1, 2):
        assert np.allclose(lim.evaluate("e0", s, (b,)), lim.evaluate("e0", s), atol=max(res.tolerance, 1e-12))


def test_no_convergent_subsequence(line):
    f = PCFunction.from_expression(line, "sin(x)")
    h = np.arange(1, 12).reshape(-1, 1)
    with pytest.raises(NoConvergentSubsequence):
        limit_function(f, h, tol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_trace_of_sum_is_sum_of_traces(a, b):
    from fredgraph.catalog import honeycomb
    G = honeycomb()
    f = PCFunction.from_expression(G, f"{a} + x")
    g = PCFunction.from_expression(G, f"{b} * y")
    for v in G.vertex_ids:
        assert np.allclose(vertex_trace(f + g, v), vertex_trace(f, v) + vertex_trace(g, v), atol=1e-12)
