"""Symbols of singular integral operators on graphs.

The operator is

    (S u)(x) = 1/(pi i) int phi(x, x - y) u(y) / (y - x) dy

with the complex line element ``dy`` along oriented edges. Away from the
vertices its symbol is of ``sgn`` type; at a vertex it is a matrix of Mellin
symbols built from the function ``nu`` below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import PointIsVertex, QuadratureDiverged, SymbolPole
from .expr import compile_expr
from .functions import PCFunction, Weight
from .graph import GraphPoint, MetricGraph, VertexStar

POLE_TOL = 1e-8
PHI_VARS = ("x", "y", "z1", "z2", "z", "absz")


class KernelModulation:
    """Smooth modulation ``phi(x, z)`` of the Cauchy kernel.

    ``func(x, z)`` receives planar positions ``x`` and differences ``z`` as
    complex arrays. ``envelope(rho)``, if given, must bound
    ``sup_x sup_{|z| >= rho} |phi(x, z)|``; otherwise the bound is sampled.
    """

    def __init__(self, func, *, envelope=None, name: str = ""):
        self._func = func
        self.envelope = envelope
        self.name = name

    @classmethod
    def constant(cls, c=1.0):
        c = complex(c)
        return cls(lambda x, z: np.full(np.broadcast_shapes(np.shape(x), np.shape(z)), c),
                   envelope=lambda rho: abs(c), name=f"const {c}")

    @classmethod
    def gaussian(cls, scale: float = 1.0):
        """``phi = exp(-|z|^2 / scale^2)``; equals ``exp(-z^2)`` for real ``z`` and unit scale."""
        s2 = scale * scale
        return cls(lambda x, z: np.exp(-np.abs(z) ** 2 / s2) + 0 * np.real(x),
                   envelope=lambda rho: math.exp(-rho * rho / s2), name=f"gauss({scale})")

    @classmethod
    def from_expression(cls, source: str, *, envelope=None):
        ex = compile_expr(source, PHI_VARS)

        def f(x, z):
            x, z = np.broadcast_arrays(np.asarray(x, complex), np.asarray(z, complex))
            return np.asarray(ex(x=x.real, y=x.imag, z1=z.real, z2=z.imag, z=z, absz=np.abs(z)), complex)

        return cls(f, envelope=envelope, name=source)

    def __call__(self, x, z) -> np.ndarray:
        x = np.asarray(x, complex)
        z = np.asarray(z, complex)
        return np.broadcast_to(np.asarray(self._func(x, z), complex), np.broadcast_shapes(x.shape, z.shape))

    def at_zero(self, x) -> np.ndarray:
        return self(x, np.zeros(np.shape(x)))

    def is_zero(self) -> bool:
        return self.envelope is not None and self.envelope(0.0) == 0.0

    def sampled_envelope(self, positions, radii, n_dir: int = 16) -> np.ndarray:
        """``sup |phi(x, z)|`` over sample ``x`` and ``|z| >= rho`` for each ``rho``."""
        radii = np.asarray(radii, float)
        dirs = np.exp(2j * np.pi * np.arange(n_dir) / n_dir)
        pos = np.asarray(positions, complex).ravel()
        vals = np.abs(self(pos[:, None, None], radii[None, :, None] * dirs[None, None, :]))
        shell = vals.max(axis=(0, 2))
        return np.maximum.accumulate(shell[::-1])[::-1]

    def tail(self, rho, positions=None) -> float:
        if self.envelope is not None:
            return float(self.envelope(rho))
        pos = np.zeros(1) if positions is None else positions
        radii = rho + np.linspace(0, 4 * (1 + rho), 64)
        return float(self.sampled_envelope(pos, radii)[0])

    def check_decay(self, positions, N: int = 4, radii=None) -> bool:
        """``(1 + |z|)^N |phi|`` must not grow over the outer half of ``radii``."""
        if radii is None:
            radii = np.linspace(0, 32, 257)
        env = self.sampled_envelope(positions, radii) * (1 + np.asarray(radii)) ** N
        half = len(env) // 2
        return bool(env[half:].max() <= max(env[:half].max(), 1e-300) * (1 + 1e-9))

    def __repr__(self):
        return f"KernelModulation({self.name!r})"


# -- Fourier symbol on a line ------------------------------------------------
@dataclass
class FourierSymbol:
    xi: np.ndarray
    values: np.ndarray
    leading: complex  # phi(x, 0)
    remainder: np.ndarray  # |sigma - phi(x, 0) sgn xi|


def fourier_symbol_phi(phi: KernelModulation, x, xi, *, direction: complex = 1.0, z_max: float | None = None,
                       order: int = 16, tail_tol: float = 1e-14) -> FourierSymbol:
    """``sigma(x, xi) = 1/(pi i) PV int phi(x, z) e^{i z xi} / z dz`` over real ``z``.

    The principal value is folded onto ``z > 0``, where the integrand
    ``[phi(z) e^{i z xi} - phi(-z) e^{-i z xi}] / z`` is regular. ``z`` is
    embedded as ``z * direction`` in the plane; ``x`` is a planar position.
    """
    x = complex(x)
    xi = np.atleast_1d(np.asarray(xi, float))
    f = lambda t: phi(x, t * direction)
    if z_max is None:
        z_max = 1.0
        while max(np.abs(f(np.array([z_max, -z_max])))) > tail_tol:
            z_max *= 2
            if z_max > 4096:
                raise QuadratureDiverged("phi does not decay; the principal value integral is not absolutely convergent")
    elif max(np.abs(f(np.array([z_max, -z_max])))) > 1e3 * tail_tol:
        raise QuadratureDiverged(f"|phi| at z_max={z_max} exceeds the tail tolerance")
    xg, wg = leggauss(order)
    out = np.empty(len(xi), complex)
    for k, q in enumerate(xi):
        width = min(0.5, 2.0 / max(abs(q), 1e-12))
        npan = int(math.ceil(z_max / width))
        edges = np.linspace(0.0, z_max, npan + 1)
        h = np.diff(edges)[:, None] / 2
        z = (edges[:-1, None] + h * (xg + 1)).ravel()
        w = (h * wg).ravel()
        integrand = (f(z) * np.exp(1j * z * q) - f(-z) * np.exp(-1j * z * q)) / z
        out[k] = np.sum(w * integrand) / (np.pi * 1j)
    lead = complex(f(np.zeros(1))[0])
    sgn = np.where(xi >= 0, 1.0, -1.0)
    return FourierSymbol(xi, out, lead, np.abs(out - lead * sgn))


# -- edge symbol -----------------------------------------------------------------
def _position(graph: MetricGraph, x: GraphPoint) -> complex:
    return graph.position(x)


def edge_symbol(a: PCFunction, b: PCFunction, phi: KernelModulation, x: GraphPoint, xi) -> np.ndarray:
    """``a(x) + b(x) phi(x, 0) sgn xi`` at an interior point (``sgn 0 = +1``)."""
    if x.is_vertex:
        raise PointIsVertex(f"{x.key} is a vertex")
    plus, minus = edge_symbol_pair(a, b, phi, x)
    xi = np.asarray(xi, float)
    return np.where(xi >= 0, plus, minus)


def edge_symbol_pair(a, b, phi, x: GraphPoint) -> tuple[complex, complex]:
    if x.is_vertex:
        raise PointIsVertex(f"{x.key} is a vertex")
    av, bv = a(x), b(x)
    p0 = complex(phi.at_zero(np.array([_position(a.graph, x)]))[0])
    return av + bv * p0, av - bv * p0


def elliptic(a, b, phi, x: GraphPoint, ell_tol: float = 1e-8) -> bool:
    plus, minus = edge_symbol_pair(a, b, phi, x)
    return abs(plus) >= ell_tol and abs(minus) >= ell_tol


# -- vertex symbols ----------------------------------------------------------------
def nu(delta, zeta, pole_tol: float = POLE_TOL) -> np.ndarray:
    """``coth(pi zeta)`` for ``delta = 0``, else ``e^{(pi - delta) zeta} / sinh(pi zeta)``.

    Evaluated in overflow-free exponential form on both half planes.
    """
    zeta = np.asarray(zeta, complex)
    delta = np.asarray(delta, float)
    dist = np.abs(zeta.real) + np.abs(zeta.imag - np.round(zeta.imag))
    near = (np.abs(zeta.real) < pole_tol) & (np.abs(zeta.imag - np.round(zeta.imag)) < pole_tol)
    if np.any(near):
        raise SymbolPole(f"zeta within {pole_tol} of iZ (distance {float(np.min(dist)):.3g})")
    delta, zeta = np.broadcast_arrays(delta, zeta)
    pos = zeta.real >= 0
    out = np.empty(zeta.shape, complex)
    zp, zm = zeta[pos], zeta[~pos]
    dp, dm = delta[pos], delta[~pos]
    # Re zeta >= 0: 2 e^{-delta z} / (1 - e^{-2 pi z}); Re zeta < 0: 2 e^{(2pi - delta) z} / (e^{2 pi z} - 1)
    ep = np.exp(-2 * np.pi * zp)
    em = np.exp(2 * np.pi * zm)
    coth_p = (1 + ep) / (1 - ep)
    coth_m = (em + 1) / (em - 1)
    out[pos] = np.where(dp == 0, coth_p, 2 * np.exp(-dp * zp) / (1 - ep))
    out[~pos] = np.where(dm == 0, coth_m, 2 * np.exp((2 * np.pi - dm) * zm) / (em - 1))
    return out


def angle_gaps(angles) -> np.ndarray:
    """``delta_jk``: 0 on the diagonal, ``(theta_j - theta_k) mod 2 pi`` elsewhere."""
    th = np.asarray(angles, float)
    d = th[:, None] - th[None, :]
    d = np.where(d < 0, d + 2 * np.pi, d)
    np.fill_diagonal(d, 0.0)
    return d


def _kappa_at(w: Weight | None, r, vertex):
    if w is None:
        return np.zeros(np.shape(r))
    eps = w.epsilon
    w.epsilon = None
    try:
        return w.kappa(np.asarray(r, float), vertex)
    finally:
        w.epsilon = eps


def vertex_symbol_S(star: VertexStar, p: float, w: Weight | None, r, lam, pole_tol: float = POLE_TOL) -> np.ndarray:
    """Matrix ``s_jk(lam + i(1/p + kappa(r)))`` of the vertex star; shape ``(..., val, val)``."""
    r, lam = np.broadcast_arrays(np.asarray(r, float), np.asarray(lam, float))
    zeta = lam + 1j * (1.0 / p + _kappa_at(w, r, star.vertex))
    gaps = angle_gaps(star.angles)
    vals = nu(gaps, zeta[..., None, None], pole_tol)
    return vals * np.asarray(star.signs, float)[None, :]


@dataclass
class VertexSymbolMatrix:
    """Evaluator ``(r, lam) -> val x val`` for one vertex."""

    vertex: str
    star: VertexStar
    p: float
    weight: Weight | None
    a_trace: np.ndarray | None = None
    b_trace: np.ndarray | None = None
    phi0: complex = 1.0
    pole_tol: float = POLE_TOL

    def __call__(self, r, lam) -> np.ndarray:
        S = vertex_symbol_S(self.star, self.p, self.weight, r, lam, self.pole_tol)
        if self.a_trace is None:
            return S
        return self.a_trace + self.phi0 * (self.b_trace @ S)

    def det(self, r, lam) -> np.ndarray:
        return np.linalg.det(self(r, lam))

    def kappa(self, r) -> np.ndarray:
        return _kappa_at(self.weight, r, self.vertex)


def vertex_symbol_matrix(graph: MetricGraph, vertex, a: PCFunction | None = None, b: PCFunction | None = None,
                         phi: KernelModulation | None = None, p: float = 2.0, w: Weight | None = None, *,
                         epsilon: float | None = None, pole_tol: float = POLE_TOL,
                         offset=None) -> VertexSymbolMatrix:
    vid = graph.vertex_ids[graph.vertex_index(vertex)]
    star = graph.vertex_star(vid, epsilon or graph.default_epsilon(vid))
    if a is None:
        return VertexSymbolMatrix(vid, star, p, w, pole_tol=pole_tol)
    at = np.diag(a.one_sided_limits(star, offset))
    bt = np.diag(b.one_sided_limits(star, offset))
    phi0 = complex((phi or KernelModulation.constant(1.0)).at_zero(np.array([star.position]))[0])
    return VertexSymbolMatrix(vid, star, p, w, at, bt, phi0, pole_tol)


def vertex_symbol_A(graph: MetricGraph, vertex, a: PCFunction, b: PCFunction, phi: KernelModulation, p: float,
                    w: Weight | None, r, lam) -> np.ndarray:
    """``a~ + phi(omega, 0) b~ S^(r, lam)`` with one-sided traces in ray order."""
    return vertex_symbol_matrix(graph, vertex, a, b, phi, p, w)(r, lam)


def asymptote_lambda(tol: float = 1e-6) -> float:
    """Smallest ``L`` with ``|coth(pi zeta)| within tol of 1`` for ``|Re zeta| >= L``."""
    # |coth(pi z) - sign| <= 2 e^{-2 pi |Re z|} / (1 - e^{-2 pi |Re z|})
    L = -math.log(tol / 3) / (2 * math.pi)
    return max(L, 1.0)
