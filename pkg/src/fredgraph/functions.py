"""Coefficient and weight classes: piecewise smooth, slowly oscillating, weights.

Functions on the infinite periodic graph are evaluated edge-wise through
``f.evaluate(edge, s, offset)`` where ``s`` is the local coordinate measured
from the edge's start vertex and ``offset`` is the cell index.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import MissingLimit, NoConvergentSubsequence, OutOfDomain
from .expr import compile_expr
from .graph import MetricGraph, VertexStar

EdgeFunc = Callable[[np.ndarray, tuple], np.ndarray]

# names available to coefficient expressions
COEFF_VARS = ("s", "x", "y", "cx", "cy", "g1", "g2", "r")


class PCFunction:
    """Piecewise smooth function: one smooth callable per edge orbit.

    ``edge_funcs[edge_id](s, offset)`` returns values on the closed edge
    ``[0, l(e)]`` of the copy translated by ``offset``; the endpoint values
    are the one-sided limits at the vertices. With ``periodic=True`` the
    offset is ignored, which makes shift differences exactly zero.
    """

    def __init__(self, graph: MetricGraph, edge_funcs, *, periodic: bool = False, limits=None, name: str = ""):
        self.graph = graph
        if callable(edge_funcs):
            edge_funcs = {e.id: edge_funcs for e in graph.edges}
        missing = {e.id for e in graph.edges} - set(edge_funcs)
        if missing:
            raise ValueError(f"no definition on edges {sorted(missing)}")
        self.edge_funcs = dict(edge_funcs)
        self.periodic = periodic
        self.limits = dict(limits or {})
        self.name = name

    # constructors ---------------------------------------------------------
    @classmethod
    def constant(cls, graph, c, name=""):
        c = complex(c)
        return cls(graph, lambda s, g: np.full(np.shape(s), c), periodic=True, name=name or repr(c))

    @classmethod
    def from_position(cls, graph, func, *, periodic=False, name=""):
        """Wrap ``func(z)`` of the planar position ``z`` (complex)."""
        funcs = {}
        for e in graph.edges:
            def f(s, g, e=e):
                z = e.origin + np.asarray(s) * e.direction + graph.shift(g)
                return np.asarray(func(z), dtype=complex)
            funcs[e.id] = f
        return cls(graph, funcs, periodic=periodic, name=name)

    @classmethod
    def from_expression(cls, graph, source, *, periodic=None, name=""):
        """Build from an expression (or a dict ``edge id -> expression``).

        Variables: ``s`` local coordinate, ``x, y`` planar position, ``cx, cy``
        position inside the home cell, ``g1, g2`` cell offset, ``r = |(x, y)|``.
        Expressions that only use ``s, cx, cy`` are periodic automatically.
        """
        sources = source if isinstance(source, dict) else {e.id: source for e in graph.edges}
        exprs = {k: compile_expr(v, COEFF_VARS) for k, v in sources.items()}
        used = set().union(*(ex.names for ex in exprs.values()))
        if periodic is None:
            periodic = used <= {"s", "cx", "cy"}
        funcs = {}
        for e in graph.edges:
            ex = exprs[e.id]

            def f(s, g, e=e, ex=ex):
                s = np.asarray(s, dtype=float)
                cz = e.origin + s * e.direction
                z = cz + graph.shift(g)
                gg = tuple(g) + (0,) * (2 - len(g))
                out = ex(s=s, x=z.real, y=z.imag, cx=cz.real, cy=cz.imag, g1=gg[0], g2=gg[1], r=np.abs(z))
                return np.broadcast_to(np.asarray(out, dtype=complex), s.shape).copy()
            funcs[e.id] = f
        label = source if isinstance(source, str) else "piecewise"
        return cls(graph, funcs, periodic=periodic, name=name or str(label))

    # evaluation -------------------------------------------------------------
    def evaluate(self, edge, s, offset=None) -> np.ndarray:
        e = self.graph.edge(edge)
        g = (0,) * self.graph.rank if (offset is None or self.periodic) else tuple(int(v) for v in offset)
        return np.asarray(self.edge_funcs[e.id](np.asarray(s, dtype=float), g), dtype=complex)

    def __call__(self, point):
        return complex(self.evaluate(point.edge, np.array([point.x]), point.offset)[0])

    def at_nodes(self, mesh, offset=None) -> np.ndarray:
        out = np.empty(mesh.size, dtype=complex)
        for k, e in enumerate(self.graph.edges):
            sel = mesh.edge_slices[k]
            out[sel] = self.evaluate(e.id, mesh.s[sel], offset)
        return out

    def ray_values(self, star: VertexStar, r, offset=None) -> np.ndarray:
        """Values ``f_j(r)`` along the rays of ``star``; shape ``(len(r), val)``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        base = np.zeros(self.graph.rank, dtype=int) if offset is None else np.asarray(offset)
        cols = []
        for edge_id, side in star.rays:
            e = self.graph.edge(edge_id)
            if side == "start":
                cols.append(self.evaluate(edge_id, r, tuple(base)))
            else:
                cols.append(self.evaluate(edge_id, e.length - r, tuple(base - np.asarray(e.end_offset))))
        return np.stack(cols, axis=-1)

    def one_sided_limits(self, star: VertexStar, offset=None) -> np.ndarray:
        if star.vertex in self.limits:
            vals = np.array([self.limits[star.vertex][f"{e}:{side}"] for e, side in star.rays], dtype=complex)
        else:
            # endpoint value when it is the limit of the ray values, else Richardson from r = h, 2h
            h = 1e-7 * star.epsilon
            with np.errstate(all="ignore"):
                at0 = self.ray_values(star, [0.0], offset)[0]
                f1, f2 = self.ray_values(star, [h, 2 * h], offset)
            extrap = 2 * f1 - f2
            settled = np.abs(f1 - f2) <= 1e-4 * (1 + np.abs(f1))
            vals = np.where(np.isfinite(at0) & (np.abs(at0 - extrap) <= 1e-6 * (1 + np.abs(extrap))), at0, extrap)
            vals = np.where(settled, vals, np.nan)
        if not np.all(np.isfinite(vals)):
            raise MissingLimit(f"{self.name or 'function'} has no finite one-sided limits at {star.vertex}")
        return vals

    def check_limits(self, star: VertexStar, tol: float = 1e-8, radii=(1e-6, 1e-8, 1e-10)) -> bool:
        """One-sided limits agree with the edge functions on shrinking rays."""
        lim = self.one_sided_limits(star)
        along = self.ray_values(star, np.asarray(radii))
        return bool(np.max(np.abs(along[-1] - lim)) <= tol)

    # algebra ----------------------------------------------------------------
    def _combine(self, other, op, label):
        if not isinstance(other, PCFunction):
            c = complex(other)
            funcs = {k: (lambda s, g, f=f: op(f(s, g), c)) for k, f in self.edge_funcs.items()}
            return PCFunction(self.graph, funcs, periodic=self.periodic, name=f"({self.name}){label}{c}")
        funcs = {
            k: (lambda s, g, f=f, h=other.edge_funcs[k]: op(f(s, g), h(s, g))) for k, f in self.edge_funcs.items()
        }
        return PCFunction(
            self.graph, funcs, periodic=self.periodic and other.periodic, name=f"({self.name}){label}({other.name})"
        )

    def __add__(self, other):
        return self._combine(other, np.add, "+")

    __radd__ = __add__

    def __mul__(self, other):
        return self._combine(other, np.multiply, "*")

    __rmul__ = __mul__

    def __sub__(self, other):
        return self._combine(other, np.subtract, "-")

    def __repr__(self):
        return f"PCFunction({self.name!r}, periodic={self.periodic})"


class SOFunction(PCFunction):
    """A :class:`PCFunction` declared slowly oscillating at infinity.

    ``f_y(alpha)`` from the cell representation ``f(y + alpha)`` is exposed as
    :meth:`cell_values`.
    """

    @classmethod
    def wrap(cls, f: PCFunction) -> "SOFunction":
        return cls(f.graph, f.edge_funcs, periodic=f.periodic, limits=f.limits, name=f.name)

    def cell_values(self, points: Sequence[tuple[str, float]], alpha) -> np.ndarray:
        return np.array([self.evaluate(e, np.array([s]), alpha)[0] for e, s in points])


def vertex_trace(f: PCFunction, vertex, star: VertexStar | None = None, offset=None) -> np.ndarray:
    """Diagonal matrix of the one-sided limits of ``f`` at ``vertex`` in ray order."""
    if star is None:
        star = f.graph.vertex_star(vertex, f.graph.default_epsilon(vertex))
    return np.diag(f.one_sided_limits(star, offset))


# -- weights ------------------------------------------------------------------
def _cutoff(t):
    """Smooth step: 1 on t <= 1/4, 0 on t >= 1/2."""
    t = np.clip((np.asarray(t, dtype=float) - 0.25) / 0.25, 0.0, 1.0)
    out = np.zeros_like(t)
    inner = (t > 0) & (t < 1)
    a = np.exp(-1.0 / np.where(inner, t, 1.0))
    b = np.exp(-1.0 / np.where(inner, 1.0 - t, 1.0))
    out[inner] = (b / (a + b))[inner]
    out[t <= 0] = 1.0
    return out


class Weight:
    """Periodic weight ``w = exp(sigma)`` with prescribed behaviour at vertices.

    ``sigma`` (and optionally its closed-form derivative ``dsigma``) is a
    function of the distance ``r`` to a vertex; ``vertex_sigmas`` overrides it
    per vertex id. Along an edge the vertex contributions are blended with a
    smooth cutoff so that ``w`` is smooth and positive off the vertices.
    """

    def __init__(self, sigma=None, dsigma=None, *, vertex_sigmas=None, interval=(-0.5, 0.5), epsilon=None, name=""):
        self._sigma = sigma
        self._dsigma = dsigma
        self.vertex_sigmas = dict(vertex_sigmas or {})
        self.interval = tuple(interval)
        self.epsilon = epsilon
        self.name = name

    @classmethod
    def trivial(cls):
        return cls(lambda r: np.zeros_like(np.asarray(r, float)), lambda r: np.zeros_like(np.asarray(r, float)), name="1")

    @classmethod
    def power(cls, kappa: float, **kw):
        return cls(
            lambda r: kappa * np.log(r),
            lambda r: kappa / np.asarray(r, float),
            name=f"r^{kappa}",
            **kw,
        )

    @classmethod
    def from_expression(cls, source: str, **kw):
        """Weight ``w(r)`` given as an expression in ``r`` (not its logarithm)."""
        ex = compile_expr(source, ("r",))
        return cls(lambda r: np.log(np.abs(ex(r=np.asarray(r, float)))), name=source, **kw)

    @property
    def is_trivial(self) -> bool:
        return self.name == "1" or (self._sigma is None and not self.vertex_sigmas)

    def _pair(self, vertex):
        if vertex is not None and vertex in self.vertex_sigmas:
            entry = self.vertex_sigmas[vertex]
            return entry if isinstance(entry, tuple) else (entry, None)
        return self._sigma, self._dsigma

    def _check_r(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0) or (self.epsilon is not None and np.any(r >= self.epsilon)):
            raise OutOfDomain(f"radius outside (0, {self.epsilon})")
        return r

    def sigma(self, r, vertex=None):
        r = self._check_r(r)
        s, _ = self._pair(vertex)
        return np.zeros_like(r) if s is None else np.asarray(s(r), dtype=float)

    def kappa(self, r, vertex=None, h: float = 1e-4):
        """``r * sigma'(r)``: closed form when available, else a 4th-order
        central difference in ``log r`` with step ``h``."""
        r = self._check_r(r)
        s, ds = self._pair(vertex)
        if s is None:
            return np.zeros_like(r)
        if ds is not None:
            return r * np.asarray(ds(r), dtype=float)
        t = np.log(r)
        f = lambda tt: np.asarray(s(np.exp(tt)), dtype=float)
        return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)

    def log_second_derivative(self, r, vertex=None, h: float = 1e-3):
        """``(r d/dr)^2 sigma`` by central differences of ``kappa`` in ``log r``."""
        r = self._check_r(r)
        t = np.log(r)
        eps = self.epsilon
        self.epsilon = None
        try:
            k = lambda tt: self.kappa(np.exp(tt), vertex)
            return (-k(t + 2 * h) + 8 * k(t + h) - 8 * k(t - h) + k(t - 2 * h)) / (12 * h)
        finally:
            self.epsilon = eps

    def on_edge(self, graph: MetricGraph, edge, s) -> np.ndarray:
        """Values of ``w`` on an edge at local coordinates ``s`` (periodic in the cell)."""
        e = graph.edge(edge)
        s = np.asarray(s, dtype=float)
        if self._sigma is None and not self.vertex_sigmas:
            return np.ones_like(s)
        vs, vt = graph.vertex_ids[e.start], graph.vertex_ids[e.end]
        a = self._pair(vs)[0]
        b = self._pair(vt)[0]
        out = np.zeros_like(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            if a is not None:
                c = _cutoff(s / e.length)
                out += np.where(c > 0, c * np.asarray(a(np.maximum(s, 1e-300)), float), 0.0)
            if b is not None:
                c = _cutoff((e.length - s) / e.length)
                out += np.where(c > 0, c * np.asarray(b(np.maximum(e.length - s, 1e-300)), float), 0.0)
        return np.exp(out)

    def __repr__(self):
        return f"Weight({self.name!r}, interval={self.interval})"


def kappa(w: Weight, r, vertex=None):
    return w.kappa(r, vertex)


@dataclass
class WeightReport:
    inf_kappa: float
    sup_kappa: float
    so_defect: float
    interval: tuple[float, float]
    margin: float
    passed: bool
    reasons: list[str] = field(default_factory=list)


def check_weight_class(w: Weight, interval=None, r_grid=None, *, vertex=None, delta_margin: float = 0.01,
                       tol_so: float = 1e-2) -> WeightReport:
    """Grid test of the weight class conditions on (0, eps).

    ``kappa`` must stay inside ``interval`` shrunk by ``delta_margin`` and the
    second logarithmic derivative at the smallest radii must be below
    ``tol_so``. Raw inf/sup values are always reported.
    """
    c, d = interval if interval is not None else w.interval
    if r_grid is None:
        r_grid = np.geomspace(1e-12, 0.1, 200)
    r_grid = np.sort(np.asarray(r_grid, dtype=float))
    with np.errstate(all="ignore"):
        k = w.kappa(r_grid, vertex)
        n_small = max(3, len(r_grid) // 10)
        so = np.abs(w.log_second_derivative(r_grid[:n_small], vertex))
    reasons = []
    if not np.all(np.isfinite(k)):
        reasons.append("kappa not finite on grid")
    inf_k, sup_k = float(np.nanmin(k)), float(np.nanmax(k))
    if not (inf_k >= c + delta_margin and sup_k <= d - delta_margin):
        reasons.append(f"kappa range [{inf_k:.6g}, {sup_k:.6g}] not inside ({c}, {d}) with margin {delta_margin}")
    so_defect = float(np.nanmax(so)) if np.all(np.isfinite(so)) else math.inf
    if not so_defect <= tol_so:
        reasons.append(f"(r d/dr)^2 sigma = {so_defect:.3g} near 0 exceeds {tol_so}")
    return WeightReport(inf_k, sup_k, so_defect, (c, d), delta_margin, not reasons, reasons)


# -- slow oscillation and limit functions ---------------------------------------
def _shell(radius: int, rank: int, max_points: int) -> np.ndarray:
    if rank == 1:
        return np.array([[-radius], [radius]])
    if radius == 0:
        return np.zeros((1, rank), dtype=int)
    side = np.arange(-radius, radius + 1)
    pts = np.concatenate([
        np.stack([side, np.full_like(side, radius)], 1),
        np.stack([side, np.full_like(side, -radius)], 1),
        np.stack([np.full_like(side[1:-1], radius), side[1:-1]], 1),
        np.stack([np.full_like(side[1:-1], -radius), side[1:-1]], 1),
    ])
    if len(pts) > max_points:
        pts = pts[np.linspace(0, len(pts) - 1, max_points).astype(int)]
    return pts


@dataclass
class SOReport:
    radii: list[int]
    defects: dict[tuple, list[float]]
    tol: float
    passed: bool


def check_slowly_oscillating(f: PCFunction, shifts, radii, *, samples_per_edge: int = 5, tol: float = 1e-2,
                             max_points_per_shell: int = 64) -> SOReport:
    """Shell-wise sup of ``|f_y(beta + alpha) - f_y(alpha)|`` over ``|alpha|_inf = R``.

    Passes iff, for every shift, the defect at the largest shell is below
    ``tol`` and not larger than at the first shell.
    """
    g = f.graph
    pts = [(e.id, s) for e in g.edges for s in np.linspace(0, e.length, samples_per_edge)]
    by_edge = {}
    for e, s in pts:
        by_edge.setdefault(e, []).append(s)
    by_edge = {e: np.array(v) for e, v in by_edge.items()}

    def sample(alpha):
        return np.concatenate([f.evaluate(e, s, tuple(alpha)) for e, s in by_edge.items()])

    defects = {}
    ok = True
    for beta in shifts:
        beta = np.atleast_1d(np.asarray(beta, dtype=int))
        seq = []
        for R in radii:
            worst = 0.0
            for alpha in _shell(int(R), g.rank, max_points_per_shell):
                worst = max(worst, float(np.max(np.abs(sample(alpha + beta) - sample(alpha)))))
            seq.append(worst)
        defects[tuple(int(b) for b in beta)] = seq
        ok &= seq[-1] <= tol and seq[-1] <= seq[0]
    return SOReport(list(map(int, radii)), defects, tol, bool(ok))


@dataclass
class LimitResult:
    """Limit function ``f^h`` sampled on ``points`` plus the evaluator."""

    values: np.ndarray
    points: list[tuple[str, float]]
    tolerance: float
    indices: np.ndarray  # sequence indices m of the extracted subsequence
    offsets: np.ndarray  # h(m) for those indices
    source: PCFunction

    def evaluate(self, edge, s, offset=None) -> np.ndarray:
        base = np.zeros(self.source.graph.rank, dtype=np.int64) if offset is None else np.asarray(offset, np.int64)
        acc = 0
        for h in self.offsets:
            acc = acc + self.source.evaluate(edge, s, tuple(int(v) for v in base + h))
        return acc / len(self.offsets)

    def function(self, periodic: bool = True) -> PCFunction:
        """The limit as a :class:`PCFunction`; periodic for slowly oscillating data."""
        funcs = {e.id: (lambda s, g, e=e: self.evaluate(e.id, s, None if periodic else g)) for e in self.source.graph.edges}
        return PCFunction(self.source.graph, funcs, periodic=periodic, name=f"lim({self.source.name})")


def _default_samples(graph, per_edge=9):
    return [(e.id, float(s)) for e in graph.edges for s in np.linspace(0, e.length, per_edge)]


def _spread(block: np.ndarray) -> float:
    re = np.ptp(block.real, axis=0)
    im = np.ptp(block.imag, axis=0)
    return float(np.max(np.hypot(re, im))) if block.size else math.inf


def sequence_indices(m_max: int, growth: float = 2.0) -> np.ndarray:
    ks = np.arange(0, math.ceil(math.log(m_max, growth)) + 1)
    return np.unique(np.minimum(np.floor(growth ** ks), m_max).astype(np.int64))


def limit_function(f: PCFunction, h, K=None, *, tol: float = 1e-8, m_max: int = 2 ** 40, growth: float = 2.0,
                   min_tail: int = 3) -> LimitResult:
    """Extract ``lim f(x + h(m))`` on the sample set ``K`` of the home cell.

    ``h`` is either an array of group elements (one row per m) or a callable
    ``m -> g``; a callable is sampled along the geometric index subsequence
    ``floor(growth**k) <= m_max``. The longest Cauchy tail (sup-diameter at
    most ``tol``) is used; failing that, the largest cluster of samples of
    diameter ``tol`` in the second half of the sequence. The limit is the
    average over the selected subsequence.
    """
    graph = f.graph
    if callable(h):
        idx = sequence_indices(m_max, growth)
        offs = np.array([np.atleast_1d(h(int(m))) for m in idx], dtype=np.int64)
    else:
        offs = np.atleast_2d(np.asarray(h, dtype=np.int64))
        if offs.shape[1] != graph.rank and offs.shape[0] == graph.rank:
            offs = offs.T
        idx = np.arange(1, len(offs) + 1)
    K = list(K) if K is not None else _default_samples(graph)
    by_edge = {}
    for e, s in K:
        by_edge.setdefault(e, []).append(s)
    order = [(e, s) for e, ss in by_edge.items() for s in ss]
    F = np.array([
        np.concatenate([f.evaluate(e, np.array(ss), tuple(int(v) for v in g)) for e, ss in by_edge.items()])
        for g in offs
    ])

    chosen = None
    for k0 in range(0, len(F) - min_tail + 1):
        d = _spread(F[k0:])
        if d <= tol:
            chosen, diam = np.arange(k0, len(F)), d
            break
    if chosen is None:
        half = F[len(F) // 2:]
        base = len(F) // 2
        best = None
        for i in range(len(half)):
            dist = np.max(np.abs(half - half[i]), axis=1)
            members = np.nonzero(dist <= tol / 2)[0]
            if len(members) >= min_tail and (best is None or len(members) > len(best)):
                best = members
        if best is None:
            raise NoConvergentSubsequence(
                f"{f.name or 'function'}: no subsequence of {len(F)} samples is Cauchy within {tol}"
            )
        chosen = base + best
        diam = _spread(F[chosen])
    vals = F[chosen].mean(axis=0)
    return LimitResult(vals, order, float(diam), idx[chosen], offs[chosen], f)
