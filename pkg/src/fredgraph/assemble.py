"""Nystrom discretisation of operators on periodic graphs as block bands over Z^n.

Block ``(alpha, gamma)`` maps the nodes of cell ``alpha - gamma`` into those
of cell ``alpha``, so ``(A u)_alpha = sum_gamma A[alpha, gamma] u_{alpha - gamma}``.
Blocks act on nodal values. Norms, spectra and finite sections are taken
after the scaling ``D A D^-1`` with ``D = sqrt(quadrature weight) * w``,
which turns the weighted L^2 norm into the Euclidean one.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss

from .errors import BandRadiusTooSmall, DecayViolation, NotPeriodic
from .functions import PCFunction, Weight
from .graph import MetricGraph
from .sio import KernelModulation

TAIL_TOL = 1e-8


# -- mesh --------------------------------------------------------------------
@dataclass
class Mesh:
    """Composite Gauss-Legendre panels on every edge of the home cell."""

    graph: MetricGraph
    order: int
    panels: list[int]  # per edge
    s: np.ndarray  # local coordinate of each node
    pos: np.ndarray  # planar position (complex)
    direction: np.ndarray  # unit tangent of the node's edge
    weights: np.ndarray  # arc-length quadrature weights
    panel_of: np.ndarray  # global panel index of each node
    panel_center: np.ndarray  # planar centre of each panel
    panel_half: np.ndarray  # half length of each panel
    panel_dir: np.ndarray
    edge_slices: list[slice]
    w_values: np.ndarray = field(default=None)
    weight: Weight | None = None

    @property
    def size(self) -> int:
        return len(self.s)

    @property
    def n_panels(self) -> int:
        return len(self.panel_center)

    @property
    def scale(self) -> np.ndarray:
        """``D``: nodal values -> coordinates of the Euclidean (weighted L^2) norm."""
        return np.sqrt(self.weights) * self.w_values

    def with_weight(self, w: Weight | None) -> "Mesh":
        vals = np.ones(self.size) if w is None else np.concatenate(
            [w.on_edge(self.graph, e.id, self.s[sl]) for e, sl in zip(self.graph.edges, self.edge_slices)]
        )
        return Mesh(self.graph, self.order, self.panels, self.s, self.pos, self.direction, self.weights,
                    self.panel_of, self.panel_center, self.panel_half, self.panel_dir, self.edge_slices, vals, w)


def mesh_graph(graph: MetricGraph, panels_per_unit_length: float = 8, order: int = 4,
               weight: Weight | None = None) -> Mesh:
    if order not in (4, 8, 16):
        raise ValueError("order must be 4, 8 or 16")
    t, wt = leggauss(order)
    S, P, Dn, W, PO, PC, PH, PD, slices, counts = [], [], [], [], [], [], [], [], [], []
    start = 0
    panel = 0
    for e in graph.edges:
        npan = max(1, int(math.ceil(panels_per_unit_length * e.length - 1e-9)))
        counts.append(npan)
        edges = np.linspace(0.0, e.length, npan + 1)
        h = (edges[1:] - edges[:-1]) / 2
        mid = (edges[1:] + edges[:-1]) / 2
        s = (mid[:, None] + h[:, None] * t[None, :]).ravel()
        S.append(s)
        P.append(e.origin + s * e.direction)
        Dn.append(np.full(len(s), e.direction))
        W.append((h[:, None] * wt[None, :]).ravel())
        PO.append(np.repeat(np.arange(panel, panel + npan), order))
        PC.append(e.origin + mid * e.direction)
        PH.append(h)
        PD.append(np.full(npan, e.direction))
        slices.append(slice(start, start + len(s)))
        start += len(s)
        panel += npan
    mesh = Mesh(graph, order, counts, np.concatenate(S), np.concatenate(P), np.concatenate(Dn), np.concatenate(W),
                np.concatenate(PO), np.concatenate(PC), np.concatenate(PH), np.concatenate(PD), slices)
    return mesh.with_weight(weight)


# -- band operators -------------------------------------------------------------
def _key(g) -> tuple[int, ...]:
    return tuple(int(v) for v in np.atleast_1d(g))


def _inf_norm(g) -> int:
    return int(max(abs(v) for v in g)) if len(g) else 0


class BandOperator:
    """Sum of terms ``diag(f at cell alpha) K_gamma``.

    Each term is ``(f, blocks)`` with ``f`` a :class:`PCFunction` or ``None``
    (identity) and ``blocks`` a dict ``gamma -> N0 x N0`` array. The operator
    is periodic when every ``f`` is periodic.
    """

    def __init__(self, mesh: Mesh, terms, *, radius: int, tail_bound: float = 0.0, kind: str = "", meta=None):
        self.mesh = mesh
        self.rank = mesh.graph.rank
        self.N0 = mesh.size
        self.terms = [(f, {_key(g): np.asarray(B, complex) for g, B in blocks.items()}) for f, blocks in terms]
        self.radius = int(radius)
        self.tail_bound = float(tail_bound)
        self.kind = kind
        self.meta = dict(meta or {})
        self._diag_cache: dict = {}

    @property
    def periodic(self) -> bool:
        return all(f is None or f.periodic for f, _ in self.terms)

    def offsets(self) -> list[tuple[int, ...]]:
        return sorted({g for _, blocks in self.terms for g in blocks})

    def _coef(self, f, alpha):
        if f is None:
            return None
        key = (id(f), None if f.periodic else _key(alpha))
        if key not in self._diag_cache:
            self._diag_cache[key] = f.at_nodes(self.mesh, None if f.periodic else _key(alpha))
        return self._diag_cache[key]

    def block(self, alpha, gamma) -> np.ndarray:
        gamma = _key(gamma)
        alpha = _key(alpha) if alpha is not None else (0,) * self.rank
        out = np.zeros((self.N0, self.N0), complex)
        for f, blocks in self.terms:
            B = blocks.get(gamma)
            if B is None:
                continue
            c = self._coef(f, alpha)
            out += B if c is None else c[:, None] * B
        return out

    def blocks(self, alpha=None) -> dict:
        return {g: self.block(alpha, g) for g in self.offsets()}

    def scaled_block(self, alpha, gamma) -> np.ndarray:
        d = self.mesh.scale
        return d[:, None] * self.block(alpha, gamma) / d[None, :]

    # algebra ---------------------------------------------------------------
    def _merge(self, other, sign=1.0):
        terms = list(self.terms)
        for f, blocks in other.terms:
            terms.append((f, {g: sign * B for g, B in blocks.items()}))
        return BandOperator(self.mesh, terms, radius=max(self.radius, other.radius),
                            tail_bound=self.tail_bound + other.tail_bound, kind="sum")

    def __add__(self, other):
        if not isinstance(other, BandOperator):
            other = identity_band(self.mesh) * complex(other)
        return self._merge(other)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, BandOperator):
            other = identity_band(self.mesh) * complex(other)
        return self._merge(other, -1.0)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, c):
        if isinstance(c, BandOperator):
            return self @ c
        c = complex(c)
        return BandOperator(self.mesh, [(f, {g: c * B for g, B in blocks.items()}) for f, blocks in self.terms],
                            radius=self.radius, tail_bound=abs(c) * self.tail_bound, kind=self.kind, meta=self.meta)

    __rmul__ = __mul__

    def left_multiply(self, f: PCFunction) -> "BandOperator":
        """``f A`` where ``A`` has only coefficient-free terms."""
        if any(g is not None for g, _ in self.terms):
            raise ValueError("left multiplication needs coefficient-free terms")
        blocks = self.blocks()
        cells = [None] if f.periodic else self.mesh.graph.offsets_within(2)
        sup = max(float(np.abs(f.at_nodes(self.mesh, g)).max(initial=0.0)) for g in cells)
        return BandOperator(self.mesh, [(f, blocks)], radius=self.radius, tail_bound=sup * self.tail_bound,
                            kind=self.kind, meta=self.meta)

    def __matmul__(self, other: "BandOperator") -> "BandOperator":
        """Product of periodic bands (block convolution)."""
        if not (self.periodic and other.periodic):
            raise NotPeriodic("products are only formed for periodic bands")
        A, B = self.blocks(), other.blocks()
        out: dict = {}
        for g1, X in A.items():
            for g2, Y in B.items():
                g = tuple(a + b for a, b in zip(g1, g2))
                out[g] = out.get(g, 0) + X @ Y
        wa = sum(_norm2(self.mesh, X) for X in A.values())
        wb = sum(_norm2(self.mesh, Y) for Y in B.values())
        tail = self.tail_bound * (wb + other.tail_bound) + wa * other.tail_bound
        return BandOperator(self.mesh, [(None, out)], radius=self.radius + other.radius, tail_bound=tail, kind="product")

    def periodic_part(self) -> "BandOperator":
        """Single-term periodic band with the blocks of cell 0 (requires periodicity)."""
        if not self.periodic:
            raise NotPeriodic(f"{self.kind or 'operator'} has non-periodic coefficients")
        return BandOperator(self.mesh, [(None, self.blocks())], radius=self.radius, tail_bound=self.tail_bound,
                            kind=self.kind, meta=self.meta)

    def __repr__(self):
        return f"BandOperator({self.kind!r}, N0={self.N0}, R={self.radius}, periodic={self.periodic})"


def _norm2(mesh, B):
    d = mesh.scale
    return float(np.linalg.norm(d[:, None] * B / d[None, :], 2))


def identity_band(mesh: Mesh) -> BandOperator:
    return BandOperator(mesh, [(None, {(0,) * mesh.graph.rank: np.eye(mesh.size)})], radius=0, kind="identity")


def shift_band(mesh: Mesh, g) -> BandOperator:
    """``(V u)_alpha = u_{alpha - g}``: a single identity block at offset ``g``."""
    return BandOperator(mesh, [(None, {_key(g): np.eye(mesh.size)})], radius=_inf_norm(_key(g)), kind="shift")


def assemble_multiplication(f: PCFunction, mesh: Mesh) -> BandOperator:
    zero = (0,) * mesh.graph.rank
    return BandOperator(mesh, [(f, {zero: np.eye(mesh.size)})], radius=0, kind="multiplication")


# -- quadrature helpers --------------------------------------------------------------
@lru_cache(maxsize=None)
def _panel_rule(q: int):
    t, w = leggauss(q)
    bw = np.array([1.0 / np.prod(t[j] - np.delete(t, j)) for j in range(q)])
    D = np.zeros((q, q))
    for i in range(q):
        for j in range(q):
            if i != j:
                D[i, j] = bw[j] / bw[i] / (t[i] - t[j])
        D[i, i] = -D[i].sum()
    return t, w, bw, D


def _log_integral(t0):
    """``int_{-1}^{1} dt / (t - t0)``, principal value for real ``t0``."""
    t0 = np.asarray(t0, complex)
    real = np.abs(t0.imag) <= 1e-14 * (1 + np.abs(t0))
    out = np.log(1 - t0) - np.log(-1 - t0)
    tr = t0.real
    with np.errstate(divide="ignore"):
        pv = np.log(np.abs(1 - tr)) - np.log(np.abs(1 + tr))
    return np.where(real, pv, out)


def cauchy_panel_weights(t0, q: int) -> np.ndarray:
    """``W_j(t0) = int_{-1}^{1} l_j(t) / (t - t0) dt`` for the Lagrange basis on Gauss nodes.

    Exact for polynomial densities of degree < q; principal value when
    ``t0`` lies on ``(-1, 1)``, including the nodes themselves.
    """
    t, w, bw, D = _panel_rule(q)
    t0 = np.atleast_1d(np.asarray(t0, complex))
    diff = t0[:, None] - t[None, :]
    hit = np.abs(diff) < 1e-13
    safe = np.where(hit, 1.0, diff)
    I0 = _log_integral(t0)
    # generic target: w_j/(t_j - t0) - l_j(t0) sum_m w_m/(t_m - t0) + l_j(t0) I0
    c = bw[None, :] / safe
    lag = c / c.sum(axis=1, keepdims=True)
    S = (w[None, :] / -safe).sum(axis=1)
    W = w[None, :] / -safe - lag * S[:, None] + lag * I0[:, None]
    rows = np.nonzero(hit.any(axis=1))[0]
    for r in rows:
        i = int(np.nonzero(hit[r])[0][0])
        others = np.arange(q) != i
        row = np.zeros(q, complex)
        row[others] = w[others] / (t[others] - t[i])
        row[i] = -np.sum(w[others] / (t[others] - t[i])) + I0[r]
        row += w[i] * D[i]
        W[r] = row
    return W


# -- singular integral operator -----------------------------------------------------
def _offsets(rank: int, radius: int):
    return list(itertools.product(range(-radius, radius + 1), repeat=rank))


def _shell_tail(rank: int, lattice, diameter: float, term, start: int, max_shell: int = 100000) -> float:
    """``sum_{|g|_inf > start} term(d_g)`` with ``d_g`` a lower bound for the cell distance."""
    Lmin = float(np.min(np.abs(lattice))) if rank == 1 else _min_lattice_norm(lattice)
    # shell sums decaying no faster than 1/m diverge
    m1, m2 = max(start + 1, 1000), max(start + 1, 1000) * 8
    t1 = (2 if rank == 1 else 8 * m1) * term(max(m1 * Lmin - diameter, 1e-12))
    t2 = (2 if rank == 1 else 8 * m2) * term(max(m2 * Lmin - diameter, 1e-12))
    if t1 > 0 and t2 >= t1 / 8 ** 1.02:
        return math.inf
    total = 0.0
    for m in range(start + 1, max_shell):
        count = 2 if rank == 1 else 8 * m
        d = max(m * Lmin - diameter, 1e-12)
        t = count * term(d)
        total += t
        if t < 1e-30 * max(total, 1e-300) or (t == 0 and m > start + 4):
            break
        if m > start + 200 and t < 1e-3 * total / m:
            # slowly decaying tail: compare with the integral of the last term's power law
            total += t * m / 2
            break
    return total


def _min_lattice_norm(lattice):
    # lower bound of |g1 L1 + g2 L2| / |g|_inf
    L = np.array([[z.real for z in lattice], [z.imag for z in lattice]])
    return float(np.linalg.svd(L, compute_uv=False).min())


def sio_tail(phi: KernelModulation, mesh: Mesh, radius: int) -> float:
    g = mesh.graph
    diam = g.cell_diameter
    length = g.total_length
    term = lambda d: phi.tail(d, mesh.pos) / (math.pi * d) * length
    return _shell_tail(g.rank, g.lattice, diam, term, radius)


def _default_radius(tail_fn, tol, max_radius=256):
    """Smallest radius whose (non-increasing) tail bound is at most ``tol``."""
    hi = 1
    while tail_fn(hi) > tol:
        if hi >= max_radius:
            raise BandRadiusTooSmall(f"tail above {tol} even at radius {max_radius}")
        hi = min(2 * hi, max_radius)
    lo = hi // 2  # tail_fn(lo) > tol or lo == 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        lo, hi = (lo, mid) if tail_fn(mid) <= tol else (mid, hi)
    return hi


def assemble_sio(phi: KernelModulation, mesh: Mesh, w: Weight | None = None, p: float = 2.0,
                 band_radius: int | None = None, *, tail_tol: float = TAIL_TOL, near: float = 4.0) -> BandOperator:
    """Blocks of ``S u(x) = 1/(pi i) int phi(x, x - y) u(y)/(y - x) dy``.

    Panels whose (complex) local coordinate of the target satisfies
    ``|t0| < near`` are integrated with singularity subtraction against the
    panel's Lagrange basis; all other pairs use the Gauss rule directly.
    ``phi`` is evaluated at home-cell positions of ``x``, i.e. treated as
    periodic in ``x``.
    """
    if w is not None and mesh.weight is not w:
        mesh = mesh.with_weight(w)
    g = mesh.graph
    tail_fn = lambda R: sio_tail(phi, mesh, R)
    R = _default_radius(tail_fn, tail_tol) if band_radius is None else int(band_radius)
    tail = tail_fn(R)
    if tail > tail_tol:
        raise BandRadiusTooSmall(f"tail bound {tail:.3g} at radius {R} exceeds {tail_tol}")
    q = mesh.order
    X = mesh.pos
    blocks = {}
    node_idx = np.arange(mesh.size).reshape(mesh.n_panels, q)
    for gam in _offsets(g.rank, R):
        shift = g.shift(gam)
        Y = mesh.pos - shift  # source copy in cell -gamma relative to the target cell
        Z = X[:, None] - Y[None, :]  # x - y
        phiv = phi(X[:, None], Z)
        with np.errstate(divide="ignore", invalid="ignore"):
            B = phiv * (mesh.weights * mesh.direction)[None, :] / (-Z) / (np.pi * 1j)
        C = mesh.panel_center - shift
        t0 = (X[:, None] - C[None, :]) / (mesh.panel_half * mesh.panel_dir)[None, :]
        ii, pp = np.nonzero(np.abs(t0) < near)
        if len(ii):
            W = cauchy_panel_weights(t0[ii, pp], q)  # (pairs, q)
            cols = node_idx[pp]  # (pairs, q)
            B[ii[:, None], cols] = phiv[ii[:, None], cols] * W / (np.pi * 1j)
        if np.any(~np.isfinite(B)):
            raise FloatingPointError("non-finite SIO block entry; mesh nodes coincide across cells")
        blocks[gam] = B
    return BandOperator(mesh, [(None, blocks)], radius=R, tail_bound=tail, kind="sio",
                        meta={"phi": phi, "p": p, "near": near})


# -- convolution ---------------------------------------------------------------------
_RADII = np.concatenate([np.linspace(0, 16, 513), np.geomspace(16, 4096, 256)[1:]])


def _radial_sup(k, radii, n_dir=16):
    dirs = np.exp(2j * np.pi * np.arange(n_dir) / n_dir)
    return np.abs(k(radii[:, None] * dirs[None, :])).max(axis=1)


def kernel_decay_constant(k, eps: float = 0.01, radii=None) -> tuple[float, bool]:
    """``C = sup |k(z)| (1+|z|)^{2+eps}`` on samples, and whether the bound holds."""
    radii = _RADII if radii is None else np.asarray(radii, float)
    vals = _radial_sup(k, radii) * (1 + radii) ** (2 + eps)
    # growth over the outer quarter means no such bound
    q = len(radii) // 4
    ok = bool(np.all(np.isfinite(vals)) and vals[-q:].max() <= vals[:-q].max() * (1 + 1e-9))
    return float(vals.max()), ok


def sampled_envelope(k, eps: float = 0.01):
    """``rho -> sup_{|z| >= rho} |k|`` from radial samples.

    Past the last sample radius the last sampled value is continued with the
    decay law ``(1 + rho)^{-2-eps}``.
    """
    shell = _radial_sup(k, _RADII)
    suffix = np.maximum.accumulate(shell[::-1])[::-1]
    last, r_last = float(suffix[-1]), float(_RADII[-1])

    def env(rho):
        if rho >= r_last:
            return last * ((1 + r_last) / (1 + rho)) ** (2 + eps)
        i = max(int(np.searchsorted(_RADII, rho, side="right")) - 1, 0)
        return float(suffix[i])

    return env


def assemble_convolution(k, mesh: Mesh, band_radius: int | None = None, *, tail_tol: float = TAIL_TOL,
                         eps: float = 0.01, envelope=None) -> BandOperator:
    """Blocks of ``T u(x) = int k(x - y) u(y) dy`` (arc length) by the smooth Gauss rule.

    ``k`` takes complex planar differences. ``envelope(rho)`` may bound
    ``sup_{|z| >= rho} |k(z)|``; otherwise it is sampled radially.
    """
    g = mesh.graph
    C, ok = kernel_decay_constant(k, eps)
    if not ok:
        raise DecayViolation(f"|k(z)| (1+|z|)^(2+{eps}) is not bounded on samples")
    env = envelope or sampled_envelope(k, eps)
    length = g.total_length
    diam = g.cell_diameter
    tail_fn = lambda R: _shell_tail(g.rank, g.lattice, diam, lambda d: env(d) * length, R)
    R = _default_radius(tail_fn, tail_tol, max_radius=4096) if band_radius is None else int(band_radius)
    tail = tail_fn(R)
    if tail > tail_tol:
        raise BandRadiusTooSmall(f"tail bound {tail:.3g} at radius {R} exceeds {tail_tol}")
    X = mesh.pos
    blocks = {}
    for gam in _offsets(g.rank, R):
        Z = X[:, None] - (mesh.pos - g.shift(gam))[None, :]
        blocks[gam] = np.asarray(k(Z), complex) * mesh.weights[None, :]
    return BandOperator(mesh, [(None, blocks)], radius=R, tail_bound=tail, kind="convolution", meta={"kernel": k})


# -- diagnostics ----------------------------------------------------------------------
@dataclass
class BandNorms:
    norms: dict  # gamma -> sup_alpha ||A_{alpha, gamma}||
    wiener_sum: float
    slope: float
    fit_range: tuple[int, int]
    tail_bound: float

    def by_radius(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for g, v in self.norms.items():
            m = _inf_norm(g)
            out[m] = max(out.get(m, 0.0), v)
        return dict(sorted(out.items()))


def band_norms(A: BandOperator, fit_range=None, alphas=None) -> BandNorms:
    """Spectral block norms, their sum and the log-log decay slope over ``fit_range``."""
    if alphas is None:
        alphas = [None] if A.periodic else [_key(a) for a in _offsets(A.rank, 2)]
    norms = {}
    for g in A.offsets():
        norms[g] = max(float(np.linalg.norm(A.scaled_block(a, g), 2)) for a in alphas)
    lo, hi = fit_range or (2, A.radius)
    res = BandNorms(norms, float(sum(norms.values())), math.nan, (lo, hi), A.tail_bound)
    rad = {m: v for m, v in res.by_radius().items() if lo <= m <= hi and m > 0}
    if len(rad) >= 2:
        x = np.log(np.array(list(rad.keys()), float))
        y = np.log(np.maximum(np.array(list(rad.values())), 1e-300))
        res.slope = float(np.polyfit(x, y, 1)[0])
    return res


def finite_section(A: BandOperator, radius: int, *, scaled: bool = True, sparse: bool = False):
    """Matrix of ``A`` restricted to cells ``|alpha|_inf <= radius``; rows/cols ordered by cell then node."""
    cells = _offsets(A.rank, radius)
    index = {c: k for k, c in enumerate(cells)}
    N0 = A.N0
    d = A.mesh.scale if scaled else np.ones(N0)
    rows, cols, vals = [], [], []
    ii, jj = np.meshgrid(np.arange(N0), np.arange(N0), indexing="ij")
    periodic_blocks = A.blocks() if A.periodic else None
    for a in cells:
        for gam in A.offsets():
            src = tuple(x - y for x, y in zip(a, gam))
            if src not in index:
                continue
            B = periodic_blocks[gam] if periodic_blocks is not None else A.block(a, gam)
            if not np.any(B):
                continue
            B = d[:, None] * B / d[None, :]
            rows.append((index[a] * N0 + ii).ravel())
            cols.append((index[src] * N0 + jj).ravel())
            vals.append(B.ravel())
    n = len(cells) * N0
    if not rows:
        M = sp.csr_matrix((n, n), dtype=complex)
    else:
        M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return M if sparse else M.toarray()


def section_condition_number(A: BandOperator, radius: int, *, tol: float = 1e-4) -> float:
    """2-norm condition number of the scaled finite section.

    Lanczos on ``M^H M`` and on its inverse (through a sparse LU of ``M``)
    gives the extreme squared singular values; a Hermitian Ritz value lies
    within its residual of an eigenvalue, so ``tol`` bounds the relative
    error of each without needing the clustered eigenvectors to converge.
    """
    from scipy.sparse.linalg import LinearOperator, eigsh, splu

    M = finite_section(A, radius, sparse=True).tocsc()
    n = M.shape[0]
    if n <= 400:
        s = np.linalg.svd(M.toarray(), compute_uv=False)
        return float(s[0] / s[-1]) if s[-1] > 0 else math.inf
    try:
        lu = splu(M)
    except RuntimeError:  # exactly singular factor
        return math.inf
    MH = M.conj().T.tocsr()
    gram = LinearOperator((n, n), matvec=lambda v: MH @ (M @ v), dtype=complex)
    inv = LinearOperator((n, n), matvec=lambda v: lu.solve(lu.solve(np.asarray(v, complex), trans="H")),
                         dtype=complex)
    v0 = np.random.default_rng(0).standard_normal(n)
    opts = dict(k=1, which="LA", tol=tol, ncv=min(48, n - 1), v0=v0, return_eigenvectors=False)
    hi = float(eigsh(gram, **opts)[0].real)
    inv_lo = float(eigsh(inv, **opts)[0].real)
    return math.sqrt(hi * inv_lo)
