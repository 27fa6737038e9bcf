"""Matrix Mellin symbols on the half-line and their operator calculus.

A symbol ``a(r, lam)`` is an ``n x n`` matrix function of ``r > 0`` and the
Mellin covariable ``lam``. Its operator is

    (op(a) u)(r) = 1/(2 pi) int int a(r, lam) (r/rho)^{i lam} u(rho) drho/rho dlam.

Numerically everything happens in ``x = -log r``, where op(a) becomes a
Fourier multiplier (for ``r``-independent ``a``) or a pseudodifferential
operator, discretised with the FFT on a uniform periodic grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import RectBivariateSpline

from .errors import DerivativeUnavailable, GridTooCoarse, QuadratureDiverged, StripViolation
from .functions import Weight


@lru_cache(maxsize=None)
def fd_weights(order: int, half_width: int) -> np.ndarray:
    """Fornberg weights for the ``order``-th derivative on ``-m..m``."""
    xs = np.arange(-half_width, half_width + 1, dtype=float)
    n = len(xs)
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, xs[0]
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, xs[i]
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def _stencil(order):
    return fd_weights(order, order // 2 + 2) if order else np.array([1.0])


class MellinSymbol:
    """Matrix symbol ``a(r, lam)``.

    ``func(r, lam)`` must broadcast over array arguments and return an array
    of shape ``broadcast(r, lam).shape + (n, n)``; scalar-valued functions are
    accepted for ``n == 1``. ``strip=(c, d)`` declares analyticity in
    ``c < Im lam < d``. ``derivatives`` maps ``(beta, alpha)`` to closed forms
    of ``(r d/dr)^beta (d/dlam)^alpha a``; finite differences (log-steps in
    ``r``) are used otherwise.
    """

    max_fd_order = 4

    def __init__(self, func, n: int = 1, *, r_independent: bool = False, strip=None, derivatives=None,
                 name: str = "", h_log_r: float = 2e-2, h_lam: float = 2e-2):
        self._func = func
        self.n = int(n)
        self.r_independent = r_independent
        self.strip = None if strip is None else (float(strip[0]), float(strip[1]))
        self.derivatives = dict(derivatives or {})
        self.name = name
        self.h_log_r = h_log_r
        self.h_lam = h_lam
        self.meta: dict = {}

    # constructors ---------------------------------------------------------
    @classmethod
    def constant(cls, M, name=""):
        M = np.atleast_2d(np.asarray(M, dtype=complex))
        n = M.shape[0]

        def f(r, lam):
            shape = np.broadcast_shapes(np.shape(r), np.shape(lam))
            return np.broadcast_to(M, shape + (n, n)).copy()

        zero = lambda r, lam: np.zeros(np.broadcast_shapes(np.shape(r), np.shape(lam)) + (n, n), complex)
        derivs = {(b, a): zero for b in range(5) for a in range(5) if a or b}
        return cls(f, n, r_independent=True, strip=(-np.inf, np.inf), derivatives=derivs, name=name or "const")

    @classmethod
    def from_lambda(cls, g, n: int = 1, *, strip=None, name=""):
        """r-independent symbol ``lam -> g(lam)``."""
        return cls(lambda r, lam: g(np.broadcast_to(lam, np.broadcast_shapes(np.shape(r), np.shape(lam)))),
                   n, r_independent=True, strip=strip, name=name)

    # evaluation -------------------------------------------------------------
    def __call__(self, r, lam) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        lam = np.asarray(lam)
        if self.strip is not None and np.iscomplexobj(lam):
            im = lam.imag
            c, d = self.strip
            if np.any(im <= c) or np.any(im >= d):
                raise StripViolation(f"Im lam outside analytic strip {self.strip} of {self.name or 'symbol'}")
        out = np.asarray(self._func(r, lam), dtype=complex)
        shape = np.broadcast_shapes(r.shape, lam.shape)
        if out.shape == shape and self.n == 1:
            out = out[..., None, None]
        if out.shape != shape + (self.n, self.n):
            out = np.broadcast_to(out, shape + (self.n, self.n))
        return out

    def grid(self, r, lam) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        lam = np.asarray(lam)
        return self(r[:, None], lam[None, :])

    def derivative(self, beta: int, alpha: int, r, lam) -> np.ndarray:
        """``(r d/dr)^beta (d/dlam)^alpha a`` at broadcast ``(r, lam)``."""
        if beta == 0 and alpha == 0:
            return self(r, lam)
        if (beta, alpha) in self.derivatives:
            out = np.asarray(self.derivatives[(beta, alpha)](np.asarray(r, float), np.asarray(lam)), complex)
            shape = np.broadcast_shapes(np.shape(r), np.shape(lam))
            return out[..., None, None] if out.shape == shape and self.n == 1 else out
        if beta and self.r_independent:
            shape = np.broadcast_shapes(np.shape(r), np.shape(lam))
            return np.zeros(shape + (self.n, self.n), complex)
        if beta > self.max_fd_order or alpha > self.max_fd_order:
            raise DerivativeUnavailable(f"order ({beta}, {alpha}) exceeds finite-difference limit")
        r = np.asarray(r, dtype=float)
        lam = np.asarray(lam)
        wb, wa = _stencil(beta), _stencil(alpha)
        mb, ma = (len(wb) - 1) // 2, (len(wa) - 1) // 2
        acc = 0
        for i, cb in enumerate(wb):
            if cb == 0:
                continue
            rr = r * math.exp((i - mb) * self.h_log_r) if beta else r
            for j, ca in enumerate(wa):
                if ca == 0:
                    continue
                ll = lam + (j - ma) * self.h_lam if alpha else lam
                acc = acc + cb * ca * self(rr, ll)
        return acc / (self.h_log_r ** beta * self.h_lam ** alpha)

    def __repr__(self):
        return f"MellinSymbol({self.name!r}, n={self.n}, r_independent={self.r_independent})"


class TabulatedSymbol(MellinSymbol):
    """``base(r, lam) + correction(r, lam)`` with the correction tabulated.

    The correction is interpolated with bicubic splines in ``(log r, lam)``;
    outside the ``lam`` range it is taken as zero and ``r`` is clamped to the
    table.
    """

    def __init__(self, base: MellinSymbol | None, r_grid, lam_grid, values, *, name="", n=None):
        self.base = base
        self.r_grid = np.asarray(r_grid, float)
        self.lam_grid = np.asarray(lam_grid, float)
        self.values = np.asarray(values, complex)
        n = n or self.values.shape[-1]
        self._t = np.log(self.r_grid)
        k_t = min(3, len(self._t) - 1)
        k_l = min(3, len(self.lam_grid) - 1)
        self._splines = [
            [
                (
                    RectBivariateSpline(self._t, self.lam_grid, self.values[:, :, i, j].real, kx=k_t, ky=k_l),
                    RectBivariateSpline(self._t, self.lam_grid, self.values[:, :, i, j].imag, kx=k_t, ky=k_l),
                )
                for j in range(n)
            ]
            for i in range(n)
        ]
        super().__init__(self._evaluate, n, r_independent=False, name=name)

    def correction(self, r, lam) -> np.ndarray:
        r, lam = np.broadcast_arrays(np.asarray(r, float), np.asarray(lam))
        t = np.clip(np.log(r), self._t[0], self._t[-1]).ravel()
        lr = np.real(lam).ravel()
        inside = (lr >= self.lam_grid[0]) & (lr <= self.lam_grid[-1])
        out = np.zeros(t.shape + (self.n, self.n), complex)
        for i in range(self.n):
            for j in range(self.n):
                re, im = self._splines[i][j]
                out[inside, i, j] = re.ev(t[inside], lr[inside]) + 1j * im.ev(t[inside], lr[inside])
        return out.reshape(r.shape + (self.n, self.n))

    def _evaluate(self, r, lam):
        corr = self.correction(r, lam)
        return corr if self.base is None else self.base(r, lam) + corr


# -- seminorms ------------------------------------------------------------------
def _bracket(lam):
    return np.sqrt(1.0 + np.abs(lam) ** 2)


def seminorm(a: MellinSymbol, l1: int, l2: int, r_grid, lam_grid, *, weight_on: str = "beta") -> float:
    """Gridded ``|a|_{l1,l2}``: sup of ``sum |(r d_r)^b d_lam^al a_ij| <lam>^b``.

    ``weight_on="alpha"`` puts the ``<lam>`` power on the ``lam``-derivative
    order instead.
    """
    return float(np.max(_seminorm_field(a, l1, l2, r_grid, lam_grid, weight_on)))


def _seminorm_field(a, l1, l2, r_grid, lam_grid, weight_on):
    r = np.asarray(r_grid, float)[:, None]
    lam = np.asarray(lam_grid, float)[None, :]
    total = 0
    for al in range(l1 + 1):
        for be in range(l2 + 1):
            d = np.abs(a.derivative(be, al, r, lam))
            power = be if weight_on == "beta" else al
            total = total + d * _bracket(lam)[..., None, None] ** power
    return np.max(total, axis=(-1, -2))  # (Nr, Nl), max over entries


@dataclass
class SeminormReport:
    value: float
    sup_by_r: np.ndarray
    r_grid: np.ndarray
    unbounded_at_infinity: bool
    unbounded_at_zero: bool


def seminorm_report(a: MellinSymbol, l1: int, l2: int, r_grid, lam_grid, *, weight_on="beta",
                    slope_threshold: float = 0.5) -> SeminormReport:
    """Seminorm plus a growth diagnostic: a log-log slope of the r-wise sup
    above ``slope_threshold`` at either end of the grid flags unboundedness."""
    r_grid = np.sort(np.asarray(r_grid, float))
    field_ = _seminorm_field(a, l1, l2, r_grid, lam_grid, weight_on)
    sup_r = field_.max(axis=1)
    q = max(3, len(r_grid) // 4)
    lr = np.log(r_grid)
    # running envelopes make the fit insensitive to oscillation zeros
    up = np.log(np.maximum(np.maximum.accumulate(sup_r), 1e-300))
    down = np.log(np.maximum(np.maximum.accumulate(sup_r[::-1])[::-1], 1e-300))
    hi = np.polyfit(lr[-q:], up[-q:], 1)[0]
    lo = np.polyfit(lr[:q], down[:q], 1)[0]
    return SeminormReport(float(sup_r.max()), sup_r, r_grid, bool(hi > slope_threshold), bool(lo < -slope_threshold))


# -- discretised operators ---------------------------------------------------------
@dataclass(frozen=True)
class MellinGrid:
    """Uniform periodic grid in ``x = -log r`` used to discretise op(a)."""

    N: int
    x_min: float
    x_max: float

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.N

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.N)

    @property
    def r(self) -> np.ndarray:
        return np.exp(-self.x)

    @property
    def lam(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.N, self.dx)

    def norm(self, u) -> float:
        """L^2(dr/r) norm of grid samples."""
        return float(np.sqrt(np.sum(np.abs(u) ** 2) * self.dx))

    def inner(self, u, v) -> complex:
        return complex(np.sum(u * np.conj(v)) * self.dx)


def _as_columns(u, n):
    u = np.asarray(u, dtype=complex)
    if u.ndim == 1:
        if n != 1:
            raise ValueError("vector-valued symbol needs u of shape (N, n)")
        return u[:, None], True
    return u, False


def _spectrum(grid: MellinGrid, v):
    """``V(lam_j) = int e^{i lam_j x} v(x) dx`` times ``e^{-i lam_j x0}``."""
    return grid.dx * grid.N * np.fft.ifft(v, axis=0)


def _check_resolution(grid, V, frac=0.1, energy=0.01):
    lam = np.abs(grid.lam)
    top = lam >= np.quantile(lam, 1 - frac)
    e = np.abs(V) ** 2
    total = e.sum()
    if total > 0 and e[top].sum() > energy * total:
        raise GridTooCoarse(f"{100 * e[top].sum() / total:.2g}% of the energy sits in the top frequencies")


def apply_mellin(a: MellinSymbol, u, grid: MellinGrid, *, check: bool = True, chunk: int = 256) -> np.ndarray:
    """Apply op(a) to samples ``u`` of a function on ``r = exp(-grid.x)``."""
    v, flat = _as_columns(u, a.n)
    V = _spectrum(grid, v)  # (N, n)
    if check:
        _check_resolution(grid, V)
    lam = grid.lam
    if a.r_independent:
        A = a(np.ones(1), lam)  # (N, n, n)
        W = np.einsum("jab,jb->ja", A, V)
        out = np.fft.fft(W, axis=0) / (grid.N * grid.dx)
    else:
        out = np.empty_like(v)
        r = grid.r
        jj = np.arange(grid.N)
        for start in range(0, grid.N, chunk):
            m = np.arange(start, min(start + chunk, grid.N))
            A = a(r[m][:, None], lam[None, :])  # (c, N, n, n)
            E = np.exp(-2j * np.pi * np.outer(m, jj) / grid.N)
            out[m] = np.einsum("mjab,mj,jb->ma", A, E, V) / (grid.N * grid.dx)
    return out[:, 0] if flat else out


def mellin_matrix(a: MellinSymbol, grid: MellinGrid) -> np.ndarray:
    """Dense ``(N n) x (N n)`` matrix of the discretised op(a)."""
    N, n = grid.N, a.n
    M = np.empty((N * n, N * n), complex)
    for k in range(N):
        for b in range(n):
            e = np.zeros((N, n), complex)
            e[k, b] = 1.0
            M[:, k * n + b] = apply_mellin(a, e, grid, check=False).reshape(-1)
    return M


def operator_norm(a: MellinSymbol, grid: MellinGrid) -> float:
    """Spectral norm of the discretised op(a) on L^2(dr/r)."""
    if a.r_independent:
        return float(np.max(np.linalg.norm(a(np.ones(1), grid.lam), ord=2, axis=(-2, -1))))
    return float(np.linalg.norm(mellin_matrix(a, grid), 2))


# -- composition and adjoint -------------------------------------------------------
@dataclass
class QuadConfig:
    """Truncation and resolution of the oscillatory integrals.

    ``log_range`` bounds ``log(r rho)`` (absolute), integrated with
    Gauss-Legendre panels; ``eta`` runs on a uniform grid with the spacing of
    the output ``lam`` grid up to ``eta_max`` (composite Simpson).
    """

    log_range: tuple[float, float] = (-16.0, 16.0)
    panel_width: float = 0.25
    order: int = 8
    eta_max: float = 12.0
    tail_tol: float = 1e-6


def _gl_nodes(cfg: QuadConfig):
    lo, hi = cfg.log_range
    npan = max(1, int(math.ceil((hi - lo) / cfg.panel_width)))
    x, w = leggauss(cfg.order)
    edges = np.linspace(lo, hi, npan + 1)
    h = np.diff(edges)[:, None] / 2
    nodes = (edges[:-1, None] + h * (x[None, :] + 1)).ravel()
    weights = (h * w[None, :]).ravel()
    return nodes, weights


def _simpson(npts: int, h: float) -> np.ndarray:
    """Composite Simpson weights on ``npts`` equispaced points (odd count) ."""
    if npts % 2 == 0:
        raise ValueError("Simpson rule needs an odd number of points")
    w = np.ones(npts)
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    return w * h / 3


def _uniform_lam(lam_grid):
    lam = np.asarray(lam_grid, float)
    d = np.diff(lam)
    if len(lam) < 2 or np.max(np.abs(d - d[0])) > 1e-9 * max(1.0, abs(d[0])):
        raise ValueError("lam_grid must be uniform")
    return lam, float(d[0])


def _default_tables(r_grid, lam_grid):
    if r_grid is None:
        r_grid = np.exp(np.linspace(-24, 24, 97))
    if lam_grid is None:
        lam_grid = np.linspace(-10, 10, 401)
    return np.asarray(r_grid, float), np.asarray(lam_grid, float)


def compose(a: MellinSymbol, b: MellinSymbol, quad: QuadConfig | None = None, *, r_grid=None,
            lam_grid=None) -> MellinSymbol:
    """Symbol ``c`` with ``op(a) op(b) = op(c)``.

    For ``r``-independent ``b`` the product ``a b`` is returned exactly.
    Otherwise, with ``B(t) = b(r e^t, lam) - b(r, lam)``, one integration by
    parts in ``t = log rho`` gives

        c = a b + (a/2)(B(+inf) + B(-inf)) + (1/2pi) PV int a(r, lam+eta) B'^(eta)/(i eta) deta

    with ``B'^`` the Fourier transform of ``(r d_r b)(r e^t, lam)``; the PV is
    taken through its odd part and the correction ``c - a b`` is tabulated.
    """
    if a.n != b.n:
        raise ValueError("symbol sizes differ")
    if b.r_independent:
        sym = MellinSymbol(lambda r, lam: a(r, lam) @ b(r, lam), a.n, r_independent=a.r_independent,
                           strip=_meet(a.strip, b.strip), name=f"({a.name})({b.name})")
        return sym
    quad = quad or QuadConfig()
    r_grid, lam_grid = _default_tables(r_grid, lam_grid)
    lam, dl = _uniform_lam(lam_grid)
    u, wu = _gl_nodes(quad)
    s = np.exp(u)
    K = int(round(quad.eta_max / dl))
    K += K % 2  # Simpson needs an even number of intervals
    eta = dl * np.arange(0, K + 1)
    w_eta = _simpson(K + 1, dl)
    n = a.n
    product = MellinSymbol(lambda r, l: a(r, l) @ b(r, l), n, name=f"({a.name})({b.name})")
    db = b.derivative(1, 0, s[:, None], lam[None, :])  # (T, L, n, n): depends on absolute s only
    tail = float(max(np.abs(db[0]).max(), np.abs(db[-1]).max()))
    if tail > quad.tail_tol:
        raise QuadratureDiverged(f"r d/dr b is {tail:.2g} at the ends of log-range {quad.log_range}")
    b_hi = b(s[-1], lam)
    b_lo = b(s[0], lam)
    keep = _support(db)
    u, wu, db = u[keep], wu[keep], db[keep]
    corr = np.empty((len(r_grid), len(lam), n, n), complex)
    flat = db.reshape(len(u), -1)
    eta_pm = np.concatenate([eta, -eta[1:]])
    for i, r in enumerate(r_grid):
        t = u - math.log(r)
        E = np.exp(-1j * np.outer(eta_pm, t)) * wu[None, :]
        Bh = (E @ flat).reshape(len(eta_pm), len(lam), n, n)
        Bp, Bm = Bh[: K + 1], np.concatenate([Bh[:1], Bh[K + 1:]])
        a_r = a(r, lam)  # (L, n, n)
        a_plus = a(np.full(K + 1, r)[:, None], lam[None, :] + eta[:, None])
        a_minus = a(np.full(K + 1, r)[:, None], lam[None, :] - eta[:, None])
        num = a_plus @ Bp - a_minus @ Bm  # (K+1, L, n, n)
        lim0 = _odd_part_at_zero(a, db, r, lam, wu, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = num / (1j * eta[:, None, None, None])
        integrand[0] = lim0
        pv = np.einsum("k,klab->lab", w_eta, integrand) / (2 * np.pi)
        b_r = b(r, lam)
        corr[i] = pv + 0.5 * a_r @ ((b_hi - b_r) + (b_lo - b_r))
    out = TabulatedSymbol(product, r_grid, lam, corr, name=f"({a.name})o({b.name})")
    out.meta.update(kind="compose", quad=quad, tail=tail)
    return out


def _support(d, rel=1e-15):
    # quadrature nodes where the log-derivative is not negligible
    m = np.abs(d).reshape(len(d), -1).max(axis=1)
    keep = m > rel * max(m.max(), 1e-300)
    return keep if keep.any() else np.ones_like(keep)


def _odd_part_at_zero(a, db, r, lam, wu, t):
    """Limit eta -> 0 of [a(lam+eta) B^(eta) - a(lam-eta) B^(-eta)] / (i eta)."""
    B0 = np.einsum("t,tlab->lab", wu, db)
    B1 = np.einsum("t,tlab->lab", -1j * t * wu, db)  # d/deta B^ at 0
    da = a.derivative(0, 1, np.full(len(lam), r), lam)
    a0 = a(np.full(len(lam), r), lam)
    return 2 * (da @ B0 + a0 @ B1) / 1j


def adjoint(a: MellinSymbol, p: float = 2.0, quad: QuadConfig | None = None, *, r_grid=None,
            lam_grid=None) -> MellinSymbol:
    """Symbol ``b`` with ``op(a)^* = op(b)`` (duality of L^p and L^q over dr/r).

    For ``r``-independent ``a`` this is the conjugate transpose. Otherwise,
    with ``D(t, mu) = a*(r e^t, mu) - a*(r, mu)``,

        b = a* + (D(+inf, lam) + D(-inf, lam))/2 + (1/2pi) PV int G^(eta, lam+eta)/(i eta) deta,

    ``G^`` being the Fourier transform in ``t`` of ``(r d_r a*)(r e^t, mu)``.
    The ``mu = lam + eta`` values lie on the ``lam`` grid extended by
    ``eta_max`` because ``eta`` uses the same spacing.
    """
    star = lambda M: np.conj(np.swapaxes(M, -1, -2))
    if a.r_independent:
        strip = None if a.strip is None else (-a.strip[1], -a.strip[0])
        return MellinSymbol(lambda r, lam: star(a(r, np.conj(lam))), a.n, r_independent=True, strip=strip,
                            name=f"({a.name})*")
    quad = quad or QuadConfig()
    r_grid, lam_grid = _default_tables(r_grid, lam_grid)
    lam, dl = _uniform_lam(lam_grid)
    u, wu = _gl_nodes(quad)
    s = np.exp(u)
    K = int(round(quad.eta_max / dl))
    K += K % 2
    eta = dl * np.arange(0, K + 1)
    w_eta = _simpson(K + 1, dl)
    n = a.n
    mu = lam[0] + dl * np.arange(-K, len(lam) + K)  # lam grid extended by eta_max
    da = star(a.derivative(1, 0, s[:, None], mu[None, :]))  # (T, M, n, n)
    tail = float(max(np.abs(da[0]).max(), np.abs(da[-1]).max()))
    if tail > quad.tail_tol:
        raise QuadratureDiverged(f"r d/dr a is {tail:.2g} at the ends of log-range {quad.log_range}")
    a_hi = star(a(s[-1], lam))
    a_lo = star(a(s[0], lam))
    keep = _support(da)
    u, wu, da = u[keep], wu[keep], da[keep]
    flat = da.reshape(len(u), -1)
    L = len(lam)
    idx = np.arange(L)
    vals = np.empty((len(r_grid), L, n, n), complex)
    for i, r in enumerate(r_grid):
        t = u - math.log(r)
        Ep = np.exp(-1j * np.outer(eta, t)) * wu[None, :]
        Em = np.exp(1j * np.outer(eta, t)) * wu[None, :]
        Gp = (Ep @ flat).reshape(K + 1, len(mu), n, n)
        Gm = (Em @ flat).reshape(K + 1, len(mu), n, n)
        k = np.arange(K + 1)[:, None]
        plus = Gp[k, idx[None, :] + K + k]  # G^(eta_k, lam + eta_k)
        minus = Gm[k, idx[None, :] + K - k]  # G^(-eta_k, lam - eta_k)
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = (plus - minus) / (1j * eta[:, None, None, None])
        integrand[0] = _adjoint_zero_limit(a, star, r, lam, u, wu, t)
        pv = np.einsum("k,klab->lab", w_eta, integrand) / (2 * np.pi)
        a_r = star(a(r, lam))
        vals[i] = a_r + 0.5 * ((a_hi - a_r) + (a_lo - a_r)) + pv
    base = MellinSymbol(lambda r, l: star(a(r, np.real(l))), n, name=f"({a.name})*")
    out = TabulatedSymbol(base, r_grid, lam, vals - base.grid(r_grid, lam), name=f"adj({a.name})")
    out.meta.update(kind="adjoint", p=p, quad=quad, tail=tail)
    return out


def _adjoint_zero_limit(a, star, r, lam, u, wu, t):
    # d/deta [G^(eta, lam+eta) - G^(-eta, lam-eta)] at 0, divided by i
    s = np.exp(u)[:, None]
    g = star(a.derivative(1, 0, s, lam[None, :]))
    g_mu = star(a.derivative(1, 1, s, lam[None, :]))
    d_eta = np.einsum("t,tlab->lab", -1j * t * wu, g)
    d_mu = np.einsum("t,tlab->lab", wu, g_mu)
    return 2 * (d_eta + d_mu) / 1j


def _meet(s1, s2):
    if s1 is None or s2 is None:
        return None
    return (max(s1[0], s2[0]), min(s1[1], s2[1]))


# -- weights -----------------------------------------------------------------
def _kappa(w: Weight, r, vertex=None):
    eps = w.epsilon
    w.epsilon = None
    try:
        return w.kappa(r, vertex)
    finally:
        w.epsilon = eps


def conjugate_by_weight(a: MellinSymbol, w: Weight, *, vertex=None, r_check=None) -> MellinSymbol:
    """Leading term ``b0(r, lam) = a(r, lam + i kappa(r))`` of ``w op(a) w^-1``.

    The class-E0 remainder is not reconstructed; use
    :func:`conjugation_defect` for an operator-level check.
    """
    if r_check is None:
        r_check = np.geomspace(1e-12, 1e3, 400)
    k = _kappa(w, r_check, vertex)
    if np.any(k != 0):
        if a.strip is None:
            raise StripViolation(f"{a.name or 'symbol'} declares no analytic strip")
        c, d = a.strip
        if np.min(k) <= c or np.max(k) >= d:
            raise StripViolation(f"kappa range [{k.min():.3g}, {k.max():.3g}] leaves strip {a.strip}")

    def b0(r, lam):
        kk = _kappa(w, np.asarray(r, float), vertex)
        return a(r, lam + 1j * kk)

    out = MellinSymbol(b0, a.n, r_independent=a.r_independent and bool(np.ptp(k) == 0), name=f"w({a.name})")
    out.meta.update(kind="weight-conjugate", weight=w)
    return out


def conjugation_defect(a: MellinSymbol, w: Weight, grid: MellinGrid, bumps, *, vertex=None,
                       b0: MellinSymbol | None = None) -> float:
    """Max over ``bumps`` of ``||w op(a) w^-1 u - op(b0) u|| / ||u||`` on ``grid``.

    A bump is either an array of samples on ``grid`` (both sides are then
    applied with the periodic FFT discretisation) or a pair ``(center,
    width)`` standing for ``exp(-((x - center)/width)^2)``. For Gaussian
    bumps, ``r``-independent ``a`` and a power weight, both sides are computed
    from the exact Fourier transform of the bump, which avoids the wrap-around
    of the periodic grid.
    """
    r = grid.r
    b0 = b0 or conjugate_by_weight(a, w, vertex=vertex, r_check=r)
    sig = _sigma_free(w, r, vertex)
    k = _kappa(w, r, vertex)
    if all(isinstance(u, tuple) for u in bumps) and a.r_independent and np.ptp(k) < 1e-12:
        return _gaussian_defect(a, float(k[0]), grid, bumps)
    wv = np.exp(sig)
    worst = 0.0
    for u in bumps:
        if isinstance(u, tuple):
            u = np.exp(-(((grid.x - u[0]) / u[1]) ** 2))
        u = np.asarray(u, complex)
        col = wv if u.ndim == 1 else wv[:, None]
        lhs = col * apply_mellin(a, u / col, grid, check=False)
        rhs = apply_mellin(b0, u, grid, check=False)
        worst = max(worst, grid.norm(lhs - rhs) / grid.norm(u))
    return worst


def _gaussian_defect(a, kappa, grid, bumps):
    x = grid.x
    span = max(abs(x[0]), abs(x[-1])) + max(abs(c) for c, _ in bumps)
    lo, hi = a.strip if a.strip is not None else (-0.5, 0.5)
    # trapezoid error ~ exp(-2 pi d / h) for a strip of half-width d around the line
    d = min(-lo, hi, kappa - lo, hi - kappa, 1.0)
    worst = 0.0
    for c, width in bumps:
        lam_max = 2 * math.sqrt(45.0) / width
        h = min(0.5 * math.pi / span, lam_max / 200, 2 * math.pi * d / 40)
        lam = np.arange(-lam_max, lam_max + h / 2, h)
        hat = lambda z: width * math.sqrt(math.pi) * np.exp(1j * z * c - (width * z) ** 2 / 4)
        one = np.ones(1)
        a_lam = a(one, lam)[..., 0, 0] if a.n == 1 else None
        if a_lam is None:
            raise ValueError("Gaussian bumps need a scalar symbol")
        a_shift = a(one, lam + 1j * kappa)[..., 0, 0]
        # extended precision: exp(-kappa x) amplifies rounding in the tails by up to e^{|kappa| x_max}
        xl, laml = x.astype(np.longdouble), lam.astype(np.longdouble)
        phase = np.exp(-1j * np.outer(xl, laml)) * (np.longdouble(h) / (2 * np.pi))
        lhs = np.exp(-kappa * xl) * (phase @ (a_lam * hat(lam - 1j * kappa)).astype(np.clongdouble))
        rhs = phase @ (a_shift * hat(lam)).astype(np.clongdouble)
        lhs, rhs = lhs.astype(complex), rhs.astype(complex)
        u = np.exp(-(((x - c) / width) ** 2))
        worst = max(worst, grid.norm(lhs - rhs) / grid.norm(u))
    return worst


def _sigma_free(w, r, vertex):
    eps = w.epsilon
    w.epsilon = None
    try:
        return w.sigma(r, vertex)
    finally:
        w.epsilon = eps


@dataclass
class LocalInvertibilityReport:
    inf_det: float
    argmin: tuple[float, float]
    threshold: float
    passed: bool
    p: float


def local_invertibility_zero(a: MellinSymbol, w: Weight | None = None, p: float = 2.0, r_grid=None, lam_grid=None,
                             threshold: float = 1e-6, *, vertex=None) -> LocalInvertibilityReport:
    """Gridded ``inf |det a(r, lam + i kappa(r))|`` as ``r -> 0``."""
    if r_grid is None:
        r_grid = np.geomspace(1e-8, 1e-2, 40)
    if lam_grid is None:
        lam_grid = np.linspace(-20, 20, 4001)
    r = np.asarray(r_grid, float)
    lam = np.asarray(lam_grid, float)
    if w is not None:
        sym = conjugate_by_weight(a, w, vertex=vertex, r_check=r)
    else:
        sym = a
    vals = np.abs(np.linalg.det(sym.grid(r, lam)))
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    inf = float(vals[i, j])
    return LocalInvertibilityReport(inf, (float(r[i]), float(lam[j])), threshold, inf >= threshold, p)
