"""Floquet fibers of periodic bands, limit operators and essential spectra.

For a periodic band with blocks ``M_gamma`` the fiber is
``mu(tau) = sum_gamma M_gamma tau^gamma`` on the torus ``|tau_i| = 1``. (With
the block convention of :mod:`fredgraph.assemble` this is the Bloch reduction
at the character ``conj(tau)``; the union over the torus is the same.)
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.spatial import cKDTree

from .assemble import BandOperator, _key, _offsets, finite_section
from .errors import NotPeriodic, OffTorus
from .functions import LimitResult, PCFunction, limit_function

INV_TOL = 1e-6


@dataclass
class FiberFamily:
    """Scaled blocks ``M_gamma`` of a periodic band."""

    offsets: np.ndarray  # (G, n) integer offsets
    blocks: np.ndarray  # (G, N0, N0), scaled coordinates
    tail_bound: float
    rank: int
    label: str = ""

    @property
    def N0(self) -> int:
        return self.blocks.shape[1]

    def block(self, gamma) -> np.ndarray:
        g = np.asarray(_key(gamma))
        hit = np.nonzero(np.all(self.offsets == g, axis=1))[0]
        return self.blocks[hit[0]] if len(hit) else np.zeros((self.N0, self.N0), complex)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        scale = max(float(np.abs(self.blocks).max()), 1e-300)
        for k, g in enumerate(self.offsets):
            other = self.block(-g)
            if np.abs(self.blocks[k] - other.conj().T).max() > tol * scale:
                return False
        return True


def fiber_blocks(A: BandOperator, label: str = "") -> FiberFamily:
    if not A.periodic:
        raise NotPeriodic(f"{A.kind or 'operator'} has non-periodic coefficients; take a limit operator first")
    offs = A.offsets()
    d = A.mesh.scale
    blocks = np.stack([d[:, None] * A.block(None, g) / d[None, :] for g in offs])
    return FiberFamily(np.array(offs, dtype=np.int64).reshape(len(offs), A.rank), blocks, A.tail_bound, A.rank, label)


def torus_grid(size: int, rank: int) -> np.ndarray:
    """Uniform roots of unity: ``(size**rank, rank)`` array of ``tau``."""
    roots = np.exp(2j * np.pi * np.arange(size) / size)
    return np.array(list(itertools.product(roots, repeat=rank))) if rank > 1 else roots[:, None]


def _check_torus(tau):
    tau = np.atleast_2d(np.asarray(tau, complex))
    if np.any(np.abs(np.abs(tau) - 1) > 1e-10):
        raise OffTorus("tau must satisfy |tau_i| = 1")
    return tau


def fibers(F: FiberFamily, tau) -> np.ndarray:
    """``mu(tau)`` for a stack of torus points; shape ``(T, N0, N0)``."""
    tau = _check_torus(tau)
    if tau.shape[1] != F.rank:
        tau = tau.T
    # tau^gamma = exp(sum gamma_i log tau_i)
    phase = np.exp(1j * (np.angle(tau) @ F.offsets.T))  # (T, G)
    return np.einsum("tg,gij->tij", phase, F.blocks)


def fiber_at(F: FiberFamily, tau) -> np.ndarray:
    tau = np.atleast_1d(np.asarray(tau, complex))
    return fibers(F, tau[None, :])[0]


# -- spectra ---------------------------------------------------------------------
@dataclass
class SpectrumEstimate:
    points: np.ndarray  # complex eigenvalues
    tau_index: np.ndarray  # grid index of each point
    family_index: np.ndarray  # which limit operator produced the point
    grid_size: int
    rank: int
    margins: dict = field(default_factory=dict)  # probe -> min smallest singular value per tau
    family: list = field(default_factory=list)
    hausdorff_motion: float | None = None
    note: str = ""

    def distance_to(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, complex))
        tree = cKDTree(np.c_[self.points.real, self.points.imag])
        return tree.query(np.c_[z.real, z.imag])[0]


def hausdorff(P, Q) -> float:
    P = np.atleast_1d(np.asarray(P, complex))
    Q = np.atleast_1d(np.asarray(Q, complex))
    tp = cKDTree(np.c_[P.real, P.imag])
    tq = cKDTree(np.c_[Q.real, Q.imag])
    return float(max(tq.query(np.c_[P.real, P.imag])[0].max(), tp.query(np.c_[Q.real, Q.imag])[0].max()))


def _fiber_eigs(F: FiberFamily, size: int, hermitian: bool | None = None):
    tau = torus_grid(size, F.rank)
    herm = F.is_hermitian() if hermitian is None else hermitian
    pts, idx = [], []
    chunk = 256
    for s in range(0, len(tau), chunk):
        mu = fibers(F, tau[s:s + chunk])
        ev = np.linalg.eigvalsh(mu).astype(complex) if herm else np.linalg.eigvals(mu)
        pts.append(ev.ravel())
        idx.append(np.repeat(np.arange(s, s + len(mu)), F.N0))
    return np.concatenate(pts), np.concatenate(idx)


def essential_spectrum(A: BandOperator | FiberFamily | list, tau_grid: int = 256, *, probes=(), adaptive: bool = True,
                       cloud_tol: float = 1e-3, max_grid: int | None = None) -> SpectrumEstimate:
    """Union of fiber spectra over a uniform torus grid.

    ``A`` is a periodic band, a fiber family, or a list of them (a scanned
    limit family); the union is taken over the list. With ``adaptive`` the
    grid doubles until the cloud moves less than ``cloud_tol`` in Hausdorff
    distance. ``probes`` are points ``z`` at which ``min_tau s_min(mu(tau) - z)``
    is reported.
    """
    members = A if isinstance(A, list) else [A]
    fams = [m if isinstance(m, FiberFamily) else fiber_blocks(m) for m in members]
    rank = fams[0].rank
    if max_grid is None:
        max_grid = 8192 if rank == 1 else 256

    def cloud(size):
        P, T, I = [], [], []
        for k, F in enumerate(fams):
            p, t = _fiber_eigs(F, size)
            P.append(p)
            T.append(t)
            I.append(np.full(len(p), k))
        return np.concatenate(P), np.concatenate(T), np.concatenate(I)

    size = tau_grid
    pts, tidx, fidx = cloud(size)
    motion = None
    if adaptive:
        while size * 2 <= max_grid:
            new = cloud(size * 2)
            motion = hausdorff(pts, new[0])
            size *= 2
            pts, tidx, fidx = new
            if motion < cloud_tol:
                break
    est = SpectrumEstimate(pts, tidx, fidx, size, rank, family=[F.label for F in fams], hausdorff_motion=motion)
    for z in probes:
        est.margins[complex(z)] = float(min(fiber_invertibility_scan(F, size, shift=z).margin for F in fams))
    return est


@dataclass
class MarginReport:
    margin: float
    argmin_tau: tuple
    grid_size: int
    inv_tol: float
    passed: bool
    tail_bound: float
    label: str = ""


def fiber_invertibility_scan(F: FiberFamily, tau_grid: int = 256, *, shift: complex = 0.0,
                             inv_tol: float = INV_TOL) -> MarginReport:
    """``min_tau s_min(mu(tau) - shift)`` over the grid; passes iff above ``inv_tol``
    plus the tail bound (the truncated band moves singular values by at most that)."""
    tau = torus_grid(tau_grid, F.rank)
    best, arg = math.inf, None
    eye = np.eye(F.N0)
    for s in range(0, len(tau), 256):
        mu = fibers(F, tau[s:s + 256]) - shift * eye
        sv = np.linalg.svd(mu, compute_uv=False)[:, -1]
        k = int(np.argmin(sv))
        if sv[k] < best:
            best, arg = float(sv[k]), tuple(complex(t) for t in tau[s + k])
    return MarginReport(best, arg, tau_grid, inv_tol, best >= inv_tol + F.tail_bound, F.tail_bound, F.label)


def section_eigenvalues(A: BandOperator, radius: int, *, drop_tol: float = 1e-15) -> np.ndarray:
    """Eigenvalues of the scaled finite section.

    Hermitian sections use a banded eigensolver after dropping blocks whose
    norm is below ``drop_tol`` times the largest (a perturbation bounded by
    the dropped norms).
    """
    M = finite_section(A, radius, sparse=True)
    diff = abs(M - M.conj().T)
    if diff.nnz == 0 or diff.max() <= 1e-12 * abs(M).max():
        F = fiber_blocks(A) if A.periodic else None
        if F is not None:
            norms = np.linalg.norm(F.blocks, axis=(1, 2), ord=2)
            keep = norms > drop_tol * norms.max()
            reach = int(np.abs(F.offsets[keep]).max()) if keep.any() else 0
        else:
            reach = A.radius
        if A.rank == 1:
            bw = (reach + 1) * A.N0
            Md = M.tocoo()
            mask = (Md.row - Md.col >= 0) & (Md.row - Md.col < bw)
            n = M.shape[0]
            band = np.zeros((bw, n), dtype=complex)
            band[Md.row[mask] - Md.col[mask], Md.col[mask]] = Md.data[mask]
            if np.abs(band.imag).max() == 0:
                band = band.real
            return sla.eigvals_banded(band, lower=True).astype(complex)
        return np.linalg.eigvalsh(M.toarray()).astype(complex)
    return np.linalg.eigvals(M.toarray())


# -- limit operators ---------------------------------------------------------------
def _node_samples(A: BandOperator):
    mesh = A.mesh
    out = []
    for e, sl in zip(mesh.graph.edges, mesh.edge_slices):
        out.extend((e.id, float(s)) for s in mesh.s[sl])
    return out


def limit_operator_band(A: BandOperator, h, *, tol: float = 1e-8, m_max: int = 2 ** 40, label: str = "") -> BandOperator:
    """Limit operator along ``h`` (callable ``m -> g`` or array of offsets).

    Coefficients are replaced by their limit functions on the mesh nodes;
    coefficient-free (translation invariant) terms pass through unchanged.
    """
    if A.periodic:
        out = A.periodic_part()
        out.meta["limit"] = {"label": label or "periodic", "results": []}
        return out
    samples = _node_samples(A)
    terms, results = [], []
    for f, blocks in A.terms:
        if f is None or f.periodic:
            terms.append((f, blocks))
            continue
        res = limit_function(f, h, samples, tol=tol, m_max=m_max)
        results.append(res)
        terms.append((_nodal_function(A, res), blocks))
    out = BandOperator(A.mesh, terms, radius=A.radius, tail_bound=A.tail_bound, kind=f"limit({A.kind})", meta=A.meta)
    out = out.periodic_part()
    out.meta["limit"] = {"label": label, "results": results}
    return out


def _nodal_function(A: BandOperator, res: LimitResult) -> PCFunction:
    """Periodic function equal to the limit values at the mesh nodes."""
    mesh = A.mesh
    vals = np.asarray(res.values)
    funcs = {}
    for k, (e, sl) in enumerate(zip(mesh.graph.edges, mesh.edge_slices)):
        s_nodes = mesh.s[sl]
        v = vals[sl]

        def f(s, g, s_nodes=s_nodes, v=v):
            s = np.atleast_1d(np.asarray(s, float))
            idx = np.abs(s[:, None] - s_nodes[None, :]).argmin(axis=1)
            return v[idx]
        funcs[e.id] = f
    return PCFunction(mesh.graph, funcs, periodic=True, name=f"lim({res.source.name})")


def limit_defect(A: BandOperator, A_h: BandOperator, g, M: int) -> float:
    """``||(V_g^{-1} A V_g - A^h) chi_M||`` on the scaled section (columns ``|beta| <= M``)."""
    g = _key(g)
    R = max(A.radius, A_h.radius)
    rows = _offsets(A.rank, M + R)
    cols = _offsets(A.rank, M)
    ci = {c: k for k, c in enumerate(cols)}
    N0 = A.N0
    d = A.mesh.scale
    D = np.zeros((len(rows) * N0, len(cols) * N0), complex)
    offs = sorted(set(A.offsets()) | set(A_h.offsets()))
    for r, a in enumerate(rows):
        shifted = tuple(x + y for x, y in zip(a, g))
        for gam in offs:
            src = tuple(x - y for x, y in zip(a, gam))
            if src not in ci:
                continue
            B = A.block(shifted, gam) - A_h.block(a, gam)
            D[r * N0:(r + 1) * N0, ci[src] * N0:(ci[src] + 1) * N0] = d[:, None] * B / d[None, :]
    return float(np.linalg.norm(D, 2))


def scan_directions(rank: int) -> list[tuple[str, np.ndarray]]:
    """Axis directions (both signs) plus the four diagonals in rank 2."""
    dirs = []
    for i in range(rank):
        for s in (1, -1):
            v = np.zeros(rank, dtype=np.int64)
            v[i] = s
            dirs.append((f"{'+' if s > 0 else '-'}e{i + 1}", v))
    if rank == 2:
        for a, b in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            dirs.append((f"({a:+d},{b:+d})", np.array([a, b], dtype=np.int64)))
    return dirs


@dataclass
class LimitFamily:
    operators: list  # periodic BandOperators
    labels: list
    failures: dict  # label -> reason


def limit_family(A: BandOperator, *, tol: float = 1e-8, m_max: int = 2 ** 40) -> LimitFamily:
    """Limit operators along ``m -> m d`` for the scanned directions ``d``."""
    if A.periodic:
        return LimitFamily([A.periodic_part()], ["periodic"], {})
    ops, labels, failures = [], [], {}
    for label, d in scan_directions(A.rank):
        try:
            ops.append(limit_operator_band(A, lambda m, d=d: m * d, tol=tol, m_max=m_max, label=label))
            labels.append(label)
        except Exception as exc:  # recorded per direction
            failures[label] = f"{type(exc).__name__}: {exc}"
    return LimitFamily(ops, labels, failures)
