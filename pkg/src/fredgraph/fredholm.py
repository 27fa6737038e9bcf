"""Fredholm verdicts for singular integral and convolution operators on periodic graphs.

Every verdict is three-valued. ``NotFredholm`` is only returned with a
witness that does not depend on any tolerance: an exact zero (up to rounding)
or a sign change of a real quantity between neighbouring samples. Positive
margins below a tolerance give ``Inconclusive``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .assemble import (BandOperator, assemble_convolution, assemble_multiplication, assemble_sio, mesh_graph)
from .errors import FredgraphError, WeightOutOfClass
from .floquet import fiber_blocks, fibers, limit_family, torus_grid
from .functions import PCFunction, Weight, check_weight_class
from .graph import MetricGraph
from .sio import KernelModulation, asymptote_lambda, vertex_symbol_matrix

FREDHOLM, NOT_FREDHOLM, INCONCLUSIVE = "Fredholm", "NotFredholm", "Inconclusive"
FAMILY_CAVEAT = "Fredholm relative to the scanned limit family"
ROUND = 64 * np.finfo(float).eps


@dataclass
class FredholmConfig:
    ell_tol: float = 1e-8
    det_tol: float = 1e-8
    inv_tol: float = 1e-6
    tau_grid: int = 128
    panels_per_unit: float = 8
    order: int = 4
    band_radius: int | None = None
    tail_tol: float = 1e-8
    samples_per_edge: int = 65
    window: int = 4  # cells |alpha| <= window scanned for non-periodic coefficients
    r_points: int = 40
    r_min_factor: float = 1e-6
    lam_points: int = 2001
    limit_tol: float = 1e-8

    def thresholds(self) -> dict:
        return asdict(self)


@dataclass
class Condition:
    name: str
    status: str  # "pass" | "fail" | "inconclusive" | "n/a"
    margin: float | None = None
    witness: dict | None = None
    reason: str = ""
    details: list = field(default_factory=list)


@dataclass
class FredholmReport:
    verdict: str
    conditions: dict  # name -> Condition
    thresholds: dict
    witnesses: list
    scanned_limit_family: list
    reason: str = ""
    caveat: str = FAMILY_CAVEAT
    operator: str = ""

    @property
    def is_fredholm(self) -> bool:
        return self.verdict == FREDHOLM

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "FredholmReport":
        d = dict(d)
        d["conditions"] = {k: Condition(**v) for k, v in d["conditions"].items()}
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "FredholmReport":
        return cls.from_dict(json.loads(text))


def _c(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _float(x) -> float | None:
    return None if x is None else float(x)


def _merge(conditions: dict, thresholds: dict, family: list, operator: str) -> FredholmReport:
    witnesses = [dict(c.witness, condition=name) for name, c in conditions.items() if c.witness]
    if witnesses:
        verdict, reason = NOT_FREDHOLM, f"witness in condition '{witnesses[0]['condition']}'"
    elif all(c.status in ("pass", "n/a") for c in conditions.values()):
        verdict, reason = FREDHOLM, "all conditions pass"
    else:
        bad = [f"{n}: {c.reason or c.status}" for n, c in conditions.items() if c.status not in ("pass", "n/a")]
        verdict, reason = INCONCLUSIVE, "; ".join(bad)
    return FredholmReport(verdict, conditions, thresholds, witnesses, family, reason, FAMILY_CAVEAT, operator)


# -- sampling helpers -----------------------------------------------------------------
def _cells(graph: MetricGraph, window: int, periodic: bool):
    return [(0,) * graph.rank] if periodic else graph.offsets_within(window)


def _edge_samples(graph, n):
    for e in graph.edges:
        # open grid: vertices are excluded from the edge condition
        yield e, (np.arange(n) + 0.5) / n * e.length


def _real_sign_change(v, scale):
    """Index ``k`` where a real-valued sample path changes sign, or ``None``.

    Only used when every sample is real, so that the path (a continuous
    function sampled on a connected set) must cross zero between ``k`` and ``k+1``.
    """
    v = np.asarray(v, complex)
    if np.any(np.abs(v.imag) > ROUND * scale):
        return None
    sgn = np.sign(v.real)
    hits = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    return int(hits[0]) if len(hits) else None


# -- condition (a): edges ---------------------------------------------------------
def edge_condition(a: PCFunction, b: PCFunction, phi: KernelModulation, cfg: FredholmConfig) -> Condition:
    """Scan ``a +- b phi(x, 0)`` on open edges; the table holds one row per edge orbit."""
    graph = a.graph
    periodic = a.periodic and b.periodic
    table = {e.id: {"edge": e.id, "min_abs": math.inf} for e in graph.edges}
    for g in _cells(graph, cfg.window, periodic):
        for e, s in _edge_samples(graph, cfg.samples_per_edge):
            av = a.evaluate(e.id, s, g)
            bv = b.evaluate(e.id, s, g)
            p0 = phi.at_zero(e.origin + s * e.direction + graph.shift(g))
            for sign, branch in ((1, "+"), (-1, "-")):
                val = av + sign * bv * p0
                scale = np.maximum(np.abs(av), np.abs(bv * p0))
                zero = np.nonzero(np.abs(val) <= ROUND * scale + 1e-300)[0]
                if len(zero):
                    k = int(zero[0])
                    return Condition("edge", "fail", 0.0, {
                        "kind": "exact zero", "edge": e.id, "s": float(s[k]), "offset": list(g),
                        "branch": branch, "value": _c(val[k])})
                k = _real_sign_change(val, float(scale.max()))
                if k is not None:
                    return Condition("edge", "fail", 0.0, {
                        "kind": "sign change", "edge": e.id, "interval": [float(s[k]), float(s[k + 1])],
                        "offset": list(g), "branch": branch})
                i = int(np.argmin(np.abs(val)))
                row = table[e.id]
                if abs(val[i]) < row["min_abs"]:
                    row.update(min_abs=float(abs(val[i])), s=float(s[i]), offset=list(g), branch=branch)
    details = list(table.values())
    best = min(r["min_abs"] for r in details)
    if best >= cfg.ell_tol:
        return Condition("edge", "pass", best, details=details)
    return Condition("edge", "inconclusive", best, reason=f"min |a +- b phi| = {best:.3g} below {cfg.ell_tol}",
                     details=details)


# -- condition (b): vertices --------------------------------------------------------
def vertex_condition(a, b, phi, w: Weight | None, p: float, cfg: FredholmConfig) -> Condition:
    graph = a.graph
    periodic = a.periodic and b.periodic
    best, details = math.inf, []
    L = asymptote_lambda(1e-6)
    lam = np.linspace(-L, L, cfg.lam_points)
    for vid in graph.vertex_ids:
        eps = graph.default_epsilon(vid)
        r = np.geomspace(eps * cfg.r_min_factor, eps / 2, cfg.r_points)
        for g in _cells(graph, cfg.window, periodic):
            sym = vertex_symbol_matrix(graph, vid, a, b, phi, p, w, epsilon=eps, offset=g)
            D = sym.det(r[:, None], lam[None, :])  # (Nr, Nl)
            scale = float(np.max(np.abs(D))) + 1e-300
            zero = np.argwhere(np.abs(D) <= ROUND * scale)
            if len(zero):
                i, j = zero[0]
                return Condition("vertex", "fail", 0.0, {
                    "kind": "exact zero", "vertex": vid, "offset": list(g), "r": float(r[i]), "lambda": float(lam[j])})
            for i in range(len(r)):
                k = _real_sign_change(D[i], scale)
                if k is not None:
                    return Condition("vertex", "fail", 0.0, {
                        "kind": "sign change", "vertex": vid, "offset": list(g), "r": float(r[i]),
                        "lambda_interval": [float(lam[k]), float(lam[k + 1])]})
            m = float(np.min(np.abs(D)))
            details.append({"vertex": vid, "offset": list(g), "inf_abs_det": m})
            best = min(best, m)
    if best >= cfg.det_tol:
        return Condition("vertex", "pass", best, details=details)
    return Condition("vertex", "inconclusive", best, reason=f"inf |det| = {best:.3g} below {cfg.det_tol}",
                     details=details)


def check_weight(w: Weight | None, p: float, graph: MetricGraph):
    if w is None or w.is_trivial:
        return
    lo, hi = -1.0 / p, 1.0 - 1.0 / p
    for vid in graph.vertex_ids:
        rep = check_weight_class(w, (lo, hi), vertex=vid)
        if not rep.passed:
            raise WeightOutOfClass(f"weight at {vid}: " + "; ".join(rep.reasons))


# -- condition at infinity -----------------------------------------------------------
def _inertia_jump(ev, n, rank):
    """Flat indices of two torus neighbours whose Hermitian fibers differ in inertia."""
    neg = (ev < 0).sum(axis=1).reshape((n,) * rank)
    for ax in range(rank):
        diff = neg != np.roll(neg, -1, axis=ax)
        if diff.any():
            idx = np.array(np.unravel_index(int(np.argmax(diff)), neg.shape))
            nxt = idx.copy()
            nxt[ax] = (nxt[ax] + 1) % n
            return int(np.ravel_multi_index(idx, neg.shape)), int(np.ravel_multi_index(nxt, neg.shape))
    return None


def infinity_condition(A: BandOperator, cfg: FredholmConfig, name: str = "infinity") -> tuple[Condition, list]:
    fam = limit_family(A, tol=cfg.limit_tol)
    scanned = list(fam.labels) + [f"{k} (failed)" for k in fam.failures]
    if not fam.operators:
        return Condition(name, "inconclusive", None, reason="no limit operator could be extracted",
                         details=[fam.failures]), scanned
    best, details = math.inf, []
    for label, op in zip(fam.labels, fam.operators):
        F = fiber_blocks(op, label)
        tau = torus_grid(cfg.tau_grid, F.rank)
        herm = F.is_hermitian()
        mu = fibers(F, tau)
        norm = float(np.abs(mu).max()) + 1e-300
        sv = np.linalg.svd(mu, compute_uv=False)
        smin = sv[:, -1]
        k = int(np.argmin(smin))
        if smin[k] <= ROUND * sv[:, 0].max():
            return Condition(name, "fail", 0.0, {"kind": "exact singular fiber", "direction": label,
                                                  "tau": [_c(t) for t in tau[k]]}), scanned
        if herm:
            j = _inertia_jump(np.linalg.eigvalsh(mu), cfg.tau_grid, F.rank)
            if j is not None:
                return Condition(name, "fail", 0.0, {
                    "kind": "eigenvalue sign change", "direction": label,
                    "tau_interval": [[_c(t) for t in tau[j[0]]], [_c(t) for t in tau[j[1]]]]}), scanned
        details.append({"direction": label, "margin": float(smin[k]), "argmin_tau": [_c(t) for t in tau[k]],
                        "tail_bound": F.tail_bound, "scale": norm})
        best = min(best, float(smin[k]) - F.tail_bound)
    status = "pass" if best >= cfg.inv_tol else "inconclusive"
    reason = "" if status == "pass" else f"fiber margin {best:.3g} below {cfg.inv_tol}"
    if fam.failures:
        status, reason = "inconclusive", f"limit extraction failed along {sorted(fam.failures)}"
    return Condition(name, status, best, reason=reason, details=details), scanned


# -- orchestration -----------------------------------------------------------------
def _as_function(graph, f):
    if isinstance(f, PCFunction):
        return f
    if isinstance(f, str):
        return PCFunction.from_expression(graph, f)
    return PCFunction.constant(graph, f)


def check_fredholm_sio(a, b, phi: KernelModulation | None, w: Weight | None, p: float, graph: MetricGraph,
                       config: FredholmConfig | None = None, *, name: str = "") -> FredholmReport:
    """Verdict for ``A = a I + b S_phi`` on ``L^p_w``: edge, vertex and infinity conditions."""
    cfg = config or FredholmConfig()
    a, b = _as_function(graph, a), _as_function(graph, b)
    phi = phi or KernelModulation.constant(1.0)
    check_weight(w, p, graph)
    conds = {"edge": edge_condition(a, b, phi, cfg)}
    try:
        conds["vertex"] = vertex_condition(a, b, phi, w, p, cfg)
    except FredgraphError as exc:
        conds["vertex"] = Condition("vertex", "inconclusive", reason=f"{type(exc).__name__}: {exc}")
    family: list = []
    try:
        mesh = mesh_graph(graph, cfg.panels_per_unit, cfg.order, w)
        A = assemble_multiplication(a, mesh)
        if not (b.periodic and np.all(b.at_nodes(mesh) == 0)):
            S = assemble_sio(phi, mesh, w, p, cfg.band_radius, tail_tol=cfg.tail_tol)
            A = A + S.left_multiply(b)
        conds["infinity"], family = infinity_condition(A, cfg)
    except FredgraphError as exc:
        conds["infinity"] = Condition("infinity", "inconclusive", reason=f"{type(exc).__name__}: {exc}")
    return _merge(conds, cfg.thresholds(), family, name or f"({a.name}) I + ({b.name}) S")


def check_fredholm_conv(a, b, k, graph: MetricGraph, p: float = 2.0, config: FredholmConfig | None = None, *,
                        envelope=None, name: str = "") -> FredholmReport:
    """Verdict for ``A = a I + b T_k``: ``inf |a| > 0`` and invertible limit operators."""
    cfg = config or FredholmConfig()
    a, b = _as_function(graph, a), _as_function(graph, b)
    # condition (a) is the edge scan with b = 0, i.e. the infimum of |a|
    conds = {"edge": edge_condition(a, PCFunction.constant(graph, 0.0), KernelModulation.constant(0.0), cfg),
             "vertex": Condition("vertex", "n/a", reason="no vertex condition for convolution operators")}
    family: list = []
    try:
        mesh = mesh_graph(graph, cfg.panels_per_unit, cfg.order)
        T = assemble_convolution(k, mesh, cfg.band_radius, tail_tol=cfg.tail_tol, envelope=envelope)
        A = assemble_multiplication(a, mesh) + T.left_multiply(b)
        conds["infinity"], family = infinity_condition(A, cfg)
    except FredgraphError as exc:
        conds["infinity"] = Condition("infinity", "inconclusive", reason=f"{type(exc).__name__}: {exc}")
    return _merge(conds, cfg.thresholds(), family, name or f"({a.name}) I + ({b.name}) T")
