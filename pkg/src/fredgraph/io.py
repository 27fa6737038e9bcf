"""Operator specs (JSON), CSV tables and the binary symbol-grid and band formats."""
from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assemble import BandOperator, assemble_convolution, assemble_multiplication, assemble_sio, mesh_graph
from .catalog import honeycomb_spec, line_graph_spec, square_lattice_spec
from .errors import SpecFormatError
from .expr import compile_expr
from .functions import PCFunction, Weight
from .graph import GraphSpec, MetricGraph, build_graph
from .sio import KernelModulation

CATALOG = {"line": line_graph_spec, "honeycomb": honeycomb_spec, "square": square_lattice_spec}
KINDS = ("multiplication", "sio", "convolution", "sum")
KERNEL_VARS = ("z1", "z2", "z", "absz")


# -- graphs -------------------------------------------------------------------------
def load_graph_spec(source, base: Path | None = None) -> GraphSpec:
    """Graph from a catalog name, a JSON file path or an inline dict."""
    if isinstance(source, GraphSpec):
        return source
    if isinstance(source, dict):
        if "catalog" in source:
            return load_graph_spec(source["catalog"], base)
        return GraphSpec.from_dict(source)
    if isinstance(source, (str, Path)):
        if str(source) in CATALOG:
            return CATALOG[str(source)]()
        path = Path(source)
        if base is not None and not path.is_absolute():
            path = base / path
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise SpecFormatError(f"graph file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise SpecFormatError(f"graph file {path} is not valid JSON: {exc}") from exc
        return GraphSpec.from_dict(data)
    raise SpecFormatError(f"cannot read a graph from {type(source).__name__}")


def load_graph(source, base: Path | None = None) -> MetricGraph:
    return build_graph(load_graph_spec(source, base))


# -- operators -------------------------------------------------------------------------
def _kernel(source) -> callable:
    ex = compile_expr(source, KERNEL_VARS)

    def k(z):
        z = np.asarray(z, complex)
        return np.asarray(ex(z1=z.real, z2=z.imag, z=z, absz=np.abs(z)), complex)

    k.__name__ = f"k[{source}]"
    return k


def _weight(d) -> Weight | None:
    if d is None:
        return None
    if isinstance(d, (int, float)):
        return Weight.power(float(d))
    if isinstance(d, str):
        return Weight.from_expression(d)
    if isinstance(d, dict):
        if "power" in d:
            return Weight.power(float(d["power"]))
        if "expression" in d:
            return Weight.from_expression(d["expression"])
    raise SpecFormatError(f"bad weight description {d!r}")


@dataclass
class OperatorSpec:
    """Parsed operator description; ``raw`` keeps the JSON for provenance."""

    kind: str
    graph: MetricGraph
    a: PCFunction | None = None
    b: PCFunction | None = None
    phi: KernelModulation | None = None
    kernel: callable = None
    weight: Weight | None = None
    p: float = 2.0
    panels_per_unit: float = 8
    order: int = 4
    band_radius: int | None = None
    tail_tol: float = 1e-8
    terms: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    def mesh(self):
        return mesh_graph(self.graph, self.panels_per_unit, self.order, self.weight)

    def band(self, mesh=None) -> BandOperator:
        """Assemble ``a I + b K`` (or the sum of the terms) on a common mesh."""
        mesh = mesh or self.mesh()
        if self.kind == "sum":
            out = None
            for t in self.terms:
                op = t.band(mesh)
                out = op if out is None else out + op
            return out
        A = assemble_multiplication(self.a, mesh)
        if self.kind == "multiplication":
            return A
        if self.kind == "sio":
            K = assemble_sio(self.phi, mesh, self.weight, self.p, self.band_radius, tail_tol=self.tail_tol)
        else:
            K = assemble_convolution(self.kernel, mesh, self.band_radius, tail_tol=self.tail_tol)
        return A + K.left_multiply(self.b)


def parse_operator(d: dict, base: Path | None = None, graph: MetricGraph | None = None) -> OperatorSpec:
    if not isinstance(d, dict):
        raise SpecFormatError("operator spec must be a JSON object")
    kind = d.get("kind")
    if kind not in KINDS:
        raise SpecFormatError(f"'kind' must be one of {KINDS}, got {kind!r}")
    try:
        if graph is None:
            graph = load_graph(d.get("graph", "line"), base)
        mesh = d.get("mesh", {})
        band = d.get("band", {})
        common = dict(kind=kind, graph=graph, weight=_weight(d.get("weight")), p=float(d.get("p", 2.0)),
                      panels_per_unit=float(mesh.get("panels_per_unit", 8)), order=int(mesh.get("order", 4)),
                      band_radius=band.get("radius"), tail_tol=float(band.get("tail_tol", 1e-8)), raw=d)
        if kind == "sum":
            terms = [parse_operator(t, base, graph) for t in d["terms"]]
            return OperatorSpec(terms=terms, **common)

        def coeff(key, default):
            v = d.get(key, default)
            return PCFunction.from_expression(graph, v if isinstance(v, (str, dict)) else repr(v))

        spec = OperatorSpec(a=coeff("a", 1 if kind == "multiplication" else 0), b=coeff("b", 1), **common)
        if kind == "sio":
            phi = d.get("phi", 1)
            spec.phi = KernelModulation.from_expression(phi if isinstance(phi, str) else repr(phi))
        elif kind == "convolution":
            if "kernel" not in d:
                raise SpecFormatError("convolution spec needs a 'kernel' expression")
            spec.kernel = _kernel(d["kernel"])
        return spec
    except SpecFormatError:
        raise
    except (KeyError, TypeError, ValueError, SyntaxError) as exc:
        raise SpecFormatError(f"bad operator spec: {exc!r}") from exc


def load_operator(path) -> OperatorSpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise SpecFormatError(f"operator file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"operator file {path} is not valid JSON: {exc}") from exc
    return parse_operator(data, path.parent)


# -- CSV ------------------------------------------------------------------------------
def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float).reshape(len(rows) - 1, len(rows[0]))


def write_spectrum_csv(path, est) -> None:
    """Columns ``re, im, tau_index`` for a :class:`SpectrumEstimate`."""
    pts = np.asarray(est.points)
    write_csv(path, ["re", "im", "tau_index"], zip(pts.real, pts.imag, np.asarray(est.tau_index, int)))


def write_margin_csv(path, tau, margins) -> None:
    tau = np.asarray(tau)
    header = [f"arg_tau{i + 1}" for i in range(tau.shape[1])] + ["margin"]
    write_csv(path, header, np.column_stack([np.angle(tau), np.asarray(margins)]))


# -- binary symbol grids ------------------------------------------------------------------
SYMBOL_MAGIC = "# fredgraph symbol grid v1"


def write_symbol_grid(path, r, lam, values, provenance: str = "") -> None:
    """Text header lines, a blank line, then ``n, Nr, Nl`` (int32), the grids (float64)
    and the ``(Nr, Nl, n, n)`` entries as row-major complex64."""
    r = np.asarray(r, float)
    lam = np.asarray(lam, float)
    values = np.asarray(values)
    if values.ndim == 2:
        values = values[:, :, None, None]
    n = values.shape[-1]
    if values.shape != (len(r), len(lam), n, n):
        raise ValueError(f"values shape {values.shape} does not match grids ({len(r)}, {len(lam)}, n, n)")
    head = SYMBOL_MAGIC + "\n" + "".join(f"# {line}\n" for line in provenance.splitlines()) + "\n"
    with open(path, "wb") as fh:
        fh.write(head.encode())
        fh.write(struct.pack("<3i", n, len(r), len(lam)))
        fh.write(r.astype("<f8").tobytes())
        fh.write(lam.astype("<f8").tobytes())
        fh.write(values.astype("<c8").tobytes(order="C"))


def read_symbol_grid(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, str]:
    data = Path(path).read_bytes()
    end = data.find(b"\n\n")
    if not data.startswith(SYMBOL_MAGIC.encode()) or end < 0:
        raise SpecFormatError(f"{path} is not a symbol grid file")
    lines = data[:end].decode().splitlines()[1:]
    provenance = "\n".join(line[2:] for line in lines)
    pos = end + 2
    n, nr, nl = struct.unpack_from("<3i", data, pos)
    pos += 12
    r = np.frombuffer(data, "<f8", nr, pos)
    pos += 8 * nr
    lam = np.frombuffer(data, "<f8", nl, pos)
    pos += 8 * nl
    vals = np.frombuffer(data, "<c8", nr * nl * n * n, pos).reshape(nr, nl, n, n)
    return r.copy(), lam.copy(), vals.copy(), provenance


# -- binary band export --------------------------------------------------------------------
def write_band(path, A: BandOperator, alpha=None) -> None:
    """One JSON index line, then the blocks at cell ``alpha`` as complex128 in index order."""
    alpha = (0,) * A.rank if alpha is None else tuple(alpha)
    blocks = A.blocks(alpha)
    offsets = sorted(blocks)
    index = {"format": "fredgraph band v1", "N0": A.N0, "rank": A.rank, "alpha": list(alpha),
             "offsets": [list(g) for g in offsets], "tail_bound": A.tail_bound, "kind": A.kind, "dtype": "<c16"}
    with open(path, "wb") as fh:
        fh.write((json.dumps(index) + "\n").encode())
        for g in offsets:
            fh.write(np.ascontiguousarray(blocks[g], dtype="<c16").tobytes())


def read_band(path) -> tuple[dict, dict]:
    data = Path(path).read_bytes()
    nl = data.index(b"\n")
    index = json.loads(data[:nl])
    n0 = index["N0"]
    size = 16 * n0 * n0
    blocks = {}
    for k, g in enumerate(index["offsets"]):
        start = nl + 1 + k * size
        blocks[tuple(g)] = np.frombuffer(data[start:start + size], "<c16").reshape(n0, n0).copy()
    return index, blocks
