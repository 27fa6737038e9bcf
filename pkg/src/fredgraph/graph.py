"""Z^n-periodic metric graphs embedded in the plane.

Only the compact fundamental cell is stored; the infinite graph is generated
by the translation action of the lattice. Points of the plane are handled as
complex numbers throughout the package.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AntiParallelEdge,
    EpsilonTooLarge,
    GraphError,
    IsolatedVertex,
    LatticeDegenerate,
    LoopEdge,
    MultipleEdge,
    NonPositiveLength,
    RankMismatch,
    SpecFormatError,
    Unreachable,
)

_SNAP = 1e-12


@dataclass
class GraphSpec:
    """Raw description of a periodic graph's fundamental cell.

    ``identifications`` maps a vertex id to ``(representative id, offset)``:
    the vertex is the translate of the representative by ``offset``. Vertices
    that are not identified with anything are the cell vertices.
    """

    vertices: list[tuple[str, tuple[float, float]]]
    edges: list[tuple[str, str, str, float | None]]
    period_rank: int
    lattice_vectors: list[tuple[float, float]]
    cell_vertex_ids: list[str] | None = None
    identifications: dict[str, tuple[str, tuple[int, ...]]] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "GraphSpec":
        try:
            verts = []
            for v in d["vertices"]:
                if isinstance(v, dict):
                    verts.append((str(v["id"]), tuple(map(float, v["pos"]))))
                else:
                    verts.append((str(v[0]), tuple(map(float, v[1]))))
            edges = []
            for e in d["edges"]:
                if isinstance(e, dict):
                    edges.append((str(e["id"]), str(e["start"]), str(e["end"]), e.get("length")))
                else:
                    edges.append((str(e[0]), str(e[1]), str(e[2]), e[3] if len(e) > 3 else None))
            idents = {}
            for item in d.get("identifications", []):
                if isinstance(item, dict):
                    idents[str(item["vertex"])] = (str(item["rep"]), tuple(int(g) for g in item["offset"]))
                else:
                    idents[str(item[0])] = (str(item[1]), tuple(int(g) for g in item[2]))
            return cls(
                vertices=verts,
                edges=edges,
                period_rank=int(d["period_rank"]),
                lattice_vectors=[tuple(map(float, v)) for v in d["lattice_vectors"]],
                cell_vertex_ids=d.get("cell_vertex_ids"),
                identifications=idents,
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise SpecFormatError(f"bad graph spec: {exc!r}") from exc

    def to_dict(self) -> dict:
        return {
            "vertices": [{"id": i, "pos": list(p)} for i, p in self.vertices],
            "edges": [
                {"id": i, "start": s, "end": t, **({} if l is None else {"length": l})}
                for i, s, t, l in self.edges
            ],
            "period_rank": self.period_rank,
            "lattice_vectors": [list(v) for v in self.lattice_vectors],
            **({} if self.cell_vertex_ids is None else {"cell_vertex_ids": list(self.cell_vertex_ids)}),
            "identifications": [
                {"vertex": v, "rep": r, "offset": list(g)} for v, (r, g) in self.identifications.items()
            ],
        }


@dataclass(frozen=True)
class Edge:
    id: str
    start: int
    end: int
    end_offset: tuple[int, ...]
    length: float
    origin: complex
    direction: complex  # unit vector start -> end


@dataclass(frozen=True)
class GraphPoint:
    """A point ``x`` on edge ``edge`` translated by ``offset``.

    Equality goes through ``key``, which identifies endpoints with their
    vertex, so ``(e, l(e), g)`` and ``(f, 0, g')`` compare equal whenever they
    are the same vertex of the infinite graph. Build points with
    :meth:`MetricGraph.point`.
    """

    edge: str = field(compare=False)
    x: float = field(compare=False)
    offset: tuple[int, ...] = field(compare=False)
    key: tuple = field(repr=False)

    @property
    def is_vertex(self) -> bool:
        return self.key[0] == "v"


@dataclass(frozen=True)
class VertexStar:
    vertex: str
    epsilon: float
    angles: np.ndarray  # sorted in [0, 2pi)
    signs: np.ndarray  # +1 if the vertex starts the edge, -1 if it ends it
    rays: list[tuple[str, str]]  # (edge id, "start" | "end") in angle order
    position: complex

    @property
    def valency(self) -> int:
        return len(self.angles)


def _shift_key(key: tuple, g: tuple[int, ...]) -> tuple:
    off = tuple(a + b for a, b in zip(key[-1], g))
    return key[:-1] + (off,)


def act(x: GraphPoint, g: Sequence[int]) -> GraphPoint:
    """Translate ``x`` by the group element ``g``."""
    g = tuple(int(v) for v in g)
    if len(g) != len(x.offset):
        raise RankMismatch(f"group element of rank {len(g)} acting on rank-{len(x.offset)} graph")
    off = tuple(a + b for a, b in zip(x.offset, g))
    return GraphPoint(x.edge, x.x, off, _shift_key(x.key, g))


class MetricGraph:
    """Immutable Z^n-periodic metric graph; build with :func:`build_graph`."""

    def __init__(self, vertex_ids, positions, edges, lattice, spec=None):
        self.vertex_ids: list[str] = list(vertex_ids)
        self.positions = np.asarray(positions, dtype=complex)
        self.edges: list[Edge] = list(edges)
        self.lattice = np.asarray(lattice, dtype=complex)
        self.rank = len(self.lattice)
        self.spec = spec
        self._vindex = {v: i for i, v in enumerate(self.vertex_ids)}
        self._eindex = {e.id: i for i, e in enumerate(self.edges)}
        self.incident: list[list[tuple[int, str]]] = [[] for _ in self.vertex_ids]
        for k, e in enumerate(self.edges):
            self.incident[e.start].append((k, "start"))
            self.incident[e.end].append((k, "end"))
        self.valency = np.array([len(inc) for inc in self.incident])
        ends = [e.origin for e in self.edges] + [e.origin + e.length * e.direction for e in self.edges]
        ends = np.array(ends) if ends else np.zeros(1, complex)
        self.cell_diameter = float(np.max(np.abs(ends[:, None] - ends[None, :])))

    # -- basic lookups -----------------------------------------------------
    def vertex_index(self, v) -> int:
        if isinstance(v, (int, np.integer)):
            return int(v)
        try:
            return self._vindex[v]
        except KeyError:
            raise GraphError(f"unknown vertex {v!r}") from None

    def edge_index(self, e) -> int:
        if isinstance(e, (int, np.integer)):
            return int(e)
        try:
            return self._eindex[e]
        except KeyError:
            raise GraphError(f"unknown edge {e!r}") from None

    def edge(self, e) -> Edge:
        return self.edges[self.edge_index(e)]

    @property
    def total_length(self) -> float:
        return float(sum(e.length for e in self.edges))

    def shift(self, g) -> complex:
        """Planar translation vector of the group element ``g``."""
        g = np.asarray(g, dtype=float)
        return complex(g @ self.lattice) if g.ndim == 1 else g @ self.lattice

    def vertex_position(self, v, offset=None) -> complex:
        p = self.positions[self.vertex_index(v)]
        return p if offset is None else p + self.shift(offset)

    # -- points ------------------------------------------------------------
    def point(self, edge, x: float, offset=None) -> GraphPoint:
        k = self.edge_index(edge)
        e = self.edges[k]
        g = tuple(int(v) for v in (offset if offset is not None else (0,) * self.rank))
        if len(g) != self.rank:
            raise RankMismatch(f"offset {g} for rank-{self.rank} graph")
        x = float(x)
        if x < -_SNAP * e.length or x > e.length * (1 + _SNAP):
            raise GraphError(f"coordinate {x} outside [0, {e.length}] on edge {e.id}")
        if abs(x) <= _SNAP * e.length:
            key = ("v", e.start, g)
            x = 0.0
        elif abs(x - e.length) <= _SNAP * e.length:
            key = ("v", e.end, tuple(a + b for a, b in zip(g, e.end_offset)))
            x = e.length
        else:
            key = ("e", k, x, g)
        return GraphPoint(e.id, x, g, key)

    def vertex_point(self, v, offset=None) -> GraphPoint:
        vi = self.vertex_index(v)
        g = tuple(offset) if offset is not None else (0,) * self.rank
        k, side = self.incident[vi][0]
        e = self.edges[k]
        if side == "start":
            return self.point(k, 0.0, g)
        return self.point(k, e.length, tuple(a - b for a, b in zip(g, e.end_offset)))

    def position(self, x: GraphPoint) -> complex:
        e = self.edge(x.edge)
        return e.origin + x.x * e.direction + self.shift(x.offset)

    def sample_points(self, per_edge: int = 5, offset=None, include_vertices: bool = True) -> list[GraphPoint]:
        pts = []
        for e in self.edges:
            if include_vertices:
                xs = np.linspace(0.0, e.length, per_edge)
            else:
                xs = (np.arange(per_edge) + 0.5) / per_edge * e.length
            pts.extend(self.point(e.id, x, offset) for x in xs)
        return pts

    # -- metric ------------------------------------------------------------
    def _neighbors(self, node):
        v, g = node
        for k, side in self.incident[v]:
            e = self.edges[k]
            if side == "start":
                yield (e.end, tuple(a + b for a, b in zip(g, e.end_offset))), e.length
            else:
                yield (e.start, tuple(a - b for a, b in zip(g, e.end_offset))), e.length

    def _anchors(self, x: GraphPoint) -> dict:
        if x.is_vertex:
            return {(x.key[1], x.key[2]): 0.0}
        e = self.edge(x.edge)
        end = (e.end, tuple(a + b for a, b in zip(x.offset, e.end_offset)))
        start = (e.start, x.offset)
        out = {start: x.x}
        out[end] = min(out.get(end, math.inf), e.length - x.x)
        return out

    def distance(self, x: GraphPoint, y: GraphPoint, pad: int | None = None) -> float:
        """Shortest-path distance between two points of the infinite graph.

        Dijkstra over lifted vertices, restricted to cells within
        ``|offset(x) - offset(y)|_inf + pad`` of either endpoint.
        """
        if x == y:
            return 0.0
        best = math.inf
        if not x.is_vertex and not y.is_vertex and x.key[1] == y.key[1] and x.offset == y.offset:
            best = abs(x.x - y.x)
        src = self._anchors(x)
        dst = self._anchors(y)
        if pad is None:
            pad = len(self.vertex_ids) + len(self.edges) + 1
        gx, gy = np.array(x.offset), np.array(y.offset)
        bound = int(np.max(np.abs(gx - gy))) + pad if self.rank else pad

        def inside(g):
            ga = np.array(g)
            return min(np.max(np.abs(ga - gx)), np.max(np.abs(ga - gy))) <= bound

        dist = dict(src)
        heap = [(d, n) for n, d in src.items()]
        heapq.heapify(heap)
        reached = False
        while heap:
            d, node = heapq.heappop(heap)
            if d > dist.get(node, math.inf) or d >= best:
                continue
            if node in dst:
                reached = True
                best = min(best, d + dst[node])
            for nb, w in self._neighbors(node):
                nd = d + w
                if nd < dist.get(nb, math.inf) and inside(nb[1]):
                    dist[nb] = nd
                    heapq.heappush(heap, (nd, nb))
        if not math.isfinite(best) and not reached:
            raise Unreachable(f"no path between {x} and {y}; is the graph connected?")
        return float(best)

    # -- tiles -------------------------------------------------------------
    def tile_of(self, x: GraphPoint) -> tuple[int, ...]:
        """Index g of the tile Gamma_g containing ``x``.

        Interior points belong to their stored offset; a vertex belongs to the
        lexicographically smallest offset among its edge representations.
        """
        if not x.is_vertex:
            return x.offset
        v, h = x.key[1], x.key[2]
        reps = []
        for k, side in self.incident[v]:
            if side == "start":
                reps.append(h)
            else:
                reps.append(tuple(a - b for a, b in zip(h, self.edges[k].end_offset)))
        return min(reps)

    def tile_partition(self, points: Iterable[GraphPoint]) -> dict[GraphPoint, tuple[int, ...]]:
        return {p: self.tile_of(p) for p in points}

    # -- local geometry at vertices ---------------------------------------
    def vertex_star(self, v, epsilon: float) -> VertexStar:
        vi = self.vertex_index(v)
        inc = self.incident[vi]
        shortest = min(self.edges[k].length for k, _ in inc)
        if not epsilon > 0 or epsilon >= 0.5 * shortest:
            raise EpsilonTooLarge(
                f"ray length {epsilon} must lie in (0, {0.5 * shortest}) at vertex {self.vertex_ids[vi]}"
            )
        angles, signs, rays = [], [], []
        for k, side in inc:
            e = self.edges[k]
            d = e.direction if side == "start" else -e.direction
            angles.append(math.atan2(d.imag, d.real) % (2 * math.pi))
            signs.append(1 if side == "start" else -1)
            rays.append((e.id, side))
        order = np.argsort(angles, kind="stable")
        angles = np.array(angles)[order]
        if np.any(np.diff(angles) <= 1e-12):
            raise GraphError(f"overlapping edges at vertex {self.vertex_ids[vi]}")
        return VertexStar(
            vertex=self.vertex_ids[vi],
            epsilon=float(epsilon),
            angles=angles,
            signs=np.array(signs)[order],
            rays=[rays[i] for i in order],
            position=complex(self.positions[vi]),
        )

    def default_epsilon(self, v, fraction: float = 0.25) -> float:
        vi = self.vertex_index(v)
        return fraction * min(self.edges[k].length for k, _ in self.incident[vi])

    def offsets_within(self, radius: int) -> list[tuple[int, ...]]:
        rng = range(-radius, radius + 1)
        return [tuple(g) for g in itertools.product(rng, repeat=self.rank)]


def build_graph(spec: GraphSpec | dict) -> MetricGraph:
    """Validate a :class:`GraphSpec` and build the periodic graph."""
    if isinstance(spec, dict):
        spec = GraphSpec.from_dict(spec)
    n = spec.period_rank
    if n not in (1, 2):
        raise GraphError(f"period_rank must be 1 or 2, got {n}")
    if len(spec.lattice_vectors) != n:
        raise LatticeDegenerate(f"need {n} lattice vectors, got {len(spec.lattice_vectors)}")
    L = np.array(spec.lattice_vectors, dtype=float).reshape(n, 2)
    if np.linalg.matrix_rank(L, tol=1e-12 * max(1.0, np.abs(L).max())) < n:
        raise LatticeDegenerate("lattice vectors are linearly dependent")
    lattice = L[:, 0] + 1j * L[:, 1]

    pos = {}
    for vid, p in spec.vertices:
        if vid in pos:
            raise GraphError(f"duplicate vertex id {vid!r}")
        pos[vid] = complex(p[0], p[1])
    cell = list(spec.cell_vertex_ids) if spec.cell_vertex_ids else [v for v in pos if v not in spec.identifications]
    cindex = {v: i for i, v in enumerate(cell)}

    def resolve(vid):
        if vid in cindex:
            return cindex[vid], (0,) * n
        if vid not in spec.identifications:
            raise GraphError(f"vertex {vid!r} is neither a cell vertex nor identified")
        rep, g = spec.identifications[vid]
        if rep not in cindex or len(g) != n:
            raise GraphError(f"bad identification for {vid!r}")
        expected = pos[rep] + complex(np.asarray(g, float) @ lattice)
        if vid in pos and abs(pos[vid] - expected) > 1e-9 * max(1.0, abs(expected)):
            raise GraphError(f"vertex {vid!r} is not at the translate of {rep!r} by {g}")
        return cindex[rep], tuple(g)

    edges, seen = [], {}
    for eid, s_id, t_id, length in spec.edges:
        s, gs = resolve(s_id)
        t, gt = resolve(t_id)
        d = tuple(b - a for a, b in zip(gs, gt))
        if s == t and not any(d):
            raise LoopEdge(f"edge {eid!r} is a loop at {s_id!r}")
        if (s, t, d) in seen:
            raise MultipleEdge(f"edges {seen[(s, t, d)]!r} and {eid!r} join the same vertices")
        if (t, s, tuple(-x for x in d)) in seen:
            raise AntiParallelEdge(f"edges {seen[(t, s, tuple(-x for x in d))]!r} and {eid!r} are anti-parallel")
        seen[(s, t, d)] = eid
        p0 = pos[cell[s]] + complex(np.asarray(gs, float) @ lattice)
        p1 = pos[cell[t]] + complex(np.asarray(gt, float) @ lattice)
        euclid = abs(p1 - p0)
        if length is not None and float(length) <= 0 or euclid <= 0:
            raise NonPositiveLength(f"edge {eid!r} has non-positive length")
        if length is not None and abs(float(length) - euclid) > 1e-9 * max(1.0, euclid):
            raise GraphError(f"edge {eid!r}: length {length} differs from embedded length {euclid}")
        # store every edge orbit with its start in the home cell
        edges.append(Edge(eid, s, t, d, euclid, pos[cell[s]], (p1 - p0) / euclid))

    graph = MetricGraph(cell, [pos[v] for v in cell], edges, lattice, spec=spec)
    for v, val in zip(cell, graph.valency):
        if val == 0:
            raise IsolatedVertex(f"vertex {v!r} has no incident edges")
    return graph
