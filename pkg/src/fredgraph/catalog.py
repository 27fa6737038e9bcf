"""A few standard periodic graphs used by tests, demos and the CLI."""
import math

from .graph import GraphSpec, build_graph


def line_graph_spec(length: float = 1.0) -> GraphSpec:
    """The real line as a Z-periodic graph with vertices at multiples of ``length``."""
    return GraphSpec(
        vertices=[("v0", (0.0, 0.0)), ("v1", (length, 0.0))],
        edges=[("e0", "v0", "v1", length)],
        period_rank=1,
        lattice_vectors=[(length, 0.0)],
        identifications={"v1": ("v0", (1,))},
    )


def honeycomb_spec() -> GraphSpec:
    """Hexagonal lattice with unit edges: two vertex orbits, three edge orbits."""
    h = math.sqrt(3) / 2
    return GraphSpec(
        vertices=[
            ("A", (0.0, 0.0)),
            ("B", (1.0, 0.0)),
            ("B1", (-0.5, -h)),
            ("B2", (-0.5, h)),
        ],
        edges=[("e0", "A", "B", 1.0), ("e1", "A", "B1", 1.0), ("e2", "A", "B2", 1.0)],
        period_rank=2,
        lattice_vectors=[(1.5, h), (1.5, -h)],
        identifications={"B1": ("B", (-1, 0)), "B2": ("B", (0, -1))},
    )


def square_lattice_spec() -> GraphSpec:
    """Z^2 grid graph: one vertex orbit of valency 4."""
    return GraphSpec(
        vertices=[("v", (0.0, 0.0)), ("vx", (1.0, 0.0)), ("vy", (0.0, 1.0))],
        edges=[("ex", "v", "vx", 1.0), ("ey", "v", "vy", 1.0)],
        period_rank=2,
        lattice_vectors=[(1.0, 0.0), (0.0, 1.0)],
        identifications={"vx": ("v", (1, 0)), "vy": ("v", (0, 1))},
    )


def line_graph(length: float = 1.0):
    return build_graph(line_graph_spec(length))


def honeycomb():
    return build_graph(honeycomb_spec())


def square_lattice():
    return build_graph(square_lattice_spec())
