from pathlib import Path

import numpy as np
import pytest

from fredgraph.catalog import honeycomb, line_graph, square_lattice

SPECS = Path(__file__).resolve().parents[1] / "demos" / "specs"


@pytest.fixture(scope="session")
def line():
    return line_graph()


@pytest.fixture(scope="session")
def hexa():
    return honeycomb()


@pytest.fixture(scope="session")
def square():
    return square_lattice()


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


def gaussian_kernel(z):
    return np.exp(-np.abs(z) ** 2)


def pytest_terminal_summary(terminalreporter):
    lines = getattr(__import__("sys").modules.get("test_acceptance"), "LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
