import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vanetsched.graph import DynamicGraph  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_graph(n, edges):
    return DynamicGraph.from_edges(edges, nodes=range(n))


@pytest.fixture
def star4():
    return make_graph(4, [(0, 1), (0, 2), (0, 3)])


@pytest.fixture
def triangle_plus_isolated():
    return make_graph(4, [(0, 1), (1, 2), (0, 2)])


def complete_graph(n):
    return make_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def random_graph(rng: np.random.Generator, n: int, p: float):
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return make_graph(n, edges), edges
