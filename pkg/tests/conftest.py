import numpy as np
import pytest

from sling import Graph


def random_graph(rng, n, m):
    """Random directed graph with ``n`` nodes and up to ``m`` distinct edges (self-loops allowed)."""
    return Graph(n, rng.integers(0, n, m), rng.integers(0, n, m))


@pytest.fixture
def cycle4():
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


@pytest.fixture
def two_cycle():
    return Graph.from_edges(2, [(0, 1), (1, 0)])


@pytest.fixture
def shared_parent():
    # node 0 is the only in-neighbour of both 1 and 2
    return Graph.from_edges(3, [(0, 1), (0, 2)])


# five-node graph with SimRank values (c = 0.6) frozen from a plain-Python
# fixed-point iteration of the definition (200 rounds)
SMALL5_EDGES = [(0, 1), (0, 2), (1, 2), (2, 0), (3, 0), (3, 1), (2, 4), (4, 3), (1, 4)]
SMALL5_SIMRANK = np.array([
    [1.0, 0.18588542114763087, 0.06753735582155508, 0.09098146471700694, 0.20586713080761732],
    [0.18588542114763087, 1.0, 0.20459962227866646, 0.08713059599313877, 0.06319060401119528],
    [0.06753735582155508, 0.20459962227866646, 1.0, 0.08071732044564377, 0.21870335988717787],
    [0.09098146471700694, 0.08713059599313877, 0.08071732044564377, 1.0, 0.08456818916951193],
    [0.20586713080761732, 0.06319060401119528, 0.21870335988717787, 0.08456818916951193, 1.0],
])


@pytest.fixture
def small5():
    return Graph.from_edges(5, SMALL5_EDGES)


# acceptance results, printed as one line per criterion at the end of the session
ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
