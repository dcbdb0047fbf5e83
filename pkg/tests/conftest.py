import numpy as np
import pytest

from lapslice import Graph


@pytest.fixture
def path3():
    """Path graph 0 - 1 - 2 with labels 0, 0, 1."""
    return Graph(num_nodes=3, edges=[(0, 1), (1, 2)], labels=[0, 0, 1])


@pytest.fixture
def two_triangles():
    """Disjoint union of two triangles."""
    return Graph(
        num_nodes=6,
        edges=[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)],
        labels=[0, 0, 0, 1, 1, 1],
    )


@pytest.fixture
def four_cycle():
    """4-cycle labeled 0, 0, 1, 1 in order."""
    return Graph(
        num_nodes=4, edges=[(0, 1), (1, 2), (2, 3), (3, 0)], labels=[0, 0, 1, 1]
    )


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        print(f"\n[acceptance] {name}: {report.outcome.upper()}")
