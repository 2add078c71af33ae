import numpy as np
import pytest

from resetwalk import (
    RelocationVector,
    complete_graph,
    load_edge_list,
    transition_matrix,
    watts_strogatz,
)


@pytest.fixture(scope="session")
def triangle():
    return complete_graph(3)


@pytest.fixture(scope="session")
def triangle_walk(triangle):
    return transition_matrix(triangle)


@pytest.fixture(scope="session")
def small_ws():
    """Fixed small-world realization shared across the suite."""
    return watts_strogatz(20, 2, 0.5, seed=1234)


@pytest.fixture(scope="session")
def small_ws_walk(small_ws):
    return transition_matrix(small_ws)


@pytest.fixture(scope="session")
def seven_node():
    """Hand-picked 7-node graph with an odd cycle and a pendant-ish tail."""
    text = "0 1\n1 2\n2 0\n2 3\n3 4\n4 5\n5 6\n6 3\n1 4\n"
    return load_edge_list(text)


@pytest.fixture
def uniform_rel():
    def make(n, nodes=None):
        return RelocationVector.uniform(n, nodes)

    return make


def total_variation(p, q):
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))
