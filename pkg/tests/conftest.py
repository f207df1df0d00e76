import numpy as np
import pytest

from minlat import ContactGraph
from minlat.cli import random_connected_graph
from minlat.latency import binary_edges


def small_random_graph(rng, n=None, max_bits=18):
    """Connected G(n, 1/2) graph, rates U(0.01, 1), small enough to enumerate."""
    while True:
        g = random_connected_graph(int(rng.integers(4, 7)) if n is None else n, rng)
        if len(binary_edges(g)) <= max_bits:
            return g


@pytest.fixture
def two_node():
    return ContactGraph(2, {(0, 1): 0.5}, destination=0)


@pytest.fixture
def chain():
    # d=0 -- 1 (rate 1) -- 2 (rate 0.5)
    return ContactGraph(3, {(0, 1): 1.0, (1, 2): 0.5}, destination=0)


@pytest.fixture
def star():
    # node 1 meets d fast, node 2 meets d slowly but meets 1 fast
    return ContactGraph(3, {(0, 1): 1.0, (0, 2): 0.1, (1, 2): 1.0}, destination=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
