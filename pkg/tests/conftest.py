import itertools
import random

import pytest
from hypothesis import strategies as st

from firmml import MultilayerGraph


def random_graph(seed, n=10, layers=3, p=0.4):
    """Erdos-Renyi layers over a shared node set; ids equal labels 0..n-1."""
    r = random.Random(seed) if not isinstance(seed, random.Random) else seed
    edges = [(l, u, v) for l in range(layers) for u, v in itertools.combinations(range(n), 2) if r.random() < p]
    return MultilayerGraph.from_edges(edges, nodes=range(n), layers=range(layers))


def clique_layers(k, layers, offset=0):
    """Identical k-cliques on nodes offset..offset+k-1 in every layer."""
    return [(l, u + offset, v + offset) for l in range(layers) for u, v in itertools.combinations(range(k), 2)]


@st.composite
def small_graphs(draw, max_nodes=9, max_layers=3):
    n = draw(st.integers(2, max_nodes))
    L = draw(st.integers(1, max_layers))
    pairs = list(itertools.combinations(range(n), 2))
    edges = draw(st.lists(st.tuples(st.integers(0, L - 1), st.sampled_from(pairs)), max_size=3 * len(pairs)))
    return MultilayerGraph.from_edges([(l, u, v) for l, (u, v) in edges], nodes=range(n), layers=range(L))


@pytest.fixture
def triangle():
    return MultilayerGraph.from_edges([(0, "a", "b"), (0, "b", "c"), (0, "a", "c")])


@pytest.fixture
def two_layer_k5():
    return MultilayerGraph.from_edges(clique_layers(5, 2))
