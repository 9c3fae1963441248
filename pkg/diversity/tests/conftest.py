from __future__ import annotations

import itertools

import networkx as nx
import numpy as np
import pytest

from diversity.utils.graph_core import GraphSnapshot, TemporalEdgeList, from_edges


def random_connected_graph(n: int, p: float, seed: int) -> nx.Graph:
    """G(n, p) made connected by a random spanning tree underneath."""
    rng = np.random.default_rng(seed)
    G = nx.gnp_random_graph(n, p, seed=int(rng.integers(2**31)))
    for i in range(1, n):
        G.add_edge(i, int(rng.integers(i)))
    return G


def snapshot_of(G: nx.Graph) -> GraphSnapshot:
    mapping = {v: i for i, v in enumerate(sorted(G.nodes))}
    return from_edges([(mapping[a], mapping[b]) for a, b in G.edges], n=len(mapping))


def random_non_edge(G: nx.Graph, rng: np.random.Generator) -> tuple[int, int]:
    nodes = sorted(G.nodes)
    while True:
        a, b = (int(x) for x in rng.choice(nodes, size=2, replace=False))
        if not G.has_edge(a, b):
            return a, b


@pytest.fixture
def k4():
    return from_edges(itertools.combinations(range(4), 2))


@pytest.fixture
def path4():
    return from_edges([(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def star5():
    return from_edges([(0, i) for i in range(1, 5)])


@pytest.fixture
def triangle():
    return from_edges([(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def k4_plus_k2():
    pairs = list(itertools.combinations(range(4), 2)) + [(4, 5)]
    return from_edges(pairs)


@pytest.fixture
def growing_elist():
    """250 timestamped edges over 60 vertices, connected from early on."""
    rng = np.random.default_rng(7)
    pairs = [(i, int(rng.integers(i))) for i in range(1, 60)]
    while len(pairs) < 250:
        a, b = (int(x) for x in rng.choice(60, size=2, replace=False))
        pairs.append((a, b))
    return TemporalEdgeList.from_pairs(pairs)
