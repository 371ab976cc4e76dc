"""Shared fixtures: tiny hand-checkable graphs and a random-graph helper."""

import numpy as np
import pytest

from pairlab.posgraph import PositivePairGraph, build_graph
from pairlab.synthdata import random_graph


@pytest.fixture
def single_vertex() -> PositivePairGraph:
    """One vertex with a self-loop of mass 1."""
    return build_graph([[0.0]], [[1.0]])


@pytest.fixture
def two_vertex_uniform() -> PositivePairGraph:
    """Connected 2-vertex graph, joint uniform 1/4.

    Hand facts used across tests: marginal (1/2, 1/2), eigenvalues (0, 1),
    pair_discrepancy([1, -1]) = 2.0, expansion of [1, 0] on the whole
    graph = 1.0.
    """
    return build_graph([[0.0], [1.0]], [[0.25, 0.25], [0.25, 0.25]])


@pytest.fixture
def two_components() -> PositivePairGraph:
    """Two isolated self-loop vertices, masses 1/2 each."""
    return build_graph([[0.0], [1.0]], [[0.5, 0.0], [0.0, 0.5]])


@pytest.fixture
def two_components_uneven() -> PositivePairGraph:
    """Two connected 2-vertex blocks with total masses 0.6 and 0.4."""
    verts = [[0.0], [1.0], [2.0], [3.0]]
    joint = np.zeros((4, 4))
    joint[0, 1] = joint[1, 0] = 0.2
    joint[0, 0] = joint[1, 1] = 0.1
    joint[2, 3] = joint[3, 2] = 0.15
    joint[2, 2] = joint[3, 3] = 0.05
    return build_graph(verts, joint)


def small_random_graphs(count: int, seed: int = 0, max_n: int = 20):
    """Deterministic list of (graph, n_components) pairs for property tests."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(4, max_n + 1))
        m = int(rng.integers(1, min(4, n // 2) + 1))
        g = random_graph(n, n_components=m, seed=int(rng.integers(0, 2**31)))
        out.append((g, m))
    return out
