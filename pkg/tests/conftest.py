import numpy as np
import pytest

from scflink.graph import from_edge_array


def graph_from_pairs(pairs):
    src = np.array([a for a, _ in pairs], dtype=np.int64)
    dst = np.array([b for _, b in pairs], dtype=np.int64)
    return from_edge_array(src, dst)


def random_graph(rng, max_v=50):
    """Small random directed graph for oracle comparisons."""
    v = int(rng.integers(4, max_v + 1))
    density = rng.uniform(0.05, 0.3)
    e = max(1, int(density * v * (v - 1)))
    codes = rng.choice(v * (v - 1), size=min(e, v * (v - 1)), replace=False)
    src = codes // (v - 1)
    rem = codes % (v - 1)
    dst = np.where(rem >= src, rem + 1, rem)
    return from_edge_array(src, dst)


@pytest.fixture
def two_triangles():
    return graph_from_pairs([(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


@pytest.fixture
def k4():
    return graph_from_pairs([(i, j) for i in range(4) for j in range(4) if i < j])
