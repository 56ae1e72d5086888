import numpy as np
import pytest

from gmspectra import from_edges


def random_graph(rng, n, density):
    """Random directed graph from an n*n Bernoulli adjacency draw."""
    adj = rng.random((n, n)) < density
    src, dst = np.nonzero(adj)
    return from_edges(src, dst, n)


def random_probability(rng, n):
    v = rng.random(n)
    return v / v.sum()


def dense_pagerank(dense_google):
    """Dominant right eigenvector of a dense Google matrix, sum 1."""
    vals, vecs = np.linalg.eig(dense_google)
    lead = np.argmin(np.abs(vals - 1.0))
    vec = np.real(vecs[:, lead])
    vec = np.abs(vec)
    return vec / vec.sum()


@pytest.fixture
def rng():
    return np.random.default_rng(20120714)
