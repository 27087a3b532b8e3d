"""Shared helpers: small random graphs and labelings with plain integer seeds."""
import numpy as np

from sbmfit.graphs import Graph, Labeling


def random_graph(n: int, p: float, seed: int, force_sparse: bool = False) -> Graph:
    rng = np.random.default_rng(seed)
    a = np.triu(rng.random((n, n)) < p, 1)
    a = a | a.T
    if force_sparse:
        i, j = np.nonzero(np.triu(a, 1))
        return Graph.from_edges(n, np.column_stack([i, j]), force_sparse=True)
    return Graph(a)


def random_labeling(n: int, k: int, seed: int) -> Labeling:
    """Surjective labeling: every block in 1..k occupied."""
    rng = np.random.default_rng(seed)
    z = np.concatenate([np.arange(1, k + 1), rng.integers(1, k + 1, size=n - k)])
    rng.shuffle(z)
    return Labeling(z, k)
