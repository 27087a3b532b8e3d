"""Core graph/labeling types and stochastic blockmodel sampling.

Graphs are undirected and simple: symmetric 0/1 adjacency, zero diagonal.
Block labels are 1-based (values in {1..k}); node indices are 0-based.
Edge-list files are 1-based in both, see `sbmfit.io`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .rng import derive_rng

# Above this node count adjacency switches from a dense boolean matrix to CSR.
# The two representations obey identical semantics.
DENSE_LIMIT = 4096


class Graph:
    """Undirected simple graph backed by a dense or sparse adjacency matrix."""

    def __init__(self, adjacency, *, validate: bool = True):
        if sp.issparse(adjacency):
            adj = sp.csr_array(adjacency)
            if adj.dtype != np.int8:
                adj = adj.astype(np.int8)
            self._sparse = True
        else:
            adj = np.asarray(adjacency)
            if adj.dtype != np.bool_:
                adj = adj.astype(bool)
            self._sparse = False
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        if validate:
            self._validate(adj)
        if not self._sparse:
            adj = adj.copy()
            adj.setflags(write=False)
        self._adj = adj
        self._n = adj.shape[0]
        self._float_cache: np.ndarray | None = None

    @staticmethod
    def _validate(adj) -> None:
        if sp.issparse(adj):
            if (adj != adj.T).nnz != 0:
                raise ValueError("adjacency must be symmetric")
            if adj.diagonal().any():
                raise ValueError("adjacency diagonal must be zero")
            bad = (adj.data != 0) & (adj.data != 1)
            if bad.any():
                raise ValueError("adjacency entries must be 0 or 1")
        else:
            if not np.array_equal(adj, adj.T):
                raise ValueError("adjacency must be symmetric")
            if adj.diagonal().any():
                raise ValueError("adjacency diagonal must be zero")

    @classmethod
    def from_edges(cls, n: int, edges, *, force_sparse: bool = False) -> "Graph":
        """Build a graph from 0-based (i, j) pairs; order and orientation are free."""
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise ValueError("edge endpoint out of range")
            if (edges[:, 0] == edges[:, 1]).any():
                raise ValueError("self-loops are not allowed")
        if force_sparse or n > DENSE_LIMIT:
            i = np.concatenate([edges[:, 0], edges[:, 1]])
            j = np.concatenate([edges[:, 1], edges[:, 0]])
            adj = sp.coo_array((np.ones(i.size, dtype=np.int8), (i, j)), shape=(n, n))
            adj = sp.csr_array(adj)
            adj.data[:] = np.minimum(adj.data, 1)  # collapse duplicate edge listings
            return cls(adj, validate=False)
        adj = np.zeros((n, n), dtype=bool)
        adj[edges[:, 0], edges[:, 1]] = True
        adj[edges[:, 1], edges[:, 0]] = True
        return cls(adj, validate=False)

    @property
    def n(self) -> int:
        return self._n

    @property
    def is_sparse(self) -> bool:
        return self._sparse

    @property
    def adjacency(self):
        return self._adj

    def _as_float(self) -> np.ndarray:
        # dense only; cached because the fitters hit this every outer iteration
        if self._float_cache is None:
            self._float_cache = self._adj.astype(np.float64)
        return self._float_cache

    def degrees(self) -> np.ndarray:
        if self._sparse:
            return np.asarray(self._adj.sum(axis=1)).ravel().astype(np.int64)
        return self._adj.sum(axis=1).astype(np.int64)

    def edge_count(self) -> int:
        if self._sparse:
            return int(self._adj.sum()) // 2
        return int(self._adj.sum()) // 2

    def edge_pairs(self) -> np.ndarray:
        """All edges as a (m, 2) array with i < j, in row-major order."""
        if self._sparse:
            coo = sp.coo_array(sp.triu(self._adj, k=1))
            order = np.lexsort((coo.col, coo.row))
            return np.column_stack([coo.row[order], coo.col[order]]).astype(np.int64)
        i, j = np.nonzero(np.triu(self._adj, k=1))
        return np.column_stack([i, j]).astype(np.int64)

    def neighbors(self, v: int) -> np.ndarray:
        if self._sparse:
            lo, hi = self._adj.indptr[v], self._adj.indptr[v + 1]
            return np.sort(self._adj.indices[lo:hi]).astype(np.int64)
        return np.nonzero(self._adj[v])[0].astype(np.int64)

    def has_edge(self, i: int, j: int) -> bool:
        if self._sparse:
            return bool(self._adj[[i], [j]])
        return bool(self._adj[i, j])

    def submatrix(self, nodes: np.ndarray):
        """Adjacency among `nodes` (dense ndarray regardless of backing store)."""
        nodes = np.asarray(nodes, dtype=np.int64)
        if self._sparse:
            return self._adj[nodes][:, nodes].toarray()
        return self._adj[np.ix_(nodes, nodes)].astype(np.int8)

    def row_counts(self, indicator: np.ndarray) -> np.ndarray:
        """A @ indicator: per-node counts of neighbors in each column class."""
        if self._sparse:
            return np.asarray(self._adj @ indicator, dtype=np.float64)
        return self._as_float() @ indicator

    def quadratic(self, indicator: np.ndarray) -> np.ndarray:
        """indicator.T @ A @ indicator (exact: counts stay far below 2**53)."""
        return indicator.T @ self.row_counts(indicator)

    def __repr__(self) -> str:
        kind = "sparse" if self._sparse else "dense"
        return f"Graph(n={self._n}, edges={self.edge_count()}, {kind})"


@dataclass(frozen=True)
class Labeling:
    """Block assignment for n nodes: entries of `z` lie in {1..k}.

    Blocks may be empty; `k` is the number of available labels, not the
    number of occupied ones.
    """

    z: np.ndarray
    k: int

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.int64).copy()
        if z.ndim != 1:
            raise ValueError("labels must be a flat vector")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if z.size and (z.min() < 1 or z.max() > self.k):
            raise ValueError(f"labels must lie in 1..{self.k}")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @classmethod
    def from_block_sizes(cls, sizes) -> "Labeling":
        """Canonical labeling: the first sizes[0] nodes get label 1, and so on."""
        sizes = np.asarray(sizes, dtype=np.int64)
        if sizes.size == 0 or (sizes <= 0).any():
            raise ValueError("block sizes must be positive")
        return cls(np.repeat(np.arange(1, sizes.size + 1), sizes), int(sizes.size))

    @property
    def n(self) -> int:
        return int(self.z.size)

    def block_sizes(self) -> np.ndarray:
        return np.bincount(self.z, minlength=self.k + 1)[1:]

    def indicator(self) -> np.ndarray:
        """n x k one-hot membership matrix (float64, for exact counting matmuls)."""
        out = np.zeros((self.n, self.k), dtype=np.float64)
        out[np.arange(self.n), self.z - 1] = 1.0
        return out

    def partition_key(self) -> tuple[int, ...]:
        """Canonical form up to label permutation: relabel by first occurrence."""
        remap: dict[int, int] = {}
        out = []
        for v in self.z:
            out.append(remap.setdefault(int(v), len(remap) + 1))
        return tuple(out)

    def same_partition(self, other: "Labeling") -> bool:
        return self.n == other.n and self.partition_key() == other.partition_key()


@dataclass(frozen=True)
class BlockMatrix:
    """Symmetric k x k matrix of block edge probabilities.

    NaN marks entries that are undefined because no node pair realizes them
    (e.g. the in-block rate of a singleton block under the MLE). Defined
    entries lie in [0, 1].
    """

    theta: np.ndarray
    clamp_events: int = 0

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=np.float64).copy()
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError("theta must be square")
        if not np.array_equal(t, t.T, equal_nan=True):
            raise ValueError("theta must be symmetric")
        finite = t[~np.isnan(t)]
        if finite.size and (finite.min() < 0.0 or finite.max() > 1.0):
            raise ValueError("theta entries must lie in [0, 1]")
        t.setflags(write=False)
        object.__setattr__(self, "theta", t)

    @property
    def k(self) -> int:
        return int(self.theta.shape[0])


@dataclass(frozen=True)
class SBMSpec:
    """Blockmodel population: block sizes plus the block probability matrix."""

    block_sizes: tuple[int, ...]
    theta: BlockMatrix

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        if len(sizes) != self.theta.k:
            raise ValueError("block_sizes length must match theta dimension")
        if any(s <= 0 for s in sizes):
            raise ValueError("block sizes must be positive")
        if np.isnan(self.theta.theta).any():
            raise ValueError("sampling requires fully defined theta")
        object.__setattr__(self, "block_sizes", sizes)

    @property
    def n(self) -> int:
        return sum(self.block_sizes)

    @property
    def k(self) -> int:
        return len(self.block_sizes)

    def labeling(self) -> Labeling:
        return Labeling.from_block_sizes(self.block_sizes)


def sample_sbm(spec: SBMSpec, seed: int) -> tuple[Graph, Labeling]:
    """Draw one graph: independent Bernoulli(theta[z_i, z_j]) edges over i < j.

    Uniform draws are consumed in fixed row-major pair order, so a given
    (spec, seed) reproduces the same graph regardless of chunking. The bit
    stream is PCG64 (`rng.GENERATOR_NAME`).
    """
    z = spec.labeling()
    z0 = z.z - 1
    n = spec.n
    theta = spec.theta.theta
    rng = np.random.default_rng(seed)
    dense = n <= DENSE_LIMIT
    if dense:
        adj = np.zeros((n, n), dtype=bool)
    else:
        hit_i: list[np.ndarray] = []
        hit_j: list[np.ndarray] = []
    for i in range(n - 1):
        p_row = theta[z0[i], z0[i + 1:]]
        u = rng.random(n - 1 - i)
        hits = np.nonzero(u < p_row)[0] + i + 1
        if dense:
            adj[i, hits] = True
            adj[hits, i] = True
        else:
            hit_i.append(np.full(hits.size, i, dtype=np.int64))
            hit_j.append(hits)
    if dense:
        return Graph(adj, validate=False), z
    i_arr = np.concatenate(hit_i) if hit_i else np.zeros(0, dtype=np.int64)
    j_arr = np.concatenate(hit_j) if hit_j else np.zeros(0, dtype=np.int64)
    data = np.ones(2 * i_arr.size, dtype=np.int8)
    coo = sp.coo_array(
        (data, (np.concatenate([i_arr, j_arr]), np.concatenate([j_arr, i_arr]))),
        shape=(n, n),
    )
    return Graph(sp.csr_array(coo), validate=False), z


def planted_theta(k: int, theta_in: float, theta_out: float) -> BlockMatrix:
    """Constant-diagonal, constant-off-diagonal block matrix."""
    if not (0.0 <= theta_in <= 1.0 and 0.0 <= theta_out <= 1.0):
        raise ValueError("theta_in and theta_out must lie in [0, 1]")
    t = np.full((k, k), float(theta_out))
    np.fill_diagonal(t, float(theta_in))
    return BlockMatrix(t)


def _offdiag_fill(k: int, diag: float, values: np.ndarray, clamp_events: int) -> BlockMatrix:
    t = np.zeros((k, k))
    iu, ju = np.triu_indices(k, 1)
    t[iu, ju] = values
    t[ju, iu] = values
    np.fill_diagonal(t, diag)
    return BlockMatrix(t, clamp_events=clamp_events)


def gamma_theta(
    k: int,
    alpha: float,
    theta_in: float,
    target_out_degree: float,
    n: int,
    s: int,
    seed: int,
) -> BlockMatrix:
    """Off-diagonal rates drawn i.i.d. Gamma(alpha, rate=alpha*(n-s)/target).

    The rate is chosen so each off-diagonal entry has mean
    target_out_degree / (n - s); with equal block sizes s that makes the
    expected out-of-block degree equal target_out_degree. Draws above 1 are
    clamped and counted in `clamp_events`. Entries are drawn in row-major
    (a < b) upper-triangle order.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if n != k * s:
        raise ValueError("n must equal k * s")
    if target_out_degree <= 0:
        raise ValueError("target_out_degree must be positive")
    if not 0.0 <= theta_in <= 1.0:
        raise ValueError("theta_in must lie in [0, 1]")
    rate = alpha * (n - s) / target_out_degree
    rng = np.random.default_rng(seed)
    vals = rng.gamma(shape=alpha, scale=1.0 / rate, size=k * (k - 1) // 2)
    clamped = int(np.count_nonzero(vals > 1.0))
    vals = np.clip(vals, 0.0, 1.0)
    return _offdiag_fill(k, theta_in, vals, clamped)


def bernoulli_theta(
    k: int,
    p: float,
    theta_in: float,
    target_out_degree: float,
    n: int,
    s: int,
    seed: int,
) -> BlockMatrix:
    """Off-diagonal rates (c/p) * Bernoulli(p) with c = target/(n-s).

    At p = 1 this reduces exactly to `planted_theta(k, theta_in, c)`. Values
    above 1 (possible when p < c) are clamped and counted.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    if n != k * s:
        raise ValueError("n must equal k * s")
    if target_out_degree <= 0:
        raise ValueError("target_out_degree must be positive")
    if not 0.0 <= theta_in <= 1.0:
        raise ValueError("theta_in must lie in [0, 1]")
    c = target_out_degree / (n - s)
    rng = np.random.default_rng(seed)
    draws = rng.random(k * (k - 1) // 2) < p
    vals = (c / p) * draws
    clamped = int(np.count_nonzero(vals > 1.0))
    vals = np.clip(vals, 0.0, 1.0)
    return _offdiag_fill(k, theta_in, vals, clamped)
