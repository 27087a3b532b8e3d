"""Spectral initialization: regularized Laplacian, eigenvectors, k-means.

The k-means here is deliberately hand-rolled: the initializer's determinism
contract pins k-means++ seeding, per-restart seed derivation, smallest-index
tie-breaking, and farthest-point re-seeding of empty clusters, none of which
library implementations guarantee.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graphs import Graph, Labeling
from .rng import derive_rng

# Sentinel: tau equal to the average degree of the graph.
AUTO = "auto"

_LLOYD_TOL = 1e-8
_LLOYD_MAX_ITER = 100
_RESIDUAL_TOL = 1e-8


def regularized_laplacian(g: Graph, tau=AUTO):
    """Degree-regularized adjacency: entry (i,j) = A_ij / sqrt((d_i+tau)(d_j+tau)).

    tau=AUTO uses the average degree. Rows of isolated nodes are zero in A,
    so the 0/0 that arises when tau = 0 is resolved to 0.
    """
    d = g.degrees().astype(np.float64)
    if tau == AUTO:
        tau = float(d.sum() / g.n) if g.n else 0.0
    tau = float(tau)
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    denom = d + tau
    with np.errstate(divide="ignore"):
        scale = np.where(denom > 0, 1.0 / np.sqrt(np.where(denom > 0, denom, 1.0)), 0.0)
    if g.is_sparse:
        s = sp.dia_array((scale[None, :], [0]), shape=(g.n, g.n))
        return sp.csr_array(s @ g.adjacency @ s)
    return g.adjacency * scale[:, None] * scale[None, :]


@dataclass(frozen=True)
class Embedding:
    """Top eigenpairs of a symmetric matrix: orthonormal columns, values descending."""

    vectors: np.ndarray
    values: np.ndarray


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # deterministic orientation: first coordinate of nonneglible magnitude is positive
    out = vectors.copy()
    for c in range(out.shape[1]):
        nz = np.nonzero(np.abs(out[:, c]) > 1e-12)[0]
        if nz.size and out[nz[0], c] < 0:
            out[:, c] = -out[:, c]
    return out


def top_k_eigenvectors(m, k: int) -> Embedding:
    """k algebraically largest eigenpairs of a symmetric matrix.

    Dense inputs use a full symmetric eigendecomposition; sparse inputs an
    iterative Lanczos solve. Residuals ||Mv - lambda v|| are certified
    against 1e-8 * ||M||.
    """
    n = m.shape[0]
    if not 1 <= k <= n:
        raise ValueError("k must lie in 1..n")
    if sp.issparse(m):
        if k < n:
            try:
                vals, vecs = spla.eigsh(m.astype(np.float64), k=k, which="LA")
            except spla.ArpackNoConvergence as exc:
                raise RuntimeError(f"eigensolver failed to converge: {exc}") from exc
            order = np.argsort(vals)[::-1]
            vals, vecs = vals[order], vecs[:, order]
            norm = float(abs(m).sum(axis=0).max()) if n else 0.0  # 1-norm >= 2-norm
        else:
            dense = m.toarray()
            w, v = np.linalg.eigh(dense)
            vals, vecs = w[::-1][:k], v[:, ::-1][:, :k]
            norm = float(np.abs(w).max()) if n else 0.0
    else:
        w, v = np.linalg.eigh(np.asarray(m, dtype=np.float64))
        vals, vecs = w[::-1][:k], v[:, ::-1][:, :k]
        norm = float(np.abs(w).max()) if n else 0.0
    vecs = _fix_signs(np.ascontiguousarray(vecs))
    resid = np.linalg.norm(m @ vecs - vecs * vals[None, :], axis=0)
    if norm > 0 and (resid > _RESIDUAL_TOL * norm).any():
        raise RuntimeError(
            f"eigenpair residuals {resid.max():.3e} exceed {_RESIDUAL_TOL:.0e} * ||M||"
        )
    return Embedding(vectors=vecs, values=np.asarray(vals, dtype=np.float64))


@dataclass(frozen=True)
class KMeansRun:
    """One Lloyd run: 0-based labels, final objective, per-iteration objective."""

    labels: np.ndarray
    inertia: float
    trace: tuple[float, ...]


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d = (
        (points * points).sum(axis=1)[:, None]
        - 2.0 * points @ centroids.T
        + (centroids * centroids).sum(axis=1)[None, :]
    )
    return np.maximum(d, 0.0)


def _plusplus_seed(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    closest = ((points - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = rng.choice(n, p=closest / total)
        else:
            idx = rng.integers(n)  # all points coincide with a centroid
        centroids[c] = points[idx]
        closest = np.minimum(closest, ((points - centroids[c]) ** 2).sum(axis=1))
    return centroids


def kmeans_single(points: np.ndarray, k: int, rng: np.random.Generator) -> KMeansRun:
    """One k-means++ seeded Lloyd run.

    Assignment ties go to the smallest cluster index. Clusters that empty out
    are re-seeded to the farthest point from its assigned centroid; the
    objective trace is nonincreasing.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    centroids = _plusplus_seed(points, k, rng)
    labels = np.zeros(n, dtype=np.int64)
    trace: list[float] = []
    for _ in range(_LLOYD_MAX_ITER):
        d = _sq_dists(points, centroids)
        labels = np.argmin(d, axis=1)
        mind = d[np.arange(n), labels]
        trace.append(float(mind.sum()))
        new_centroids = centroids.copy()
        counts = np.bincount(labels, minlength=k)
        for c in range(k):
            if counts[c] > 0:
                new_centroids[c] = points[labels == c].mean(axis=0)
        reseeded = False
        if (counts == 0).any():
            avail = mind.copy()
            for c in np.nonzero(counts == 0)[0]:
                far = int(np.argmax(avail))
                new_centroids[c] = points[far]
                avail[far] = -1.0  # successive empty clusters take distinct points
                reseeded = True
        shift = np.abs(new_centroids - centroids).max() if k else 0.0
        centroids = new_centroids
        if not reseeded and shift < _LLOYD_TOL:
            break
    d = _sq_dists(points, centroids)
    labels = np.argmin(d, axis=1)
    inertia = float(d[np.arange(n), labels].sum())
    if not trace or inertia < trace[-1]:
        trace.append(inertia)
    return KMeansRun(labels=labels, inertia=inertia, trace=tuple(trace))


def kmeans(points: np.ndarray, k: int, restarts: int = 10, seed: int = 0) -> Labeling:
    """Best of `restarts` Lloyd runs by within-cluster sum of squares.

    Restart r uses the generator derived from (seed, r), so the result does
    not depend on scheduling; ties keep the earliest restart.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    best: KMeansRun | None = None
    for r in range(restarts):
        run = kmeans_single(points, k, derive_rng(seed, r))
        if best is None or run.inertia < best.inertia:
            best = run
    assert best is not None
    return Labeling(best.labels + 1, k)


def spectral_embedding(g: Graph, k: int, tau=AUTO) -> Embedding:
    """Top-k eigenpairs of the regularized Laplacian."""
    return top_k_eigenvectors(regularized_laplacian(g, tau), k)


def spectral_init(
    g: Graph,
    k: int,
    tau=AUTO,
    seed: int = 0,
    restarts: int = 10,
    row_normalize: bool = False,
) -> Labeling:
    """Cluster the regularized-Laplacian embedding into k blocks.

    Rows are clustered as-is by default; `row_normalize` rescales each
    embedding row to unit length first (changes results, off by default).
    """
    emb = spectral_embedding(g, k, tau)
    pts = emb.vectors
    if row_normalize:
        norms = np.linalg.norm(pts, axis=1, keepdims=True)
        pts = pts / np.where(norms > 0, norms, 1.0)
    return kmeans(pts, k, restarts=restarts, seed=seed)
