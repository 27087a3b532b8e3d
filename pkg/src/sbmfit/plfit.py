"""Pseudo-likelihood block fitting.

Outer loop: estimate block rates from the current hard labels (pooling the
off-diagonal when regularized), model each node's block-neighbor count row
as a Poisson vector, run an inner EM over row memberships, re-harden, and
repair empty blocks per the configured policy. The tracked objective is the
(regularized) profile log-likelihood of the hardened labels.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .graphs import BlockMatrix, Graph, Labeling
from .likelihood import (
    block_pair_stats,
    mle_theta,
    profile_loglik,
    regularized_profile_loglik,
    rmle_theta,
)
from .rng import derive_rng, derive_seed
from .spectral import AUTO, kmeans, spectral_embedding

# Reseed policies for iterations that empty out a block.
RESEED = "reseed"                  # move a cohesive neighborhood into the empty block
KMEANS_RESTART = "kmeans_restart"  # restart from a fresh spectral k-means labeling
NONE = "none"                      # carry on with fewer occupied blocks

LAMBDA_FLOOR = 1e-10
_MAX_KMEANS_RESTARTS = 3


@dataclass(frozen=True)
class FitOptions:
    """Knobs for `fit`.

    reseed_policy defaults to RESEED when regularized and KMEANS_RESTART
    otherwise (matching how the two estimators typically lose blocks).
    """

    regularized: bool = False
    max_outer: int = 20
    max_inner: int = 50
    tol: float = 1e-6
    seed: int = 0
    reseed_policy: str | None = None

    def policy(self) -> str:
        if self.reseed_policy is None:
            return RESEED if self.regularized else KMEANS_RESTART
        if self.reseed_policy not in (RESEED, KMEANS_RESTART, NONE):
            raise ValueError(f"unknown reseed policy {self.reseed_policy!r}")
        return self.reseed_policy


@dataclass
class FitResult:
    labels: Labeling
    theta: BlockMatrix
    mixing: np.ndarray
    trace: list[tuple[int, float]]
    inner_traces: list[list[float]]
    reseed_events: list[tuple[int, int]]
    converged: bool
    nonempty_blocks: int
    kmeans_restarts: int = 0

    @property
    def objective(self) -> float:
        return self.trace[-1][1] if self.trace else math.nan


def block_neighbor_counts(g: Graph, z: Labeling) -> np.ndarray:
    """n x k matrix: entry (i, l) counts neighbors of node i in block l."""
    if z.n != g.n:
        raise ValueError("labeling length must match graph size")
    return np.rint(g.row_counts(z.indicator())).astype(np.int64)


def rmle_project(theta: BlockMatrix, z: Labeling) -> BlockMatrix:
    """Replace all off-diagonal entries by their pair-capacity-weighted mean.

    The diagonal is preserved exactly. With theta = the block-pair MLE this
    reproduces the pooled estimator, since the weights are the pair counts.
    """
    if theta.k != z.k:
        raise ValueError("theta dimension must match the number of blocks")
    k = theta.k
    if k == 1:
        return theta
    sizes = z.block_sizes()
    weights = np.outer(sizes, sizes).astype(np.float64)
    off = ~np.eye(k, dtype=bool)
    w = weights[off]
    vals = theta.theta[off]
    total = w.sum()
    if total == 0:
        r = math.nan
    else:
        supported = w > 0
        r = float((w[supported] * vals[supported]).sum() / total)
    out = np.full((k, k), r)
    np.fill_diagonal(out, np.diagonal(theta.theta))
    return BlockMatrix(out)


def transitive_neighborhood(g: Graph, v: int) -> np.ndarray:
    """Neighbors of v that have at least one edge to another neighbor of v."""
    nb = g.neighbors(v)
    if nb.size < 2:
        return np.zeros(0, dtype=np.int64)
    sub = g.submatrix(nb)
    keep = np.asarray(sub).sum(axis=1) > 0
    return nb[keep]


def reseed_block(g: Graph, z: Labeling, empty_block: int) -> Labeling:
    """Populate `empty_block` with a cohesive neighborhood from a sparse donor.

    The donor is the occupied block of at least two nodes with the smallest
    in-block edge rate (ties to the smallest block id). Within the donor, the
    node with the largest transitive neighborhood wins (ties to the smallest
    node id); it moves to `empty_block` together with that neighborhood. If
    every occupied block is a singleton there is no defined donor rate and
    the labeling is returned unchanged with a warning.
    """
    if not 1 <= empty_block <= z.k:
        raise ValueError("empty_block out of range")
    edges, pairs = block_pair_stats(g, z)
    diag_pairs = np.diagonal(pairs)
    candidates = np.nonzero(diag_pairs > 0)[0]
    if candidates.size == 0:
        warnings.warn("no donor block with a defined in-block rate; reseed skipped")
        return z
    rates = np.diagonal(edges)[candidates] / diag_pairs[candidates]
    donor = int(candidates[np.argmin(rates)]) + 1  # argmin keeps the smallest id on ties
    members = np.nonzero(z.z == donor)[0]
    best_node = -1
    best_tn: np.ndarray | None = None
    for v in members:  # ascending node order, so ties keep the smallest id
        tn = transitive_neighborhood(g, int(v))
        if best_tn is None or tn.size > best_tn.size:
            best_node = int(v)
            best_tn = tn
    assert best_tn is not None
    znew = z.z.copy()
    znew[best_node] = empty_block
    znew[best_tn] = empty_block
    return Labeling(znew, z.k)


def _inner_em(
    counts: np.ndarray,
    pi: np.ndarray,
    lam: np.ndarray,
    max_inner: int,
    tol: float,
    pool_sizes: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[float]]:
    """EM over Poisson row models; returns (tau, pi, lam, objective trace).

    With `pool_sizes` (the conditioning block sizes N_l) the M-step maximizes
    over the restricted space where all cross-block rates share one value:
    lambda_kl = N_l * r for k != l, with r the responsibility-weighted pooled
    rate. That keeps the regularized fit inside its parameter space, and the
    objective trace stays nondecreasing because it is still an exact M-step.
    """
    k = counts.shape[1]
    off = ~np.eye(k, dtype=bool)
    trace: list[float] = []
    tau = np.zeros_like(counts, dtype=np.float64)
    prev = None
    for _ in range(max_inner):
        with np.errstate(divide="ignore"):
            logpi = np.log(pi)
        logw = logpi[None, :] + counts @ np.log(lam).T - lam.sum(axis=1)[None, :]
        mx = logw.max(axis=1, keepdims=True)
        w = np.exp(logw - mx)
        s = w.sum(axis=1, keepdims=True)
        obj = float(np.sum(np.log(s) + mx))
        trace.append(obj)
        tau = w / s
        pi = tau.mean(axis=0)
        col = tau.sum(axis=0)
        weighted = tau.T @ counts
        lam = weighted / np.maximum(col, 1e-300)[:, None]
        if pool_sizes is not None:
            capacity = col[:, None] * pool_sizes[None, :]
            denom = capacity[off].sum()
            r = weighted[off].sum() / denom if denom > 0 else 0.0
            lam = np.where(off, pool_sizes[None, :] * r, lam)
        lam = np.maximum(lam, LAMBDA_FLOOR)
        if prev is not None and abs(obj - prev) <= tol * max(1.0, abs(prev)):
            break
        prev = obj
    return tau, pi, lam, trace


def fit(g: Graph, k: int, init: Labeling, opts: FitOptions = FitOptions()) -> FitResult:
    """Pseudo-likelihood block fit starting from `init`.

    Deterministic for fixed (graph, init, opts.seed). A graph with no edges
    is returned unchanged with converged=False: there is nothing for the row
    models to condition on.
    """
    if init.n != g.n:
        raise ValueError("init labeling length must match graph size")
    if init.k != k:
        raise ValueError("init labeling must use the requested block count")
    if not 1 <= k <= g.n:
        raise ValueError("k must lie in 1..n")
    policy = opts.policy()
    tracked = regularized_profile_loglik if opts.regularized else profile_loglik
    final_theta = rmle_theta if opts.regularized else mle_theta

    if g.edge_count() == 0:
        sizes = init.block_sizes().astype(np.float64)
        return FitResult(
            labels=init,
            theta=final_theta(g, init),
            mixing=sizes / max(g.n, 1),
            trace=[],
            inner_traces=[],
            reseed_events=[],
            converged=False,
            nonempty_blocks=int((sizes > 0).sum()),
        )

    n = g.n
    z = init.z.copy()
    trace: list[tuple[int, float]] = []
    inner_traces: list[list[float]] = []
    events: list[tuple[int, int]] = []
    embedding: np.ndarray | None = None
    restarts_used = 0
    mixing = init.block_sizes().astype(np.float64) / n
    prev_obj = None
    converged = False

    for it in range(1, opts.max_outer + 1):
        lab = Labeling(z, k)
        theta = mle_theta(g, lab)
        if opts.regularized:
            theta = rmle_project(theta, lab)
        sizes = lab.block_sizes().astype(np.float64)
        lam = np.nan_to_num(theta.theta * sizes[None, :], nan=0.0)
        lam = np.maximum(lam, LAMBDA_FLOOR)
        counts = block_neighbor_counts(g, lab).astype(np.float64)
        pool = sizes if opts.regularized else None
        tau, mixing, _, inner = _inner_em(
            counts, sizes / n, lam, opts.max_inner, opts.tol, pool_sizes=pool
        )
        inner_traces.append(inner)
        z_new = np.argmax(tau, axis=1).astype(np.int64) + 1  # argmax: smallest k on ties

        occupancy = np.bincount(z_new, minlength=k + 1)[1:]
        empties = [int(a) + 1 for a in np.nonzero(occupancy == 0)[0]]
        if empties and policy == RESEED:
            lab_new = Labeling(z_new, k)
            for blk in empties:
                repaired = reseed_block(g, lab_new, blk)
                if repaired is not lab_new:
                    events.append((it, blk))
                lab_new = repaired
            z_new = lab_new.z.copy()
        elif empties and policy == KMEANS_RESTART and restarts_used < _MAX_KMEANS_RESTARTS:
            events.append((it, empties[0]))
            restarts_used += 1
            if embedding is None:
                embedding = spectral_embedding(g, k, AUTO).vectors
            z_new = kmeans(
                embedding, k, restarts=10, seed=derive_seed(opts.seed, 1, restarts_used)
            ).z.copy()

        obj = tracked(g, Labeling(z_new, k))
        trace.append((it, obj))
        z = z_new
        if prev_obj is not None and abs(obj - prev_obj) <= opts.tol * max(1.0, abs(prev_obj)):
            converged = True
            break
        prev_obj = obj

    labels = Labeling(z, k)
    return FitResult(
        labels=labels,
        theta=final_theta(g, labels),
        mixing=np.asarray(mixing, dtype=np.float64),
        trace=trace,
        inner_traces=inner_traces,
        reseed_events=events,
        converged=converged,
        nonempty_blocks=int((labels.block_sizes() > 0).sum()),
        kmeans_restarts=restarts_used,
    )
