"""Bernoulli block likelihoods and closed-form block-rate estimators.

Conventions used throughout: natural logarithm, 0*log(0) = 0, and NaN as the
marker for estimates with no supporting node pairs. All log-likelihoods are
nonpositive.
"""
from __future__ import annotations

import math

import numpy as np

from .graphs import BlockMatrix, Graph, Labeling


def block_pair_stats(g: Graph, z: Labeling) -> tuple[np.ndarray, np.ndarray]:
    """Edge counts and pair capacities per block pair.

    Returns (edges, pairs), both k x k symmetric integer arrays. edges[a,a]
    counts each in-block edge once; pairs[a,a] = C(N_a, 2) and
    pairs[a,b] = N_a * N_b for a != b.
    """
    if z.n != g.n:
        raise ValueError("labeling length must match graph size")
    ind = z.indicator()
    c = np.rint(g.quadratic(ind)).astype(np.int64)
    edges = c.copy()
    np.fill_diagonal(edges, np.diagonal(c) // 2)
    sizes = z.block_sizes()
    pairs = np.outer(sizes, sizes)
    np.fill_diagonal(pairs, sizes * (sizes - 1) // 2)
    return edges, pairs


def _bern_sum(mass: np.ndarray, capacity: np.ndarray, theta: np.ndarray) -> float:
    """Sum of mass*log(theta) + (capacity-mass)*log(1-theta) over groups.

    `mass` may be fractional (sums of probabilities). Groups with zero
    capacity contribute nothing. theta = 0 contributes -inf unless the mass
    is zero; theta = 1 contributes -inf unless the mass fills the capacity.
    """
    mass = np.asarray(mass, dtype=np.float64)
    capacity = np.asarray(capacity, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    act = capacity > 0
    if not act.any():
        return 0.0
    m = mass[act]
    n = capacity[act]
    t = theta[act]
    out = np.zeros(t.shape)
    interior = (t > 0.0) & (t < 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[interior] = m[interior] * np.log(t[interior]) + (n[interior] - m[interior]) * np.log1p(
            -t[interior]
        )
    at_zero = t == 0.0
    out[at_zero] = np.where(m[at_zero] > 0.0, -np.inf, 0.0)
    at_one = t == 1.0
    out[at_one] = np.where(n[at_one] - m[at_one] > 0.0, -np.inf, 0.0)
    out[np.isnan(t)] = np.nan
    return float(np.sum(out))


def _upper(a: np.ndarray) -> np.ndarray:
    iu, ju = np.triu_indices(a.shape[0])
    return a[iu, ju]


def log_likelihood(g: Graph, z: Labeling, theta: BlockMatrix) -> float:
    """Bernoulli log-likelihood of the observed adjacency over pairs i < j."""
    if theta.k != z.k:
        raise ValueError("theta dimension must match the number of blocks")
    edges, pairs = block_pair_stats(g, z)
    return _bern_sum(_upper(edges), _upper(pairs), _upper(theta.theta))


def mle_theta(g: Graph, z: Labeling) -> BlockMatrix:
    """Per-block-pair edge frequencies; NaN where no pair supports the entry."""
    edges, pairs = block_pair_stats(g, z)
    with np.errstate(invalid="ignore"):
        t = np.where(pairs > 0, edges / np.maximum(pairs, 1), np.nan)
    return BlockMatrix(t)


def mle_pooled_rate(g: Graph, z: Labeling) -> float:
    """Cross-block edge total divided by cross-block pair capacity (NaN if none)."""
    edges, pairs = block_pair_stats(g, z)
    off = ~np.eye(z.k, dtype=bool)
    n_out = int(pairs[off].sum()) // 2
    if n_out == 0:
        return math.nan
    return float(edges[off].sum() // 2) / n_out


def rmle_theta(g: Graph, z: Labeling) -> BlockMatrix:
    """MLE diagonal with every off-diagonal entry pooled to a single rate."""
    full = mle_theta(g, z).theta
    r = mle_pooled_rate(g, z)
    t = np.full((z.k, z.k), r)
    np.fill_diagonal(t, np.diagonal(full))
    return BlockMatrix(t)


def profile_loglik(g: Graph, z: Labeling) -> float:
    """Log-likelihood with theta profiled out at its block-pair MLE."""
    return log_likelihood(g, z, mle_theta(g, z))


def regularized_profile_loglik(g: Graph, z: Labeling) -> float:
    """Log-likelihood profiled over the pooled-off-diagonal parameter space."""
    return log_likelihood(g, z, rmle_theta(g, z))


def profile_loglik_entropy_form(g: Graph, z: Labeling) -> float:
    """Profile log-likelihood via -sum(n_ab * H(theta_hat_ab)).

    Independent route to `profile_loglik`; the two must agree to roundoff.
    """
    edges, pairs = block_pair_stats(g, z)
    m = _upper(edges)
    n = _upper(pairs)
    act = n > 0
    rates = m[act] / n[act]
    h = np.array([entropy_bernoulli(r) for r in rates])
    return float(-(n[act] * h).sum())


def _restricted_growth(n: int, k: int):
    """All surjective labelings of n items with k labels, one per partition.

    Yields label vectors in lexicographic order; each is the canonical
    representative of its partition (labels appear in first-use order).
    """
    z = np.ones(n, dtype=np.int64)

    def rec(i: int, used: int):
        if i == n:
            if used == k:
                yield z
            return
        # prune: remaining slots must be able to introduce the missing labels
        if k - used > n - i:
            return
        top = min(used + 1, k)
        for lbl in range(1, top + 1):
            z[i] = lbl
            yield from rec(i + 1, max(used, lbl))

    yield from rec(1, 1) if n > 0 else iter(())


def exhaustive_rmle(g: Graph, k: int) -> Labeling:
    """Global maximizer of the regularized profile log-likelihood.

    Enumerates every partition of the nodes into k nonempty blocks, so it is
    gated to n <= 12; use `sbmfit.plfit.fit` for anything larger. Ties go to
    the lexicographically smallest canonical labeling.
    """
    n = g.n
    if n > 12:
        raise ValueError(
            f"exhaustive search is limited to n <= 12 (got n={n}); "
            "use the pseudo-likelihood fitter sbmfit.plfit.fit instead"
        )
    if not 1 <= k <= n:
        raise ValueError("k must lie in 1..n")
    best_val = -math.inf
    best_z: np.ndarray | None = None
    for z in _restricted_growth(n, k):
        val = regularized_profile_loglik(g, Labeling(z, k))
        if val > best_val:
            best_val = val
            best_z = z.copy()
    assert best_z is not None
    return Labeling(best_z, k)


def kl_bernoulli(p: float, q: float) -> float:
    """KL divergence between Bernoulli(p) and Bernoulli(q), natural log.

    Returns +inf when q is degenerate (0 or 1) and p differs from it.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    if p == q:
        return 0.0
    if q <= 0.0 or q >= 1.0:
        return math.inf
    out = 0.0
    if p > 0.0:
        out += p * math.log(p / q)
    if p < 1.0:
        out += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return out


def entropy_bernoulli(p: float) -> float:
    """Entropy of Bernoulli(p) in nats; 0 at both endpoints."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)
