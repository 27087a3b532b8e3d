"""Population (expected) log-likelihoods, pair partitions, and refinement gaps.

Everything here operates on the edge-probability matrix P rather than a
sampled graph: expected block log-likelihoods, their grouping by partitions
of the node pairs, the pairing construction that ties partition refinements
to misclustering counts, and the gap chain relating the pooled estimator's
population objective to refined partitions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import BlockMatrix, Labeling, SBMSpec
from .likelihood import _bern_sum, kl_bernoulli

_IDENTITY_RTOL = 1e-9


@dataclass(frozen=True)
class ProbMatrix:
    """Symmetric matrix of pairwise edge probabilities with zero diagonal."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64).copy()
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("probability matrix must be square")
        if not np.array_equal(p, p.T):
            raise ValueError("probability matrix must be symmetric")
        if p.size and (p.min() < 0.0 or p.max() > 1.0):
            raise ValueError("entries must lie in [0, 1]")
        if np.diagonal(p).any():
            raise ValueError("diagonal must be zero")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_labeling(cls, z: Labeling, theta: BlockMatrix) -> "ProbMatrix":
        if theta.k != z.k:
            raise ValueError("theta dimension must match the number of blocks")
        p = theta.theta[np.ix_(z.z - 1, z.z - 1)].copy()
        np.fill_diagonal(p, 0.0)
        return cls(p)

    @classmethod
    def from_spec(cls, spec: SBMSpec) -> "ProbMatrix":
        return cls.from_labeling(spec.labeling(), spec.theta)

    @property
    def n(self) -> int:
        return int(self.p.shape[0])

    def pair_values(self) -> np.ndarray:
        """Entries over pairs i < j in row-major order."""
        iu, ju = np.triu_indices(self.n, 1)
        return self.p[iu, ju]

    def expected_edge_total(self) -> float:
        return float(self.pair_values().sum())


def _block_mass(p: ProbMatrix, z: Labeling) -> tuple[np.ndarray, np.ndarray]:
    """Probability mass and pair capacity per block pair (k x k, symmetric)."""
    if z.n != p.n:
        raise ValueError("labeling length must match matrix size")
    ind = z.indicator()
    mass = ind.T @ p.p @ ind
    np.fill_diagonal(mass, np.diagonal(mass) / 2.0)
    sizes = z.block_sizes().astype(np.float64)
    pairs = np.outer(sizes, sizes)
    np.fill_diagonal(pairs, sizes * (sizes - 1) / 2.0)
    return mass, pairs


def _upper(a: np.ndarray) -> np.ndarray:
    iu, ju = np.triu_indices(a.shape[0])
    return a[iu, ju]


def expected_loglik(p: ProbMatrix, z: Labeling, theta: BlockMatrix) -> float:
    """Expectation of the block log-likelihood when edges follow P."""
    if theta.k != z.k:
        raise ValueError("theta dimension must match the number of blocks")
    mass, pairs = _block_mass(p, z)
    return _bern_sum(_upper(mass), _upper(pairs), _upper(theta.theta))


def block_mean_matrix(p: ProbMatrix, z: Labeling) -> np.ndarray:
    """Blockwise means of P; NaN where a block pair has no node pairs."""
    mass, pairs = _block_mass(p, z)
    with np.errstate(invalid="ignore"):
        return np.where(pairs > 0, mass / np.maximum(pairs, 1.0), math.nan)


def pooled_cross_mean(p: ProbMatrix, z: Labeling) -> float:
    """Mean of P over all cross-block pairs (NaN when there are none)."""
    mass, pairs = _block_mass(p, z)
    off = ~np.eye(z.k, dtype=bool)
    total = pairs[off].sum() / 2.0
    if total == 0:
        return math.nan
    return float(mass[off].sum() / 2.0 / total)


def population_profile_loglik(p: ProbMatrix, z: Labeling) -> float:
    """Expected log-likelihood with theta set to the blockwise means of P."""
    mass, pairs = _block_mass(p, z)
    with np.errstate(invalid="ignore"):
        means = np.where(pairs > 0, mass / np.maximum(pairs, 1.0), math.nan)
    return _bern_sum(_upper(mass), _upper(pairs), _upper(means))


def population_profile_loglik_reg(p: ProbMatrix, z: Labeling) -> float:
    """Same as `population_profile_loglik` but with the cross-block mean pooled."""
    mass, pairs = _block_mass(p, z)
    means = np.full((z.k, z.k), pooled_cross_mean(p, z))
    with np.errstate(invalid="ignore"):
        diag = np.where(
            np.diagonal(pairs) > 0,
            np.diagonal(mass) / np.maximum(np.diagonal(pairs), 1.0),
            math.nan,
        )
    np.fill_diagonal(means, diag)
    return _bern_sum(_upper(mass), _upper(pairs), _upper(means))


def bias_gap(p: ProbMatrix, z: Labeling) -> float:
    """Population cost of pooling the cross-block rates under labeling z."""
    return population_profile_loglik(p, z) - population_profile_loglik_reg(p, z)


def bias_gap_kl(p: ProbMatrix, z: Labeling) -> float:
    """The same gap as sum(n_ab * D(mean_ab || pooled mean)) over a < b.

    Independent route to `bias_gap`; the two must agree to roundoff.
    """
    means = block_mean_matrix(p, z)
    _, pairs = _block_mass(p, z)
    r = pooled_cross_mean(p, z)
    total = 0.0
    for a in range(z.k):
        for b in range(a + 1, z.k):
            if pairs[a, b] > 0:
                total += pairs[a, b] * kl_bernoulli(float(means[a, b]), r)
    return total


# ---------------------------------------------------------------------------
# partitions of the node pairs


def _pair_index_offsets(n: int) -> np.ndarray:
    i = np.arange(n, dtype=np.int64)
    return i * (2 * n - i - 1) // 2 - (i + 1)


def pair_index(n: int, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Row-major rank of pairs (i, j) with i < j among all n*(n-1)/2 pairs."""
    return _pair_index_offsets(n)[i] + j


@dataclass(frozen=True)
class PairPartition:
    """Partition of the node pairs {i < j}: group ids 1..L, none empty."""

    n: int
    group: np.ndarray

    def __post_init__(self):
        grp = np.asarray(self.group, dtype=np.int64).copy()
        m = self.n * (self.n - 1) // 2
        if grp.shape != (m,):
            raise ValueError(f"group vector must cover all {m} pairs")
        if m:
            top = int(grp.max())
            if grp.min() < 1:
                raise ValueError("group ids must be positive")
            present = np.unique(grp)
            if present.size != top:
                raise ValueError("group ids must be contiguous 1..L with no gaps")
        grp.setflags(write=False)
        object.__setattr__(self, "group", grp)

    @property
    def num_groups(self) -> int:
        return int(self.group.max()) if self.group.size else 0


def _compact_ids(raw: np.ndarray) -> np.ndarray:
    """Remap arbitrary nonnegative ids to contiguous 1..L, ordered by raw id."""
    _, inv = np.unique(raw, return_inverse=True)
    return inv.astype(np.int64) + 1


def pair_partition_from_labels(z: Labeling, regularized: bool = False) -> PairPartition:
    """Group node pairs by block pair, or (regularized) in-block vs pooled cross.

    Plain: one group per unordered block pair {a, b} that is realized by some
    node pair, ordered lexicographically. Regularized: one group per occupied
    block's internal pairs plus a single group holding every cross-block pair.
    """
    n = z.n
    iu, ju = np.triu_indices(n, 1)
    za = z.z[iu]
    zb = z.z[ju]
    lo = np.minimum(za, zb)
    hi = np.maximum(za, zb)
    if regularized:
        raw = np.where(lo == hi, lo, z.k + 1)
    else:
        raw = (lo - 1) * z.k + (hi - 1)
    return PairPartition(n=n, group=_compact_ids(raw))


def _group_stats(values: np.ndarray, gid: np.ndarray, L: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-group sums (pairwise summation within each group) and counts."""
    order = np.argsort(gid, kind="stable")
    sv = values[order]
    sg = gid[order]
    bounds = np.searchsorted(sg, np.arange(1, L + 2))
    sums = np.empty(L)
    for g in range(L):
        sums[g] = sv[bounds[g]:bounds[g + 1]].sum()
    counts = np.bincount(gid, minlength=L + 1)[1:]
    return sums, counts.astype(np.float64)


def partition_loglik(p: ProbMatrix, pi: PairPartition) -> float:
    """Expected log-likelihood with one pooled rate per pair group."""
    if pi.n != p.n:
        raise ValueError("partition size must match matrix size")
    vals = p.pair_values()
    L = pi.num_groups
    sums, counts = _group_stats(vals, pi.group, L)
    with np.errstate(invalid="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1.0), math.nan)
    return _bern_sum(sums, counts, means)


def is_refinement(fine: PairPartition, coarse: PairPartition) -> bool:
    """True when every group of `fine` sits inside one group of `coarse`."""
    if fine.n != coarse.n:
        return False
    combined = fine.group.astype(np.int64) * (coarse.num_groups + 1) + coarse.group
    return np.unique(combined).size == fine.num_groups


# ---------------------------------------------------------------------------
# pairing of mismatched nodes, separating triples, refinement


@dataclass(frozen=True)
class MismatchPairing:
    """Node pairs sharing an estimated class but differing in true class."""

    pairs: tuple[tuple[int, int], ...]

    @property
    def count(self) -> int:
        return len(self.pairs)


def pairing(z_est: Labeling, z_true: Labeling) -> MismatchPairing:
    """Greedy pairing inside each estimated class.

    Repeatedly pops one node from each of the two largest true-class
    subclasses (size ties to the smallest true label, node choice is the
    smallest remaining id) until at most one subclass is occupied. The number
    of recorded pairs is bounded between half the misclustered count and the
    misclustered count itself.
    """
    if z_true.n != z_est.n:
        raise ValueError("labelings must cover the same nodes")
    out: list[tuple[int, int]] = []
    for c in range(1, z_est.k + 1):
        members = np.nonzero(z_est.z == c)[0]
        if members.size == 0:
            continue
        queues: dict[int, list[int]] = {}
        for v in members:
            queues.setdefault(int(z_true.z[v]), []).append(int(v))
        while True:
            occupied = sorted(
                (lbl for lbl, q in queues.items() if q),
                key=lambda lbl: (-len(queues[lbl]), lbl),
            )
            if len(occupied) < 2:
                break
            i = queues[occupied[0]].pop(0)
            j = queues[occupied[1]].pop(0)
            out.append((min(i, j), max(i, j)))
    return MismatchPairing(pairs=tuple(out))


def separating_triples(
    pr: MismatchPairing,
    p: ProbMatrix,
    z: Labeling,
    c_const: float,
    m: float,
    k_blocks: int,
) -> list[tuple[int, int, int]]:
    """Triples (i, j, w) where node w separates the recorded pair (i, j).

    Membership requires D(P_iw || mid) + D(P_jw || mid) >= c_const*m*k/n^2
    with mid the average of the two probabilities; w never equals i or j
    (both pairs (i, w) and (j, w) must exist). When P is constant on the
    classes of `z`, membership is constant there too; that closure is
    asserted for any class whose rows actually coincide.
    """
    n = p.n
    thresh = c_const * m * k_blocks / float(n) ** 2
    triples: list[tuple[int, int, int]] = []
    for (i, j) in pr.pairs:
        pi_row = p.p[i]
        pj_row = p.p[j]
        mid = 0.5 * (pi_row + pj_row)
        div = _kl_rowwise(pi_row, mid) + _kl_rowwise(pj_row, mid)
        member = div >= thresh
        member[i] = False
        member[j] = False
        _assert_class_uniform(member, pi_row, pj_row, z, i, j)
        for w in np.nonzero(member)[0]:
            triples.append((i, j, int(w)))
    return triples


def _kl_rowwise(pv: np.ndarray, qv: np.ndarray) -> np.ndarray:
    """Elementwise Bernoulli KL with the boundary conventions of kl_bernoulli."""
    out = np.zeros_like(pv)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(pv > 0, pv * np.log(pv / qv), 0.0)
        t2 = np.where(pv < 1, (1.0 - pv) * np.log((1.0 - pv) / (1.0 - qv)), 0.0)
    same = pv == qv
    degenerate = (qv <= 0.0) | (qv >= 1.0)
    out = np.where(degenerate & ~same, np.inf, t1 + t2)
    out[same] = 0.0
    return out


def _assert_class_uniform(member, pi_row, pj_row, z, i, j) -> None:
    for c in range(1, z.k + 1):
        nodes = np.nonzero(z.z == c)[0]
        nodes = nodes[(nodes != i) & (nodes != j)]
        if nodes.size < 2:
            continue
        if np.unique(pi_row[nodes]).size == 1 and np.unique(pj_row[nodes]).size == 1:
            if np.unique(member[nodes]).size != 1:
                raise AssertionError(
                    "separating-triple membership varies inside a P-constant class"
                )


def refine_detailed(
    pi: PairPartition, triples: list[tuple[int, int, int]]
) -> tuple[PairPartition, int]:
    """Split (i, w) and (j, w) out of their shared group for each triple.

    Triples are applied in order; a triple whose pairs were already claimed
    by an earlier triple is skipped and counted. The two pairs of a live
    triple must share a group in `pi` (guaranteed when i and j share an
    estimated class), otherwise the result would not refine `pi`.
    """
    n = pi.n
    group = pi.group.astype(np.int64).copy()
    claimed = np.zeros(group.shape, dtype=bool)
    offsets = _pair_index_offsets(n)
    next_id = pi.num_groups + 1
    conflicts = 0
    for (i, j, w) in triples:
        a1, b1 = (i, w) if i < w else (w, i)
        a2, b2 = (j, w) if j < w else (w, j)
        p1 = int(offsets[a1] + b1)
        p2 = int(offsets[a2] + b2)
        if claimed[p1] or claimed[p2]:
            conflicts += 1
            continue
        if group[p1] != group[p2]:
            raise ValueError("triple spans two groups; result would not be a refinement")
        group[p1] = next_id
        group[p2] = next_id
        claimed[p1] = True
        claimed[p2] = True
        next_id += 1
    out = PairPartition(n=n, group=_compact_ids(group))
    if not is_refinement(out, pi):
        raise AssertionError("refinement postcondition failed")
    return out, conflicts


def refine(pi: PairPartition, triples: list[tuple[int, int, int]]) -> PairPartition:
    return refine_detailed(pi, triples)[0]


# ---------------------------------------------------------------------------
# the gap chain


@dataclass(frozen=True)
class GapChainReport:
    """Ordered population log-likelihood gaps and their consistency flags.

    gap_estimate >= gap_refined_reg >= gap_refined must hold: refining the
    pooled pair partition can only raise the population objective, and the
    fully split partition dominates the pooled one.
    """

    gap_estimate: float      # plain profile at truth minus pooled profile at estimate
    gap_refined_reg: float   # ... minus the refined pooled partition objective
    gap_refined: float       # ... minus the refined plain partition objective
    chain_ok: bool
    pair_count: int
    miscluster_count: int
    conflicts: int


def refinement_gap_chain(
    p: ProbMatrix, z_true: Labeling, z_est: Labeling, c_const: float = 1.0
) -> GapChainReport:
    """Bound the pooled estimator's population gap through refined partitions."""
    base = population_profile_loglik(p, z_true)
    gap_estimate = base - population_profile_loglik_reg(p, z_est)

    pr = pairing(z_est, z_true)
    m = p.expected_edge_total()
    triples = separating_triples(pr, p, z_est, c_const, m, z_est.k)

    plain = pair_partition_from_labels(z_est, regularized=False)
    pooled = pair_partition_from_labels(z_est, regularized=True)
    if not is_refinement(plain, pooled):
        raise AssertionError("block-pair partition must refine the pooled partition")
    refined_plain, conflicts = refine_detailed(plain, triples)
    refined_pooled, _ = refine_detailed(pooled, triples)
    if not is_refinement(refined_plain, refined_pooled):
        raise AssertionError("refined plain partition must refine the refined pooled one")

    gap_refined_reg = base - partition_loglik(p, refined_pooled)
    gap_refined = base - partition_loglik(p, refined_plain)

    scale = max(1.0, abs(gap_estimate), abs(gap_refined_reg), abs(gap_refined))
    tol = _IDENTITY_RTOL * scale
    chain_ok = (
        gap_estimate >= gap_refined_reg - tol and gap_refined_reg >= gap_refined - tol
    )

    from .metrics import misclustered_count  # local import avoids a cycle

    ne = misclustered_count(z_true, z_est)
    return GapChainReport(
        gap_estimate=gap_estimate,
        gap_refined_reg=gap_refined_reg,
        gap_refined=gap_refined,
        chain_ok=bool(chain_ok),
        pair_count=pr.count,
        miscluster_count=ne,
        conflicts=conflicts,
    )
