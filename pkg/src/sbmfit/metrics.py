"""Misclustering counts and population-level diagnostic checks."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import Labeling, SBMSpec
from .likelihood import kl_bernoulli


@dataclass(frozen=True)
class MisclusterReport:
    count: int
    tie_classes: int  # estimated classes whose majority true label was ambiguous


def misclustering_report(z_true: Labeling, z_est: Labeling) -> MisclusterReport:
    """Nodes whose true class is not the majority true class of their estimated class.

    Majority ties go to the smallest true label; every node of a non-winning
    label is counted. Tie occurrences are reported so analyses can exclude
    ambiguous classes.
    """
    if z_true.n != z_est.n:
        raise ValueError("labelings must cover the same nodes")
    count = 0
    ties = 0
    for c in range(1, z_est.k + 1):
        members = z_true.z[z_est.z == c]
        if members.size == 0:
            continue
        freq = np.bincount(members)
        top = freq.max()
        if (freq == top).sum() > 1:
            ties += 1
        count += int(members.size - top)
    return MisclusterReport(count=count, tie_classes=ties)


def misclustered_count(z_true: Labeling, z_est: Labeling) -> int:
    return misclustering_report(z_true, z_est).count


def expected_edges(spec: SBMSpec) -> float:
    """Expected number of edges: sum of theta over unordered node pairs."""
    sizes = np.asarray(spec.block_sizes, dtype=np.float64)
    pairs = np.outer(sizes, sizes)
    np.fill_diagonal(pairs, sizes * (sizes - 1) / 2.0)
    iu, ju = np.triu_indices(spec.k)
    return float((pairs[iu, ju] * spec.theta.theta[iu, ju]).sum())


def default_decay_threshold(n: int) -> float:
    """Split between decaying and non-decaying cross-block rates: 10/sqrt(n)."""
    return 10.0 / math.sqrt(n)


def tight_pairs(spec: SBMSpec, decay_threshold: float | None = None) -> list[tuple[int, int]]:
    """Off-diagonal block pairs whose rate stays above the decay threshold."""
    thr = default_decay_threshold(spec.n) if decay_threshold is None else decay_threshold
    out = []
    for a in range(spec.k):
        for b in range(a + 1, spec.k):
            if spec.theta.theta[a, b] > thr:
                out.append((a + 1, b + 1))
    return out


def tight_pair_size(spec: SBMSpec, decay_threshold: float | None = None) -> int:
    """Total pair capacity sum(N_a * N_b) over the tight cross-block pairs."""
    sizes = spec.block_sizes
    return sum(sizes[a - 1] * sizes[b - 1] for a, b in tight_pairs(spec, decay_threshold))


@dataclass(frozen=True)
class PairIdentifiability:
    a: int
    b: int
    satisfied: bool
    best_c: int
    lhs: float
    rhs: float


def identifiability_check(spec: SBMSpec, c_const: float = 1.0) -> list[PairIdentifiability]:
    """Symmetrized-KL separation of every block pair against c*M*K/N^2.

    For blocks a != b the statistic maximizes, over comparison classes c,
    D(theta_ac || mid) + D(theta_bc || mid) with mid the midpoint of the two
    rates; c may equal a or b.
    """
    t = spec.theta.theta
    k = spec.k
    n = spec.n
    rhs = c_const * expected_edges(spec) * k / float(n) ** 2
    out = []
    for a in range(k):
        for b in range(a + 1, k):
            best_c = 0
            best = -math.inf
            for c in range(k):
                mid = 0.5 * (t[a, c] + t[b, c])
                val = kl_bernoulli(t[a, c], mid) + kl_bernoulli(t[b, c], mid)
                if val > best:
                    best = val
                    best_c = c
            out.append(
                PairIdentifiability(
                    a=a + 1, b=b + 1, satisfied=bool(best >= rhs), best_c=best_c + 1,
                    lhs=best, rhs=rhs,
                )
            )
    return out


@dataclass(frozen=True)
class RegimeRow:
    check: str
    detail: str
    value: float
    lower: float
    upper: float
    ok: bool


@dataclass(frozen=True)
class RegimeReport:
    rows: tuple[RegimeRow, ...]

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.rows)


def regime_check(
    spec: SBMSpec,
    beta: float,
    decay_threshold: float | None = None,
    growth: float | None = None,
) -> RegimeReport:
    """Advisory comparison of a spec against the asymptotic growth conditions.

    Checks, with natural logs: the smallest block against log(n)**beta; the
    diagonal and tight cross-block rates against (1/log n, 1 - 1/log n);
    the remaining cross-block rates against (1/n^2, growth/n) with
    growth defaulting to s/log(n)^2; and the tight-pair capacity against
    n*s. Purely informational; nothing here blocks a fit.
    """
    n = spec.n
    s = min(spec.block_sizes)
    logn = math.log(n)
    rows: list[RegimeRow] = []

    s_bound = logn**beta
    rows.append(RegimeRow("block_size", f"smallest block vs log(n)^{beta:g}", float(s), s_bound, math.inf, s >= s_bound))

    lo, hi = 1.0 / logn, 1.0 - 1.0 / logn
    for a in range(spec.k):
        v = float(spec.theta.theta[a, a])
        rows.append(RegimeRow("diagonal", f"theta[{a + 1},{a + 1}]", v, lo, hi, lo < v < hi))

    tight = set(tight_pairs(spec, decay_threshold))
    g_val = s / logn**2 if growth is None else growth
    decay_lo, decay_hi = 1.0 / float(n) ** 2, g_val / n
    for a in range(spec.k):
        for b in range(a + 1, spec.k):
            v = float(spec.theta.theta[a, b])
            if (a + 1, b + 1) in tight:
                rows.append(
                    RegimeRow("tight_pair", f"theta[{a + 1},{b + 1}]", v, lo, hi, lo < v < hi)
                )
            else:
                rows.append(
                    RegimeRow(
                        "decaying_pair", f"theta[{a + 1},{b + 1}]", v, decay_lo, decay_hi,
                        decay_lo < v < decay_hi,
                    )
                )
    q = float(tight_pair_size(spec, decay_threshold))
    rows.append(RegimeRow("tight_capacity", "sum N_a*N_b over tight pairs vs n*s", q, 0.0, float(n * s), q <= n * s))
    return RegimeReport(rows=tuple(rows))
