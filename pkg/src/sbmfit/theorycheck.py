"""Randomized assertion sweeps over the population-likelihood machinery.

Each instance draws a true and an estimated labeling plus an edge-probability
matrix (alternating block-constant and fully heterogeneous), then verifies:
the pair-partition identities against the block-level computations, the
pairing bounds against the misclustering count, refinement monotonicity of
the partition objective, and the ordering of the gap chain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import TheoryConfig
from .graphs import BlockMatrix, Labeling
from .io import config_hash, write_csv
from .metrics import misclustered_count
from .rng import GENERATOR_NAME, derive_rng
from .theory import (
    PairPartition,
    ProbMatrix,
    pair_partition_from_labels,
    partition_loglik,
    population_profile_loglik,
    population_profile_loglik_reg,
    refinement_gap_chain,
)

THEORY_COLUMNS = [
    "seed", "n", "k", "gap_estimate", "gap_refined_reg", "gap_refined",
    "chain_ok", "pair_count", "miscluster_count", "identity_ok", "monotone_ok",
    "pairing_ok", "all_ok",
]

_RTOL = 1e-10


@dataclass(frozen=True)
class InstanceResult:
    seed: int
    n: int
    k: int
    gap_estimate: float
    gap_refined_reg: float
    gap_refined: float
    chain_ok: bool
    pair_count: int
    miscluster_count: int
    identity_ok: bool
    monotone_ok: bool
    pairing_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.chain_ok and self.identity_ok and self.monotone_ok and self.pairing_ok

    def as_tuple(self) -> tuple:
        return (
            self.seed, self.n, self.k,
            float(self.gap_estimate), float(self.gap_refined_reg), float(self.gap_refined),
            int(self.chain_ok), self.pair_count, self.miscluster_count,
            int(self.identity_ok), int(self.monotone_ok), int(self.pairing_ok),
            int(self.all_ok),
        )


def random_surjective_labeling(n: int, k: int, rng: np.random.Generator) -> Labeling:
    z = np.concatenate([np.arange(1, k + 1), rng.integers(1, k + 1, size=n - k)])
    rng.shuffle(z)
    return Labeling(z, k)


def random_instance(cfg: TheoryConfig, idx: int) -> tuple[int, ProbMatrix, Labeling, Labeling]:
    rng = derive_rng(cfg.seed, idx)
    n = int(rng.integers(cfg.n_min, cfg.n_max + 1))
    k = int(rng.integers(cfg.k_min, cfg.k_max + 1))
    z_true = random_surjective_labeling(n, k, rng)
    z_est = random_surjective_labeling(n, k, rng)
    if idx % 2 == 0:
        t = rng.random((k, k))
        theta = BlockMatrix(np.tril(t) + np.tril(t, -1).T)
        p = ProbMatrix.from_labeling(z_true, theta)
    else:
        raw = rng.random((n, n))
        raw = np.tril(raw, -1) + np.tril(raw, -1).T
        p = ProbMatrix(raw)
    return idx, p, z_true, z_est


def _corrupt(pi: PairPartition) -> PairPartition:
    """Deliberately merge the two largest groups (testing hook for exit paths)."""
    grp = pi.group.copy()
    if pi.num_groups >= 2:
        grp[grp == pi.num_groups] = pi.num_groups - 1
    return PairPartition(n=pi.n, group=grp)


def check_instance(cfg: TheoryConfig, idx: int, inject_fault: bool = False) -> InstanceResult:
    idx, p, z_true, z_est = random_instance(cfg, idx)

    identity_ok = True
    for z in (z_true, z_est):
        for reg, block_route in (
            (False, population_profile_loglik),
            (True, population_profile_loglik_reg),
        ):
            pi = pair_partition_from_labels(z, regularized=reg)
            if inject_fault:
                pi = _corrupt(pi)
            a = partition_loglik(p, pi)
            b = block_route(p, z)
            if not np.isclose(a, b, rtol=_RTOL, atol=_RTOL * max(1.0, abs(b))):
                identity_ok = False

    report = refinement_gap_chain(p, z_true, z_est, cfg.c_const)

    # refinement monotonicity: the refined partitions may only raise the objective
    plain = pair_partition_from_labels(z_est, regularized=False)
    pooled = pair_partition_from_labels(z_est, regularized=True)
    base_plain = partition_loglik(p, plain)
    base_pooled = partition_loglik(p, pooled)
    refined_plain_val = population_profile_loglik(p, z_true) - report.gap_refined
    refined_pooled_val = population_profile_loglik(p, z_true) - report.gap_refined_reg
    tol = _RTOL * max(1.0, abs(base_plain), abs(base_pooled))
    monotone_ok = (
        refined_plain_val >= base_plain - tol and refined_pooled_val >= base_pooled - tol
    )

    ne = misclustered_count(z_true, z_est)
    pairing_ok = 2 * report.pair_count >= ne and report.pair_count <= ne

    return InstanceResult(
        seed=idx,
        n=p.n,
        k=z_true.k,
        gap_estimate=report.gap_estimate,
        gap_refined_reg=report.gap_refined_reg,
        gap_refined=report.gap_refined,
        chain_ok=report.chain_ok,
        pair_count=report.pair_count,
        miscluster_count=ne,
        identity_ok=identity_ok,
        monotone_ok=monotone_ok,
        pairing_ok=pairing_ok,
    )


def run_theory_sweep(cfg: TheoryConfig, inject_fault: bool = False) -> list[InstanceResult]:
    return [check_instance(cfg, idx, inject_fault) for idx in range(cfg.instances)]


def theory_metadata(cfg: TheoryConfig, *, timestamp: str | None = None) -> dict:
    meta = {
        "tool": "sbmfit",
        "version": __version__,
        "generator_algorithm": GENERATOR_NAME,
        "master_seed": cfg.seed,
        "config_hash": config_hash(cfg.source_text or repr(cfg)),
        "instances": cfg.instances,
        "c_const": cfg.c_const,
    }
    if timestamp is not None:
        meta["timestamp"] = timestamp
    return meta


def write_theory_csv(path, cfg: TheoryConfig, results: list[InstanceResult], *, timestamp: str | None = None) -> None:
    write_csv(path, THEORY_COLUMNS, [r.as_tuple() for r in results], theory_metadata(cfg, timestamp=timestamp))
