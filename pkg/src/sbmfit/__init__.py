"""Stochastic blockmodel sampling, fitting, and population-likelihood checks."""

__version__ = "0.1.0"

from .graphs import (
    DENSE_LIMIT,
    BlockMatrix,
    Graph,
    Labeling,
    SBMSpec,
    bernoulli_theta,
    gamma_theta,
    planted_theta,
    sample_sbm,
)
from .likelihood import (
    entropy_bernoulli,
    exhaustive_rmle,
    kl_bernoulli,
    log_likelihood,
    mle_theta,
    profile_loglik,
    regularized_profile_loglik,
    rmle_theta,
)
from .metrics import (
    expected_edges,
    identifiability_check,
    misclustered_count,
    misclustering_report,
    regime_check,
    tight_pair_size,
)
from .plfit import (
    KMEANS_RESTART,
    NONE,
    RESEED,
    FitOptions,
    FitResult,
    block_neighbor_counts,
    fit,
    reseed_block,
    rmle_project,
    transitive_neighborhood,
)
from .spectral import (
    AUTO,
    Embedding,
    kmeans,
    regularized_laplacian,
    spectral_embedding,
    spectral_init,
    top_k_eigenvectors,
)
from .theory import (
    GapChainReport,
    MismatchPairing,
    PairPartition,
    ProbMatrix,
    bias_gap,
    bias_gap_kl,
    expected_loglik,
    is_refinement,
    pair_partition_from_labels,
    pairing,
    partition_loglik,
    population_profile_loglik,
    population_profile_loglik_reg,
    refine,
    refinement_gap_chain,
    separating_triples,
)

__all__ = [name for name in dir() if not name.startswith("_")]
