"""Pseudo-likelihood fitting: projections, re-seeding, and the outer loop."""
import warnings

import numpy as np
import pytest

from conftest import random_graph, random_labeling
from sbmfit.graphs import BlockMatrix, Graph, Labeling, planted_theta, sample_sbm, SBMSpec
from sbmfit.likelihood import mle_theta, profile_loglik, regularized_profile_loglik, rmle_theta
from sbmfit.plfit import (
    KMEANS_RESTART,
    NONE,
    RESEED,
    FitOptions,
    block_neighbor_counts,
    fit,
    reseed_block,
    rmle_project,
    transitive_neighborhood,
)
from sbmfit.spectral import spectral_init

TWO_CLIQUES = Graph.from_edges(
    20,
    [(i, j) for i in range(10) for j in range(i + 1, 10)]
    + [(i, j) for i in range(10, 20) for j in range(i + 1, 20)],
)
CLIQUE_LABELS = Labeling.from_block_sizes((10, 10))


def test_block_neighbor_counts_disjoint_triangles():
    g = Graph.from_edges(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)])
    z = Labeling.from_block_sizes((3, 3))
    counts = block_neighbor_counts(g, z)
    assert np.array_equal(counts[:3], np.tile([2, 0], (3, 1)))
    assert np.array_equal(counts[3:], np.tile([0, 2], (3, 1)))


def test_block_neighbor_counts_empty_graph():
    g = Graph.from_edges(4, [])
    z = Labeling.from_block_sizes((2, 2))
    assert np.array_equal(block_neighbor_counts(g, z), np.zeros((4, 2)))


@pytest.mark.parametrize("seed", range(10))
def test_block_neighbor_counts_row_sums_are_degrees(seed):
    g = random_graph(20, 0.3, seed=seed)
    z = random_labeling(20, 4, seed=seed)
    counts = block_neighbor_counts(g, z)
    assert np.array_equal(counts.sum(axis=1), g.degrees())


# ---------------------------------------------------------------------------
# pooling projection


def test_rmle_project_equal_sizes_plain_mean():
    theta = BlockMatrix(np.array([[0.9, 0.1, 0.2], [0.1, 0.8, 0.3], [0.2, 0.3, 0.7]]))
    z = Labeling.from_block_sizes((4, 4, 4))
    out = rmle_project(theta, z).theta
    off = ~np.eye(3, dtype=bool)
    assert np.allclose(out[off], 0.2)
    assert np.array_equal(np.diag(out), [0.9, 0.8, 0.7])


def test_rmle_project_weighted_by_pair_capacity():
    theta = BlockMatrix(np.array([[0.5, 0.1], [0.1, 0.5]]))
    z = Labeling.from_block_sizes((1, 3))
    # single off-diagonal class: the weighted mean is just 0.1
    assert rmle_project(theta, z).theta[0, 1] == pytest.approx(0.1)
    three = BlockMatrix(np.array([[0.5, 0.0, 0.3], [0.0, 0.5, 0.0], [0.3, 0.0, 0.5]]))
    z3 = Labeling.from_block_sizes((1, 1, 2))
    # weights 1*1, 1*2, 1*2: mean = (0*1 + 0.3*2 + 0*2) / 5
    assert rmle_project(three, z3).theta[0, 1] == pytest.approx(0.12)


def test_rmle_project_k1_identity_and_idempotent():
    theta = BlockMatrix(np.array([[0.4]]))
    z = Labeling(np.array([1, 1, 1]), 1)
    assert rmle_project(theta, z) is theta
    t = BlockMatrix(np.array([[0.9, 0.1, 0.2], [0.1, 0.8, 0.3], [0.2, 0.3, 0.7]]))
    z3 = Labeling.from_block_sizes((2, 3, 4))
    once = rmle_project(t, z3)
    twice = rmle_project(once, z3)
    assert np.array_equal(once.theta, twice.theta)


@pytest.mark.parametrize("seed", range(15))
def test_project_of_mle_is_rmle(seed):
    g = random_graph(16, 0.35, seed=seed)
    z = random_labeling(16, 3, seed=seed + 50)
    a = rmle_project(mle_theta(g, z), z).theta
    b = rmle_theta(g, z).theta
    assert np.allclose(a, b, rtol=0, atol=1e-12, equal_nan=True)


# ---------------------------------------------------------------------------
# transitive neighborhoods and re-seeding


def test_transitive_neighborhood_examples():
    # star with one extra edge between leaves 1 and 2
    g = Graph.from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2)])
    assert np.array_equal(transitive_neighborhood(g, 0), [1, 2])
    assert np.array_equal(transitive_neighborhood(g, 1), [0, 2])
    # pure star: leaves never interconnect
    star = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    assert transitive_neighborhood(star, 0).size == 0
    # clique keeps every neighbor
    clique = Graph.from_edges(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    assert np.array_equal(transitive_neighborhood(clique, 2), [0, 1, 3])


def test_reseed_block_isolates_donate_single_node():
    # 10-clique in block 2, 10 isolated nodes in block 1, block 3 empty
    edges = [(i, j) for i in range(10, 20) for j in range(i + 1, 20)]
    g = Graph.from_edges(20, edges)
    z = Labeling(np.array([1] * 10 + [2] * 10), 3)
    out = reseed_block(g, z, 3)
    # isolates have rate 0, so block 1 donates; all neighborhoods are empty,
    # the smallest node id wins and moves alone
    assert np.array_equal(np.nonzero(out.z == 3)[0], [0])
    assert np.array_equal(out.z[1:], z.z[1:])


def test_reseed_block_triangle_migrates():
    # donor block 1 = {0..4} with a triangle on {0,1,2}; block 2 is a clique
    edges = [(0, 1), (0, 2), (1, 2)] + [(i, j) for i in range(5, 10) for j in range(i + 1, 10)]
    g = Graph.from_edges(10, edges)
    z = Labeling(np.array([1] * 5 + [2] * 5), 3)
    out = reseed_block(g, z, 3)
    assert np.array_equal(np.nonzero(out.z == 3)[0], [0, 1, 2])
    assert np.all(out.z[3:5] == 1) and np.all(out.z[5:] == 2)


def test_reseed_block_no_donor_warns_and_returns_input():
    g = Graph.from_edges(3, [(0, 1)])
    z = Labeling(np.array([1, 2, 3]), 4)  # all occupied blocks are singletons
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = reseed_block(g, z, 4)
    assert out is z
    assert any("reseed skipped" in str(w.message) for w in caught)


def test_reseed_block_validates_block_id():
    g = Graph.from_edges(3, [(0, 1)])
    z = Labeling(np.array([1, 1, 2]), 2)
    with pytest.raises(ValueError):
        reseed_block(g, z, 3)


# ---------------------------------------------------------------------------
# fit


@pytest.mark.parametrize("regularized", [False, True])
def test_fit_fixed_point_on_two_cliques(regularized):
    res = fit(TWO_CLIQUES, 2, CLIQUE_LABELS, FitOptions(regularized=regularized, seed=3))
    assert np.array_equal(res.labels.z, CLIQUE_LABELS.z)
    assert np.array_equal(res.theta.theta, [[1.0, 0.0], [0.0, 1.0]])
    assert res.converged
    assert res.nonempty_blocks == 2


def test_fit_empty_graph_returns_init_unconverged():
    g = Graph.from_edges(5, [])
    init = Labeling(np.array([1, 2, 1, 2, 1]), 2)
    res = fit(g, 2, init)
    assert np.array_equal(res.labels.z, init.z)
    assert not res.converged
    assert res.trace == []


def test_fit_validates_arguments():
    g = random_graph(8, 0.5, seed=0)
    with pytest.raises(ValueError, match="length"):
        fit(g, 2, Labeling(np.array([1, 2]), 2))
    with pytest.raises(ValueError, match="block count"):
        fit(g, 3, random_labeling(8, 2, seed=0))
    with pytest.raises(ValueError, match="1..n"):
        fit(g, 9, Labeling(np.arange(1, 9), 9))
    with pytest.raises(ValueError, match="unknown reseed policy"):
        FitOptions(reseed_policy="bogus").policy()


def test_fit_policy_defaults():
    assert FitOptions(regularized=True).policy() == RESEED
    assert FitOptions(regularized=False).policy() == KMEANS_RESTART
    assert FitOptions(reseed_policy=NONE).policy() == NONE


@pytest.mark.parametrize("regularized", [False, True])
def test_fit_invariants_on_random_instances(regularized):
    spec = SBMSpec((12, 12, 12), planted_theta(3, 0.4, 0.05))
    for seed in range(8):
        g, _ = sample_sbm(spec, seed=seed)
        init = spectral_init(g, 3, seed=seed)
        res = fit(g, 3, init, FitOptions(regularized=regularized, seed=seed))
        assert res.mixing.sum() == pytest.approx(1.0, abs=1e-9)
        for inner in res.inner_traces:
            steps = np.diff(inner)
            assert steps.size == 0 or steps.min() >= -1e-7 * max(1.0, abs(inner[0]))
        # reported objective is the tracked profile objective of the labels
        tracked = regularized_profile_loglik if regularized else profile_loglik
        assert res.objective == pytest.approx(tracked(g, res.labels), rel=1e-12)
        assert res.objective <= 1e-12
        expected_theta = (rmle_theta if regularized else mle_theta)(g, res.labels)
        assert np.allclose(res.theta.theta, expected_theta.theta, equal_nan=True)


def test_fit_deterministic():
    spec = SBMSpec((15, 15), planted_theta(2, 0.5, 0.1))
    g, _ = sample_sbm(spec, seed=4)
    init = spectral_init(g, 2, seed=4)
    r1 = fit(g, 2, init, FitOptions(seed=11))
    r2 = fit(g, 2, init, FitOptions(seed=11))
    assert np.array_equal(r1.labels.z, r2.labels.z)
    assert r1.trace == r2.trace


def test_fit_regularized_theta_is_pooled():
    spec = SBMSpec((10, 10, 10), planted_theta(3, 0.6, 0.08))
    g, _ = sample_sbm(spec, seed=9)
    init = spectral_init(g, 3, seed=9)
    res = fit(g, 3, init, FitOptions(regularized=True, seed=9))
    off = res.theta.theta[~np.eye(3, dtype=bool)]
    assert np.allclose(off, off[0])


def test_fit_reseed_policy_recovers_lost_block():
    # k=3 on a graph that is really two blocks: one block must empty out and
    # the reseed path has to repopulate it
    spec = SBMSpec((15, 15), planted_theta(2, 0.7, 0.05))
    g, _ = sample_sbm(spec, seed=2)
    init = random_labeling(30, 3, seed=0)
    res = fit(g, 3, init, FitOptions(regularized=True, seed=2, reseed_policy=RESEED))
    assert res.reseed_events  # at least one block was refilled
    assert res.labels.k == 3


def test_fit_none_policy_tolerates_empty_blocks():
    spec = SBMSpec((15, 15), planted_theta(2, 0.7, 0.05))
    g, _ = sample_sbm(spec, seed=2)
    init = random_labeling(30, 3, seed=0)
    res = fit(g, 3, init, FitOptions(regularized=True, seed=2, reseed_policy=NONE))
    assert res.reseed_events == []
    assert res.nonempty_blocks <= 3


def test_fit_improves_on_noisy_init():
    spec = SBMSpec((20,) * 4, planted_theta(4, 0.45, 0.03))
    g, z_true = sample_sbm(spec, seed=31)
    rng = np.random.default_rng(1)
    noisy = z_true.z.copy()
    flip = rng.choice(80, size=16, replace=False)
    noisy[flip] = rng.integers(1, 5, size=16)
    init = Labeling(noisy, 4)
    from sbmfit.metrics import misclustered_count

    res = fit(g, 4, init, FitOptions(regularized=True, seed=31))
    assert misclustered_count(z_true, res.labels) <= misclustered_count(z_true, init)
