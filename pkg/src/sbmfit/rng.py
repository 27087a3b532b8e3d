"""Seed derivation helpers.

Every random quantity in the package is drawn from a PCG64 generator keyed
positionally off a master seed, so results are reproducible and independent
of execution order (worker count, restart scheduling).
"""
from __future__ import annotations

import numpy as np

# Recorded in output metadata so downstream consumers know which bit stream
# a seed refers to.
GENERATOR_NAME = "PCG64"


def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream of `master_seed` addressed by `key`."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(key)))


def derive_seed(master_seed: int, *key: int) -> int:
    """Plain integer seed for the substream addressed by `key`."""
    return int(derive_rng(master_seed, *key).integers(0, 2**63))
