"""Replicated benchmark sweeps over a parameter axis.

Each cell of the grid (axis value x replicate) samples a graph, runs the
spectral initializer and both fitters on the same adjacency, and scores
misclustering against the planted labels. Replicate seeds are derived
positionally from the master seed, so results are identical no matter how
work is distributed across workers.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import SweepConfig
from .graphs import SBMSpec, bernoulli_theta, gamma_theta, planted_theta, sample_sbm
from .io import config_hash, write_csv
from .metrics import misclustered_count
from .plfit import FitOptions, fit
from .rng import GENERATOR_NAME, derive_seed
from .spectral import spectral_init

SWEEP_COLUMNS = ["preset", "axis_value", "method", "replicates", "mean_error", "stderr_error", "mean_seconds"]
TIMING_COLUMNS = ("mean_seconds",)
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SweepRow:
    preset: str
    axis_value: float
    method: str
    replicates: int
    mean_error: float
    stderr_error: float
    mean_seconds: float

    def as_tuple(self) -> tuple:
        return (
            self.preset,
            float(self.axis_value),
            self.method,
            self.replicates,
            float(self.mean_error),
            float(self.stderr_error),
            float(self.mean_seconds),
        )


def _cell_model(cfg: SweepConfig, value: float) -> tuple[int, int]:
    """Resolve (k, n) for one axis value."""
    k = int(round(value)) if cfg.axis == "k" else cfg.k
    return k, k * cfg.block_size


def _cell_theta(cfg: SweepConfig, value: float, k: int, n: int, theta_seed: int):
    if cfg.generator == "planted":
        return planted_theta(k, cfg.theta_in, cfg.out_degree / n)
    if cfg.generator == "gamma":
        alpha = value if cfg.axis == "alpha" else None
        if alpha is None:
            raise ValueError("gamma sweeps must use the alpha axis")
        return gamma_theta(k, alpha, cfg.theta_in, cfg.out_degree, n, cfg.block_size, theta_seed)
    if cfg.generator == "bernoulli":
        p = value if cfg.axis == "p" else None
        if p is None:
            raise ValueError("bernoulli sweeps must use the p axis")
        return bernoulli_theta(k, p, cfg.theta_in, cfg.out_degree, n, cfg.block_size, theta_seed)
    raise ValueError(f"unknown generator {cfg.generator!r}")


def run_replicate(cfg: SweepConfig, cell: int, rep: int) -> dict[str, tuple[float, float]]:
    """One replicate of one cell; returns method -> (error proportion, seconds)."""
    value = cfg.values[cell]
    k, n = _cell_model(cfg, value)
    theta = _cell_theta(cfg, value, k, n, derive_seed(cfg.seed, cell, rep, 1))
    spec = SBMSpec(block_sizes=(cfg.block_size,) * k, theta=theta)
    g, z_true = sample_sbm(spec, derive_seed(cfg.seed, cell, rep, 0))

    out: dict[str, tuple[float, float]] = {}
    t0 = time.perf_counter()
    init = spectral_init(g, k, seed=derive_seed(cfg.seed, cell, rep, 2))
    t_init = time.perf_counter() - t0
    out["init"] = (misclustered_count(z_true, init) / n, t_init)

    if "mle" in cfg.methods:
        t0 = time.perf_counter()
        res = fit(g, k, init, FitOptions(regularized=False, seed=derive_seed(cfg.seed, cell, rep, 3)))
        out["mle"] = (misclustered_count(z_true, res.labels) / n, time.perf_counter() - t0)
    if "rmle" in cfg.methods:
        t0 = time.perf_counter()
        res = fit(g, k, init, FitOptions(regularized=True, seed=derive_seed(cfg.seed, cell, rep, 4)))
        out["rmle"] = (misclustered_count(z_true, res.labels) / n, time.perf_counter() - t0)
    return out


def _task(args: tuple) -> tuple[int, int, dict[str, tuple[float, float]]]:
    cfg, cell, rep = args
    return cell, rep, run_replicate(cfg, cell, rep)


def default_workers() -> int:
    raw = os.environ.get("SBMFIT_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> list[SweepRow]:
    workers = default_workers() if workers is None else max(1, workers)
    tasks = [(cfg, cell, rep) for cell in range(len(cfg.values)) for rep in range(cfg.replicates)]
    results: dict[tuple[int, int], dict[str, tuple[float, float]]] = {}
    if workers == 1:
        for args in tasks:
            cell, rep, res = _task(args)
            results[(cell, rep)] = res
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for cell, rep, res in pool.map(_task, tasks, chunksize=1):
                results[(cell, rep)] = res

    rows: list[SweepRow] = []
    for cell, value in enumerate(cfg.values):
        for method in cfg.methods:
            errs = np.array([results[(cell, rep)][method][0] for rep in range(cfg.replicates)])
            secs = np.array([results[(cell, rep)][method][1] for rep in range(cfg.replicates)])
            stderr = float(errs.std(ddof=1) / math.sqrt(len(errs))) if len(errs) > 1 else 0.0
            rows.append(
                SweepRow(
                    preset=cfg.preset,
                    axis_value=float(value),
                    method=method,
                    replicates=cfg.replicates,
                    mean_error=float(errs.mean()),
                    stderr_error=stderr,
                    mean_seconds=float(secs.mean()),
                )
            )
    return rows


def sweep_metadata(cfg: SweepConfig, *, timestamp: str | None = None) -> dict:
    meta = {
        "tool": "sbmfit",
        "version": __version__,
        "schema": SCHEMA_VERSION,
        "generator_algorithm": GENERATOR_NAME,
        "master_seed": cfg.seed,
        "config_hash": config_hash(cfg.source_text or repr(cfg)),
        "preset": cfg.preset,
    }
    if timestamp is not None:
        meta["timestamp"] = timestamp
    return meta


def write_sweep_csv(path, cfg: SweepConfig, rows: list[SweepRow], *, timestamp: str | None = None) -> None:
    write_csv(path, SWEEP_COLUMNS, [r.as_tuple() for r in rows], sweep_metadata(cfg, timestamp=timestamp))
