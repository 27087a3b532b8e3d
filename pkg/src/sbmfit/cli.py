"""Command-line harness: sample, fit, sweep, theory-check, plot.

Exit codes: 0 success, 1 assertion/check failure, 2 usage or config errors.
All derived randomness is keyed off the master seed, so re-runs with the
same config produce byte-identical outputs (timing metadata excepted).
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    load_preset_text,
    parse_sample_config,
    parse_sweep_config,
    parse_theory_config,
    read_config_file,
)
from .graphs import SBMSpec, bernoulli_theta, gamma_theta, planted_theta, sample_sbm
from .io import (
    config_hash,
    format_float,
    read_edge_list,
    read_labels,
    write_csv,
    write_edge_list,
    write_key_values,
    write_labels,
)
from .likelihood import mle_theta
from .metrics import misclustering_report
from .plfit import FitOptions, FitResult, fit
from .rng import GENERATOR_NAME
from .spectral import AUTO, spectral_embedding, spectral_init
from .sweep import default_workers, run_sweep, write_sweep_csv
from .theorycheck import run_theory_sweep, write_theory_csv


def _timestamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S")


def _base_meta(seed: int, cfg_text: str) -> dict:
    return {
        "tool": "sbmfit",
        "version": __version__,
        "generator_algorithm": GENERATOR_NAME,
        "master_seed": seed,
        "config_hash": config_hash(cfg_text),
    }


def cmd_sample(args) -> int:
    text = read_config_file(args.config)
    cfg = parse_sample_config(text, origin=str(args.config))
    n = sum(cfg.block_sizes)
    if cfg.generator == "planted":
        theta = planted_theta(cfg.k, cfg.theta_in, cfg.theta_out)
    elif cfg.generator == "gamma":
        theta = gamma_theta(
            cfg.k, cfg.alpha, cfg.theta_in, cfg.out_degree, n, cfg.block_sizes[0], cfg.seed + 1
        )
    else:
        theta = bernoulli_theta(
            cfg.k, cfg.p, cfg.theta_in, cfg.out_degree, n, cfg.block_sizes[0], cfg.seed + 1
        )
    spec = SBMSpec(block_sizes=cfg.block_sizes, theta=theta)
    g, z = sample_sbm(spec, cfg.seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(out / "graph.edges", g)
    write_labels(out / "labels.txt", z)
    meta = _base_meta(cfg.seed, text)
    meta.update(
        generator=cfg.generator,
        n=n,
        k=cfg.k,
        edges=g.edge_count(),
        theta_clamp_events=theta.clamp_events,
    )
    write_key_values(out / "meta.txt", meta)
    print(f"wrote {out / 'graph.edges'} ({n} nodes, {g.edge_count()} edges)")
    return 0


def _write_fit_outputs(out: Path, tag: str, res: FitResult, meta: dict) -> None:
    write_labels(out / f"{tag}_labels.txt", res.labels)
    k = res.theta.k
    theta_rows = [
        tuple([a + 1] + [float(res.theta.theta[a, b]) for b in range(k)]) for a in range(k)
    ]
    write_csv(
        out / f"{tag}_theta.csv",
        ["block"] + [f"b{b + 1}" for b in range(k)],
        theta_rows,
        meta,
    )
    write_csv(
        out / f"{tag}_trace.csv",
        ["iteration", "objective"],
        [(it, float(obj)) for it, obj in res.trace],
        meta,
    )
    side = dict(meta)
    side.update(
        regularized=tag == "rmle",
        converged=res.converged,
        objective=format_float(res.objective),
        nonempty_blocks=res.nonempty_blocks,
        reseed_events=";".join(f"{it}:{blk}" for it, blk in res.reseed_events),
        kmeans_restarts=res.kmeans_restarts,
        mixing=",".join(format_float(v) for v in res.mixing),
    )
    write_key_values(out / f"{tag}_meta.txt", side)


def cmd_fit(args) -> int:
    g = read_edge_list(args.graph)
    k = args.k
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tau = AUTO if args.tau == "auto" else float(args.tau)

    init = spectral_init(g, k, tau=tau, seed=args.seed)
    if args.dump_embedding:
        emb = spectral_embedding(g, k, tau=tau)
        np.savetxt(args.dump_embedding, emb.vectors, fmt="%.12g", delimiter=",")

    truth = read_labels(args.truth) if args.truth else None
    meta = _base_meta(args.seed, Path(args.graph).name)
    meta.update(n=g.n, k=k, edges=g.edge_count())

    runs: list[str] = []
    if args.plain or not args.regularized:
        runs.append("mle")
    if args.regularized or not args.plain:
        runs.append("rmle")

    write_labels(out / "init_labels.txt", init)
    summary: dict[str, str] = {}
    for tag in runs:
        opts = FitOptions(
            regularized=tag == "rmle",
            max_outer=args.max_outer,
            max_inner=args.max_inner,
            tol=args.tol,
            seed=args.seed,
        )
        res = fit(g, k, init, opts)
        _write_fit_outputs(out, tag, res, meta)
        line = f"{tag}: objective={format_float(res.objective)} converged={res.converged}"
        if truth is not None:
            rep = misclustering_report(truth, res.labels)
            line += f" misclustered={rep.count} proportion={rep.count / g.n:.4f}"
            if rep.tie_classes:
                line += f" majority_ties={rep.tie_classes}"
        summary[tag] = line
        print(line)
    if truth is not None:
        rep = misclustering_report(truth, init)
        print(f"init: misclustered={rep.count} proportion={rep.count / g.n:.4f}")
    return 0


def cmd_sweep(args) -> int:
    if args.preset and args.config:
        raise ConfigError("pass either --preset or --config, not both")
    if args.preset:
        text = load_preset_text(args.preset)
        origin = f"preset {args.preset}"
    elif args.config:
        text = read_config_file(args.config)
        origin = str(args.config)
    else:
        raise ConfigError("sweep needs --preset or --config")
    cfg = parse_sweep_config(text, origin=origin)
    if args.preset:
        cfg = type(cfg)(**{**cfg.__dict__, "preset": args.preset})
    if args.replicates:
        cfg = type(cfg)(**{**cfg.__dict__, "replicates": args.replicates})
    if args.seed is not None:
        cfg = type(cfg)(**{**cfg.__dict__, "seed": args.seed})

    rows = run_sweep(cfg, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "sweep.csv"
    write_sweep_csv(csv_path, cfg, rows, timestamp=_timestamp())
    print(f"wrote {csv_path}")
    if not args.no_plot:
        from .plotting import plot_sweep

        fig_path = plot_sweep(csv_path, out / "sweep.png", axis=cfg.axis)
        print(f"wrote {fig_path}")
    return 0


def cmd_theory_check(args) -> int:
    if args.config:
        text = read_config_file(args.config)
        cfg = parse_theory_config(text, origin=str(args.config))
    else:
        cfg = parse_theory_config("[theory]\n", origin="defaults")
    results = run_theory_sweep(cfg, inject_fault=args.inject_fault)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        write_theory_csv(args.out, cfg, results, timestamp=_timestamp())
        print(f"wrote {args.out}")
    bad = [r for r in results if not r.all_ok]
    print(f"checked {len(results)} instances: {len(results) - len(bad)} ok, {len(bad)} failed")
    if bad:
        worst = bad[0]
        print(f"first failure: seed={worst.seed} n={worst.n} k={worst.k}", file=sys.stderr)
        return 1
    return 0


def cmd_plot(args) -> int:
    from .plotting import plot_sweep

    out = args.out or str(Path(args.csv).with_suffix(".png"))
    plot_sweep(args.csv, out, axis=args.axis)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sbmfit",
        description="Blockmodel sampling, pseudo-likelihood fitting, and population-likelihood checks.",
    )
    ap.add_argument("--version", action="version", version=f"sbmfit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="sample one blockmodel graph to an edge-list file")
    sp.add_argument("--config", required=True, help="INI config with a [sample] section")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_sample)

    fp = sub.add_parser("fit", help="fit block labels to an edge-list graph")
    fp.add_argument("--graph", required=True, help="edge-list file (n=<N> header)")
    fp.add_argument("--k", type=int, required=True, help="number of blocks")
    fp.add_argument("--truth", help="optional true labels file for scoring")
    fp.add_argument("--out", required=True, help="output directory")
    fp.add_argument("--regularized", action="store_true", help="run only the pooled fit")
    fp.add_argument("--plain", action="store_true", help="run only the unpooled fit")
    fp.add_argument("--seed", type=int, default=0)
    fp.add_argument("--tau", default="auto", help="Laplacian regularizer (default: average degree)")
    fp.add_argument("--max-outer", type=int, default=20)
    fp.add_argument("--max-inner", type=int, default=50)
    fp.add_argument("--tol", type=float, default=1e-6)
    fp.add_argument("--dump-embedding", help="write the spectral embedding rows to this CSV")
    fp.set_defaults(func=cmd_fit)

    wp = sub.add_parser("sweep", help="replicated error sweep over a parameter axis")
    wp.add_argument("--preset", help="bundled preset name")
    wp.add_argument("--config", help="INI config with a [sweep] section")
    wp.add_argument("--out", required=True, help="output directory")
    wp.add_argument("--workers", type=int, default=None, help="worker processes (default: $SBMFIT_WORKERS or 1)")
    wp.add_argument("--replicates", type=int, default=0, help="override replicate count")
    wp.add_argument("--seed", type=int, default=None, help="override master seed")
    wp.add_argument("--no-plot", action="store_true", help="skip the trend figure")
    wp.set_defaults(func=cmd_sweep)

    tp = sub.add_parser("theory-check", help="randomized partition/refinement assertion sweep")
    tp.add_argument("--config", help="INI config with a [theory] section")
    tp.add_argument("--out", help="write per-instance results to this CSV")
    tp.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    tp.set_defaults(func=cmd_theory_check)

    pp = sub.add_parser("plot", help="render the trend figure for an existing sweep CSV")
    pp.add_argument("--csv", required=True)
    pp.add_argument("--out")
    pp.add_argument("--axis", choices=("k", "alpha", "p"))
    pp.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
