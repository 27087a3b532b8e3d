"""INI-style configuration parsing for the command-line harness.

Configs are flat key=value entries under section headers. Sweep configs may
name a bundled preset; explicit keys override the preset's values.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path


class ConfigError(Exception):
    """Malformed or inconsistent configuration; maps to exit code 2."""


PRESET_NAMES = ("figure1", "figure2-gamma", "figure2-bernoulli")


def _read_ini(text: str, origin: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    return parser


def load_preset_text(name: str) -> str:
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; choose one of {', '.join(PRESET_NAMES)}")
    return resources.files("sbmfit.presets").joinpath(f"{name}.cfg").read_text()


def _section(parser: configparser.ConfigParser, name: str, origin: str) -> dict[str, str]:
    if not parser.has_section(name):
        raise ConfigError(f"{origin}: missing [{name}] section")
    return dict(parser.items(name))


def _get(raw: dict[str, str], key: str, cast, default=None, *, origin: str = "config"):
    if key not in raw:
        if default is not None:
            return default
        raise ConfigError(f"{origin}: missing required key {key!r}")
    try:
        return cast(raw[key])
    except ValueError as exc:
        raise ConfigError(f"{origin}: bad value for {key!r}: {raw[key]!r}") from exc


def _float_list(s: str) -> list[float]:
    return [float(part) for part in s.replace(",", " ").split()]


def _int_list(s: str) -> list[int]:
    return [int(part) for part in s.replace(",", " ").split()]


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(s)


@dataclass(frozen=True)
class SampleConfig:
    generator: str
    k: int
    block_sizes: tuple[int, ...]
    theta_in: float
    theta_out: float | None
    alpha: float | None
    p: float | None
    out_degree: float | None
    seed: int
    source_text: str = ""


def parse_sample_config(text: str, origin: str = "config") -> SampleConfig:
    raw = _section(_read_ini(text, origin), "sample", origin)
    generator = _get(raw, "generator", str, origin=origin)
    if generator not in ("planted", "gamma", "bernoulli"):
        raise ConfigError(f"{origin}: unknown generator {generator!r}")
    k = _get(raw, "k", int, origin=origin)
    if "block_sizes" in raw:
        sizes = tuple(_get(raw, "block_sizes", _int_list, origin=origin))
        if len(sizes) != k:
            raise ConfigError(f"{origin}: block_sizes must list {k} entries")
    else:
        s = _get(raw, "block_size", int, origin=origin)
        sizes = (s,) * k
    theta_in = _get(raw, "theta_in", float, origin=origin)
    cfg = SampleConfig(
        generator=generator,
        k=k,
        block_sizes=sizes,
        theta_in=theta_in,
        theta_out=_get(raw, "theta_out", float, default=-1.0, origin=origin),
        alpha=_get(raw, "alpha", float, default=-1.0, origin=origin),
        p=_get(raw, "p", float, default=-1.0, origin=origin),
        out_degree=_get(raw, "out_degree", float, default=-1.0, origin=origin),
        seed=_get(raw, "seed", int, default=0, origin=origin),
        source_text=text,
    )
    if generator == "planted" and cfg.theta_out < 0:
        raise ConfigError(f"{origin}: planted generator needs theta_out")
    if generator == "gamma" and (cfg.alpha <= 0 or cfg.out_degree <= 0):
        raise ConfigError(f"{origin}: gamma generator needs alpha and out_degree")
    if generator == "bernoulli" and (cfg.p <= 0 or cfg.out_degree <= 0):
        raise ConfigError(f"{origin}: bernoulli generator needs p and out_degree")
    if generator in ("gamma", "bernoulli") and len(set(sizes)) != 1:
        raise ConfigError(f"{origin}: {generator} generator requires equal block sizes")
    return cfg


@dataclass(frozen=True)
class SweepConfig:
    preset: str
    generator: str           # planted | gamma | bernoulli
    axis: str                # k | alpha | p
    values: tuple[float, ...]
    k: int                   # fixed block count (ignored when axis == "k")
    block_size: int
    theta_in: float
    out_degree: float        # planted: theta_out = out_degree / n
    replicates: int
    seed: int
    methods: tuple[str, ...] = ("init", "mle", "rmle")
    source_text: str = ""


def parse_sweep_config(text: str, origin: str = "config") -> SweepConfig:
    raw = _section(_read_ini(text, origin), "sweep", origin)
    if "preset" in raw and raw["preset"]:
        base_text = load_preset_text(raw["preset"])
        base = _section(_read_ini(base_text, raw["preset"]), "sweep", raw["preset"])
        base.update(raw)
        raw = base
    axis = _get(raw, "axis", str, origin=origin)
    if axis not in ("k", "alpha", "p"):
        raise ConfigError(f"{origin}: axis must be one of k, alpha, p")
    generator = _get(raw, "generator", str, origin=origin)
    if generator not in ("planted", "gamma", "bernoulli"):
        raise ConfigError(f"{origin}: unknown generator {generator!r}")
    methods = tuple(_get(raw, "methods", str, default="init,mle,rmle").replace(",", " ").split())
    for m in methods:
        if m not in ("init", "mle", "rmle"):
            raise ConfigError(f"{origin}: unknown method {m!r}")
    values = tuple(_get(raw, "values", _float_list, origin=origin))
    if not values:
        raise ConfigError(f"{origin}: values must be non-empty")
    cfg = SweepConfig(
        preset=raw.get("preset", "custom"),
        generator=generator,
        axis=axis,
        values=values,
        k=_get(raw, "k", int, default=0, origin=origin),
        block_size=_get(raw, "block_size", int, origin=origin),
        theta_in=_get(raw, "theta_in", float, origin=origin),
        out_degree=_get(raw, "out_degree", float, origin=origin),
        replicates=_get(raw, "replicates", int, origin=origin),
        seed=_get(raw, "seed", int, default=0, origin=origin),
        methods=methods,
        source_text=text,
    )
    if cfg.axis != "k" and cfg.k < 1:
        raise ConfigError(f"{origin}: fixed k required when axis is {axis!r}")
    if cfg.replicates < 1:
        raise ConfigError(f"{origin}: replicates must be positive")
    return cfg


@dataclass(frozen=True)
class TheoryConfig:
    instances: int = 200
    n_min: int = 8
    n_max: int = 30
    k_min: int = 2
    k_max: int = 4
    c_const: float = 1.0
    seed: int = 7
    source_text: str = ""


def parse_theory_config(text: str, origin: str = "config") -> TheoryConfig:
    raw = _section(_read_ini(text, origin), "theory", origin)
    cfg = TheoryConfig(
        instances=_get(raw, "instances", int, default=200, origin=origin),
        n_min=_get(raw, "n_min", int, default=8, origin=origin),
        n_max=_get(raw, "n_max", int, default=30, origin=origin),
        k_min=_get(raw, "k_min", int, default=2, origin=origin),
        k_max=_get(raw, "k_max", int, default=4, origin=origin),
        c_const=_get(raw, "c_const", float, default=1.0, origin=origin),
        seed=_get(raw, "seed", int, default=7, origin=origin),
        source_text=text,
    )
    if cfg.n_min < cfg.k_max:
        raise ConfigError(f"{origin}: n_min must be at least k_max")
    if cfg.instances < 1 or cfg.n_min < 2 or cfg.k_min < 1 or cfg.k_max < cfg.k_min:
        raise ConfigError(f"{origin}: inconsistent theory sweep bounds")
    return cfg


def read_config_file(path) -> str:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    return p.read_text()
