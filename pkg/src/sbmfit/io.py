"""File formats: edge lists, label files, CSV with key=value metadata headers.

Edge-list files carry a single `n=<N>` header line followed by one `i j`
pair per line, 1-indexed with i < j. Label files carry one 1-based block
label per line. CSV reports put provenance in leading `# key=value` comment
lines; everything below them is the body that determinism guarantees apply
to (timing fields excepted, see `canonical_csv_body`).
"""
from __future__ import annotations

import hashlib
import io as _io
from pathlib import Path

import numpy as np

from .graphs import DENSE_LIMIT, Graph, Labeling

FLOAT_FMT = "%.12g"


def write_edge_list(path, g: Graph) -> None:
    lines = [f"n={g.n}"]
    for i, j in g.edge_pairs():
        lines.append(f"{i + 1} {j + 1}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> Graph:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("n="):
        raise ValueError(f"{path}: first line must be 'n=<N>'")
    try:
        n = int(text[0][2:])
    except ValueError as exc:
        raise ValueError(f"{path}: malformed node count {text[0]!r}") from exc
    if n < 1:
        raise ValueError(f"{path}: node count must be positive")
    edges = []
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'i j', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: non-integer endpoint in {line!r}") from exc
        if not 1 <= i < j <= n:
            raise ValueError(f"{path}:{lineno}: endpoints must satisfy 1 <= i < j <= n")
        edges.append((i - 1, j - 1))
    return Graph.from_edges(n, edges, force_sparse=n > DENSE_LIMIT)


def write_labels(path, z: Labeling) -> None:
    Path(path).write_text("\n".join(str(int(v)) for v in z.z) + "\n")


def read_labels(path, k: int | None = None) -> Labeling:
    values = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            values.append(int(line))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: non-integer label {line!r}") from exc
    if not values:
        raise ValueError(f"{path}: no labels found")
    arr = np.asarray(values, dtype=np.int64)
    return Labeling(arr, int(arr.max()) if k is None else k)


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def metadata_lines(meta: dict) -> list[str]:
    return [f"# {key}={meta[key]}" for key in meta]


def format_float(x: float) -> str:
    return FLOAT_FMT % x


def write_csv(path, columns: list[str], rows: list[tuple], meta: dict) -> None:
    buf = _io.StringIO()
    for line in metadata_lines(meta):
        buf.write(line + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        cells = [format_float(v) if isinstance(v, float) else str(v) for v in row]
        buf.write(",".join(cells) + "\n")
    Path(path).write_text(buf.getvalue())


def canonical_csv_body(text: str, drop_columns: tuple[str, ...] = ()) -> str:
    """CSV body with comment metadata stripped and named columns removed.

    Timing columns (e.g. sweep `mean_seconds`) vary run to run by nature;
    dropping them yields the portion of the file that is reproduced byte for
    byte given the same config, seed, and package version.
    """
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    if not lines or not drop_columns:
        return "\n".join(lines) + ("\n" if lines else "")
    header = lines[0].split(",")
    keep = [idx for idx, name in enumerate(header) if name not in drop_columns]
    out = []
    for ln in lines:
        cells = ln.split(",")
        out.append(",".join(cells[idx] for idx in keep))
    return "\n".join(out) + "\n"


def write_key_values(path, meta: dict) -> None:
    Path(path).write_text("".join(f"{k}={v}\n" for k, v in meta.items()))
