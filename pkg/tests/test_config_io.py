"""Config parsing, presets, and the file formats behind the CLI."""
import numpy as np
import pytest

from conftest import random_graph
from sbmfit.config import (
    ConfigError,
    load_preset_text,
    parse_sample_config,
    parse_sweep_config,
    parse_theory_config,
    PRESET_NAMES,
    read_config_file,
)
from sbmfit.graphs import Labeling
from sbmfit.io import (
    canonical_csv_body,
    config_hash,
    read_edge_list,
    read_labels,
    write_csv,
    write_edge_list,
    write_key_values,
    write_labels,
)

SAMPLE_TEXT = """
[sample]
generator = planted
k = 3
block_size = 5
theta_in = 0.5
theta_out = 0.1
seed = 42
"""


# ---------------------------------------------------------------------------
# edge lists and label files


@pytest.mark.parametrize("force_sparse", [False, True])
def test_edge_list_round_trip(tmp_path, force_sparse):
    g = random_graph(15, 0.3, seed=1, force_sparse=force_sparse)
    path = tmp_path / "g.edges"
    write_edge_list(path, g)
    back = read_edge_list(path)
    assert back.n == g.n
    assert np.array_equal(back.edge_pairs(), g.edge_pairs())


def test_edge_list_header_and_line_errors(tmp_path):
    path = tmp_path / "bad.edges"
    path.write_text("3 4\n")
    with pytest.raises(ValueError, match="n=<N>"):
        read_edge_list(path)
    path.write_text("n=zero\n")
    with pytest.raises(ValueError, match="malformed node count"):
        read_edge_list(path)
    path.write_text("n=0\n")
    with pytest.raises(ValueError, match="positive"):
        read_edge_list(path)
    path.write_text("n=5\n3 2\n")
    with pytest.raises(ValueError, match="bad.edges:2"):
        read_edge_list(path)
    path.write_text("n=5\n1 1\n")
    with pytest.raises(ValueError, match="1 <= i < j <= n"):
        read_edge_list(path)
    path.write_text("n=5\n1 two\n")
    with pytest.raises(ValueError, match="non-integer endpoint"):
        read_edge_list(path)
    path.write_text("n=5\n1 2 3\n")
    with pytest.raises(ValueError, match="expected 'i j'"):
        read_edge_list(path)


def test_edge_list_blank_lines_and_empty_graph(tmp_path):
    path = tmp_path / "g.edges"
    path.write_text("n=4\n\n1 2\n\n")
    g = read_edge_list(path)
    assert g.edge_count() == 1
    path.write_text("n=4\n")
    assert read_edge_list(path).edge_count() == 0


def test_labels_round_trip_and_k_inference(tmp_path):
    z = Labeling(np.array([2, 1, 3, 1]), 3)
    path = tmp_path / "z.labels"
    write_labels(path, z)
    assert path.read_text() == "2\n1\n3\n1\n"
    back = read_labels(path)
    assert np.array_equal(back.z, z.z)
    assert back.k == 3  # inferred from the largest label
    wide = read_labels(path, k=5)
    assert wide.k == 5


def test_labels_errors(tmp_path):
    path = tmp_path / "z.labels"
    path.write_text("1\nx\n")
    with pytest.raises(ValueError, match="non-integer label"):
        read_labels(path)
    path.write_text("\n")
    with pytest.raises(ValueError, match="no labels"):
        read_labels(path)


# ---------------------------------------------------------------------------
# CSV and metadata


def test_write_csv_layout(tmp_path):
    path = tmp_path / "out.csv"
    write_csv(
        path,
        ["a", "b"],
        [(1, 0.5), (2, 0.25)],
        meta={"seed": 7, "tool": "x"},
    )
    assert path.read_text() == "# seed=7\n# tool=x\na,b\n1,0.5\n2,0.25\n"


def test_canonical_csv_body_strips_comments_and_columns():
    text = "# when=now\na,b,c\n1,2,3\n4,5,6\n"
    assert canonical_csv_body(text) == "a,b,c\n1,2,3\n4,5,6\n"
    assert canonical_csv_body(text, drop_columns=("b",)) == "a,c\n1,3\n4,6\n"
    assert canonical_csv_body("# only-meta\n") == ""


def test_config_hash_is_stable_prefix():
    h = config_hash("hello\n")
    assert len(h) == 12
    assert h == config_hash("hello\n")
    assert h != config_hash("hello")


def test_write_key_values(tmp_path):
    path = tmp_path / "meta.txt"
    write_key_values(path, {"n": 10, "hash": "abc"})
    assert path.read_text() == "n=10\nhash=abc\n"


# ---------------------------------------------------------------------------
# sample configs


def test_parse_sample_config_planted():
    cfg = parse_sample_config(SAMPLE_TEXT)
    assert cfg.generator == "planted"
    assert cfg.block_sizes == (5, 5, 5)
    assert cfg.theta_in == 0.5 and cfg.theta_out == 0.1
    assert cfg.seed == 42


def test_parse_sample_config_explicit_sizes():
    text = SAMPLE_TEXT.replace("block_size = 5", "block_sizes = 4, 5, 6")
    assert parse_sample_config(text).block_sizes == (4, 5, 6)
    bad = SAMPLE_TEXT.replace("block_size = 5", "block_sizes = 4, 5")
    with pytest.raises(ConfigError, match="must list 3 entries"):
        parse_sample_config(bad)


def test_parse_sample_config_errors():
    with pytest.raises(ConfigError, match=r"missing \[sample\]"):
        parse_sample_config("[sweep]\n")
    with pytest.raises(ConfigError, match="unknown generator"):
        parse_sample_config(SAMPLE_TEXT.replace("planted", "uniform"))
    with pytest.raises(ConfigError, match="missing required key"):
        parse_sample_config("[sample]\ngenerator = planted\n")
    with pytest.raises(ConfigError, match="needs theta_out"):
        parse_sample_config(SAMPLE_TEXT.replace("theta_out = 0.1\n", ""))
    with pytest.raises(ConfigError, match="bad value"):
        parse_sample_config(SAMPLE_TEXT.replace("k = 3", "k = three"))


def test_parse_sample_config_heterogeneous_generators():
    gamma = """
[sample]
generator = gamma
k = 4
block_size = 6
theta_in = 0.4
alpha = 0.2
out_degree = 5
"""
    cfg = parse_sample_config(gamma)
    assert cfg.alpha == 0.2 and cfg.out_degree == 5.0
    with pytest.raises(ConfigError, match="needs alpha and out_degree"):
        parse_sample_config(gamma.replace("alpha = 0.2\n", ""))
    with pytest.raises(ConfigError, match="equal block sizes"):
        parse_sample_config(gamma.replace("block_size = 6", "block_sizes = 6,6,6,7"))
    bern = gamma.replace("gamma", "bernoulli").replace("alpha = 0.2", "p = 0.5")
    assert parse_sample_config(bern).p == 0.5
    with pytest.raises(ConfigError, match="needs p and out_degree"):
        parse_sample_config(bern.replace("p = 0.5\n", ""))


# ---------------------------------------------------------------------------
# sweep configs and presets


def test_presets_all_parse():
    for name in PRESET_NAMES:
        cfg = parse_sweep_config(f"[sweep]\npreset = {name}\n", origin=name)
        assert cfg.replicates == 50
        assert cfg.methods == ("init", "mle", "rmle")
    fig1 = parse_sweep_config("[sweep]\npreset = figure1\n")
    assert fig1.axis == "k"
    assert fig1.values == (10, 20, 30, 40, 50, 60, 70, 80, 90, 100)
    assert fig1.out_degree == 5.0 and fig1.theta_in == 0.4


def test_preset_keys_can_be_overridden():
    cfg = parse_sweep_config(
        "[sweep]\npreset = figure1\nout_degree = 10\nreplicates = 3\nvalues = 10, 20\n"
    )
    assert cfg.preset == "figure1"
    assert cfg.out_degree == 10.0
    assert cfg.replicates == 3
    assert cfg.values == (10.0, 20.0)
    assert cfg.theta_in == 0.4  # untouched keys keep the preset values


def test_unknown_preset_rejected():
    with pytest.raises(ConfigError, match="unknown preset"):
        parse_sweep_config("[sweep]\npreset = figure3\n")
    with pytest.raises(ConfigError, match="unknown preset"):
        load_preset_text("nope")


def test_parse_sweep_config_validation():
    base = (
        "[sweep]\ngenerator = planted\naxis = k\nvalues = 2,3\n"
        "block_size = 6\ntheta_in = 0.5\nout_degree = 2\nreplicates = 2\n"
    )
    cfg = parse_sweep_config(base)
    assert cfg.preset == "custom"
    assert cfg.axis == "k" and cfg.k == 0
    with pytest.raises(ConfigError, match="axis must be"):
        parse_sweep_config(base.replace("axis = k", "axis = n"))
    with pytest.raises(ConfigError, match="unknown generator"):
        parse_sweep_config(base.replace("planted", "poisson"))
    with pytest.raises(ConfigError, match="unknown method"):
        parse_sweep_config(base + "methods = init,map\n")
    with pytest.raises(ConfigError, match="values must be non-empty"):
        parse_sweep_config(base.replace("values = 2,3", "values ="))
    with pytest.raises(ConfigError, match="replicates must be positive"):
        parse_sweep_config(base.replace("replicates = 2", "replicates = 0"))
    with pytest.raises(ConfigError, match="fixed k required"):
        parse_sweep_config(base.replace("axis = k", "axis = alpha").replace("planted", "gamma"))
    with pytest.raises(ConfigError, match=r"missing \[sweep\]"):
        parse_sweep_config("[sample]\n")


def test_parse_theory_config():
    cfg = parse_theory_config("[theory]\n")
    assert (cfg.instances, cfg.n_min, cfg.n_max) == (200, 8, 30)
    assert (cfg.k_min, cfg.k_max, cfg.c_const, cfg.seed) == (2, 4, 1.0, 7)
    small = parse_theory_config("[theory]\ninstances = 5\nn_max = 12\nseed = 3\n")
    assert small.instances == 5 and small.n_max == 12 and small.seed == 3
    with pytest.raises(ConfigError, match="n_min must be at least k_max"):
        parse_theory_config("[theory]\nn_min = 3\nk_max = 4\n")
    with pytest.raises(ConfigError, match="inconsistent"):
        parse_theory_config("[theory]\ninstances = 0\n")


def test_read_config_file_missing(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        read_config_file(tmp_path / "absent.cfg")
    p = tmp_path / "c.cfg"
    p.write_text("[sweep]\n")
    assert read_config_file(p) == "[sweep]\n"


def test_ini_syntax_error_maps_to_config_error():
    with pytest.raises(ConfigError):
        parse_sweep_config("not an ini file at all")
