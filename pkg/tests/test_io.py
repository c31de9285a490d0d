import json

import numpy as np
import pytest

from csbm import io as cio
from csbm.errors import ParseError, ValidationError
from csbm.expfam import Exponential, Gaussian
from csbm.model import CsbmSpec, generate


@pytest.fixture
def weighted():
    spec = CsbmSpec(
        n=80, pi=[0.5, 0.5], edge_prob=[[0.2, 0.05], [0.05, 0.2]],
        weight_family=Exponential(), weight_theta=np.array([[-0.5, -2.0], [-2.0, -0.5]]),
        attr_family=Gaussian(d=3), attr_eta=np.array([[1.0, 0.0, 0.5], [0.0, 1.0, -0.5]]),
    )
    return generate(spec, 17)


def test_round_trip_exact(tmp_path, weighted):
    cio.save_dataset(weighted, tmp_path)
    back = cio.load_dataset(tmp_path)
    assert back.equals(weighted)
    np.testing.assert_array_equal(back.weights, weighted.weights)
    np.testing.assert_array_equal(back.Y, weighted.Y)
    np.testing.assert_array_equal(back.z_true, weighted.z_true)


def test_round_trip_binary(tmp_path):
    spec = CsbmSpec(n=30, pi=[0.5, 0.5], edge_prob=[[0.3, 0.1], [0.1, 0.3]])
    ds = generate(spec, 2)
    cio.save_dataset(ds, tmp_path)
    back = cio.load_dataset(tmp_path)
    assert back.binary and back.equals(ds)


def _edges(tmp_path, body, n=4):
    p = tmp_path / "e.txt"
    p.write_text(f"# csbm-edges v1 n={n}\n" + body)
    return p


def test_self_loop(tmp_path):
    with pytest.raises(ValidationError, match="self-loop"):
        cio.read_edges(_edges(tmp_path, "3 3 1.0\n"))


def test_asymmetric(tmp_path):
    with pytest.raises(ValidationError):
        cio.read_edges(_edges(tmp_path, "0 1 1.0\n1 0 2.0\n"))


def test_parse_error_has_line(tmp_path):
    with pytest.raises(ParseError) as info:
        cio.read_edges(_edges(tmp_path, "0 1 1.0\n0 two 1.0\n"))
    assert info.value.line == 3


def test_node_out_of_range(tmp_path):
    with pytest.raises(ValidationError):
        cio.read_edges(_edges(tmp_path, "0 9 1.0\n"))


def test_attribute_row_count(tmp_path, weighted):
    cio.save_dataset(weighted, tmp_path)
    lines = (tmp_path / cio.ATTRS_NAME).read_text().splitlines()
    (tmp_path / cio.ATTRS_NAME).write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ValidationError):
        cio.load_dataset(tmp_path)


def test_labels_round_trip(tmp_path):
    z = np.array([0, 2, 1, 1, 0])
    cio.write_labels(z, tmp_path / "z.txt")
    np.testing.assert_array_equal(cio.read_labels(tmp_path / "z.txt"), z)


def test_bad_label(tmp_path):
    (tmp_path / "z.txt").write_text("0\nx\n")
    with pytest.raises(ParseError):
        cio.read_labels(tmp_path / "z.txt")


def test_config_json_and_toml(tmp_path):
    cfg = {"n": 10, "K": 2, "alpha": {"in": 3.0, "out": 1.0}}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    (tmp_path / "c.toml").write_text("n = 10\nK = 2\n[alpha]\nin = 3.0\nout = 1.0\n")
    assert cio.load_config(tmp_path / "c.json") == cfg
    assert cio.load_config(tmp_path / "c.toml") == cfg


def test_config_parse_error(tmp_path):
    (tmp_path / "c.json").write_text("{\n  \"n\": ,\n}")
    with pytest.raises(ParseError) as info:
        cio.load_config(tmp_path / "c.json")
    assert info.value.line == 2
