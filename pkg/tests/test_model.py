import math

import numpy as np
import pytest

from csbm.errors import ValidationError
from csbm.expfam import Gaussian, Poisson
from csbm.model import CsbmSpec, Dataset, generate, sample_labels, spec_from_config, spec_to_config


def two_block(n=200, p_in=0.1, p_out=0.02, **kw):
    return CsbmSpec(n=n, pi=[0.5, 0.5], edge_prob=[[p_in, p_out], [p_out, p_in]], **kw)


class TestSpec:
    def test_pi_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            CsbmSpec(n=10, pi=[0.5, 0.4], edge_prob=np.full((2, 2), 0.1))

    def test_pi_positive(self):
        with pytest.raises(ValidationError):
            CsbmSpec(n=10, pi=[1.0, 0.0], edge_prob=np.full((2, 2), 0.1))

    def test_single_block_rejected(self):
        with pytest.raises(ValidationError):
            CsbmSpec(n=10, pi=[1.0], edge_prob=[[0.1]])

    def test_asymmetric_edge_prob(self):
        with pytest.raises(ValidationError):
            CsbmSpec(n=10, pi=[0.5, 0.5], edge_prob=[[0.1, 0.2], [0.3, 0.1]])

    def test_weight_theta_domain(self):
        with pytest.raises(ValidationError):
            two_block(weight_family=Poisson(), weight_theta=None)


class TestLabels:
    def test_fraction(self):
        z = sample_labels([0.5, 0.5], 10_000, 3)
        assert abs(np.mean(z == 1) - 0.5) < 0.02

    def test_deterministic(self):
        np.testing.assert_array_equal(sample_labels([0.2, 0.8], 100, 5), sample_labels([0.2, 0.8], 100, 5))


class TestGenerate:
    def test_empty_graph(self):
        ds = generate(two_block(p_in=0.0, p_out=0.0), 0)
        assert ds.m == 0

    def test_binary_weights(self):
        ds = generate(two_block(), 1)
        assert ds.binary
        assert np.all(ds.X.data == 1)

    def test_invariants(self):
        spec = two_block(weight_family=Gaussian(), weight_theta=np.array([[2.0, 0.5], [0.5, 2.0]]),
                         attr_family=Gaussian(d=2), attr_eta=np.array([[1.0, 0.0], [-1.0, 0.0]]))
        ds = generate(spec, 2)
        assert np.all(ds.rows < ds.cols)
        X = ds.X
        assert (X != X.T).nnz == 0
        assert np.all(X.diagonal() == 0)
        assert np.array_equal((X != 0).toarray(), ds.A.toarray().astype(bool))
        assert ds.Y.shape == (ds.n, 2)

    def test_edge_count_binary_phase(self):
        n, alpha = 500, 9.0
        spec = spec_from_config({"n": n, "K": 2, "alpha": {"in": alpha, "out": 1.0}})
        ds = generate(spec, 11)
        # expected count and variance given the drawn labels
        sizes = np.bincount(ds.z_true, minlength=2)
        pairs = np.array([[s * (s - 1) / 2 for s in sizes], [0, 0]], dtype=float)
        pairs[1, 0] = sizes[0] * sizes[1]
        p = spec.edge_prob
        mean = pairs[0, 0] * p[0, 0] + pairs[0, 1] * p[1, 1] + pairs[1, 0] * p[0, 1]
        var = pairs[0, 0] * p[0, 0] * (1 - p[0, 0]) + pairs[0, 1] * p[1, 1] * (1 - p[1, 1]) + pairs[1, 0] * p[0, 1] * (1 - p[0, 1])
        assert abs(ds.m - mean) < 4 * math.sqrt(var)

    def test_block_densities_converge(self):
        n = 2000
        a = 20 * math.log(n) / n
        spec = two_block(n=n, p_in=2 * a, p_out=a)
        errs = []
        for seed in range(5):
            ds = generate(spec, seed)
            z = ds.z_true
            sizes = np.bincount(z, minlength=2)
            same = z[ds.rows] == z[ds.cols]
            within = same.sum() / sum(s * (s - 1) / 2 for s in sizes)
            between = (~same).sum() / (sizes[0] * sizes[1])
            errs.append(max(abs(within - 2 * a) / (2 * a), abs(between - a) / a))
        assert np.median(errs) < 0.1

    def test_weight_means(self):
        mu = np.array([[4.0, 1.5], [1.5, 4.0]])
        spec = two_block(n=600, p_in=0.2, p_out=0.2, weight_family=Poisson(), weight_theta=np.log(mu))
        ds = generate(spec, 4, strict=True)
        z = ds.z_true
        for a, b in [(0, 0), (0, 1), (1, 1)]:
            sel = ((z[ds.rows] == a) & (z[ds.cols] == b)) | ((z[ds.rows] == b) & (z[ds.cols] == a))
            w = ds.weights[sel]
            # strict mode draws from the zero-truncated law
            target = mu[a, b] / (1 - math.exp(-mu[a, b]))
            assert abs(w.mean() - target) < 5 * w.std() / math.sqrt(w.size)

    def test_deterministic(self):
        spec = two_block(weight_family=Poisson(), weight_theta=np.zeros((2, 2)))
        assert generate(spec, 8).equals(generate(spec, 8))

    def test_given_labels(self):
        z = np.repeat([0, 1], 100)
        ds = generate(two_block(), 0, z=z)
        np.testing.assert_array_equal(ds.z_true, z)


class TestDataset:
    def test_rejects_self_loop(self):
        with pytest.raises(ValidationError):
            Dataset(n=3, rows=[1], cols=[1], weights=None, Y=np.zeros((3, 0)))

    def test_rejects_duplicates(self):
        with pytest.raises(ValidationError):
            Dataset(n=3, rows=[0, 0], cols=[1, 1], weights=None, Y=np.zeros((3, 0)))

    def test_rejects_zero_weight(self):
        with pytest.raises(ValidationError):
            Dataset(n=3, rows=[0], cols=[1], weights=[0.0], Y=np.zeros((3, 0)))


class TestConfig:
    def test_alpha_scaling(self):
        spec = spec_from_config({"n": 1000, "K": 2, "alpha": {"in": 5, "out": 1}})
        np.testing.assert_allclose(spec.edge_prob[0, 0], 5 * math.log(1000) / 1000)
        np.testing.assert_allclose(spec.edge_prob[0, 1], math.log(1000) / 1000)

    def test_polygon_sqrt_log_n(self):
        spec = spec_from_config({
            "n": 500, "K": 2, "alpha": 3.0, "attr_family": {"kind": "gaussian", "params": {"dim": 2}},
            "attr_mean": {"polygon": 1.0}, "attr_scale": "sqrt_log_n",
        })
        r = math.sqrt(math.log(500))
        np.testing.assert_allclose(np.abs(spec.attr_mean[:, 0]), [r, r])
        np.testing.assert_allclose(spec.attr_mean[:, 1], [0.0, 0.0], atol=1e-12)

    def test_round_trip(self):
        cfg = {
            "n": 50, "K": 3, "edge_prob": {"in": 0.3, "out": 0.1},
            "weight_family": {"kind": "gamma", "params": {"shape": 2.0}}, "weight_mean": {"in": 3.0, "out": 1.0},
            "attr_family": {"kind": "poisson"}, "attr_mean": [[1.0], [2.0], [3.0]],
        }
        spec = spec_from_config(cfg)
        again = spec_from_config(spec_to_config(spec))
        np.testing.assert_allclose(again.edge_prob, spec.edge_prob)
        np.testing.assert_allclose(again.weight_theta, spec.weight_theta)
        np.testing.assert_allclose(again.attr_eta, spec.attr_eta)
        assert again.weight_family == spec.weight_family

    def test_unknown_field(self):
        with pytest.raises(ValidationError, match="bogus"):
            spec_from_config({"n": 10, "K": 2, "alpha": 1.0, "bogus": 1})

    def test_unknown_family(self):
        with pytest.raises(ValidationError, match="weight_family"):
            spec_from_config({"n": 10, "K": 2, "alpha": 1.0, "weight_family": {"kind": "poison"}})
