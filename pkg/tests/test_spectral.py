import numpy as np
import pytest
import scipy.sparse as sp

from csbm.errors import ValidationError
from csbm.metrics import ari, exact_recovery
from csbm.model import Dataset, generate, spec_from_config
from csbm.spectral import (
    gram_eigenpairs,
    initialize,
    kmeans,
    laplacian_eigenpairs,
    normalized_laplacian,
    random_init,
    spectral_embedding,
)


def clique(n, offset=0):
    return [(offset + i, offset + j) for i in range(n) for j in range(i + 1, n)]


def adjacency(n, pairs):
    r, c = zip(*pairs) if pairs else ((), ())
    A = sp.coo_matrix((np.ones(len(r)), (r, c)), shape=(n, n))
    return (A + A.T).tocsr()


class TestLaplacian:
    def test_empty_graph_identity(self):
        L = normalized_laplacian(sp.csr_matrix((5, 5)))
        np.testing.assert_array_equal(L.toarray(), np.eye(5))

    def test_complete_graph(self):
        n = 6
        A = adjacency(n, clique(n))
        vals, vecs = laplacian_eigenpairs(A, 1)
        assert vals[0] == pytest.approx(0.0, abs=1e-12)
        d = np.sqrt(np.asarray(A.sum(axis=1)).ravel())
        np.testing.assert_allclose(np.abs(vecs[:, 0]), d / np.linalg.norm(d), atol=1e-10)

    def test_two_cliques(self):
        A = adjacency(10, clique(5) + clique(5, 5))
        vals = np.linalg.eigvalsh(normalized_laplacian(A).toarray())
        assert np.sum(np.abs(vals) < 1e-10) == 2
        got, _ = laplacian_eigenpairs(A, 3)
        np.testing.assert_allclose(got[:2], 0.0, atol=1e-12)

    def test_spectrum_range_and_residuals(self):
        spec = spec_from_config({"n": 300, "K": 3, "alpha": {"in": 8.0, "out": 2.0}})
        ds = generate(spec, 0)
        L = normalized_laplacian(ds.A)
        vals, vecs = laplacian_eigenpairs(ds.A, 3)
        all_vals = np.linalg.eigvalsh(L.toarray())
        assert all_vals.min() > -1e-10 and all_vals.max() < 2 + 1e-10
        assert np.all(np.linalg.norm(L @ vecs - vecs * vals, axis=0) < 1e-8)

    def test_sparse_solver_agrees(self):
        spec = spec_from_config({"n": 300, "K": 2, "alpha": {"in": 10.0, "out": 2.0}})
        ds = generate(spec, 1)
        dense, _ = laplacian_eigenpairs(ds.A, 2)
        sparse, vecs = laplacian_eigenpairs(ds.A, 2, dense_limit=10)
        np.testing.assert_allclose(sparse, dense, atol=1e-8)


class TestGram:
    def test_zero_attributes_degenerate(self):
        vals, vecs, deg = gram_eigenpairs(np.zeros((10, 2)), 2)
        assert deg.all()
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(2), atol=1e-12)

    def test_rank_one(self):
        Y = np.tile([1.0, 2.0, -1.0], (8, 1))
        vals, vecs, deg = gram_eigenpairs(Y, 2)
        assert np.count_nonzero(~deg) == 1

    def test_lifted_residual(self, rng):
        Y = rng.normal(size=(50, 4))
        vals, vecs, deg = gram_eigenpairs(Y, 3)
        G = Y @ Y.T
        assert np.all(np.linalg.norm(G @ vecs - vecs * vals, axis=0) < 1e-8)
        np.testing.assert_allclose(vals, np.linalg.eigvalsh(G)[::-1][:3], rtol=1e-10)


class TestEmbedding:
    def test_unit_columns_and_signs(self):
        spec = spec_from_config({
            "n": 120, "K": 2, "alpha": {"in": 8.0, "out": 2.0},
            "attr_family": {"kind": "gaussian", "params": {"dim": 2}}, "attr_mean": {"polygon": 1.0},
        })
        emb = spectral_embedding(generate(spec, 0), 2)
        assert emb.W.shape == (120, 4)
        np.testing.assert_allclose(np.linalg.norm(emb.W, axis=0), 1.0, atol=1e-10)
        for k in range(4):
            col = emb.W[:, k]
            assert col[np.flatnonzero(np.abs(col) > 1e-12)[0]] > 0

    def test_needs_2k(self):
        ds = Dataset(n=3, rows=[], cols=[], weights=None, Y=np.zeros((3, 1)))
        with pytest.raises(ValidationError):
            spectral_embedding(ds, 2)

    def test_planted_strong_signal(self):
        spec = spec_from_config({
            "n": 300, "K": 2, "alpha": {"in": 15.0, "out": 2.0},
            "attr_family": {"kind": "gaussian", "params": {"dim": 2}}, "attr_mean": {"polygon": 2.0},
        })
        scores = [ari(ds.z_true, initialize(ds, 2, seed=s)) for s, ds in ((s, generate(spec, s)) for s in range(20))]
        assert np.median(scores) >= 0.9


class TestKmeans:
    def test_blobs(self, rng):
        K = 4
        centers = rng.normal(0, 10, (K, 2 * K))
        z = np.repeat(np.arange(K), 30)
        W = centers[z] + rng.normal(0, 1, (z.size, 2 * K)) * 0.5
        assert exact_recovery(z, kmeans(W, K, seed=0))

    def test_single_cluster(self, rng):
        np.testing.assert_array_equal(kmeans(rng.normal(size=(10, 2)), 1), 0)

    def test_deterministic(self, rng):
        W = rng.normal(size=(50, 3))
        np.testing.assert_array_equal(kmeans(W, 3, seed=4), kmeans(W, 3, seed=4))

    def test_duplicates(self):
        W = np.zeros((6, 2))
        W[3:] = 1.0
        z = kmeans(W, 3, seed=0)
        assert z.shape == (6,) and z.max() < 3

    def test_restarts_validated(self):
        with pytest.raises(ValidationError):
            kmeans(np.zeros((4, 2)), 2, restarts=0)


class TestRandomInit:
    def test_n_equals_k(self):
        z = random_init(5, 5, 0)
        assert sorted(z) == list(range(5))

    def test_block_sizes(self):
        n, K = 10_000, 4
        sizes = np.bincount(random_init(n, K, 1), minlength=K)
        sd = np.sqrt(n * (1 / K) * (1 - 1 / K))
        assert np.all(np.abs(sizes - n / K) < 4 * sd)

    def test_deterministic(self):
        np.testing.assert_array_equal(random_init(100, 3, 9), random_init(100, 3, 9))
