import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csbm.errors import ValidationError
from csbm.metrics import align, ari, confusion_matrix, exact_recovery, loss


def brute_loss(z, z_hat, K):
    return min(int(np.sum(z != np.asarray(p)[z_hat])) for p in itertools.permutations(range(K)))


def test_examples():
    z = np.array([1, 1, 2, 2])
    assert loss(z, z) == 0
    assert loss(z, np.array([2, 2, 1, 1])) == 0
    assert loss(z, np.array([1, 2, 2, 2])) == 1
    assert ari(z, z) == 1.0
    assert ari(z, np.array([1, 2, 1, 2])) == pytest.approx(-0.5)


def test_exact_recovery():
    z = np.array([0, 0, 1, 1, 2])
    assert exact_recovery(z, z)
    assert exact_recovery(z, np.array([2, 2, 0, 0, 1]))
    assert not exact_recovery(z, np.array([0, 1, 1, 1, 2]))


def test_errors():
    with pytest.raises(ValidationError):
        loss([0, 1], [0, 1, 1])
    with pytest.raises(ValidationError):
        ari([0], [0])


def test_unequal_alphabets():
    z = np.array([0, 0, 1, 1, 2, 2])
    z_hat = np.array([0, 0, 0, 0, 1, 1])
    assert confusion_matrix(z, z_hat).shape == (3, 3)
    assert loss(z, z_hat) == 2


def test_align():
    z = np.array([0, 0, 1, 1])
    np.testing.assert_array_equal(align(z, np.array([1, 1, 0, 0])), z)


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 6).flatmap(lambda K: st.tuples(
    st.just(K), st.lists(st.integers(0, K - 1), min_size=2, max_size=40).flatmap(
        lambda z: st.tuples(st.just(z), st.lists(st.integers(0, K - 1), min_size=len(z), max_size=len(z)))))))
def test_properties(args):
    K, (z, z_hat) = args
    z, z_hat = np.array(z), np.array(z_hat)
    ell = loss(z, z_hat)
    assert ell == brute_loss(z, z_hat, K)
    assert ell <= len(z) * (1 - 1 / K)
    perm = np.random.default_rng(len(z)).permutation(K)
    assert loss(z, perm[z_hat]) == ell
    assert ari(z, perm[z_hat]) == pytest.approx(ari(z, z_hat))
    assert loss(z, perm[z]) == 0


def test_ari_one_iff_exact(rng):
    for _ in range(200):
        K = int(rng.integers(2, 5))
        z = rng.permutation(np.arange(30) % K)
        z_hat = z.copy()
        if rng.random() < 0.5:
            i = int(rng.integers(30))
            z_hat[i] = (z_hat[i] + 1) % K
        if np.unique(z_hat).size < K:
            continue
        assert (ari(z, z_hat) == pytest.approx(1.0)) == (loss(z, z_hat) == 0)
