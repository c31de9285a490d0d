"""Partition agreement: permutation-minimal error, ARI, exact recovery."""

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ValidationError

__all__ = ["confusion_matrix", "best_permutation", "loss", "ari", "exact_recovery", "align"]


def _pair(z, z_hat):
    z = np.asarray(z, dtype=np.int64).ravel()
    z_hat = np.asarray(z_hat, dtype=np.int64).ravel()
    if z.shape != z_hat.shape:
        raise ValidationError(f"label vectors differ in length ({z.size} vs {z_hat.size})")
    if z.size and (z.min() < 0 or z_hat.min() < 0):
        raise ValidationError("labels must be nonnegative")
    return z, z_hat


def confusion_matrix(z, z_hat):
    """Square count matrix N[a, b] = #{i : z_i = a, z_hat_i = b}, zero-padded."""
    z, z_hat = _pair(z, z_hat)
    K = int(max(z.max(initial=-1), z_hat.max(initial=-1))) + 1
    N = np.zeros((K, K), dtype=np.int64)
    np.add.at(N, (z, z_hat), 1)
    return N


def best_permutation(z, z_hat):
    """tau with tau[b] = a maximising the matched count trace."""
    N = confusion_matrix(z, z_hat)
    rows, cols = linear_sum_assignment(N, maximize=True)
    tau = np.empty(N.shape[0], dtype=np.int64)
    tau[cols] = rows
    return tau


def align(z, z_hat):
    """Relabel z_hat to best match z."""
    z, z_hat = _pair(z, z_hat)
    return best_permutation(z, z_hat)[z_hat]


def loss(z, z_hat):
    """min over relabelings tau of Ham(z, tau o z_hat)."""
    z, z_hat = _pair(z, z_hat)
    if z.size == 0:
        return 0
    N = confusion_matrix(z, z_hat)
    rows, cols = linear_sum_assignment(N, maximize=True)
    return int(z.size - N[rows, cols].sum())


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1) / 2


def ari(z, z_hat):
    """Adjusted Rand index (Hubert-Arabie) from pair counts."""
    z, z_hat = _pair(z, z_hat)
    n = z.size
    if n < 2:
        raise ValidationError("ARI needs at least two nodes")
    N = confusion_matrix(z, z_hat)
    index = _comb2(N).sum()
    a = _comb2(N.sum(axis=1)).sum()
    b = _comb2(N.sum(axis=0)).sum()
    total = n * (n - 1) / 2
    expected = a * b / total
    max_index = (a + b) / 2
    if max_index == expected:
        # both partitions trivial (all singletons or one block): identical structure
        return 1.0
    return float((index - expected) / (max_index - expected))


def exact_recovery(z, z_hat):
    return loss(z, z_hat) == 0
