"""Initial memberships: spectral embedding of network and attributes, k-means."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from .errors import NumericError, ValidationError
from .model import Dataset, as_generator

__all__ = [
    "Embedding",
    "normalized_laplacian",
    "laplacian_eigenpairs",
    "gram_eigenpairs",
    "spectral_embedding",
    "kmeans",
    "random_init",
    "initialize",
]

DENSE_LIMIT = 4000


@dataclass
class Embedding:
    """n x 2K matrix: Laplacian eigenvectors, then attribute-Gram eigenvectors."""

    W: np.ndarray
    net_eigvals: np.ndarray
    attr_eigvals: np.ndarray
    degenerate: np.ndarray
    flags: list = field(default_factory=list)

    @property
    def K(self):
        return self.W.shape[1] // 2

    @property
    def network(self):
        return self.W[:, : self.K]

    @property
    def attributes(self):
        return self.W[:, self.K :][:, ~self.degenerate[self.K :]]

    @property
    def usable(self):
        return self.W[:, ~self.degenerate]


def normalized_laplacian(A):
    """I - D^-1/2 A D^-1/2 as a sparse matrix; isolated nodes get identity rows."""
    A = sp.csr_matrix(A, dtype=float)
    deg = np.asarray(A.sum(axis=1)).ravel()
    with np.errstate(divide="ignore"):
        inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(deg), 0.0)
    D = sp.diags(inv_sqrt)
    return (sp.identity(A.shape[0], format="csr") - D @ A @ D).tocsr()


def _fix_signs(V):
    V = V.copy()
    for k in range(V.shape[1]):
        col = V[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * max(np.abs(col).max(), 1e-300))
        if nz.size and col[nz[0]] < 0:
            V[:, k] = -col
    return V


def laplacian_eigenpairs(A, K, dense_limit=DENSE_LIMIT):
    """K smallest eigenpairs of the normalized Laplacian."""
    L = normalized_laplacian(A)
    n = L.shape[0]
    if n <= dense_limit:
        vals, vecs = scipy.linalg.eigh(L.toarray(), subset_by_index=[0, K - 1])
    else:
        v0 = np.ones(n) / np.sqrt(n)
        try:
            vals, vecs = scipy.sparse.linalg.eigsh(L, k=K, which="SA", tol=1e-12, v0=v0, maxiter=20 * n)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise NumericError(f"Lanczos did not converge: {exc}") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    resid = np.linalg.norm(L @ vecs - vecs * vals, axis=0)
    if np.any(resid > 1e-6):
        raise NumericError(f"eigenpair residuals too large: {resid.max():.3e}")
    return vals, _fix_signs(vecs)


def gram_eigenpairs(Y, K):
    """K leading eigenpairs of Y Y^T, computed from the d x d matrix Y^T Y.

    Returns (vals, vecs, degenerate) where ``degenerate`` marks columns with a
    zero eigenvalue; those columns are an orthonormal completion.
    """
    Y = np.asarray(Y, dtype=float)
    n, d = Y.shape
    if d >= n:
        vals, vecs = np.linalg.eigh(Y @ Y.T)
        vals, vecs = vals[::-1][:K], vecs[:, ::-1][:, :K]
    elif d == 0:
        vals, vecs = np.zeros(0), np.zeros((n, 0))
    else:
        g_vals, g_vecs = np.linalg.eigh(Y.T @ Y)
        g_vals, g_vecs = g_vals[::-1], g_vecs[:, ::-1]
        scale = g_vals[0] if g_vals.size and g_vals[0] > 0 else 1.0
        keep = min(K, int(np.count_nonzero(g_vals > 1e-12 * scale)))
        vals = g_vals[:keep]
        vecs = (Y @ g_vecs[:, :keep]) / np.sqrt(vals)
    scale = vals[0] if vals.size and vals[0] > 0 else 1.0
    good = vals > 1e-12 * scale
    vals, vecs = vals[good], vecs[:, good]
    missing = K - vals.size
    degenerate = np.zeros(K, dtype=bool)
    if missing > 0:
        # orthonormal completion, deterministic
        basis = np.concatenate([vecs, np.eye(n)], axis=1)
        q, _ = np.linalg.qr(basis)
        extra = q[:, vals.size : vals.size + missing]
        vecs = np.concatenate([vecs, extra], axis=1)
        vals = np.concatenate([vals, np.zeros(missing)])
        degenerate[K - missing :] = True
    return vals, _fix_signs(vecs), degenerate


def spectral_embedding(ds: Dataset, K, dense_limit=DENSE_LIMIT) -> Embedding:
    if ds.n < 2 * K:
        raise ValidationError(f"spectral embedding needs n >= 2K, got n={ds.n}, K={K}")
    net_vals, net_vecs = laplacian_eigenpairs(ds.A, K, dense_limit)
    attr_vals, attr_vecs, degenerate = gram_eigenpairs(ds.Y, K)
    flags = ["degenerate_attributes"] if degenerate.any() else []
    W = np.concatenate([net_vecs, attr_vecs], axis=1)
    mask = np.concatenate([np.zeros(K, dtype=bool), degenerate])
    return Embedding(W=W, net_eigvals=net_vals, attr_eigvals=attr_vals, degenerate=mask, flags=flags)


def _kmeans_pp(X, K, rng):
    n = X.shape[0]
    centers = np.empty((K, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for k in range(1, K):
        total = d2.sum()
        if total <= 0:
            # fewer than K distinct points: stack remaining centers on duplicates
            centers[k] = X[rng.integers(n)]
        else:
            centers[k] = X[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((X - centers[k]) ** 2, axis=1))
    return centers


def _lloyd(X, centers, max_iter, tol):
    K = centers.shape[0]
    labels = None
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d2, axis=1)
        counts = np.bincount(new, minlength=K)
        for k in np.flatnonzero(counts == 0):
            # farthest point from its center restarts an empty cluster
            far = int(np.argmax(d2[np.arange(X.shape[0]), new]))
            new[far] = k
            counts = np.bincount(new, minlength=K)
        moved = centers.copy()
        for k in range(K):
            moved[k] = X[new == k].mean(axis=0)
        shift = np.sum((moved - centers) ** 2)
        centers = moved
        if labels is not None and np.array_equal(new, labels) or shift <= tol:
            labels = new
            break
        labels = new
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    inertia = float(d2[np.arange(X.shape[0]), labels].sum())
    return labels, inertia


def kmeans(W, K, seed=0, restarts=10, max_iter=300, tol=1e-12):
    """Lloyd's algorithm with k-means++ seeding; best of ``restarts`` by inertia.

    Returns integer labels in [0, K).
    """
    W = np.asarray(W, dtype=float)
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")
    n = W.shape[0]
    if K == 1:
        return np.zeros(n, dtype=np.int64)
    if n < K:
        raise ValidationError("fewer points than clusters")
    rng = as_generator(seed)
    best_labels, best_inertia = None, np.inf
    for _ in range(restarts):
        centers = _kmeans_pp(W, K, rng)
        labels, inertia = _lloyd(W, centers, max_iter, tol)
        if inertia < best_inertia - 1e-12:
            best_labels, best_inertia = labels, inertia
    return best_labels.astype(np.int64)


def random_init(n, K, seed=0):
    """Uniform labels conditioned on every block being nonempty."""
    if n < K:
        raise ValidationError("need n >= K")
    rng = as_generator(seed)
    while True:
        z = rng.integers(0, K, size=n)
        if np.unique(z).size == K:
            return z.astype(np.int64)


def initialize(ds: Dataset, K, method="spectral", seed=0, restarts=10, row_normalize=False, part="both"):
    """Initial labels.  ``part`` selects embedding columns: both, network or attributes."""
    if method == "random":
        return random_init(ds.n, K, seed)
    if method != "spectral":
        raise ValidationError(f"unknown init method {method!r}")
    emb = spectral_embedding(ds, K)
    if part == "network":
        W = emb.network
    elif part == "attributes":
        W = emb.attributes
    else:
        W = emb.usable
    if W.shape[1] == 0:
        return random_init(ds.n, K, seed)
    if row_normalize:
        norms = np.linalg.norm(W, axis=1, keepdims=True)
        W = np.where(norms > 0, W / np.where(norms > 0, norms, 1.0), 0.0)
    labels = kmeans(W, K, seed=seed, restarts=restarts)
    return labels
