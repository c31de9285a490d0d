"""Contextual SBM specification, synthetic generation and dataset container."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .expfam import ExponentialFamily, family_from_dict, family_to_dict
from .rng import as_generator

__all__ = [
    "CsbmSpec",
    "Dataset",
    "as_generator",
    "sample_labels",
    "generate",
    "spec_from_config",
    "spec_to_config",
]


def _sym(name, M, K):
    M = np.asarray(M, dtype=float)
    if M.shape != (K, K):
        raise ValidationError(f"{name} must be a {K}x{K} matrix, got shape {M.shape}")
    if not np.array_equal(M, M.T):
        raise ValidationError(f"{name} must be symmetric")
    return M


@dataclass(frozen=True, eq=False)
class CsbmSpec:
    """Generative model for a node-attributed SBM with zero-inflated weights.

    ``weight_family=None`` is a binary network (every present edge has weight 1).
    ``attr_family=None`` drops the attributes.  Gaussian attribute parameters
    have shape (K, d); scalar families use shape (K,).
    """

    n: int
    pi: np.ndarray
    edge_prob: np.ndarray
    attr_family: ExponentialFamily | None = None
    attr_eta: np.ndarray | None = None
    weight_family: ExponentialFamily | None = None
    weight_theta: np.ndarray | None = None

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        if pi.ndim != 1 or pi.size < 2:
            raise ValidationError("need at least K = 2 blocks")
        if np.any(pi <= 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise ValidationError("pi must be a strictly positive probability vector")
        K = pi.size
        object.__setattr__(self, "pi", pi)
        if int(self.n) != self.n or self.n < 2:
            raise ValidationError(f"n must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        P = _sym("edge_prob", self.edge_prob, K)
        if np.any((P < 0) | (P > 1)):
            raise ValidationError("edge probabilities must lie in [0, 1]")
        object.__setattr__(self, "edge_prob", P)
        if self.weight_family is not None:
            if self.weight_family.dim != 1:
                raise ValidationError("edge weights must be scalar")
            T = _sym("weight_theta", self.weight_theta, K)
            self.weight_family.check_natural(T)
            object.__setattr__(self, "weight_theta", T)
        if self.attr_family is not None:
            E = np.asarray(self.attr_eta, dtype=float)
            want = (K, self.attr_family.dim) if self.attr_family.dim > 1 else (K,)
            if E.shape == (K, 1) and want == (K,):
                E = E[:, 0]
            if E.shape != want:
                raise ValidationError(f"attr_eta must have shape {want}, got {E.shape}")
            self.attr_family.check_natural(E)
            object.__setattr__(self, "attr_eta", E)

    @property
    def K(self) -> int:
        return self.pi.size

    @property
    def d(self) -> int:
        return 0 if self.attr_family is None else self.attr_family.dim

    @property
    def weight_mean(self):
        if self.weight_family is None:
            return np.ones_like(self.edge_prob)
        return self.weight_family.grad_psi(self.weight_theta)

    @property
    def attr_mean(self):
        if self.attr_family is None:
            return np.zeros((self.K, 0))
        return self.attr_family.grad_psi(self.attr_eta)

    def replace(self, **changes) -> "CsbmSpec":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return CsbmSpec(**kw)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Sparse symmetric weighted network with node attributes.

    Edges are stored once as an upper-triangle coordinate list
    (``rows[k] < cols[k]``), sorted lexicographically.  ``weights=None`` marks
    a binary network, where X coincides with A.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray | None
    Y: np.ndarray
    z_true: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = int(self.n)
        rows = np.asarray(self.rows, dtype=np.int64).ravel()
        cols = np.asarray(self.cols, dtype=np.int64).ravel()
        if rows.shape != cols.shape:
            raise ValidationError("rows and cols differ in length")
        if rows.size:
            if rows.min() < 0 or cols.max() >= n:
                raise ValidationError("edge endpoint out of range")
            if np.any(rows == cols):
                raise ValidationError("self-loops are not allowed")
            if np.any(rows > cols):
                raise ValidationError("edges must be stored with i < j")
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        if rows.size > 1 and np.any((np.diff(rows) == 0) & (np.diff(cols) == 0)):
            raise ValidationError("duplicate edge")
        w = self.weights
        if w is not None:
            w = np.asarray(w, dtype=float).ravel()
            if w.shape != rows.shape:
                raise ValidationError("weights and edges differ in length")
            w = w[order]
            if np.any(w == 0) or not np.all(np.isfinite(w)):
                raise ValidationError("stored edge weights must be finite and nonzero")
        Y = np.asarray(self.Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.ndim != 2 or Y.shape[0] != n:
            raise ValidationError(f"attribute array has {Y.shape[0] if Y.ndim else 0} rows, expected n={n}")
        z = self.z_true
        if z is not None:
            z = np.asarray(z, dtype=np.int64).ravel()
            if z.shape != (n,) or (z.size and z.min() < 0):
                raise ValidationError("z_true must be a length-n vector of nonnegative labels")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "z_true", z)

    @property
    def m(self) -> int:
        return self.rows.size

    @property
    def d(self) -> int:
        return self.Y.shape[1]

    @property
    def binary(self) -> bool:
        return self.weights is None

    @property
    def edge_weights(self) -> np.ndarray:
        return np.ones(self.m) if self.weights is None else self.weights

    @cached_property
    def A(self) -> sp.csr_matrix:
        return self._sym_matrix(np.ones(self.m))

    @cached_property
    def X(self) -> sp.csr_matrix:
        if self.weights is None:
            return self.A
        return self._sym_matrix(self.weights)

    def _sym_matrix(self, vals):
        r = np.concatenate([self.rows, self.cols])
        c = np.concatenate([self.cols, self.rows])
        v = np.concatenate([vals, vals])
        return sp.csr_matrix((v, (r, c)), shape=(self.n, self.n))

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(np.concatenate([self.rows, self.cols]), minlength=self.n)

    @cached_property
    def directed(self):
        """Both orientations of every edge: (src, dst, weight)."""
        src = np.concatenate([self.rows, self.cols])
        dst = np.concatenate([self.cols, self.rows])
        w = np.concatenate([self.edge_weights, self.edge_weights])
        return src, dst, w

    def equals(self, other: "Dataset") -> bool:
        if self.n != other.n or not np.array_equal(self.rows, other.rows):
            return False
        if not np.array_equal(self.cols, other.cols):
            return False
        if not np.array_equal(self.edge_weights, other.edge_weights):
            return False
        if not np.array_equal(self.Y, other.Y):
            return False
        if (self.z_true is None) != (other.z_true is None):
            return False
        return self.z_true is None or np.array_equal(self.z_true, other.z_true)


def sample_labels(pi, n, rng):
    """I.i.d. block labels with P(z_i = k) = pi_k (0-indexed)."""
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or pi.size < 2:
        raise ValidationError("need at least K = 2 blocks")
    if np.any(pi <= 0) or abs(pi.sum() - 1.0) > 1e-12:
        raise ValidationError("pi must be a strictly positive probability vector")
    rng = as_generator(rng)
    return rng.choice(pi.size, size=int(n), p=pi)


def _decode_triangle(idx):
    # idx enumerates pairs (u, v), u < v, ordered by v then u
    v = np.floor((1 + np.sqrt(1 + 8 * idx.astype(float))) / 2).astype(np.int64)
    v[v * (v - 1) // 2 > idx] -= 1
    v[(v + 1) * v // 2 <= idx] += 1
    u = idx - v * (v - 1) // 2
    return u, v


def _weight_draws(family, theta, k, rng, strict):
    mu = np.full(k, float(family.grad_psi(theta)))
    w = family._draw(mu, rng)
    if strict and family.discrete:
        zero = w == 0
        while np.any(zero):
            w[zero] = family._draw(mu[zero], rng)
            zero = w == 0
    return w


def generate(spec: CsbmSpec, rng, z=None, strict=False) -> Dataset:
    """Draw (X, Y, z) from the model.

    Pairs are sampled per block pair: the edge count is binomial and the
    present pairs are a uniform subset, so memory stays O(m + n).  With a
    discrete weight family a weight draw of 0 removes the edge unless
    ``strict`` is set, in which case the weight law is truncated at zero.
    """
    rng = as_generator(rng)
    n, K = spec.n, spec.K
    if z is None:
        z = sample_labels(spec.pi, n, rng)
    z = np.asarray(z, dtype=np.int64)
    members = [np.flatnonzero(z == a) for a in range(K)]

    rows, cols, wts = [], [], []
    for a in range(K):
        for b in range(a, K):
            p = spec.edge_prob[a, b]
            na, nb = members[a].size, members[b].size
            total = na * (na - 1) // 2 if a == b else na * nb
            if total == 0 or p == 0:
                continue
            m = int(rng.binomial(total, p))
            if m == 0:
                continue
            idx = np.sort(rng.choice(total, size=m, replace=False))
            if a == b:
                u, v = _decode_triangle(idx)
                i, j = members[a][u], members[a][v]
            else:
                i, j = members[a][idx // nb], members[b][idx % nb]
            if spec.weight_family is not None:
                w = _weight_draws(spec.weight_family, spec.weight_theta[a, b], m, rng, strict)
                keep = w != 0
                i, j, w = i[keep], j[keep], w[keep]
                wts.append(w)
            rows.append(np.minimum(i, j))
            cols.append(np.maximum(i, j))

    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    weights = None
    if spec.weight_family is not None:
        weights = np.concatenate(wts) if wts else np.zeros(0)

    if spec.attr_family is None:
        Y = np.zeros((n, 0))
    else:
        Y = spec.attr_family._draw(spec.attr_mean[z], rng)
        if Y.ndim == 1:
            Y = Y[:, None]
    return Dataset(n=n, rows=rows, cols=cols, weights=weights, Y=Y, z_true=z)


# Config (de)serialization ---------------------------------------------------


def _matrix(value, K, name):
    """Accept a KxK matrix, a scalar, or {"in": a, "out": b}."""
    if isinstance(value, dict):
        if set(value) != {"in", "out"}:
            raise ValidationError(f"{name}: homogeneous form needs exactly 'in' and 'out'")
        M = np.full((K, K), float(value["out"]))
        np.fill_diagonal(M, float(value["in"]))
        return M
    try:
        M = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name}: {exc}") from exc
    if M.ndim == 0:
        return np.full((K, K), float(M))
    if M.shape != (K, K):
        raise ValidationError(f"{name}: expected a {K}x{K} matrix")
    return M


def polygon_means(K, radius, d=2):
    """K points equally spaced on a circle (first two coordinates)."""
    ang = 2 * np.pi * np.arange(K) / K
    M = np.zeros((K, d))
    M[:, 0] = radius * np.cos(ang)
    if d > 1:
        M[:, 1] = radius * np.sin(ang)
    M[np.abs(M) < 1e-15] = 0.0
    return M


def spec_from_config(cfg: dict) -> CsbmSpec:
    """Build a spec from a JSON/TOML-style mapping.

    Edge rates are given either absolutely (``edge_prob``) or scaled
    (``alpha``, meaning p = alpha * log(n) / n).  Weight and attribute
    parameters are given as means (``weight_mean``, ``attr_mean``) or natural
    parameters (``weight_theta``, ``attr_eta``).  ``attr_mean`` may also be
    ``{"polygon": r}``; ``attr_scale: "sqrt_log_n"`` multiplies attribute means
    by sqrt(log n).
    """
    if not isinstance(cfg, dict):
        raise ValidationError("config must be an object")
    known = {
        "n", "K", "pi", "edge_prob", "alpha", "weight_family", "weight_mean", "weight_theta",
        "attr_family", "attr_mean", "attr_eta", "attr_scale",
    }
    extra = set(cfg) - known
    if extra:
        raise ValidationError(f"unknown config fields: {sorted(extra)}")
    try:
        n = int(cfg["n"])
    except KeyError as exc:
        raise ValidationError("config field 'n' is required") from exc
    if "K" in cfg:
        K = int(cfg["K"])
    elif "pi" in cfg:
        K = len(cfg["pi"])
    else:
        raise ValidationError("config needs 'K' or 'pi'")
    pi = np.asarray(cfg.get("pi", np.full(K, 1.0 / K)), dtype=float)
    if pi.size != K:
        raise ValidationError("pi: length differs from K")

    if ("edge_prob" in cfg) == ("alpha" in cfg):
        raise ValidationError("give exactly one of 'edge_prob' or 'alpha'")
    if "alpha" in cfg:
        P = _matrix(cfg["alpha"], K, "alpha") * math.log(n) / n
    else:
        P = _matrix(cfg["edge_prob"], K, "edge_prob")

    wf = cfg.get("weight_family")
    weight_family = None if wf in (None, "binary") else family_from_dict(wf, "weight_family")
    weight_theta = None
    if weight_family is not None:
        if "weight_theta" in cfg:
            weight_theta = _matrix(cfg["weight_theta"], K, "weight_theta")
        elif "weight_mean" in cfg:
            weight_theta = weight_family.mean_to_natural(_matrix(cfg["weight_mean"], K, "weight_mean"))
        else:
            raise ValidationError("weight_family given without weight_mean or weight_theta")

    af = cfg.get("attr_family")
    attr_family = None if af is None else family_from_dict(af, "attr_family")
    attr_eta = None
    if attr_family is not None:
        scale = cfg.get("attr_scale", 1.0)
        if scale == "sqrt_log_n":
            scale = math.sqrt(math.log(n))
        elif scale == "log_n":
            scale = math.log(n)
        try:
            scale = float(scale)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"attr_scale: {exc}") from exc
        if "attr_eta" in cfg:
            attr_eta = np.asarray(cfg["attr_eta"], dtype=float)
        elif "attr_mean" in cfg:
            mean = cfg["attr_mean"]
            if isinstance(mean, dict) and "polygon" in mean:
                mean = polygon_means(K, float(mean["polygon"]), attr_family.dim)
            mean = np.asarray(mean, dtype=float) * scale
            attr_eta = attr_family.mean_to_natural(mean)
        else:
            raise ValidationError("attr_family given without attr_mean or attr_eta")
    return CsbmSpec(
        n=n, pi=pi, edge_prob=P, attr_family=attr_family, attr_eta=attr_eta,
        weight_family=weight_family, weight_theta=weight_theta,
    )


def spec_to_config(spec: CsbmSpec) -> dict:
    cfg = {
        "n": spec.n,
        "K": spec.K,
        "pi": spec.pi.tolist(),
        "edge_prob": spec.edge_prob.tolist(),
        "weight_family": family_to_dict(spec.weight_family),
        "attr_family": family_to_dict(spec.attr_family),
    }
    if spec.weight_family is not None:
        cfg["weight_theta"] = spec.weight_theta.tolist()
    if spec.attr_family is not None:
        cfg["attr_eta"] = spec.attr_eta.tolist()
    return cfg
