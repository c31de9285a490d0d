"""Exponential families used for edge weights and node attributes.

Every family is written in canonical form

    p(x | theta) = exp(<theta, x> - psi(theta))

with respect to a family-specific base measure.  Each family provides the
log-partition ``psi``, its Legendre conjugate ``psi_star``, the two parameter
maps, a sampler and the Bregman divergence generated by ``psi_star``.

Scalar families act elementwise on arrays.  The spherical Gaussian with
``dim > 1`` takes vectors along the trailing axis and reduces over it.

Adding a family means subclassing :class:`ExponentialFamily`, implementing the
abstract methods and registering the class in ``FAMILIES``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log1p, logit, rel_entr, xlogy

from .errors import ParameterDomainError, ValidationError
from .rng import as_generator

__all__ = [
    "ExponentialFamily",
    "Bernoulli",
    "Poisson",
    "Gaussian",
    "Exponential",
    "Gamma",
    "ZeroInflated",
    "FAMILIES",
    "family_from_dict",
    "family_to_dict",
    "psi",
    "psi_star",
    "grad_psi",
    "mean_to_natural",
    "bregman",
    "log_density",
    "sample",
    "sample_zero_inflated",
]


def _check(ok, what, family):
    if not np.all(ok):
        raise ParameterDomainError(f"{what} outside the domain of the {family.kind} family")


class ExponentialFamily(ABC):
    """Base class; concrete families are frozen dataclasses."""

    kind: str = ""
    discrete: bool = False
    natural_domain: str = ""
    mean_domain: str = ""

    @property
    def dim(self) -> int:
        return 1

    # Natural-parameter side
    @abstractmethod
    def psi(self, theta): ...

    @abstractmethod
    def grad_psi(self, theta): ...

    # Mean-parameter side
    @abstractmethod
    def psi_star(self, x): ...

    @abstractmethod
    def mean_to_natural(self, mu): ...

    @abstractmethod
    def bregman(self, x, mu): ...

    @abstractmethod
    def _draw(self, mu, rng): ...

    @abstractmethod
    def check_natural(self, theta): ...

    @abstractmethod
    def check_support(self, x): ...

    @abstractmethod
    def clamp_mean(self, mu, eps=1e-8):
        """Project means into the interior of the mean domain."""

    def inner(self, theta, x):
        return np.asarray(theta, dtype=float) * np.asarray(x, dtype=float)

    def log_density(self, theta, x):
        """``<theta, x> - psi(theta)``; base-measure terms are omitted."""
        self.check_support(x)
        return self.inner(theta, x) - self.psi(theta)

    def sample(self, theta, rng, size=None):
        rng = as_generator(rng)
        theta = np.asarray(theta, dtype=float)
        self.check_natural(theta)
        mu = self.grad_psi(theta)
        if size is not None:
            mu = np.broadcast_to(mu, (size,) if np.isscalar(size) else tuple(size))
        return self._draw(mu, rng)

    def zero_mass(self, theta):
        """Probability of drawing exactly 0 (zero for continuous families)."""
        return np.zeros(np.shape(self.psi(theta)))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self._params()}

    def _params(self) -> dict:
        return {}


@dataclass(frozen=True)
class Bernoulli(ExponentialFamily):
    kind = "bernoulli"
    discrete = True
    natural_domain = "theta in R"
    mean_domain = "mu in (0, 1)"

    def psi(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.logaddexp(0.0, theta)

    def grad_psi(self, theta):
        return expit(np.asarray(theta, dtype=float))

    def psi_star(self, x):
        x = np.asarray(x, dtype=float)
        _check((x >= 0) & (x <= 1), "observation", self)
        return xlogy(x, x) + xlogy(1 - x, 1 - x)

    def mean_to_natural(self, mu):
        mu = np.asarray(mu, dtype=float)
        _check((mu > 0) & (mu < 1), "mean", self)
        return logit(mu)

    def bregman(self, x, mu):
        x = np.asarray(x, dtype=float)
        mu = np.asarray(mu, dtype=float)
        _check((x >= 0) & (x <= 1), "observation", self)
        _check((mu > 0) & (mu < 1), "mean", self)
        return np.maximum(rel_entr(x, mu) + rel_entr(1 - x, 1 - mu), 0.0)

    def _draw(self, mu, rng):
        return (rng.random(np.shape(mu)) < mu).astype(float)

    def check_natural(self, theta):
        _check(np.isfinite(theta), "natural parameter", self)

    def check_support(self, x):
        x = np.asarray(x)
        _check((x == 0) | (x == 1), "observation", self)

    def clamp_mean(self, mu, eps=1e-8):
        return np.clip(mu, eps, 1 - eps)

    def zero_mass(self, theta):
        return 1.0 - self.grad_psi(theta)


@dataclass(frozen=True)
class Poisson(ExponentialFamily):
    kind = "poisson"
    discrete = True
    natural_domain = "theta in R"
    mean_domain = "mu in (0, inf)"

    def psi(self, theta):
        return np.exp(np.asarray(theta, dtype=float))

    def grad_psi(self, theta):
        return np.exp(np.asarray(theta, dtype=float))

    def psi_star(self, x):
        x = np.asarray(x, dtype=float)
        _check(x >= 0, "observation", self)
        return xlogy(x, x) - x

    def mean_to_natural(self, mu):
        mu = np.asarray(mu, dtype=float)
        _check(mu > 0, "mean", self)
        return np.log(mu)

    def bregman(self, x, mu):
        x = np.asarray(x, dtype=float)
        mu = np.asarray(mu, dtype=float)
        _check(x >= 0, "observation", self)
        _check(mu > 0, "mean", self)
        return np.maximum(rel_entr(x, mu) - x + mu, 0.0)

    def _draw(self, mu, rng):
        return np.asarray(rng.poisson(mu), dtype=float)

    def check_natural(self, theta):
        _check(np.isfinite(theta), "natural parameter", self)

    def check_support(self, x):
        x = np.asarray(x, dtype=float)
        _check((x >= 0) & (x == np.floor(x)), "observation", self)

    def clamp_mean(self, mu, eps=1e-8):
        return np.maximum(mu, eps)

    def zero_mass(self, theta):
        return np.exp(-self.psi(theta))


@dataclass(frozen=True)
class Gaussian(ExponentialFamily):
    """Spherical Gaussian N(mu, sigma2 * I) with known variance.

    The base measure is N(0, sigma2 * I), so ``psi(theta) = sigma2 |theta|^2 / 2``
    and the mean is ``sigma2 * theta``.
    """

    sigma2: float = 1.0
    d: int = 1
    kind = "gaussian"
    natural_domain = "theta in R^d"
    mean_domain = "mu in R^d"

    def __post_init__(self):
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise ValidationError(f"gaussian sigma2 must be positive, got {self.sigma2}")
        if int(self.d) != self.d or self.d < 1:
            raise ValidationError(f"gaussian dim must be a positive integer, got {self.d}")

    @property
    def dim(self):
        return int(self.d)

    def _sq(self, v):
        v = np.asarray(v, dtype=float)
        if self.d > 1:
            return np.sum(v * v, axis=-1)
        return v * v

    def inner(self, theta, x):
        prod = np.asarray(theta, dtype=float) * np.asarray(x, dtype=float)
        return prod.sum(axis=-1) if self.d > 1 else prod

    def psi(self, theta):
        return 0.5 * self.sigma2 * self._sq(theta)

    def grad_psi(self, theta):
        return self.sigma2 * np.asarray(theta, dtype=float)

    def psi_star(self, x):
        return self._sq(x) / (2 * self.sigma2)

    def mean_to_natural(self, mu):
        return np.asarray(mu, dtype=float) / self.sigma2

    def bregman(self, x, mu):
        return self._sq(np.asarray(x, dtype=float) - np.asarray(mu, dtype=float)) / (2 * self.sigma2)

    def _draw(self, mu, rng):
        mu = np.asarray(mu, dtype=float)
        return mu + math.sqrt(self.sigma2) * rng.standard_normal(mu.shape)

    def sample(self, theta, rng, size=None):
        rng = as_generator(rng)
        theta = np.asarray(theta, dtype=float)
        mu = self.grad_psi(theta)
        if size is not None:
            shape = (size,) if np.isscalar(size) else tuple(size)
            mu = np.broadcast_to(mu, shape + ((self.dim,) if self.d > 1 else ()))
        return self._draw(mu, rng)

    def check_natural(self, theta):
        theta = np.asarray(theta, dtype=float)
        _check(np.isfinite(theta), "natural parameter", self)
        if self.d > 1 and theta.shape[-1:] != (self.d,):
            raise ParameterDomainError(f"gaussian parameter must have trailing dimension {self.d}")

    def check_support(self, x):
        _check(np.isfinite(x), "observation", self)

    def clamp_mean(self, mu, eps=1e-8):
        return mu

    def _params(self):
        return {"sigma2": self.sigma2, "dim": self.dim}


@dataclass(frozen=True)
class Exponential(ExponentialFamily):
    """Exponential law with rate ``-theta``; Bregman form is Itakura-Saito."""

    kind = "exponential"
    natural_domain = "theta in (-inf, 0)"
    mean_domain = "mu in (0, inf)"

    def psi(self, theta):
        theta = np.asarray(theta, dtype=float)
        _check(theta < 0, "natural parameter", self)
        return -np.log(-theta)

    def grad_psi(self, theta):
        theta = np.asarray(theta, dtype=float)
        _check(theta < 0, "natural parameter", self)
        return -1.0 / theta

    def psi_star(self, x):
        x = np.asarray(x, dtype=float)
        _check(x > 0, "observation", self)
        return -1.0 - np.log(x)

    def mean_to_natural(self, mu):
        mu = np.asarray(mu, dtype=float)
        _check(mu > 0, "mean", self)
        return -1.0 / mu

    def bregman(self, x, mu):
        x = np.asarray(x, dtype=float)
        mu = np.asarray(mu, dtype=float)
        _check(x > 0, "observation", self)
        _check(mu > 0, "mean", self)
        r = x / mu - 1.0
        return np.maximum(r - log1p(r), 0.0)

    def _draw(self, mu, rng):
        return rng.exponential(mu)

    def check_natural(self, theta):
        _check(np.asarray(theta) < 0, "natural parameter", self)

    def check_support(self, x):
        _check(np.asarray(x) > 0, "observation", self)

    def clamp_mean(self, mu, eps=1e-8):
        return np.maximum(mu, eps)


@dataclass(frozen=True)
class Gamma(ExponentialFamily):
    """Gamma law with known shape ``k`` and rate ``-theta``."""

    k: float = 1.0
    kind = "gamma"
    natural_domain = "theta in (-inf, 0)"
    mean_domain = "mu in (0, inf)"

    def __post_init__(self):
        if not (self.k > 0 and math.isfinite(self.k)):
            raise ValidationError(f"gamma shape must be positive, got {self.k}")

    def psi(self, theta):
        theta = np.asarray(theta, dtype=float)
        _check(theta < 0, "natural parameter", self)
        return -self.k * np.log(-theta)

    def grad_psi(self, theta):
        theta = np.asarray(theta, dtype=float)
        _check(theta < 0, "natural parameter", self)
        return -self.k / theta

    def psi_star(self, x):
        x = np.asarray(x, dtype=float)
        _check(x > 0, "observation", self)
        return -self.k + self.k * np.log(self.k / x)

    def mean_to_natural(self, mu):
        mu = np.asarray(mu, dtype=float)
        _check(mu > 0, "mean", self)
        return -self.k / mu

    def bregman(self, x, mu):
        x = np.asarray(x, dtype=float)
        mu = np.asarray(mu, dtype=float)
        _check(x > 0, "observation", self)
        _check(mu > 0, "mean", self)
        r = x / mu - 1.0
        return self.k * np.maximum(r - log1p(r), 0.0)

    def _draw(self, mu, rng):
        return rng.gamma(self.k, np.asarray(mu, dtype=float) / self.k)

    def check_natural(self, theta):
        _check(np.asarray(theta) < 0, "natural parameter", self)

    def check_support(self, x):
        _check(np.asarray(x) > 0, "observation", self)

    def clamp_mean(self, mu, eps=1e-8):
        return np.maximum(mu, eps)

    def _params(self):
        return {"shape": self.k}


FAMILIES = {
    "bernoulli": Bernoulli,
    "poisson": Poisson,
    "gaussian": Gaussian,
    "exponential": Exponential,
    "gamma": Gamma,
}


def family_from_dict(obj, field_name="family"):
    """Build a family from ``{"kind": ..., "params": {...}}``.

    ``field_name`` only feeds error messages so that a bad config points at
    the offending key.
    """
    if isinstance(obj, str):
        obj = {"kind": obj}
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValidationError(f"{field_name}: expected an object with a 'kind' key")
    kind = str(obj["kind"]).lower()
    params = dict(obj.get("params") or {})
    if kind not in FAMILIES:
        raise ValidationError(
            f"{field_name}: unknown family kind {obj['kind']!r} (expected one of {sorted(FAMILIES)})"
        )
    allowed = {"gaussian": {"sigma2", "dim"}, "gamma": {"shape"}}.get(kind, set())
    extra = set(params) - allowed
    if extra:
        raise ValidationError(f"{field_name}: unexpected parameters {sorted(extra)} for {kind}")
    try:
        if kind == "gaussian":
            return Gaussian(sigma2=float(params.get("sigma2", 1.0)), d=int(params.get("dim", 1)))
        if kind == "gamma":
            return Gamma(k=float(params.get("shape", 1.0)))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{field_name}: {exc}") from exc
    return FAMILIES[kind]()


def family_to_dict(family):
    return None if family is None else family.to_dict()


# Functional interface -------------------------------------------------------


def psi(family, theta):
    family.check_natural(theta)
    return family.psi(theta)


def psi_star(family, x):
    return family.psi_star(x)


def grad_psi(family, theta):
    family.check_natural(theta)
    return family.grad_psi(theta)


def mean_to_natural(family, mu):
    return family.mean_to_natural(mu)


def bregman(family, x, mu):
    return family.bregman(x, mu)


def log_density(family, theta, x):
    family.check_natural(theta)
    return family.log_density(theta, x)


def sample(family, theta, rng, size=None):
    return family.sample(theta, rng, size=size)


@dataclass(frozen=True)
class ZeroInflated:
    """Mixture ``(1 - p) delta_0 + p f_theta`` used for sparse weighted edges.

    ``family=None`` encodes a binary network: the weight law is a point mass
    at 1.
    """

    p: float
    family: ExponentialFamily | None = None
    theta: float | np.ndarray = field(default=0.0)

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ParameterDomainError(f"edge probability {self.p} outside [0, 1]")
        if self.family is not None:
            self.family.check_natural(self.theta)


def _truncated_draw(family, mu, rng):
    out = family._draw(mu, rng)
    zero = out == 0
    while np.any(zero):
        out[zero] = family._draw(np.broadcast_to(mu, out.shape)[zero], rng)
        zero = out == 0
    return out


def sample_zero_inflated(zspec, rng, size=None, strict=False):
    """Draw from ``(1 - p) delta_0 + p f``.

    A discrete weight law can emit 0.  By default such a draw is kept as 0,
    i.e. the edge is treated as absent.  With ``strict=True`` the weight law
    is truncated at zero (zeros are redrawn) so that absence happens with
    probability exactly ``1 - p``.
    """
    rng = as_generator(rng)
    shape = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    present = rng.random(shape) < zspec.p
    out = np.zeros(shape)
    k = int(np.count_nonzero(present))
    if k:
        if zspec.family is None:
            w = np.ones(k)
        else:
            mu = np.broadcast_to(zspec.family.grad_psi(zspec.theta), (k,))
            w = _truncated_draw(zspec.family, mu.copy(), rng) if strict else zspec.family._draw(mu, rng)
        out[present] = w
    return out if size is not None else float(out)
