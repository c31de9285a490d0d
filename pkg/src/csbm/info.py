"""Information-theoretic quantities governing exact recovery.

Conventions: ``renyi`` returns D_t in nats.  The "coefficient" helpers return
``(1 - t) * D_t(f || g) = -log int f^t g^(1-t)``, which is what the Chernoff
sums are built from and avoids dividing by ``1 - t``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import expm1, log1p

from .errors import ParameterDomainError, ValidationError
from .expfam import ExponentialFamily, ZeroInflated
from .model import CsbmSpec

__all__ = [
    "EPS_T",
    "golden_section_max",
    "j_psi",
    "renyi",
    "kl",
    "zero_inflated_coefficient",
    "renyi_zero_inflated",
    "kl_zero_inflated",
    "chernoff_t",
    "chernoff_t_sparse",
    "chernoff",
    "ChernoffResult",
    "DivergenceReport",
    "min_divergence",
    "threshold_binary_gaussian",
    "ThresholdResult",
    "threshold_semisupervised",
]

EPS_T = 1e-6
INVPHI = (math.sqrt(5) - 1) / 2


def golden_section_max(f, lo, hi, tol=1e-10, max_iter=200):
    """Maximise a unimodal scalar function on [lo, hi]; returns (argmax, max)."""
    a, b = lo, hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
    t = c if fc >= fd else d
    return t, max(fc, fd)


def _check_t(t):
    if not (0.0 < t < 1.0):
        raise ParameterDomainError(f"order t={t} must lie in (0, 1)")


def j_psi(family: ExponentialFamily, theta1, theta2, t):
    """t psi(theta1) + (1-t) psi(theta2) - psi(t theta1 + (1-t) theta2)."""
    theta1 = np.asarray(theta1, dtype=float)
    theta2 = np.asarray(theta2, dtype=float)
    mix = t * theta1 + (1 - t) * theta2
    return t * family.psi(theta1) + (1 - t) * family.psi(theta2) - family.psi(mix)


def renyi(t, family, theta1, theta2):
    """Renyi divergence D_t(p_theta1 || p_theta2) within one family."""
    _check_t(t)
    family.check_natural(theta1)
    family.check_natural(theta2)
    return np.maximum(j_psi(family, theta1, theta2, t), 0.0) / (1 - t)


def kl(family, theta1, theta2):
    """KL(p_theta1 || p_theta2), the Bregman divergence of psi on natural parameters."""
    theta1 = np.asarray(theta1, dtype=float)
    theta2 = np.asarray(theta2, dtype=float)
    return family.psi(theta2) - family.psi(theta1) - family.inner(theta2 - theta1, family.grad_psi(theta1))


def _weight_j(family, theta1, theta2, t):
    if family is None:
        return 0.0
    return j_psi(family, theta1, theta2, t)


def zero_inflated_coefficient(t, p1, p2, j):
    """-log[(1-p1)^t (1-p2)^(1-t) + p1^t p2^(1-t) exp(-j)], +inf if the integral is 0.

    Written with log1p/expm1 so that it keeps full relative precision when
    p1, p2 are O(log n / n).
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        absent = t * log1p(-p1) + (1 - t) * log1p(-p2)
        s = expm1(absent)
        logp = t * np.log(p1) + (1 - t) * np.log(p2) - j
        present = np.where((p1 > 0) & (p2 > 0), np.exp(logp), 0.0)
        total = s + present
        out = np.where(total <= -1.0, np.inf, -log1p(np.maximum(total, -1.0)))
    return np.maximum(out, 0.0)


def renyi_zero_inflated(t, z1: ZeroInflated, z2: ZeroInflated):
    """Exact D_t between two zero-inflated laws sharing one weight family."""
    _check_t(t)
    if (z1.family is None) != (z2.family is None) or (z1.family is not None and z1.family != z2.family):
        raise ValidationError("zero-inflated laws must share the weight family")
    j = _weight_j(z1.family, z1.theta, z2.theta, t)
    return float(zero_inflated_coefficient(t, z1.p, z2.p, j)) / (1 - t)


def kl_zero_inflated(z1: ZeroInflated, z2: ZeroInflated):
    p, q = z1.p, z2.p
    with np.errstate(divide="ignore"):
        val = 0.0
        if p < 1:
            val += (1 - p) * math.log((1 - p) / (1 - q)) if q < 1 else math.inf
        if p > 0:
            val += p * math.log(p / q) if q > 0 else math.inf
            if z1.family is not None:
                val += p * float(kl(z1.family, z1.theta, z2.theta))
    return val


def _pair_terms(spec: CsbmSpec, a, b):
    """Per-c edge parameters for the (b || a) orientation plus attribute params."""
    pb, pa = spec.edge_prob[b], spec.edge_prob[a]
    tb = ta = None
    if spec.weight_family is not None:
        tb, ta = spec.weight_theta[b], spec.weight_theta[a]
    return pb, pa, tb, ta


def chernoff_t(spec: CsbmSpec, a, b, t):
    """CH_t(a, b) = (1-t) [sum_c pi_c D_t(f_bc || f_ac) + D_t(h_b || h_a) / n]."""
    _check_t(t)
    if a == b:
        raise ValidationError("chernoff_t needs two distinct blocks")
    pb, pa, tb, ta = _pair_terms(spec, a, b)
    j = _weight_j(spec.weight_family, tb, ta, t)
    edge = zero_inflated_coefficient(t, pb, pa, j)
    with np.errstate(invalid="ignore"):
        total = float(np.sum(np.where(spec.pi > 0, spec.pi * edge, 0.0)))
    if spec.attr_family is not None:
        total += float(j_psi(spec.attr_family, spec.attr_eta[b], spec.attr_eta[a], t)) / spec.n
    return total


def chernoff_t_sparse(spec: CsbmSpec, a, b, t):
    """First-order expansion for p_ab = alpha_ab * delta, delta -> 0.

    Orientation matches :func:`chernoff_t`:
    sum_c pi_c [t p_bc + (1-t) p_ac - p_bc^t p_ac^(1-t) e^(-J_psi)] + J_phi / n.
    """
    _check_t(t)
    pb, pa, tb, ta = _pair_terms(spec, a, b)
    j = _weight_j(spec.weight_family, tb, ta, t)
    with np.errstate(divide="ignore"):
        cross = np.where((pb > 0) & (pa > 0), np.exp(t * np.log(pb) + (1 - t) * np.log(pa) - j), 0.0)
    total = float(np.sum(spec.pi * (t * pb + (1 - t) * pa - cross)))
    if spec.attr_family is not None:
        total += float(j_psi(spec.attr_family, spec.attr_eta[b], spec.attr_eta[a], t)) / spec.n
    return total


class ChernoffResult(NamedTuple):
    value: float
    t_star: float
    concave: bool
    boundary: bool


def _is_concave(vals, scale):
    second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
    return bool(np.all(second <= 1e-9 * scale + 1e-15))


def sup_over_t(f, eps=EPS_T, tol=1e-10):
    """Supremum of t -> f(t) on (eps, 1 - eps) assuming concavity.

    A coarse probe checks concavity; when it fails, a 1001-point grid locates
    the best bracket and golden-section search refines inside it.
    """
    probe_t = np.concatenate([[eps], np.linspace(0.1, 0.9, 9), [1 - eps]])
    probe = np.array([f(t) for t in probe_t])
    if np.any(np.isinf(probe)):
        k = int(np.argmax(probe))
        return ChernoffResult(math.inf, float(probe_t[k]), True, False)
    concave = _is_concave(probe, float(np.max(np.abs(probe))))
    if concave:
        t, val = golden_section_max(f, eps, 1 - eps, tol=tol)
    else:
        grid = np.linspace(eps, 1 - eps, 1001)
        vals = np.array([f(t) for t in grid])
        k = int(np.argmax(vals))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        t, val = golden_section_max(f, lo, hi, tol=tol)
        if vals[k] > val:
            t, val = float(grid[k]), float(vals[k])
    boundary = t - eps < 1e-4 or (1 - eps) - t < 1e-4
    return ChernoffResult(float(val), float(t), concave, bool(boundary))


def chernoff(spec: CsbmSpec, a, b, eps=EPS_T, tol=1e-10) -> ChernoffResult:
    """CH(a, b) = sup_t CH_t(a, b) with the maximising t."""
    res = sup_over_t(lambda t: chernoff_t(spec, a, b, t), eps=eps, tol=tol)
    if not res.concave:
        warnings.warn(f"CH_t({a},{b}) failed the concavity probe; used grid search", RuntimeWarning)
    return res


@dataclass
class DivergenceReport:
    CH: np.ndarray
    t_star: np.ndarray
    I_value: float
    hardest_pair: tuple
    n: int
    scaled: float
    verdict: str
    margin: float
    flags: list = field(default_factory=list)

    def to_dict(self):
        def num(x):
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")

        return {
            "CH": [[num(float(v)) for v in row] for row in self.CH],
            "t_star": self.t_star.tolist(),
            "I": num(self.I_value),
            "hardest_pair": list(self.hardest_pair),
            "n": self.n,
            "scaled": num(self.scaled),
            "verdict": self.verdict,
            "margin": self.margin,
            "flags": list(self.flags),
        }


def verdict_for(scaled, margin=0.02):
    if scaled > 1 + margin:
        return "Possible"
    if scaled < 1 - margin:
        return "Impossible"
    return "Critical"


def min_divergence(spec: CsbmSpec, margin=0.02) -> DivergenceReport:
    """Minimal Chernoff divergence over block pairs and the recovery verdict."""
    K = spec.K
    CH = np.zeros((K, K))
    T = np.full((K, K), 0.5)
    flags = []
    for a in range(K):
        for b in range(a + 1, K):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                res = chernoff(spec, a, b)
            CH[a, b] = CH[b, a] = res.value
            # CH_t(b, a) = CH_{1-t}(a, b)
            T[a, b], T[b, a] = res.t_star, 1 - res.t_star
            if not res.concave:
                flags.append(f"nonconcave:{a},{b}")
            if res.boundary:
                flags.append(f"boundary:{a},{b}")
    a_star, b_star = min(((a, b) for a in range(K) for b in range(a + 1, K)), key=lambda ab: CH[ab])
    I_value = float(CH[a_star, b_star])
    scaled = spec.n * I_value / math.log(spec.n)
    return DivergenceReport(
        CH=CH, t_star=T, I_value=I_value, hardest_pair=(a_star, b_star),
        n=spec.n, scaled=scaled, verdict=verdict_for(scaled, margin), margin=margin, flags=flags,
    )


def chernoff_curve(spec: CsbmSpec, a, b, ts):
    return np.array([chernoff_t(spec, a, b, float(t)) for t in ts])


class ThresholdResult(NamedTuple):
    value: float
    t_star: float
    pair: tuple
    uninformative: bool


def threshold_binary_gaussian(alpha, mu, sigma, pi=None) -> ThresholdResult:
    """Scaled divergence for Ber(alpha log n / n) edges with Gaussian attributes.

    ``mu`` holds block means in units of sqrt(log n); exact recovery is
    possible iff the returned value exceeds 1.
    """
    alpha = np.asarray(alpha, dtype=float)
    K = alpha.shape[0]
    if alpha.shape != (K, K) or np.any(alpha < 0):
        raise ValidationError("alpha must be a nonnegative KxK matrix")
    mu = np.asarray(mu, dtype=float).reshape(K, -1)
    pi = np.full(K, 1.0 / K) if pi is None else np.asarray(pi, dtype=float)
    if np.all(alpha == alpha.flat[0]) and np.all(mu == mu[0]):
        return ThresholdResult(0.0, 0.5, (0, 1), True)

    def f(t, a, b):
        with np.errstate(divide="ignore"):
            cross = np.where(
                (alpha[b] > 0) & (alpha[a] > 0),
                np.exp(t * np.log(alpha[b]) + (1 - t) * np.log(alpha[a])),
                0.0,
            )
        net = np.sum(pi * (t * alpha[b] + (1 - t) * alpha[a] - cross))
        att = t * (1 - t) * np.sum((mu[b] - mu[a]) ** 2) / (2 * sigma**2)
        return float(net + att)

    best = None
    for a in range(K):
        for b in range(a + 1, K):
            res = sup_over_t(lambda t: f(t, a, b))
            if best is None or res.value < best.value:
                best = ThresholdResult(res.value, res.t_star, (a, b), False)
    return best


def threshold_semisupervised(alpha, beta, eta0, eta1, K, n):
    """Left-hand side minus K of the noisy-oracle recovery condition.

    Positive means exact recovery is possible; a perfect oracle (eta1 = 1)
    gives +inf.
    """
    if min(alpha, beta, eta0, eta1) < 0 or eta0 + eta1 > 1 + 1e-15:
        raise ValidationError("need alpha, beta >= 0 and eta0 + eta1 <= 1")
    eta = eta0 + eta1
    inner = 1 - eta + 2 * math.sqrt(eta0 * eta1) / math.sqrt(K - 1)
    net = (math.sqrt(alpha) - math.sqrt(beta)) ** 2
    if inner <= 0:
        return math.inf
    return net - 2 * math.log(inner) / math.log(n) - K
