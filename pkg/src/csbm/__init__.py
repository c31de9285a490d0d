"""Node-attributed stochastic block models with exponential-family weights.

Generate data, compute exact-recovery thresholds, and recover communities
by Bregman hard clustering.
"""

__version__ = "0.1.0"

from .errors import CsbmError, NumericError, ValidationError  # noqa: E402
from .expfam import Bernoulli, Exponential, Gamma, Gaussian, Poisson  # noqa: E402
from .model import CsbmSpec, Dataset, generate, spec_from_config  # noqa: E402
from .info import min_divergence, threshold_binary_gaussian  # noqa: E402
from .cluster import ClusterConfig, iterate  # noqa: E402
from .spectral import initialize  # noqa: E402
from .metrics import ari, exact_recovery, loss  # noqa: E402

__all__ = [
    "__version__",
    "CsbmError",
    "NumericError",
    "ValidationError",
    "Bernoulli",
    "Exponential",
    "Gamma",
    "Gaussian",
    "Poisson",
    "CsbmSpec",
    "Dataset",
    "generate",
    "spec_from_config",
    "min_divergence",
    "threshold_binary_gaussian",
    "ClusterConfig",
    "iterate",
    "initialize",
    "ari",
    "exact_recovery",
    "loss",
]
