import numpy as np
import pytest

from csbm.expfam import Bernoulli, Exponential, Gamma, Gaussian, Poisson

# criterion number -> (title, passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


def record(number, title, passed, detail=""):
    ACCEPTANCE[number] = (title, bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {k:>2}. {title}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_natural(family, rng, size=None):
    """Natural parameters well inside each family's domain."""
    if isinstance(family, Gaussian):
        shape = (family.dim,) if size is None else (size, family.dim)
        return rng.uniform(-2, 2, shape)
    if isinstance(family, (Exponential, Gamma)):
        return rng.uniform(-3.0, -0.2, size)
    return rng.uniform(-2.0, 2.0, size)


def random_observation(family, rng, size=None):
    if isinstance(family, Bernoulli):
        return rng.integers(0, 2, size).astype(float)
    if isinstance(family, Poisson):
        return rng.integers(0, 20, size).astype(float)
    if isinstance(family, Gaussian):
        shape = (family.dim,) if size is None else (size, family.dim)
        return rng.normal(0, 3, shape)
    return rng.uniform(0.01, 10.0, size)


ALL_FAMILIES = [Bernoulli(), Poisson(), Gaussian(sigma2=1.7, d=2), Exponential(), Gamma(k=2.5)]
