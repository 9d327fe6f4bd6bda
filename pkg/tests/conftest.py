import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from drocal.model import SyntheticOscillator, sample_uniform

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def oscillator():
    return SyntheticOscillator()


@pytest.fixture(scope="session")
def e_true():
    return np.ones(4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def make_data(model, e, n1, seed):
    a = sample_uniform(model.a_box, n1, seed)
    return [model.simulate(row, e) for row in a]


def tiny_instance(rng, n1=None, k=None, m=None, levels=4):
    """Integer-valued summaries so ties are common."""
    n1 = n1 or int(rng.integers(1, 4))
    k = k or int(rng.integers(1, 6))
    m = m or int(rng.integers(1, 3))
    data = rng.integers(0, levels, size=(n1, m)).astype(float)
    sims = rng.integers(0, levels, size=(k, m)).astype(float)
    return data, sims


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
