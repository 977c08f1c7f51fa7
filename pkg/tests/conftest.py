import numpy as np
import pytest

ACCEPTANCE_LOG: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, d, lam=1e-3, terms=None):
    """lam I plus a handful of random rank-one terms."""
    m = lam * np.eye(d)
    for _ in range(terms if terms is not None else d + 2):
        v = rng.normal(size=d)
        m += rng.uniform(0.1, 2.0) * np.outer(v, v)
    return m
