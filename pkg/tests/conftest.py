import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qcdcluster import MTSeries

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def bivariate(rng):
    return MTSeries(rng.standard_normal((64, 2)), "noise")


def two_blobs(rng, per_blob=6, q=2, gap=10.0, spread=0.3, outlier=None):
    """Two Gaussian blobs on the first axis, optionally with one far point."""
    a = rng.normal(0.0, spread, (per_blob, q))
    b = rng.normal(0.0, spread, (per_blob, q))
    b[:, 0] += gap
    rows = [a, b]
    if outlier is not None:
        rows.append(np.full((1, q), float(outlier)))
    return np.vstack(rows)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
