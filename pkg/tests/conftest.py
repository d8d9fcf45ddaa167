import os
import pathlib
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def spectral():
    from respath import SpectralDensity

    return SpectralDensity.default()


@pytest.fixture(scope="session")
def unit_coupling(spectral):
    """Coupling that makes sigma = 1 for the default form factor."""
    from respath.spectral import coupling_for_sigma

    return coupling_for_sigma(1.0, spectral)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
