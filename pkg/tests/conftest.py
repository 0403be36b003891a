"""Shared fixtures and a CI-friendly hypothesis profile."""

import pytest
from hypothesis import HealthCheck, settings

from qplab import Frequency, default_model

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def golden():
    return Frequency.golden()


@pytest.fixture(scope="session")
def free_model(golden):
    # K = 0: the potential is identically 2 and everything has a closed form.
    return default_model(0.0, golden)
