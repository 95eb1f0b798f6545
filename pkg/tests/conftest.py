import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from vkreduce import BeamConfig, ForcingSpec, assemble  # noqa: E402

REFERENCE_ZETA = 7.2739


@pytest.fixture(scope="session")
def beam20():
    return assemble(BeamConfig(zeta=REFERENCE_ZETA))


@pytest.fixture(scope="session")
def beam6():
    return assemble(BeamConfig(zeta=REFERENCE_ZETA, n_elements=6, eps=1e-2))


@pytest.fixture(scope="session")
def beam2_free():
    """Smallest pinned beam (n_s = 4), unforced."""
    return assemble(BeamConfig(zeta=REFERENCE_ZETA, n_elements=2, eps=1e-2, forcing=ForcingSpec(profile="none")))
