import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def exp1_trace():
    from idrem.harness import preset, run_scenario

    return run_scenario(preset("exp1"))


@pytest.fixture(scope="session")
def exp2_trace():
    from idrem.harness import preset, run_scenario

    return run_scenario(preset("exp2"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
