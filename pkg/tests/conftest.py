import json
import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ORACLE_FILE = os.path.join(os.path.dirname(__file__), "oracles", "values.json")


@pytest.fixture(scope="session")
def oracle():
    with open(ORACLE_FILE) as fh:
        return json.load(fh)
