import numpy as np
import pytest

from contactplan.cli import records_from_steps
from contactplan.planner import plan_path
from contactplan.scenario import default_scenario


@pytest.fixture(scope="session")
def default_config():
    return default_scenario()


@pytest.fixture(scope="session")
def planned_steps(default_config):
    """One full default-scenario run, shared across tests."""
    return plan_path(default_config)


@pytest.fixture(scope="session")
def step_records(planned_steps, default_config):
    return records_from_steps(planned_steps, default_config)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
