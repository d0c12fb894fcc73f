import pytest

from cli.run_config import DEFAULT_PARAMS
from dynamics.chareq import hopf_point_dd, hopf_point_dw
from dynamics.model import ModelParams, interior_equilibrium


@pytest.fixture(scope="session")
def worked_params() -> ModelParams:
    """Worked example: a1=2.5, a2=1, b1=1, b2=0.4, b3=0.95, b4=2."""
    return DEFAULT_PARAMS


@pytest.fixture(scope="session")
def window_params() -> ModelParams:
    """Admissible set for which the q2 window inequality holds."""
    return ModelParams(a1=2.0, a2=1.0, b1=1.0, b2=1.9, b3=1.0, b4=1.95)


@pytest.fixture(scope="session")
def L0(worked_params):
    return interior_equilibrium(worked_params)


@pytest.fixture(scope="session")
def hopf_dd(worked_params):
    return hopf_point_dd(worked_params, 0.01)


@pytest.fixture(scope="session")
def hopf_dw(worked_params):
    return hopf_point_dw(worked_params, 0.1)
