import pytest

from parcoil import CoilProblem, LinearTestProblem, StepperTolerances


@pytest.fixture(scope="session")
def coil_problem():
    return CoilProblem()


@pytest.fixture(scope="session")
def linear_problem():
    return LinearTestProblem(-1.0, (1.0,))


@pytest.fixture
def fine_tols():
    return StepperTolerances(tol_nr=1e-4, tol_t=1e-4, dt_init=0.1, dt_min=1e-9, dt_max=2.0)


@pytest.fixture
def coarse_tols():
    return StepperTolerances(tol_nr=1e-2, tol_t=2e-2, dt_init=0.5, dt_min=1e-9, dt_max=2.0)
