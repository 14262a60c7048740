import pytest

from fbstab.model import reference_model
from fbstab.stationary import rescale_to_unit, solve_stationary


@pytest.fixture(scope="session")
def mstar():
    """Reference model: n = 3, f = sigma, g = sigma - 3(coth 1 - 1)."""
    return reference_model(c=1e-3, gamma=1.0)


@pytest.fixture(scope="session")
def mstar_state(mstar):
    return solve_stationary(mstar, tol=1e-10)


@pytest.fixture(scope="session")
def unit_case(mstar, mstar_state):
    """(state, model) in the unit-ball frame."""
    state, model = rescale_to_unit(mstar_state, mstar)
    return state, model


@pytest.fixture(scope="session")
def gamma_star_value(unit_case):
    from fbstab.spectrum import gamma_star

    state, model = unit_case
    value, argmax = gamma_star(model, state, k_max=32)
    return value, argmax
