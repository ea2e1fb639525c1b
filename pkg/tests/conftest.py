import numpy as np
import pytest

from detona.endstates import regime_params, small_amplitude_params, solve_right_state
from detona.profile import solve_profile


@pytest.fixture(scope="session")
def small_amp():
    """Weak q = 0 wave: the stable nonreactive-limit benchmark."""
    params, pair = small_amplitude_params(mach=1.3)
    return params, pair


@pytest.fixture(scope="session")
def small_amp_profile(small_amp):
    params, pair = small_amp
    prof = solve_profile(pair, params)
    return prof


@pytest.fixture(scope="session")
def reactive_profile():
    """A moderately reactive wave (q = 0.5) for coupled-source coverage."""
    params, pair = small_amplitude_params(mach=1.35, q=0.5, ign_E=0.05)
    prof = solve_profile(pair, params)
    return prof


@pytest.fixture(scope="session")
def regime_case():
    """A strong-detonation endstate pair in the large-speed regime."""
    params, left = regime_params(0.5, 0.55, 60.0, 50.0, 1.0, 1.2,
                                 krate=100.0, nu=0.3, kappa=0.3, dcoef=0.3)
    pair = solve_right_state(left, 60.0, params)
    return params, pair


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
