"""Shared fixtures.

The expensive simulation artifacts (calibration, the tau ladder of full
extraction runs) are session-scoped: the acceptance criteria and several
module tests read different aspects of the same runs.
"""
import numpy as np
import pytest

import susytweezer as st
from susytweezer.extraction import make_setup, sweep_tau

# paper example: lambda = 810 nm, w0 = 1 um, alpha1 = -12 E_R, Li atoms
WAVELENGTH_M = 810e-9
W0_INTERNAL = 7.757018897752575          # k_R * 1 um
ALPHA1 = -12.0
N_LEVELS = 5
TAU_ACCEPT = 2223.516220792608           # 7 ms for 6Li in hbar/E_R units

# frozen Richardson-extrapolated ladder of the -12 E_R trap (fd at
# dx and dx/2, eliminated O(dx^2); cross-checked against the dense
# spectral solve to 1.1e-7)
LADDER_12ER = np.array([
    -11.380935945762, -10.168367338394, -9.007623849389, -7.900205594102,
    -6.847808080494, -5.852368106768, -4.916126116392, -4.041713397717,
])


@pytest.fixture(scope="session")
def li_units():
    return st.unit_system_for_species("Li6", WAVELENGTH_M)


@pytest.fixture(scope="session")
def rb_units():
    return st.unit_system_for_species("Rb87", WAVELENGTH_M)


@pytest.fixture(scope="session")
def main_trap():
    return st.GaussianTweezer1D(ALPHA1, W0_INTERNAL, 0.0)


@pytest.fixture(scope="session")
def calibration():
    return st.calibrate_gaussian_partner(ALPHA1, W0_INTERNAL, N_LEVELS)


@pytest.fixture(scope="session")
def aux_trap(calibration):
    return st.GaussianTweezer1D(calibration.alpha2_star, W0_INTERNAL, 0.0)


@pytest.fixture(scope="session")
def grid_1d():
    return st.build_grid(132.0, 512)


@pytest.fixture(scope="session")
def default_sched(main_trap):
    return st.default_schedule(main_trap, TAU_ACCEPT, N_LEVELS)


@pytest.fixture(scope="session")
def default_setup(main_trap, aux_trap, default_sched, grid_1d):
    return make_setup(main_trap, aux_trap, default_sched, grid_1d,
                      n_levels=N_LEVELS)


@pytest.fixture(scope="session")
def tau_ladder(default_setup):
    """Full extraction runs at tau/8, tau/4, tau/2, tau for levels 0..5,
    with the shared instantaneous-gap diagnostic. Takes a few minutes."""
    taus = [TAU_ACCEPT / 8, TAU_ACCEPT / 4, TAU_ACCEPT / 2, TAU_ACCEPT]
    return sweep_tau(default_setup, list(range(N_LEVELS + 1)), taus,
                     compute_gap=True)


@pytest.fixture(scope="session")
def effective_default(main_trap, aux_trap, default_sched, grid_1d):
    return st.extract_effective_model(main_trap, aux_trap, default_sched,
                                      grid_1d, N=N_LEVELS)
