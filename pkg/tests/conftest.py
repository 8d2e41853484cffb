import math

import numpy as np
import pytest

from optotomo.mode_transform import ProtocolParams, solve_pulse_conditions
from optotomo.phase_space import PhaseSpaceGrid

OMEGA_M = 2 * math.pi * 1e4
G0 = 2 * math.pi * 100.0
OMEGA_O = 2 * math.pi * 1e7


@pytest.fixture(scope="session")
def grid():
    return PhaseSpaceGrid.square(6.0, 256)


@pytest.fixture(scope="session")
def small_grid():
    return PhaseSpaceGrid.square(6.0, 128)


@pytest.fixture(scope="session")
def pulse():
    """Pulse meeting both conditions at chi = 3, k = 32."""
    return solve_pulse_conditions(G0, OMEGA_M, OMEGA_O, 3.0, 32)


def interaction_params(chi_u, epsilon=0.0, theta=0.0):
    """Half-period pulse (u = 2) with the probe amplitude chosen for ``chi_u``."""
    r = 0.5 * chi_u * OMEGA_M / G0
    return ProtocolParams(g0=G0, omega_m=OMEGA_M, omega_o=OMEGA_O, tau=math.pi / OMEGA_M,
                          r=r, theta=theta, epsilon=epsilon)


def random_psd(rng, scale=0.3):
    a = rng.normal(size=(2, 2)) * scale
    return a @ a.T
