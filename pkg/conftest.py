import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from capacity_engine import SolverConfig  # noqa: E402
from gauss_core import EnergyBudget, FiducialChannel, pure_floor  # noqa: E402


@pytest.fixture
def rng():
    """Seeded generator for randomized parameter samples"""
    return np.random.default_rng(20240517)


@pytest.fixture
def random_channel(rng):
    """Sampler of physical channels: |tau| in [0.2, 2.5], y above the floor, squeezed noise"""

    def sample(omega_range=(0.1, 0.9)):
        tau = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 2.5))
        y = pure_floor(tau) * float(rng.uniform(1.0, 2.0)) + float(rng.uniform(0.05, 0.5))
        return FiducialChannel.from_noise(tau, y, float(rng.uniform(*omega_range)))

    return sample


@pytest.fixture
def solver():
    return SolverConfig()


@pytest.fixture
def squeezed_additive():
    """tau = 1, y = 0.1 with strongly squeezed noise; threshold at n_bar = 2.24"""
    return FiducialChannel.from_noise(1.0, 0.1, 0.2)


@pytest.fixture
def thermal_additive():
    return FiducialChannel.from_noise(1.0, 0.1, 1.0)


@pytest.fixture
def one_photon():
    return EnergyBudget(1.0)
