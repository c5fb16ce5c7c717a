import warnings

import numpy as np
import pytest

warnings.filterwarnings("ignore", message=".*TBB.*")

from mmppi.params import CostWeights, Limits, VehicleParams


@pytest.fixture(scope="session")
def params():
    return VehicleParams()


@pytest.fixture(scope="session")
def weights():
    return CostWeights()


@pytest.fixture(scope="session")
def limits():
    return Limits()


def random_states(n, rng, vx_range=(1.0, 40.0)):
    """Physically plausible random 9-element states."""
    s = np.empty((n, 9))
    s[:, 0] = rng.uniform(-50, 50, n)          # X
    s[:, 1] = rng.uniform(-10, 10, n)          # Y
    s[:, 2] = rng.uniform(-np.pi, np.pi, n)    # psi
    s[:, 3] = rng.uniform(*vx_range, n)        # vx
    s[:, 4] = rng.uniform(-5, 5, n)            # vy
    s[:, 5] = rng.uniform(-1.5, 1.5, n)        # r
    s[:, 6] = rng.uniform(0, 100, n)           # theta
    s[:, 7] = rng.uniform(-0.6, 0.6, n)        # delta
    s[:, 8] = rng.uniform(-10, 10, n)          # ax
    return s
