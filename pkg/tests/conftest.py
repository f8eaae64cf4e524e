import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from plateau_spectra.mesh import GridSpec

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def coarse_grid():
    return GridSpec(n_plateau=256, layer_cells_per_scale=8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rel(x, ref):
    return abs(x - ref) / abs(ref)


HALF_PI = math.pi / 2
