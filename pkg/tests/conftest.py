import json

import numpy as np
import pytest

from vlcsim.constants import PUBLISHED_DATA
from vlcsim.scene.arrays import LedArraySpec, PdArraySpec
from vlcsim.scene.scene import Scene, default_lenses, default_scene


@pytest.fixture(scope="session")
def published():
    with open(PUBLISHED_DATA, "r", encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture(scope="session")
def published_H(published):
    """published 16x16 gains, rows PDs and columns LEDs, absolute units."""
    block = published["channel_matrix"]
    return np.asarray(block["gains"]) * block["scale"]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_scene():
    """2x2 LEDs over 2x2 PDs behind the reference lens pair; cheap to trace."""
    leds = LedArraySpec(grid_n=2, element_size=10.0, gap=10.0, plane_z=5050.0)
    pds = PdArraySpec(grid_n=2, element_size=0.6, gap=0.1, plane_z=0.0)
    return Scene(leds=leds, pds=pds, lenses=default_lenses())


@pytest.fixture
def reference_scene():
    return default_scene()


@pytest.fixture
def bare_scene():
    """one tiny LED straight above one large PD, no optics."""
    leds = LedArraySpec(
        grid_n=1, element_size=1e-6, gap=0.0, plane_z=5050.0, lambertian_exponent=1.0
    )
    pds = PdArraySpec(grid_n=1, element_size=3000.0, gap=0.0, plane_z=0.0)
    return Scene(leds=leds, pds=pds, lenses=())
