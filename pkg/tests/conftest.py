import numpy as np
import pytest

from uwbtbd.scenario import load_scenario

MINIMAL_DOC = """
grid: {n_x: 40, n_y: 30, delta: 0.1}
sensors:
  mode: monostatic
  positions: [[0.0, 0.0], [4.0, 0.0], [2.0, 3.0]]
targets:
  scan_count: 10
  tracks:
    - waypoints: [[1, 1.0, 1.0], [10, 3.0, 2.0]]
"""


@pytest.fixture(scope="session")
def minimal_spec():
    return load_scenario(MINIMAL_DOC)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

# a desk-sized single-target scene that runs in a fraction of a second
SMALL_DOC = """
grid: {n_x: 60, n_y: 60, delta: 0.1}
sensors:
  mode: monostatic
  positions: [[0.5, 0.0], [6.0, 1.3], [4.2, 6.0], [0.0, 4.1]]
targets:
  scan_count: 16
  tracks:
    - waypoints: [[1, 1.6, 2.1], [16, 4.3, 3.9]]
params: {n_c: 800, gamma_num: 60}
echo: {target_amplitude: 0.1, target_spread: 0.02, background_scale: 1.0, target_extent_bins: 41}
"""


@pytest.fixture(scope="session")
def small_spec():
    return load_scenario(SMALL_DOC, "small")
