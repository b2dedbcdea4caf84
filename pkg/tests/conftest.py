import numpy as np
import pytest

from irs_wpcn.scenario import default_config, generate_scenario


@pytest.fixture
def small_scenario():
    # 4 elements, 2 devices: big enough to be nontrivial, cheap everywhere
    return generate_scenario(default_config(num_elements=4, num_devices=2, seed=7))


@pytest.fixture
def desk_scenario():
    return generate_scenario(default_config(seed=3))


def random_unit_vector(rng, n):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, n))
