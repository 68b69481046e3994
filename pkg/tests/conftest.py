import numpy as np
import pytest

from bellcert import Scenario, born_distribution, cglmp_config, chsh_config


@pytest.fixture(scope="session")
def chsh_scenario():
    return Scenario(2, 2, 2)


@pytest.fixture(scope="session")
def cglmp3_scenario():
    return Scenario(2, 2, 3)


@pytest.fixture(scope="session")
def chsh_q():
    state, bank = chsh_config(np.pi / 4.0)
    return born_distribution(state, bank)


@pytest.fixture(scope="session")
def cglmp3_q():
    state, bank = cglmp_config(3)
    return born_distribution(state, bank)
