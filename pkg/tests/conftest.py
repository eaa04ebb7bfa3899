import warnings

import numpy as np
import pytest

from oscsync.scenario_file import paper_scenario
from oscsync.simulator import run

@pytest.fixture(scope="session")
def paper_run():
    sc = paper_scenario()
    return sc, run(sc)


@pytest.fixture(scope="session")
def broken_run():
    sc = paper_scenario(break_tree=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return sc, run(sc)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
