import numpy as np
import pytest

from wcris import physics
from wcris.dataset import generate_dataset

# Verdict lines collected by the acceptance suite; printed in the
# terminal summary so they survive pytest's output capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def geom():
    return physics.default_geometry()


@pytest.fixture(scope="session")
def cell():
    return physics.UnitCellCircuit()


@pytest.fixture(scope="session")
def setup():
    return physics.ChannelSetup()


@pytest.fixture(scope="session")
def tiny_geom():
    """Small array for optimizer tests: same physics, far cheaper."""
    return physics.RisGeometry(num_elements=16, num_modes=4)


@pytest.fixture(scope="session")
def tiny_setup():
    return physics.ChannelSetup(n_angles=21)


@pytest.fixture(scope="session")
def ds5k(geom, cell, setup):
    """The reference-scale dataset shared by the slow acceptance tests."""
    return generate_dataset(geom, cell, setup, count=5000, seed=7)


@pytest.fixture(scope="session")
def ds300(geom, cell, setup):
    return generate_dataset(geom, cell, setup, count=300, seed=5)


@pytest.fixture(scope="session")
def tiny_ds(tiny_geom, cell, tiny_setup):
    return generate_dataset(tiny_geom, cell, tiny_setup, count=60, seed=3)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
