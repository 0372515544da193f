import math
from pathlib import Path

import numpy as np
import pytest

from fasbench.lsradial import bargmann_potential, bargmann_reference
from fasbench.pointmodel import PointInteraction, WavePacket, outgoing_state_point

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def gaussian_packet():
    return WavePacket.gaussian(1.0)


@pytest.fixture(scope="session")
def boosted_packet():
    return WavePacket.gaussian(1.0, boost=1.0)


@pytest.fixture(scope="session")
def resonant_point():
    return PointInteraction(0.0)


@pytest.fixture(scope="session")
def free_point():
    return PointInteraction(math.inf)


@pytest.fixture(scope="session")
def resonant_spec(gaussian_packet, resonant_point):
    return outgoing_state_point(gaussian_packet, resonant_point)


@pytest.fixture(scope="session")
def bargmann():
    return bargmann_reference(1.0)


@pytest.fixture(scope="session")
def bargmann_v(bargmann):
    return bargmann.potential


@pytest.fixture(scope="session")
def erfcx_oracle_data():
    return np.load(DATA / "erfcx_oracle.npz")
